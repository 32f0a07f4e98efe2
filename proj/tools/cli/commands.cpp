#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <ostream>

#include <CLI11.hpp>

#include "optomech/analysis.hpp"
#include "optomech/dynamics.hpp"
#include "optomech/errors.hpp"
#include "optomech/omit.hpp"

namespace optomech::cli {

namespace {

using ojson = nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kEmStepsPerRate = 400.0;

std::string num(double v) {
  if (!std::isfinite(v)) return {};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, const std::string& header) : out_(path) {
    if (!out_) throw Error("cannot open " + path.string() + " for writing");
    out_ << header << '\n';
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

std::filesystem::path prepare_output(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.output_dir);
  return cfg.output_dir / name;
}

void write_json(const std::filesystem::path& path, const ojson& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

ojson matrix_json(const Matrix4& m) {
  ojson a = ojson::array();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) a.push_back(m(i, j));
  }
  return a;
}

ojson ordering() { return ojson::array({"X1", "Y1", "X2", "Y2"}); }

void require_sweep(const RunConfig& cfg, std::initializer_list<const char*> allowed,
                   const char* command) {
  if (!cfg.sweep) return;
  for (const char* a : allowed) {
    if (cfg.sweep->param == a) return;
  }
  throw ConfigError(std::string(command) + " cannot sweep '" + cfg.sweep->param + "'", 0,
                    "sweep.param");
}

ojson phase_fields(const RunConfig& cfg, const DriveConfig& d) {
  return {{"beta_s", d.beta_s},
          {"beta_t", d.beta_t},
          {"phi_s", d.phi_s},
          {"phi_t", d.phi_t},
          {"phi_s_primed", d.phi_s + cfg.phases.off_s},
          {"phi_t_primed", d.phi_t + cfg.phases.off_t}};
}

std::optional<CovarianceMatrix> try_steady(const SystemParams& p, const DriveConfig& d) {
  try {
    return steady_covariance(p, d);
  } catch (const InstabilityError&) {
    return std::nullopt;
  }
}

}  // namespace

std::vector<SweepPoint> sweep_points(const RunConfig& cfg) {
  if (!cfg.sweep) return {{cfg.drive, kNaN}};
  const SweepSpec& s = *cfg.sweep;
  std::vector<SweepPoint> out;
  out.reserve(s.count);
  for (std::size_t i = 0; i < s.count; ++i) {
    SweepPoint pt{cfg.drive, s.at(i)};
    if (s.param == "beta_s") pt.drive.beta_s = pt.value;
    else if (s.param == "beta_t") pt.drive.beta_t = pt.value;
    else if (s.param == "phi_s") pt.drive.phi_s = pt.value;
    else if (s.param == "phi_t") pt.drive.phi_t = pt.value;
    else if (s.param == "phi_s_primed") pt.drive.phi_s = pt.value - cfg.phases.off_s;
    else if (s.param == "phi_t_primed") pt.drive.phi_t = pt.value - cfg.phases.off_t;
    out.push_back(pt);
  }
  return out;
}

StochasticSettings resolve_sim_settings(const RunConfig& cfg, const EnvelopeConfig& env) {
  const SimSettings& s = cfg.sim;
  const DriftMatrix a = envelope_drift(env);
  const auto& g = cfg.system.gamma_m;
  StochasticSettings out;
  const double rate = std::max({a.a.cwiseAbs().maxCoeff(), g[0], g[1]});
  out.dt = s.dt > 0.0 ? s.dt : 1.0 / (kEmStepsPerRate * rate);
  const double t_discard = s.t_discard > 0.0 ? s.t_discard : 10.0 / std::min(g[0], g[1]);
  out.t_end = s.t_end > 0.0 ? s.t_end : t_discard + 50.0 / g[0];
  if (s.t_burn > 0.0) {
    out.t_burn = s.t_burn;
  } else {
    const double abscissa = spectral_abscissa(a);
    out.t_burn = abscissa < 0.0 ? 10.0 / -abscissa : 0.0;
  }
  out.n_traj = s.n_traj;
  out.seed = s.seed;
  out.record_stride = s.record_stride;
  out.threads = s.threads;
  out.initial = InitialState::thermal;
  return out;
}

void cmd_gain_sweep(const RunConfig& cfg, std::ostream& log) {
  require_sweep(cfg, {"beta_s"}, "gain-sweep");
  const auto path = prepare_output(cfg, "gain_sweep.csv");
  CsvFile csv(path, "beta_s,g1_squeezed,g1_antisqueezed,g2_squeezed,g2_antisqueezed,stable");
  const CovarianceMatrix off = off_state_covariance(cfg.system);
  std::size_t unstable = 0;
  for (const SweepPoint& pt : sweep_points(cfg)) {
    const auto on = try_steady(cfg.system, pt.drive);
    if (!on) {
      ++unstable;
      csv.row({num(pt.drive.beta_s), "", "", "", "", "false"});
      continue;
    }
    const GainResult g1 = quadrature_gain(*on, off, Mode::control);
    const GainResult g2 = quadrature_gain(*on, off, Mode::target);
    csv.row({num(pt.drive.beta_s), num(g1.g_squeezed), num(g1.g_antisqueezed), num(g2.g_squeezed),
             num(g2.g_antisqueezed), "true"});
  }
  log << "wrote " << path.string() << " (" << unstable << " unstable points)\n";
}

void cmd_phase_sweep(const RunConfig& cfg, std::ostream& log) {
  if (!cfg.sweep) throw ConfigError("phase-sweep needs a sweep section", 0, "sweep");
  require_sweep(cfg, {"phi_s", "phi_t", "phi_s_primed", "phi_t_primed", "force_phase"},
                "phase-sweep");

  if (cfg.sweep->param == "force_phase") {
    // Coherent drive on the control mode; phi is measured from the
    // deamplified axis, which lies at φ_s/2 - π/4 in the (X₁, Y₁) plane.
    const EffectiveCouplings c = effective_couplings(cfg.system, cfg.drive);
    const EnvelopeConfig on = envelope_config(cfg.system, c, cfg.drive);
    EnvelopeConfig off = on;
    off.eta = 0.0;
    off.lambda = 0.0;
    const double abscissa = spectral_abscissa(envelope_drift(on));
    if (!(abscissa < 0.0)) throw InstabilityError();
    const double t_end = cfg.sim.t_end > 0.0 ? cfg.sim.t_end : 40.0 / -abscissa;
    const double axis = cfg.drive.phi_s / 2.0 - std::numbers::pi / 4.0;

    const auto path = prepare_output(cfg, "coherent_gain.csv");
    CsvFile csv(path, "phi,g1");
    for (std::size_t i = 0; i < cfg.sweep->count; ++i) {
      const double phi = cfg.sweep->at(i);
      const double phase = force_phase_for_direction(axis + phi);
      const Vector4 q_on = integrate_coherent(on, 1.0, phase, t_end);
      const Vector4 q_off = integrate_coherent(off, 1.0, phase, t_end);
      csv.row({num(phi), num(q_on.head<2>().norm() / q_off.head<2>().norm())});
    }
    log << "wrote " << path.string() << '\n';
    return;
  }

  const auto points = sweep_points(cfg);
  const CovarianceMatrix off = off_state_covariance(cfg.system);
  struct Row {
    std::optional<CovarianceMatrix> v;
    PrincipalAxes a1, a2;
  };
  std::vector<Row> rows;
  std::vector<double> th1, th2;
  for (const SweepPoint& pt : points) {
    Row r{try_steady(cfg.system, pt.drive), {}, {}};
    if (r.v) {
      r.a1 = principal_axes(*r.v, Mode::control);
      r.a2 = principal_axes(*r.v, Mode::target);
      if (!r.a1.degenerate && !r.a2.degenerate) {
        th1.push_back(r.a1.theta);
        th2.push_back(r.a2.theta);
      }
    }
    rows.push_back(r);
  }
  const auto un1 = unwrap_axis_angles(th1);
  const auto un2 = unwrap_axis_angles(th2);

  const auto path = prepare_output(cfg, "phase_sweep.csv");
  CsvFile csv(path,
              "phi_s,phi_t,phi_s_primed,phi_t_primed,theta1,theta2,theta1_unwrapped,"
              "theta2_unwrapped,g1_squeezed,g1_antisqueezed,g2_squeezed,g2_antisqueezed,stable");
  std::size_t k = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const DriveConfig& d = points[i].drive;
    std::vector<std::string> cells = {num(d.phi_s), num(d.phi_t), num(d.phi_s + cfg.phases.off_s),
                                      num(d.phi_t + cfg.phases.off_t)};
    const Row& r = rows[i];
    if (!r.v) {
      cells.insert(cells.end(), {"", "", "", "", "", "", "", "", "false"});
      csv.row(cells);
      continue;
    }
    const bool defined = !r.a1.degenerate && !r.a2.degenerate;
    cells.push_back(r.a1.degenerate ? "" : num(r.a1.theta));
    cells.push_back(r.a2.degenerate ? "" : num(r.a2.theta));
    cells.push_back(defined ? num(un1[k]) : "");
    cells.push_back(defined ? num(un2[k]) : "");
    if (defined) ++k;
    const GainResult g1 = quadrature_gain(*r.v, off, Mode::control);
    const GainResult g2 = quadrature_gain(*r.v, off, Mode::target);
    cells.insert(cells.end(), {num(g1.g_squeezed), num(g1.g_antisqueezed), num(g2.g_squeezed),
                               num(g2.g_antisqueezed), "true"});
    csv.row(cells);
  }
  log << "wrote " << path.string() << '\n';
}

void cmd_corr(const RunConfig& cfg, std::ostream& log) {
  require_sweep(cfg, {"phi_s", "phi_t", "phi_s_primed", "phi_t_primed", "beta_s", "beta_t"},
                "corr");
  ojson doc;
  doc["ordering"] = ordering();
  doc["layout"] = "row-major";
  doc["points"] = ojson::array();
  for (const SweepPoint& pt : sweep_points(cfg)) {
    ojson p = phase_fields(cfg, pt.drive);
    const auto v = try_steady(cfg.system, pt.drive);
    p["stable"] = v.has_value();
    if (v) {
      const Matrix4 c = correlation_matrix(*v).c;
      p["matrix"] = matrix_json(c);
      p["elements"] = {{"X1X2", c(kX1, kX2)},
                       {"X1Y2", c(kX1, kY2)},
                       {"X2Y2", c(kX2, kY2)},
                       {"X2Y1", c(kX2, kY1)}};
    }
    doc["points"].push_back(p);
  }
  const auto path = prepare_output(cfg, "corr.json");
  write_json(path, doc);
  log << "wrote " << path.string() << '\n';
}

void cmd_wigner(const RunConfig& cfg, std::ostream& log) {
  if (cfg.sweep) throw ConfigError("wigner takes a single operating point", 0, "sweep");
  const CovarianceMatrix v = steady_covariance(cfg.system, cfg.drive);
  const AxisRange axis{-cfg.wigner.extent, cfg.wigner.extent, cfg.wigner.points};
  for (Mode m : {Mode::control, Mode::target}) {
    const std::size_t j = index(m);
    const WignerGrid grid =
        wigner_gaussian(v, m, axis, axis, std::sqrt(cfg.system.n_bath[j] + 0.5));
    const auto path = prepare_output(cfg, "mode" + std::to_string(j + 1) + "_wigner.csv");
    CsvFile csv(path, "x,y,w");
    for (std::size_t a = 0; a < axis.points; ++a) {
      for (std::size_t b = 0; b < axis.points; ++b) {
        csv.row({num(axis.at(a)), num(axis.at(b)),
                 num(grid.w(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)))});
      }
    }
    const PrincipalAxes pa = principal_axes(v, m);
    log << "wrote " << path.string() << " ("
        << (pa.degenerate ? "isotropic" : "elliptical, axis ratio " + num(std::sqrt(pa.var_max / pa.var_min)))
        << ")\n";
  }
}

void cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  require_sweep(cfg, {"phi_s", "phi_t", "phi_s_primed", "phi_t_primed", "beta_s", "beta_t"},
                "simulate");
  ojson doc;
  doc["ordering"] = ordering();
  doc["layout"] = "row-major";
  doc["seed"] = cfg.sim.seed;
  doc["points"] = ojson::array();
  const CovarianceMatrix off = off_state_covariance(cfg.system);

  std::size_t index_in_sweep = 0;
  for (const SweepPoint& pt : sweep_points(cfg)) {
    const EffectiveCouplings c = effective_couplings(cfg.system, pt.drive);
    const EnvelopeConfig env = envelope_config(cfg.system, c, pt.drive);
    const StochasticSettings s = resolve_sim_settings(cfg, env);
    const double t_discard = cfg.sim.t_discard > 0.0
                                 ? cfg.sim.t_discard
                                 : 10.0 / std::min(cfg.system.gamma_m[0], cfg.system.gamma_m[1]);
    const auto traces = integrate_stochastic(env, s);
    if (cfg.sim.write_traces) {
      const auto dir = cfg.output_dir / "traces" / ("point" + std::to_string(index_in_sweep));
      for (const auto& tr : traces) write_trace_csv(tr, dir);
    }
    const EnsembleCovariance mc = ensemble_covariance(traces, t_discard);
    const CovarianceMatrix lyap = solve_steady_covariance(
        drift_matrix(cfg.system, c, pt.drive), diffusion_matrix(cfg.system.gamma_m, cfg.system.n_bath));

    Matrix4 z = Matrix4::Zero();
    double max_z = 0.0;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        const double se = mc.standard_error(i, j);
        z(i, j) = se > 0.0 ? (mc.v.v(i, j) - lyap.v(i, j)) / se : 0.0;
        max_z = std::max(max_z, std::abs(z(i, j)));
      }
    }
    const GainResult g1 = quadrature_gain(mc.v, off, Mode::control);
    const GainResult g2 = quadrature_gain(mc.v, off, Mode::target);

    ojson p = phase_fields(cfg, pt.drive);
    p["settings"] = {{"dt", s.dt},         {"t_end", s.t_end},   {"t_burn", s.t_burn},
                     {"t_discard", t_discard}, {"n_traj", s.n_traj}, {"record_stride", s.record_stride},
                     {"samples", mc.samples}};
    p["ensemble"] = matrix_json(mc.v.v);
    p["standard_error"] = matrix_json(mc.standard_error);
    p["lyapunov"] = matrix_json(lyap.v);
    p["z"] = matrix_json(z);
    p["max_abs_z"] = max_z;
    p["correlation"] = matrix_json(correlation_matrix(mc.v).c);
    p["gains"] = {{"g1_squeezed", g1.g_squeezed},
                  {"g1_antisqueezed", g1.g_antisqueezed},
                  {"g2_squeezed", g2.g_squeezed},
                  {"g2_antisqueezed", g2.g_antisqueezed}};
    doc["points"].push_back(p);
    log << "point " << index_in_sweep << ": max |z| = " << num(max_z) << '\n';
    ++index_in_sweep;
  }
  const auto path = prepare_output(cfg, "summary.json");
  write_json(path, doc);
  log << "wrote " << path.string() << '\n';
}

void cmd_omit_fit(const RunConfig& cfg, bool synthesize,
                  const std::optional<std::filesystem::path>& spectrum_path, std::ostream& log) {
  const OmitSettings& o = cfg.omit;
  OmitSpectrum spectrum;
  if (synthesize) {
    const auto offsets =
        omit_window(cfg.system, cfg.drive, o.mode, o.points, o.half_width_linewidths);
    spectrum = synthesize_spectrum(cfg.system, cfg.drive, o.mode, offsets, o.noise_rel, o.seed);
    const auto path = prepare_output(cfg, "omit_spectrum.csv");
    write_spectrum_csv(spectrum, path);
    log << "wrote " << path.string() << '\n';
  } else {
    std::filesystem::path path;
    if (spectrum_path) {
      path = *spectrum_path;
    } else if (!o.spectrum.empty()) {
      path = cfg.source_dir / o.spectrum;
    } else {
      throw ConfigError("omit-fit needs --spectrum, omit.spectrum or --synthesize", 0, "omit.spectrum");
    }
    try {
      spectrum = read_spectrum_csv(path, cfg.drive.detuning, cfg.drive.n_d);
    } catch (const InvalidArgument& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }

  auto report = [&](const OmitFitResult& r) {
    const auto hz = [](double w) { return w / kTwoPi; };
    ojson j;
    j["mode"] = index(o.mode) + 1;
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["residual_norm"] = r.residual_norm;
    j["signal_norm"] = r.signal_norm;
    j["relative_residual"] = r.signal_norm > 0.0 ? r.residual_norm / r.signal_norm : 0.0;
    j["fitted"] = {{"g0_hz", hz(r.g0)},
                   {"n_d", r.n_d},
                   {"strength", r.params.strength},
                   {"omega_m_hz", hz(r.params.omega_m)},
                   {"gamma_m_hz", hz(r.params.gamma_m)},
                   {"kappa_hz", hz(r.params.kappa)},
                   {"kappa_ex_hz", hz(r.params.kappa_ex)},
                   {"scale", {r.params.scale.real(), r.params.scale.imag()}},
                   {"offset", {r.params.offset.real(), r.params.offset.imag()}}};
    j["uncertainty"] = {{"g0_hz", hz(r.g0_uncertainty)},
                        {"strength", r.uncertainty.strength},
                        {"omega_m_hz", hz(r.uncertainty.omega_m)},
                        {"gamma_m_hz", hz(r.uncertainty.gamma_m)},
                        {"kappa_hz", hz(r.uncertainty.kappa)},
                        {"kappa_ex_hz", hz(r.uncertainty.kappa_ex)},
                        {"scale", {r.uncertainty.scale.real(), r.uncertainty.scale.imag()}},
                        {"offset", {r.uncertainty.offset.real(), r.uncertainty.offset.imag()}}};
    j["warnings"] = r.warnings;
    const auto path = prepare_output(cfg, "omit_fit.json");
    write_json(path, j);
    log << "wrote " << path.string() << '\n';
  };

  try {
    report(fit_omit(spectrum, cfg.system, o.mode, o.free));
  } catch (const OmitFitError& e) {
    report(e.best());
    throw;
  }
}

void cmd_echo_config(const RunConfig& cfg, std::ostream& out) { out << to_json(cfg).dump(2) << '\n'; }

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-mode optomechanical squeezing simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<double> beta_s, beta_t, phi_s, phi_t;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir, spectrum;
  bool synthesize = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--beta-s", beta_s, "override drive.beta_s");
    sub->add_option("--beta-t", beta_t, "override drive.beta_t");
    sub->add_option("--phi-s", phi_s, "override drive.phi_s [rad]");
    sub->add_option("--phi-t", phi_t, "override drive.phi_t [rad]");
    sub->add_option("--seed", seed, "override sim.seed");
    sub->add_option("--out", out_dir, "override output.dir");
    return sub;
  };
  auto* gain = common(app.add_subcommand("gain-sweep", "quadrature gains vs beta_s"));
  auto* phase = common(app.add_subcommand("phase-sweep", "squeezing axes and gains vs a phase"));
  auto* corr = common(app.add_subcommand("corr", "correlation matrices"));
  auto* wigner = common(app.add_subcommand("wigner", "Gaussian Wigner functions of both modes"));
  auto* simulate = common(app.add_subcommand("simulate", "stochastic ensemble vs Lyapunov"));
  auto* omit = common(app.add_subcommand("omit-fit", "fit an OMIT spectrum"));
  omit->add_option("--spectrum", spectrum, "spectrum CSV (offset_hz,re_s21,im_s21)");
  omit->add_flag("--synthesize", synthesize, "fit a synthetic spectrum generated from the config");
  auto* echo = common(app.add_subcommand("echo-config", "print the configuration in rad/s"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (beta_s) cfg.drive.beta_s = *beta_s;
    if (beta_t) cfg.drive.beta_t = *beta_t;
    if (phi_s) cfg.drive.phi_s = *phi_s;
    if (phi_t) cfg.drive.phi_t = *phi_t;
    if (seed) cfg.sim.seed = *seed;
    if (out_dir) cfg.output_dir = *out_dir;
    if (cfg.drive.beta_s < 0.0 || cfg.drive.beta_t < 0.0) {
      throw ConfigError("modulation depths must be non-negative", 0, "drive");
    }
    for (const auto& w : cfg.warnings) err << "warning: " << w << '\n';

    if (*gain) cmd_gain_sweep(cfg, err);
    else if (*phase) cmd_phase_sweep(cfg, err);
    else if (*corr) cmd_corr(cfg, err);
    else if (*wigner) cmd_wigner(cfg, err);
    else if (*simulate) cmd_simulate(cfg, err);
    else if (*omit) {
      std::optional<std::filesystem::path> sp;
      if (spectrum) sp = *spectrum;
      cmd_omit_fit(cfg, synthesize, sp, err);
    } else if (*echo) cmd_echo_config(cfg, out);
    return 0;
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace optomech::cli
