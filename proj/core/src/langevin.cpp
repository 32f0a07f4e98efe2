#include "optomech/langevin.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <thread>

#include <Eigen/Dense>

#include "optomech/errors.hpp"

namespace optomech {

namespace {

constexpr double kStepSafety = 20.0;
constexpr double kFullStepsPerPeriod = 40.0;
constexpr double kSettleTolerance = 1.0e-6;
constexpr std::size_t kSingleTraceBatches = 20;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double max_rate(const Matrix4& a, const EnvelopeConfig& cfg) {
  return std::max({a.cwiseAbs().maxCoeff(), cfg.mode_dampings[0], cfg.mode_dampings[1]});
}

// Constant envelope drive from F_j cos(Ω_j t + ϕ_j).
Vector4 envelope_force(const EnvelopeConfig& cfg, const ResonantForce& force) {
  Vector4 f;
  for (int j = 0; j < 2; ++j) {
    const double k = force.amp[j] / (2.0 * std::sqrt(cfg.mode_freqs[j]));
    f[2 * j] = k * std::sin(force.phase[j]);
    f[2 * j + 1] = k * std::cos(force.phase[j]);
  }
  return f;
}

template <class Rhs>
Vector4 rk4_step(const Rhs& rhs, double t, const Vector4& y, double h) {
  const Vector4 k1 = rhs(t, y);
  const Vector4 k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
  const Vector4 k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
  const Vector4 k4 = rhs(t + h, y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::size_t step_count(double span, double dt) {
  return static_cast<std::size_t>(std::llround(span / dt));
}

QuadratureTrace run_trajectory(const Matrix4& a, const Vector4& noise_sd, const Vector4& init_sd,
                               const StochasticSettings& s, std::size_t index) {
  QuadratureTrace trace;
  trace.seed = s.seed;
  trace.index = index;
  trace.dt = s.dt;

  std::mt19937_64 rng(substream_seed(s.seed, index));
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&] {
    Vector4 xi;
    for (int i = 0; i < 4; ++i) xi[i] = normal(rng);
    return xi;
  };

  Vector4 q = s.q0;
  if (s.initial == InitialState::thermal) q = init_sd.cwiseProduct(gaussian());

  const Matrix4 step = Matrix4::Identity() + s.dt * a;
  for (std::size_t k = step_count(s.t_burn, s.dt); k > 0; --k) {
    q = step * q + noise_sd.cwiseProduct(gaussian());
  }

  const std::size_t n = step_count(s.t_end, s.dt);
  trace.t.reserve(n / s.record_stride + 1);
  trace.q.reserve(n / s.record_stride + 1);
  for (std::size_t k = 0;; ++k) {
    if (k % s.record_stride == 0) {
      if (!q.allFinite()) throw InstabilityError("stochastic trajectory diverged");
      trace.t.push_back(static_cast<double>(k) * s.dt);
      trace.q.push_back(q);
    }
    if (k == n) break;
    q = step * q + noise_sd.cwiseProduct(gaussian());
  }
  return trace;
}

}  // namespace

EnvelopeConfig envelope_config(const SystemParams& params, const EffectiveCouplings& couplings,
                               const DriveConfig& drive) {
  EnvelopeConfig cfg;
  cfg.eta = 8.0 * params.omega_m[0] * couplings.g_s;
  cfg.lambda = 4.0 * std::sqrt(params.omega_m[0] * params.omega_m[1]) * couplings.g_t;
  cfg.phi_s = drive.phi_s;
  cfg.phi_t = drive.phi_t;
  cfg.mode_freqs = params.omega_m;
  cfg.mode_dampings = params.gamma_m;
  for (std::size_t j = 0; j < 2; ++j) {
    cfg.force_psd[j] = 2.0 * params.omega_m[j] * params.gamma_m[j] * (params.n_bath[j] + 0.5);
  }
  return cfg;
}

DriftMatrix envelope_drift(const EnvelopeConfig& cfg) {
  const double w1 = cfg.mode_freqs[0];
  const double w2 = cfg.mode_freqs[1];
  // Projections: <cos(2Ωt-φ) sin 2Ωt> = sin φ / 2 and <cos(2Ωt-φ) cos 2Ωt> = cos φ / 2.
  const double p = cfg.eta / (4.0 * w1);
  const double t = cfg.lambda / (4.0 * std::sqrt(w1 * w2));
  const double ss = std::sin(cfg.phi_s);
  const double cs = std::cos(cfg.phi_s);
  const double st = std::sin(cfg.phi_t);
  const double ct = std::cos(cfg.phi_t);

  DriftMatrix out;
  Matrix4& a = out.a;
  a << -cfg.mode_dampings[0] / 2.0 - p * ss, p * cs, -t * st, t * ct,
      p * cs, -cfg.mode_dampings[0] / 2.0 + p * ss, -t * ct, -t * st,
      t * st, t * ct, -cfg.mode_dampings[1] / 2.0, 0.0,
      -t * ct, t * st, 0.0, -cfg.mode_dampings[1] / 2.0;
  return out;
}

DiffusionMatrix envelope_diffusion(const EnvelopeConfig& cfg) {
  DiffusionMatrix out;
  const double d1 = cfg.force_psd[0] / (2.0 * cfg.mode_freqs[0]);
  const double d2 = cfg.force_psd[1] / (2.0 * cfg.mode_freqs[1]);
  out.d.diagonal() << d1, d1, d2, d2;
  return out;
}

Vector4 envelope_rhs(const Vector4& state, const EnvelopeConfig& cfg) {
  return envelope_drift(cfg).a * state;
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index));
}

std::vector<QuadratureTrace> integrate_stochastic(const EnvelopeConfig& cfg,
                                                  const StochasticSettings& settings) {
  if (!(settings.dt > 0.0) || !(settings.t_end > 0.0) || settings.t_burn < 0.0) {
    throw InvalidArgument("dt and t_end must be positive and t_burn non-negative");
  }
  if (settings.n_traj == 0 || settings.record_stride == 0) {
    throw InvalidArgument("n_traj and record_stride must be at least 1");
  }
  const DriftMatrix a = envelope_drift(cfg);
  if (settings.dt > 1.0 / (kStepSafety * max_rate(a.a, cfg))) {
    throw InvalidArgument("step violates stability bound: dt must be <= 1/(20 max rate)");
  }
  if (!is_stable(a)) throw InstabilityError();

  const DiffusionMatrix d = envelope_diffusion(cfg);
  const Vector4 noise_sd = (d.d.diagonal() * settings.dt).cwiseSqrt();
  Vector4 init_sd;
  for (int j = 0; j < 2; ++j) {
    init_sd[2 * j] = init_sd[2 * j + 1] = std::sqrt(d.d(2 * j, 2 * j) / cfg.mode_dampings[j]);
  }

  std::vector<QuadratureTrace> out(settings.n_traj);
  const unsigned workers =
      std::clamp<unsigned>(settings.threads, 1u, static_cast<unsigned>(settings.n_traj));
  if (workers == 1) {
    for (std::size_t k = 0; k < settings.n_traj; ++k) {
      out[k] = run_trajectory(a.a, noise_sd, init_sd, settings, k);
    }
    return out;
  }

  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < settings.n_traj; k += workers) {
          out[k] = run_trajectory(a.a, noise_sd, init_sd, settings, k);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

double force_phase_for_direction(double direction) {
  return std::numbers::pi / 2.0 - direction;
}

Vector4 integrate_coherent(const EnvelopeConfig& cfg, double force_amp, double force_phase,
                           double t_end) {
  if (!(t_end > 0.0)) throw InvalidArgument("t_end must be positive");
  const Matrix4 a = envelope_drift(cfg).a;
  ResonantForce force;
  force.amp = {force_amp, 0.0};
  force.phase = {force_phase, 0.0};
  const Vector4 f = envelope_force(cfg, force);

  const double h_max = 0.02 / a.cwiseAbs().rowwise().sum().maxCoeff();
  const auto n = static_cast<std::size_t>(std::ceil(t_end / h_max));
  const double h = t_end / static_cast<double>(n);
  auto rhs = [&](double, const Vector4& y) -> Vector4 { return a * y + f; };

  Vector4 q = Vector4::Zero();
  for (std::size_t k = 0; k < n; ++k) q = rk4_step(rhs, 0.0, q, h);

  const double scale = f.cwiseAbs().maxCoeff();
  if (!q.allFinite() || (a * q + f).cwiseAbs().maxCoeff() > kSettleTolerance * scale) {
    throw InstabilityError("coherent response did not settle");
  }
  return q;
}

FullTrace integrate_full(const EnvelopeConfig& cfg, const ResonantForce& force,
                         const FullSettings& settings) {
  const double w1 = cfg.mode_freqs[0];
  const double w2 = cfg.mode_freqs[1];
  if (!(settings.dt > 0.0) || !(settings.t_end > 0.0) || settings.record_stride == 0) {
    throw InvalidArgument("dt, t_end and record_stride must be positive");
  }
  if (settings.dt > 2.0 * std::numbers::pi / (kFullStepsPerPeriod * w2) * (1.0 + 1.0e-12)) {
    throw InvalidArgument("step violates resolution bound: dt must be <= 2 pi/(40 omega_2)");
  }
  const double g1 = cfg.mode_dampings[0];
  const double g2 = cfg.mode_dampings[1];
  const double beat = w2 - w1;

  Eigen::Vector2d kick = Eigen::Vector2d::Zero();
  auto rhs = [&](double t, const Vector4& y) -> Vector4 {
    const double pump = cfg.eta * std::cos(2.0 * w1 * t - cfg.phi_s);
    const double mix = cfg.lambda * std::cos(beat * t - cfg.phi_t);
    const double f1 = force.amp[0] * std::cos(w1 * t + force.phase[0]) + kick[0];
    const double f2 = force.amp[1] * std::cos(w2 * t + force.phase[1]) + kick[1];
    Vector4 dy;
    dy << y[1], -g1 * y[1] - w1 * w1 * y[0] + pump * y[0] - mix * y[2] + f1,
        y[3], -g2 * y[3] - w2 * w2 * y[2] - mix * y[0] + f2;
    return dy;
  };

  std::mt19937_64 rng(substream_seed(settings.seed, 0));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sd1 = std::sqrt(cfg.force_psd[0] / settings.dt);
  const double sd2 = std::sqrt(cfg.force_psd[1] / settings.dt);

  FullTrace out;
  const std::size_t n = step_count(settings.t_end, settings.dt);
  out.t.reserve(n / settings.record_stride + 1);
  out.state.reserve(n / settings.record_stride + 1);
  Vector4 y = settings.initial;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * settings.dt;
    if (k % settings.record_stride == 0) {
      out.t.push_back(t);
      out.state.push_back(y);
    }
    if (k == n) break;
    if (settings.noise) kick << sd1 * normal(rng), sd2 * normal(rng);
    y = rk4_step(rhs, t, y, settings.dt);
  }
  if (!y.allFinite()) throw InstabilityError("full equations of motion diverged");
  return out;
}

QuadratureTrace demodulate(const FullTrace& trace, const EnvelopeConfig& cfg) {
  QuadratureTrace out;
  out.t = trace.t;
  out.q.reserve(trace.t.size());
  for (std::size_t k = 0; k < trace.t.size(); ++k) {
    const Vector4& y = trace.state[k];
    Vector4 q;
    for (int j = 0; j < 2; ++j) {
      const double w = cfg.mode_freqs[j];
      const double c = std::cos(w * trace.t[k]);
      const double s = std::sin(w * trace.t[k]);
      const double x = y[2 * j];
      const double v = y[2 * j + 1] / w;
      q[2 * j] = std::sqrt(w) * (x * c - v * s);
      q[2 * j + 1] = std::sqrt(w) * (x * s + v * c);
    }
    out.q.push_back(q);
  }
  if (trace.t.size() > 1) out.dt = trace.t[1] - trace.t[0];
  return out;
}

Vector4 envelope_to_full(const Vector4& envelope, double t, const EnvelopeConfig& cfg) {
  Vector4 y;
  for (int j = 0; j < 2; ++j) {
    const double w = cfg.mode_freqs[j];
    const double c = std::cos(w * t);
    const double s = std::sin(w * t);
    y[2 * j] = (envelope[2 * j] * c + envelope[2 * j + 1] * s) / std::sqrt(w);
    y[2 * j + 1] = std::sqrt(w) * (-envelope[2 * j] * s + envelope[2 * j + 1] * c);
  }
  return y;
}

QuadratureTrace integrate_envelope(const EnvelopeConfig& cfg, const ResonantForce& force,
                                   const Vector4& initial, double dt, double t_end,
                                   std::size_t record_stride) {
  if (!(dt > 0.0) || !(t_end > 0.0) || record_stride == 0) {
    throw InvalidArgument("dt, t_end and record_stride must be positive");
  }
  const Matrix4 a = envelope_drift(cfg).a;
  const Vector4 f = envelope_force(cfg, force);
  auto rhs = [&](double, const Vector4& y) -> Vector4 { return a * y + f; };

  QuadratureTrace out;
  out.dt = dt;
  const std::size_t n = step_count(t_end, dt);
  Vector4 q = initial;
  for (std::size_t k = 0;; ++k) {
    if (k % record_stride == 0) {
      out.t.push_back(static_cast<double>(k) * dt);
      out.q.push_back(q);
    }
    if (k == n) break;
    q = rk4_step(rhs, 0.0, q, dt);
  }
  return out;
}

EnsembleCovariance ensemble_covariance(const std::vector<QuadratureTrace>& traces,
                                       double t_discard) {
  struct Moments {
    double n = 0.0;
    Vector4 sum = Vector4::Zero();
    Matrix4 outer = Matrix4::Zero();
  };

  std::vector<Moments> batches;
  auto accumulate = [](Moments& m, const Vector4& q) {
    m.n += 1.0;
    m.sum += q;
    m.outer += q * q.transpose();
  };

  if (traces.size() == 1) {
    const QuadratureTrace& tr = traces.front();
    std::vector<const Vector4*> kept;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      if (tr.t[k] >= t_discard) kept.push_back(&tr.q[k]);
    }
    const std::size_t per = std::max<std::size_t>(kept.size() / kSingleTraceBatches, 1);
    for (std::size_t k = 0; k < kept.size(); ++k) {
      if (k % per == 0 && batches.size() < kSingleTraceBatches) batches.emplace_back();
      accumulate(batches.back(), *kept[k]);
    }
  } else {
    batches.resize(traces.size());
    for (std::size_t i = 0; i < traces.size(); ++i) {
      const QuadratureTrace& tr = traces[i];
      for (std::size_t k = 0; k < tr.size(); ++k) {
        if (tr.t[k] >= t_discard) accumulate(batches[i], tr.q[k]);
      }
    }
  }

  Moments total;
  for (const auto& b : batches) {
    total.n += b.n;
    total.sum += b.sum;
    total.outer += b.outer;
  }
  if (total.n < 2.0) throw InvalidArgument("no post-transient samples after t_discard");

  const Vector4 mean = total.sum / total.n;
  EnsembleCovariance out;
  out.samples = static_cast<std::size_t>(total.n);
  out.v.v = total.outer / total.n - mean * mean.transpose();

  std::vector<Matrix4> values;
  for (const auto& b : batches) {
    if (b.n > 0.0) values.push_back(b.outer / b.n - mean * mean.transpose());
  }
  const auto k = static_cast<double>(values.size());
  if (values.size() >= 2) {
    Matrix4 bar = Matrix4::Zero();
    for (const auto& m : values) bar += m;
    bar /= k;
    Matrix4 var = Matrix4::Zero();
    for (const auto& m : values) var += (m - bar).cwiseAbs2();
    out.standard_error = (var / (k * (k - 1.0))).cwiseSqrt();
  }
  return out;
}

std::filesystem::path write_trace_csv(const QuadratureTrace& trace,
                                      const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto path =
      dir / ("trace_seed" + std::to_string(trace.seed) + "_" + std::to_string(trace.index) + ".csv");
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.c_str(), "w"), &std::fclose);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  std::fputs("t,x1,y1,x2,y2\n", f.get());
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const Vector4& q = trace.q[k];
    std::fprintf(f.get(), "%.17g,%.17g,%.17g,%.17g,%.17g\n", trace.t[k], q[0], q[1], q[2], q[3]);
  }
  return path;
}

}  // namespace optomech
