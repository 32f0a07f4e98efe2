#include "optomech/omit.hpp"

#include <algorithm>
#include <array>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>

#include "optomech/langevin.hpp"
#include "optomech/least_squares.hpp"

namespace optomech {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr double kSqrt3 = 1.7320508075688772;

// Order of the parameters in the least-squares vector.
enum Slot : int {
  kStrength, kOmega, kGamma, kKappa, kKappaEx, kScaleRe, kScaleIm, kOffsetRe, kOffsetIm, kSlots
};

Eigen::Matrix<double, kSlots, 1> pack(const OmitParams& p) {
  Eigen::Matrix<double, kSlots, 1> v;
  v << p.strength, p.omega_m, p.gamma_m, p.kappa, p.kappa_ex, p.scale.real(), p.scale.imag(),
      p.offset.real(), p.offset.imag();
  return v;
}

OmitParams unpack(const Eigen::Matrix<double, kSlots, 1>& v, double detuning) {
  OmitParams p;
  p.strength = v[kStrength];
  p.omega_m = v[kOmega];
  p.gamma_m = v[kGamma];
  p.kappa = v[kKappa];
  p.kappa_ex = v[kKappaEx];
  p.detuning = detuning;
  p.scale = {v[kScaleRe], v[kScaleIm]};
  p.offset = {v[kOffsetRe], v[kOffsetIm]};
  return p;
}

double optical_damping(const OmitParams& p, double omega) {
  // Γ_opt = g0² n_d κ [1/(κ²/4 + (Δ+Ω)²) - 1/(κ²/4 + (Δ-Ω)²)] with g0² n_d = s/(2Ω).
  const double k2 = 0.25 * p.kappa * p.kappa;
  const double g2n = p.strength / (2.0 * omega);
  return g2n * p.kappa *
         (1.0 / (k2 + (p.detuning - omega) * (p.detuning - omega)) -
          1.0 / (k2 + (p.detuning + omega) * (p.detuning + omega)));
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& field, std::size_t row, const char* column) {
  const std::string t = trim(field);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v)) {
    throw InvalidArgument("row " + std::to_string(row) + ": column " + column +
                          " is not a finite number: '" + t + "'");
  }
  return v;
}

}  // namespace

double omit_strength(double g0, double n_d, double omega_m) { return 2.0 * n_d * g0 * g0 * omega_m; }

double g0_from_strength(double strength, double n_d, double omega_m) {
  if (!(n_d > 0.0) || !(omega_m > 0.0)) throw InvalidArgument("n_d and omega_m must be positive");
  return std::sqrt(std::max(strength, 0.0) / (2.0 * n_d * omega_m));
}

OmitParams omit_params(const SystemParams& params, const DriveConfig& drive, Mode mode) {
  const std::size_t j = index(mode);
  OmitParams p;
  p.strength = omit_strength(params.g0[j], drive.n_d, params.omega_m[j]);
  p.omega_m = params.omega_m[j];
  p.gamma_m = params.gamma_m[j];
  p.kappa = params.kappa;
  p.kappa_ex = params.kappa_ex;
  p.detuning = drive.detuning;
  return p;
}

Complex s21_model(double w, const OmitParams& p) {
  const Complex chi = 1.0 / Complex(p.omega_m * p.omega_m - w * w, -w * p.gamma_m);
  const Complex f = p.strength * chi / (kI * (p.detuning - w) + 0.5 * p.kappa);
  const Complex s = 0.5 * p.kappa_ex * (1.0 + kI * f) /
                    (-kI * (p.detuning + w) + 0.5 * p.kappa + 2.0 * p.detuning * f);
  return p.scale * s + p.offset;
}

Complex s21_model(double omega_offset, const SystemParams& params, const DriveConfig& drive,
                  Mode mode) {
  return s21_model(omega_offset, omit_params(params, drive, mode));
}

Complex bare_cavity(double w, const OmitParams& p) {
  return p.scale * (0.5 * p.kappa_ex) / (-kI * (p.detuning + w) + 0.5 * p.kappa) + p.offset;
}

std::vector<double> omit_window(const SystemParams& params, const DriveConfig& drive, Mode mode,
                                std::size_t points, double half_width_linewidths) {
  if (points < 2) throw InvalidArgument("spectrum window needs at least two points");
  const std::size_t j = index(mode);
  const double center =
      params.omega_m[j] + optical_spring_shift(params.g0[j], drive.n_d, drive.detuning, params.kappa);
  const double half = half_width_linewidths * params.gamma_m[j];
  std::vector<double> w(points);
  for (std::size_t k = 0; k < points; ++k) {
    w[k] = center - half + 2.0 * half * static_cast<double>(k) / static_cast<double>(points - 1);
  }
  return w;
}

OmitSpectrum synthesize_spectrum(const SystemParams& params, const DriveConfig& drive, Mode mode,
                                 const std::vector<double>& offsets, double noise_rel,
                                 std::uint64_t seed) {
  OmitSpectrum out;
  out.offsets = offsets;
  out.detuning = drive.detuning;
  out.n_d = drive.n_d;
  out.s21.reserve(offsets.size());
  const OmitParams p = omit_params(params, drive, mode);
  std::mt19937_64 rng(substream_seed(seed, 0));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double w : offsets) {
    Complex s = s21_model(w, p);
    if (noise_rel > 0.0) {
      const double sd = noise_rel * std::abs(s) / std::sqrt(2.0);
      const double re = normal(rng);
      const double im = normal(rng);
      s += Complex(sd * re, sd * im);
    }
    out.s21.push_back(s);
  }
  return out;
}

OmitParams initial_guess(const OmitSpectrum& spectrum, const OmitParams& start) {
  const std::size_t m = spectrum.offsets.size();
  if (m < 5) throw InvalidArgument("spectrum too short to locate a mechanical feature");
  std::vector<double> diff(m);
  for (std::size_t k = 0; k < m; ++k) {
    diff[k] = std::abs(spectrum.s21[k] - bare_cavity(spectrum.offsets[k], start));
  }
  const auto peak = static_cast<std::size_t>(
      std::distance(diff.begin(), std::max_element(diff.begin(), diff.end())));
  const double floor = *std::min_element(diff.begin(), diff.end());
  const double half = 0.5 * (diff[peak] + floor);
  if (peak == 0 || peak + 1 == m) throw InvalidArgument("mechanical feature not bracketed");

  auto crossing = [&](std::size_t from, int dir) -> double {
    for (std::size_t k = from; k > 0 && k + 1 < m;) {
      const std::size_t next = dir > 0 ? k + 1 : k - 1;
      if (diff[next] <= half) {
        const double frac = (diff[k] - half) / (diff[k] - diff[next]);
        return spectrum.offsets[k] + frac * (spectrum.offsets[next] - spectrum.offsets[k]);
      }
      k = next;
    }
    throw InvalidArgument("mechanical feature not bracketed");
  };
  const double width = crossing(peak, +1) - crossing(peak, -1);

  OmitParams out = start;
  const double w_peak = spectrum.offsets[peak];
  const double k2 = 0.25 * start.kappa * start.kappa + start.detuning * start.detuning;
  out.omega_m = w_peak - start.strength * start.detuning / (w_peak * k2);
  const double gamma_eff = width / kSqrt3;
  out.gamma_m = std::max(gamma_eff - optical_damping(out, out.omega_m), 0.1 * gamma_eff);
  return out;
}

OmitFitResult fit_omit(const OmitSpectrum& spectrum, const SystemParams& params_init, Mode mode,
                       const OmitFreeMask& free, const OmitFitOptions& options) {
  const std::size_t m = spectrum.offsets.size();
  if (m != spectrum.s21.size() || m < 5) {
    throw InvalidArgument("spectrum needs at least 5 points with matching columns");
  }
  for (std::size_t k = 1; k < m; ++k) {
    if (!(spectrum.offsets[k] > spectrum.offsets[k - 1])) {
      throw InvalidArgument("spectrum offsets must be strictly increasing");
    }
  }
  if (!(spectrum.n_d > 0.0)) throw InvalidArgument("spectrum n_d must be positive");

  OmitFitResult result;
  DriveConfig drive;
  drive.detuning = spectrum.detuning;
  drive.n_d = spectrum.n_d;
  OmitParams start = omit_params(params_init, drive, mode);
  if (options.auto_initialize && (free.scale || free.offset)) {
    // Match the window edges to the bare cavity before looking for the feature.
    const Complex data = 0.5 * (spectrum.s21.front() + spectrum.s21.back());
    start.scale = 1.0;
    start.offset = 0.0;
    const Complex bare =
        0.5 * (bare_cavity(spectrum.offsets.front(), start) + bare_cavity(spectrum.offsets.back(), start));
    if (free.scale) start.scale = data / bare;
    else start.offset = data - bare;
  }
  if (options.auto_initialize) start = initial_guess(spectrum, start);

  bool fit_nd = free.n_d && !free.g0;
  if (free.g0 && free.n_d) {
    result.warnings.emplace_back(
        "g0 and n_d are degenerate (only g0^2 n_d is identifiable); n_d held fixed");
  }
  bool fit_kappa_ex = free.kappa_ex;
  if (free.kappa_ex && free.scale) {
    result.warnings.emplace_back("kappa_ex and the complex scale are degenerate; kappa_ex held fixed");
    fit_kappa_ex = false;
  }

  if (free.scale && free.offset) {
    const double a = std::abs(bare_cavity(spectrum.offsets.front(), start) / start.scale);
    const double z = std::abs(bare_cavity(spectrum.offsets.back(), start) / start.scale);
    if (std::abs(a - z) < 1e-2 * std::max(a, z)) {
      result.warnings.emplace_back(
          "scale and offset are nearly degenerate: the cavity response is flat across the window");
    }
  }

  const std::array<bool, kSlots> active = {free.g0 || fit_nd, free.omega_m, free.gamma_m,
                                           free.kappa,        fit_kappa_ex, free.scale,
                                           free.scale,        free.offset,  free.offset};
  std::vector<int> slots;
  for (int s = 0; s < kSlots; ++s) {
    if (active[static_cast<std::size_t>(s)]) slots.push_back(s);
  }
  if (slots.empty()) throw InvalidArgument("no free OMIT parameters");

  double signal = 0.0;
  for (const auto& s : spectrum.s21) signal = std::max(signal, std::abs(s));
  const Eigen::Matrix<double, kSlots, 1> base = pack(start);
  Eigen::Matrix<double, kSlots, 1> natural;
  natural << start.strength, start.gamma_m, start.gamma_m, start.kappa, start.kappa_ex, 1.0, 1.0,
      signal, signal;

  const auto n = static_cast<Eigen::Index>(slots.size());
  Eigen::VectorXd x0(n), scale(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x0[i] = base[slots[static_cast<std::size_t>(i)]];
    scale[i] = natural[slots[static_cast<std::size_t>(i)]];
  }
  auto expand = [&](const Eigen::VectorXd& x) {
    Eigen::Matrix<double, kSlots, 1> v = base;
    for (Eigen::Index i = 0; i < n; ++i) v[slots[static_cast<std::size_t>(i)]] = x[i];
    return unpack(v, spectrum.detuning);
  };
  auto residuals = [&](const Eigen::VectorXd& x) {
    const OmitParams p = expand(x);
    Eigen::VectorXd r(2 * static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k) {
      const Complex d = s21_model(spectrum.offsets[k], p) - spectrum.s21[k];
      r[static_cast<Eigen::Index>(2 * k)] = d.real();
      r[static_cast<Eigen::Index>(2 * k + 1)] = d.imag();
    }
    return r;
  };

  LeastSquaresOptions lm;
  lm.max_iterations = options.max_iterations;
  lm.step_tolerance = options.step_tolerance;
  const LeastSquaresResult fit = levenberg_marquardt(residuals, x0, scale, lm);

  result.params = expand(fit.x);
  Eigen::Matrix<double, kSlots, 1> sd = Eigen::Matrix<double, kSlots, 1>::Zero();
  for (Eigen::Index i = 0; i < n; ++i) {
    sd[slots[static_cast<std::size_t>(i)]] = std::sqrt(std::max(fit.covariance(i, i), 0.0));
  }
  result.uncertainty = unpack(sd, 0.0);
  result.iterations = fit.iterations;
  result.converged = fit.converged;
  result.residual_norm = std::sqrt(fit.cost);
  double sig2 = 0.0;
  for (const auto& s : spectrum.s21) sig2 += std::norm(s);
  result.signal_norm = std::sqrt(sig2);

  const double w = result.params.omega_m;
  if (fit_nd) {
    const double g0 = params_init.g0[index(mode)];
    result.g0 = g0;
    result.n_d = result.params.strength / (2.0 * g0 * g0 * w);
  } else {
    result.n_d = spectrum.n_d;
    result.g0 = g0_from_strength(result.params.strength, result.n_d, w);
    // g0 ∝ √s, so σ_g0 = g0 σ_s / (2 s).
    result.g0_uncertainty =
        result.params.strength > 0.0
            ? result.g0 * result.uncertainty.strength / (2.0 * result.params.strength)
            : 0.0;
  }

  if (!fit.converged) {
    throw OmitFitError("OMIT fit did not converge in " + std::to_string(fit.iterations) +
                           " iterations",
                       result);
  }
  return result;
}

OmitSpectrum read_spectrum_csv(const std::filesystem::path& path, double detuning, double n_d) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open spectrum file " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != "offset_hz,re_s21,im_s21") {
    throw InvalidArgument("row 1: expected header 'offset_hz,re_s21,im_s21'");
  }
  OmitSpectrum out;
  out.detuning = detuning;
  out.n_d = n_d;
  for (std::size_t row = 2; std::getline(in, line); ++row) {
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 3) {
      throw InvalidArgument("row " + std::to_string(row) + ": expected 3 columns, found " +
                            std::to_string(fields.size()));
    }
    const double hz = parse_number(fields[0], row, "offset_hz");
    const double w = kTwoPi * hz;
    if (!out.offsets.empty() && !(w > out.offsets.back())) {
      throw InvalidArgument("row " + std::to_string(row) + ": offsets must be strictly increasing");
    }
    out.offsets.push_back(w);
    out.s21.emplace_back(parse_number(fields[1], row, "re_s21"),
                         parse_number(fields[2], row, "im_s21"));
  }
  if (out.offsets.empty()) throw InvalidArgument("spectrum file has no data rows");
  return out;
}

void write_spectrum_csv(const OmitSpectrum& spectrum, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.c_str(), "w"), &std::fclose);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  std::fputs("offset_hz,re_s21,im_s21\n", f.get());
  for (std::size_t k = 0; k < spectrum.offsets.size(); ++k) {
    std::fprintf(f.get(), "%.17g,%.17g,%.17g\n", spectrum.offsets[k] / kTwoPi,
                 spectrum.s21[k].real(), spectrum.s21[k].imag());
  }
}

}  // namespace optomech
