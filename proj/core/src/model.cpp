#include "optomech/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "optomech/errors.hpp"

namespace optomech {

namespace {

constexpr double kHighQWarn = 1.0e-3;
constexpr double kHighQError = 1.0e-1;

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InvalidArgument(std::string(name) + " must be finite and strictly positive");
  }
}

}  // namespace

std::vector<std::string> validate(const SystemParams& params) {
  std::vector<std::string> warnings;
  require_positive(params.omega_c, "omega_c");
  require_positive(params.kappa, "kappa");
  require_positive(params.kappa_ex, "kappa_ex");
  if (params.kappa_ex > params.kappa) {
    throw InvalidArgument("kappa_ex must not exceed kappa");
  }
  for (std::size_t j = 0; j < 2; ++j) {
    require_positive(params.omega_m[j], "omega_m");
    require_positive(params.gamma_m[j], "gamma_m");
    require_positive(params.g0[j], "g0");
    if (!(params.n_bath[j] >= 0.0) || !std::isfinite(params.n_bath[j])) {
      throw InvalidArgument("n_bath must be finite and non-negative");
    }
    const double ratio = params.gamma_m[j] / params.omega_m[j];
    if (ratio > kHighQError) {
      throw InvalidArgument("mode " + std::to_string(j + 1) +
                            " is not high-Q (gamma/omega > 0.1)");
    }
    if (ratio > kHighQWarn) {
      std::ostringstream os;
      os << "mode " << j + 1 << " has gamma/omega = " << ratio
         << "; rotating-wave results degrade above 1e-3";
      warnings.push_back(os.str());
    }
  }
  if (!(params.omega_m[0] < params.omega_m[1])) {
    throw InvalidArgument("control mode must have the lower frequency (omega_m[0] < omega_m[1])");
  }
  return warnings;
}

std::vector<std::string> validate(const DriveConfig& drive, const SystemParams& params) {
  std::vector<std::string> warnings;
  if (!(drive.n_d >= 0.0)) throw InvalidArgument("n_d must be non-negative");
  if (!(drive.beta_s >= 0.0) || !(drive.beta_t >= 0.0)) {
    throw InvalidArgument("modulation depths must be non-negative");
  }
  if (drive.beta_s > 1.0 || drive.beta_t > 1.0) {
    warnings.emplace_back("modulation depth above 1 drives the photon number negative");
  }
  const double big = 10.0 * std::max(params.omega_m[0], params.omega_m[1]);
  if (std::abs(drive.detuning) < big) {
    warnings.emplace_back("|detuning| is not large compared with the mechanical frequencies");
  }
  return warnings;
}

double optical_spring_shift(double g0, double n_d, double detuning, double kappa) {
  return g0 * g0 * n_d * 2.0 * detuning / (0.25 * kappa * kappa + detuning * detuning);
}

EffectiveCouplings effective_couplings(const SystemParams& params, const DriveConfig& drive) {
  EffectiveCouplings out;
  for (std::size_t j = 0; j < 2; ++j) {
    out.dOmega_opt[j] = optical_spring_shift(params.g0[j], drive.n_d, drive.detuning, params.kappa);
  }
  const double shift1 = std::abs(out.dOmega_opt[0]);
  const double shift2 = std::abs(out.dOmega_opt[1]);
  const double stiffening = 1.0 + 2.0 * shift1 / params.omega_m[0];
  out.g_s = drive.beta_s * shift1 / (4.0 * stiffening);
  out.g_t = drive.beta_t * std::sqrt(shift1 * shift2) / 2.0;
  out.beta_th = shift1 > 0.0
                    ? squeeze_threshold(out.dOmega_opt[0], params.gamma_m[0], params.omega_m[0])
                    : std::numeric_limits<double>::infinity();
  return out;
}

double cooperativity(double g0, double n_d, double gamma_m, double kappa) {
  return 4.0 * g0 * g0 * n_d / (gamma_m * kappa);
}

double squeeze_threshold(double dOmega_opt, double gamma_m, double omega_m) {
  if (dOmega_opt == 0.0) {
    throw InvalidArgument("no parametric modulation possible: optical spring shift is zero");
  }
  const double shift = std::abs(dOmega_opt);
  return (1.0 + 2.0 * shift / omega_m) / (shift / gamma_m);
}

double modulated_photon_number(double t, const DriveConfig& drive,
                               const std::array<double, 2>& omega_m) {
  const double beat = omega_m[1] - omega_m[0];
  return drive.n_d * (1.0 + drive.beta_s * std::cos(2.0 * omega_m[0] * t + drive.phi_s) +
                      drive.beta_t * std::cos(beat * t + drive.phi_t));
}

double analytic_gain(double beta_s, double beta_th, Quadrature q) {
  const double r = beta_s / beta_th;
  return q == Quadrature::deamplified ? 1.0 / (1.0 + r) : 1.0 / (1.0 - r);
}

double analytic_gain(double beta_s, double beta_th, double phase) {
  const double r = beta_s / beta_th;
  const double c = std::cos(phase);
  const double s = std::sin(phase);
  return std::sqrt(c * c / ((1.0 + r) * (1.0 + r)) + s * s / ((1.0 - r) * (1.0 - r)));
}

SystemParams reference_system(std::array<double, 2> n_bath) {
  SystemParams p;
  p.omega_c = kTwoPi * 3.5035e9;
  p.kappa = kTwoPi * 38.9e6;
  p.kappa_ex = kTwoPi * 787.0e3;
  p.omega_m = {kTwoPi * 159.5e3, kTwoPi * 351.1e3};
  p.gamma_m = {kTwoPi * 39.9, kTwoPi * 13.8};
  p.g0 = {kTwoPi * 28.2e-3, kTwoPi * 6.31e-3};
  p.n_bath = n_bath;
  return p;
}

DriveConfig reference_drive(const SystemParams& params) {
  DriveConfig d;
  d.detuning = -params.kappa / (2.0 * std::sqrt(3.0));
  d.n_d = 2.88e13;
  d.beta_s = 0.0476;
  d.beta_t = 0.28;
  return d;
}

}  // namespace optomech
