#pragma once

// Optomechanically induced transparency in the unresolved-sideband regime.
//
// For one mechanical mode j and a probe at offset ω from the pump,
//
//   S21(ω) = (κ_ex/2)(1 + i f) / (-i(Δ + ω) + κ/2 + 2Δ f)
//   f(ω)   = s χ̃(ω) / (i(Δ - ω) + κ/2)
//   χ̃(ω)  = 1 / (Ω_j² - ω² - i ω γ_j)
//
// The coupling enters only through the strength s = 2 n_d g0² Ω_j; the
// effective mass and zero-point amplitude cancel. An optional complex scale a
// and offset b absorb the unknown normalization of the measured transmission:
// S21_measured = a S21 + b.

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "optomech/errors.hpp"
#include "optomech/model.hpp"

namespace optomech {

using Complex = std::complex<double>;

struct OmitSpectrum {
  std::vector<double> offsets;  ///< probe minus pump frequency [rad/s], strictly increasing
  std::vector<Complex> s21;
  double detuning = 0.0;
  double n_d = 0.0;
};

/// Every quantity the line shape depends on for one mode.
struct OmitParams {
  double strength = 0.0;  ///< s = 2 n_d g0² Ω_j [rad³/s³]
  double omega_m = 0.0;
  double gamma_m = 0.0;
  double kappa = 0.0;
  double kappa_ex = 0.0;
  double detuning = 0.0;
  Complex scale{1.0, 0.0};
  Complex offset{0.0, 0.0};
};

double omit_strength(double g0, double n_d, double omega_m);
double g0_from_strength(double strength, double n_d, double omega_m);

OmitParams omit_params(const SystemParams& params, const DriveConfig& drive, Mode mode);

Complex s21_model(double omega_offset, const OmitParams& p);
Complex s21_model(double omega_offset, const SystemParams& params, const DriveConfig& drive,
                  Mode mode);

/// Empty-cavity transmission (the f → 0 limit), including scale and offset.
Complex bare_cavity(double omega_offset, const OmitParams& p);

/// Probe window of ±half_width_linewidths·γ_j around the optically shifted
/// resonance Ω_j + δΩ_opt,j.
std::vector<double> omit_window(const SystemParams& params, const DriveConfig& drive, Mode mode,
                                std::size_t points, double half_width_linewidths = 10.0);

/// Noiseless spectrum, or with additive complex Gaussian noise of standard
/// deviation noise_rel·|S21(ω)| per point (split equally between real and
/// imaginary parts) when noise_rel > 0.
OmitSpectrum synthesize_spectrum(const SystemParams& params, const DriveConfig& drive, Mode mode,
                                 const std::vector<double>& offsets, double noise_rel = 0.0,
                                 std::uint64_t seed = 0);

struct OmitFreeMask {
  bool g0 = true;  ///< the strength s
  bool gamma_m = true;
  bool omega_m = true;
  bool kappa = false;
  bool kappa_ex = false;
  bool n_d = false;
  bool scale = false;
  bool offset = false;
};

struct OmitFitOptions {
  /// Replace the starting Ω_j and γ_j by estimates read off the spectrum.
  bool auto_initialize = true;
  int max_iterations = 200;
  double step_tolerance = 1.0e-8;
};

struct OmitFitResult {
  OmitParams params;
  OmitParams uncertainty;  ///< one standard deviation, zero for fixed parameters
  double g0 = 0.0;
  double g0_uncertainty = 0.0;
  double n_d = 0.0;
  double residual_norm = 0.0;  ///< ‖model - data‖₂
  double signal_norm = 0.0;    ///< ‖data‖₂
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

class OmitFitError : public Error {
 public:
  OmitFitError(const std::string& what, OmitFitResult best)
      : Error(what), best_(std::move(best)) {}
  const OmitFitResult& best() const { return best_; }

 private:
  OmitFitResult best_;
};

/// Starting Ω_j and γ_j from the extremum of |S21 - bare cavity| and its full
/// width at half prominence. Throws "mechanical feature not bracketed" when the
/// extremum or its half-prominence points fall outside the window.
OmitParams initial_guess(const OmitSpectrum& spectrum, const OmitParams& start);

/// Least squares on stacked (real, imaginary) residuals. n_d is only
/// identifiable through s, so when both `g0` and `n_d` are free the
/// degeneracy is reported in `warnings` and n_d is held at its start value;
/// likewise κ_ex with `scale`. Throws OmitFitError carrying the best point on
/// non-convergence.
OmitFitResult fit_omit(const OmitSpectrum& spectrum, const SystemParams& params_init, Mode mode,
                       const OmitFreeMask& free = {}, const OmitFitOptions& options = {});

/// CSV with header `offset_hz,re_s21,im_s21`. Offsets are converted to rad/s.
/// Throws InvalidArgument with the offending row on malformed input.
OmitSpectrum read_spectrum_csv(const std::filesystem::path& path, double detuning, double n_d);
void write_spectrum_csv(const OmitSpectrum& spectrum, const std::filesystem::path& path);

}  // namespace optomech
