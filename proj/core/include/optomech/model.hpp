#pragma once

// Physical parameters of the two-mode membrane/cavity system and the
// quantities derived from them: optical spring shifts, effective squeezing and
// transfer rates, cooperativities and the parametric threshold.
//
// Every rate is an angular frequency in rad/s.

#include <array>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

namespace optomech {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Mechanical mode label. The control mode is the lower-frequency one and
/// receives the parametric (squeezing) drive; the target mode is only reached
/// through the beam-splitter interaction.
enum class Mode : std::size_t { control = 0, target = 1 };

constexpr std::size_t index(Mode m) { return static_cast<std::size_t>(m); }

struct SystemParams {
  double omega_c = 0.0;   ///< cavity resonance
  double kappa = 0.0;     ///< total cavity dissipation
  double kappa_ex = 0.0;  ///< external coupling
  std::array<double, 2> omega_m{};  ///< mechanical frequencies (control, target)
  std::array<double, 2> gamma_m{};  ///< mechanical damping
  std::array<double, 2> g0{};       ///< single-photon couplings
  std::array<double, 2> n_bath{};   ///< effective bath occupations
};

struct DriveConfig {
  double detuning = 0.0;  ///< pump detuning from the cavity, negative = red
  double n_d = 0.0;       ///< mean intracavity pump photon number
  double beta_s = 0.0;    ///< squeezing modulation depth (tone at 2*omega_1)
  double beta_t = 0.0;    ///< transfer modulation depth (tone at omega_2 - omega_1)
  double phi_s = 0.0;
  double phi_t = 0.0;
};

struct EffectiveCouplings {
  std::array<double, 2> dOmega_opt{};  ///< signed optical spring shifts
  double g_s = 0.0;
  double g_t = 0.0;
  double beta_th = 0.0;  ///< squeezing depth at which the control mode goes unstable
};

/// Checks the hard invariants of `params` and throws InvalidArgument when one
/// is broken. Soft violations (moderately low Q) are returned as warnings.
std::vector<std::string> validate(const SystemParams& params);

/// Same for a drive. Flags depths above one and a detuning that is not large
/// compared with the mechanical frequencies.
std::vector<std::string> validate(const DriveConfig& drive, const SystemParams& params);

/// Static optical spring shift g0^2 n_d 2Δ / (κ²/4 + Δ²). Odd in the detuning.
double optical_spring_shift(double g0, double n_d, double detuning, double kappa);

/// Effective rates of the two-mode Hamiltonian.
///
/// The transfer rate is g_t = β_t sqrt(|δΩ₁ δΩ₂|) / 2. The squeezing rate is
/// g_s = β_s |δΩ₁| / (4 (1 + 2|δΩ₁|/Ω₁)): the modulation is measured against
/// the optically stiffened spring, which makes the rotating-frame
/// instability point coincide exactly with `squeeze_threshold`.
EffectiveCouplings effective_couplings(const SystemParams& params, const DriveConfig& drive);

/// C = 4 g0² n_d / (γ κ).
double cooperativity(double g0, double n_d, double gamma_m, double kappa);

/// Threshold depth β_th = (1 + 2|δΩ|/Ω) / (|δΩ|/γ). Throws InvalidArgument
/// when the shift is zero since no parametric modulation is possible then.
double squeeze_threshold(double dOmega_opt, double gamma_m, double omega_m);

/// Instantaneous photon number under the two-tone amplitude modulation.
double modulated_photon_number(double t, const DriveConfig& drive,
                               const std::array<double, 2>& omega_m);

enum class Quadrature { deamplified, amplified };

/// Phase-sensitive amplitude gain of a coherently driven parametric
/// amplifier, (1 ± β/β_th)^-1 on its two principal quadratures.
double analytic_gain(double beta_s, double beta_th, Quadrature q);

/// Amplitude gain for a force whose direction makes angle `phase` with the
/// deamplified axis:
///   [cos²(phase)/(1 + r)² + sin²(phase)/(1 - r)²]^(1/2),  r = β/β_th.
double analytic_gain(double beta_s, double beta_th, double phase);

/// Membrane device used throughout the examples and tests (rad/s). Mechanical
/// frequencies are 159.5 kHz and 351.1 kHz.
SystemParams reference_system(std::array<double, 2> n_bath = {1.0e4, 1.0e4});

/// Pump at Δ = -κ/(2√3), n_d = 2.88e13, β_s = 0.0476, β_t = 0.28, zero phases.
DriveConfig reference_drive(const SystemParams& params);

}  // namespace optomech
