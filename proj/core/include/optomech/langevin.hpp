#pragma once

// Classical time-domain integration of the two-mode system.
//
// The full equations of motion (unit masses) are
//
//   ẍ₁ + γ₁ẋ₁ + Ω₁²x₁ - η cos(2Ω₁t - φ_s) x₁ + Λ cos((Ω₂-Ω₁)t - φ_t) x₂ = F₁(t)
//   ẍ₂ + γ₂ẋ₂ + Ω₂²x₂ + Λ cos((Ω₂-Ω₁)t - φ_t) x₁ = F₂(t)
//
// and the slow envelopes are x_j = (X_j cos Ω_j t + Y_j sin Ω_j t)/√Ω_j, so
// X, Y share the normalization of CovarianceMatrix. Averaging over the fast
// oscillation gives a linear drift equal to the rotating-frame drift matrix
// once η = 8Ω₁g_s and Λ = 4√(Ω₁Ω₂)·g_t.

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "optomech/dynamics.hpp"
#include "optomech/trace.hpp"

namespace optomech {

struct EnvelopeConfig {
  double eta = 0.0;     ///< parametric strength [rad²/s²]
  double lambda = 0.0;  ///< transfer strength [rad²/s²]
  double phi_s = 0.0;
  double phi_t = 0.0;
  std::array<double, 2> force_psd{};  ///< white-force intensity S_j, <F(t)F(t')> = S δ(t-t')
  std::array<double, 2> mode_freqs{};
  std::array<double, 2> mode_dampings{};
};

/// Strengths and force intensities that reproduce (A, D) of the rotating
/// frame: η = 8Ω₁g_s, Λ = 4√(Ω₁Ω₂)·g_t, S_j = 2Ω_jγ_j(n_j + ½).
EnvelopeConfig envelope_config(const SystemParams& params, const EffectiveCouplings& couplings,
                               const DriveConfig& drive);

/// Averaged drift of (X₁, Y₁, X₂, Y₂) obtained by projecting the full
/// equations onto cos Ω_j t and sin Ω_j t.
DriftMatrix envelope_drift(const EnvelopeConfig& cfg);

/// Envelope noise intensity D_jj = S_j / (2Ω_j).
DiffusionMatrix envelope_diffusion(const EnvelopeConfig& cfg);

Vector4 envelope_rhs(const Vector4& state, const EnvelopeConfig& cfg);

/// `fixed` starts every trajectory at StochasticSettings::q0; `thermal` draws
/// from the uncoupled equilibrium, n_j + ½ per quadrature.
enum class InitialState { fixed, thermal };

struct StochasticSettings {
  double dt = 0.0;
  double t_end = 0.0;     ///< length of the recorded segment
  double t_burn = 0.0;    ///< integrated before t = 0 and not recorded
  std::size_t n_traj = 1;
  std::uint64_t seed = 0;
  std::size_t record_stride = 1;
  InitialState initial = InitialState::thermal;
  Vector4 q0 = Vector4::Zero();
  unsigned threads = 1;
};

/// Per-trajectory generator seed: splitmix64(seed ^ splitmix64(index)). The
/// stream for trajectory k is std::mt19937_64 seeded with this value and read
/// through std::normal_distribution<double>.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

/// Euler–Maruyama ensemble. Each step adds A q dt plus independent Gaussian
/// increments of variance D_ii dt. Requires dt ≤ 1/(20·max(|A_ij|, γ_j)).
/// Results do not depend on `threads`.
std::vector<QuadratureTrace> integrate_stochastic(const EnvelopeConfig& cfg,
                                                  const StochasticSettings& settings);

/// Angle of the force direction in the (X₁, Y₁) plane produced by a force
/// F cos(Ω₁t + ϕ) is π/2 - ϕ; this returns ϕ for a requested direction.
double force_phase_for_direction(double direction);

/// Settled envelope under the resonant force F cos(Ω₁t + ϕ) on the control
/// mode, integrated from rest with RK4 for `t_end`. Throws InstabilityError if
/// the response has not settled by then.
Vector4 integrate_coherent(const EnvelopeConfig& cfg, double force_amp, double force_phase,
                           double t_end);

/// Deterministic resonant forcing F_j cos(Ω_j t + ϕ_j) for the full equations.
struct ResonantForce {
  std::array<double, 2> amp{};
  std::array<double, 2> phase{};
};

struct FullTrace {
  std::vector<double> t;
  std::vector<Vector4> state;  ///< (x₁, ẋ₁, x₂, ẋ₂)
};

struct FullSettings {
  double dt = 0.0;
  double t_end = 0.0;
  std::size_t record_stride = 1;
  Vector4 initial = Vector4::Zero();  ///< (x₁, ẋ₁, x₂, ẋ₂) at t = 0
  bool noise = false;                 ///< add white forces of intensity force_psd
  std::uint64_t seed = 0;
};

/// RK4 on the second-order equations. Requires dt ≤ 2π/(40·Ω₂). With noise
/// on, the force is held constant across a step with variance S/dt.
FullTrace integrate_full(const EnvelopeConfig& cfg, const ResonantForce& force,
                         const FullSettings& settings);

/// Envelope (X₁, Y₁, X₂, Y₂) recovered from displacement and velocity.
QuadratureTrace demodulate(const FullTrace& trace, const EnvelopeConfig& cfg);

/// Envelope state (X₁, Y₁, X₂, Y₂) → full state (x₁, ẋ₁, x₂, ẋ₂) at time t.
Vector4 envelope_to_full(const Vector4& envelope, double t, const EnvelopeConfig& cfg);

/// RK4 integration of the averaged equations with the resonant forces of
/// `force` mapped to the envelope frame.
QuadratureTrace integrate_envelope(const EnvelopeConfig& cfg, const ResonantForce& force,
                                   const Vector4& initial, double dt, double t_end,
                                   std::size_t record_stride = 1);

struct EnsembleCovariance {
  CovarianceMatrix v;
  Matrix4 standard_error = Matrix4::Zero();  ///< batch means, one batch per trajectory
  std::size_t samples = 0;
};

/// Pooled second moments of every sample with t ≥ t_discard. Moments are
/// accumulated per trajectory and combined afterwards, so the result does not
/// depend on the order of `traces`.
EnsembleCovariance ensemble_covariance(const std::vector<QuadratureTrace>& traces,
                                       double t_discard);

/// Writes `t,x1,y1,x2,y2` to `dir/trace_seed<seed>_<index>.csv` and returns
/// the path.
std::filesystem::path write_trace_csv(const QuadratureTrace& trace,
                                      const std::filesystem::path& dir);

}  // namespace optomech
