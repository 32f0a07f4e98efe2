#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "optomech/langevin.hpp"

namespace optomech::cli {

/// One point of a sweep: the drive to use plus the raw value of the swept
/// parameter (NaN without a sweep).
struct SweepPoint {
  DriveConfig drive;
  double value = 0.0;
};

/// Expands the sweep (or the single configured drive when there is none).
/// force_phase leaves the drive untouched.
std::vector<SweepPoint> sweep_points(const RunConfig& cfg);

/// Stochastic settings with every zero field replaced by its derived value:
/// dt = 1/(400·max rate), t_discard = 10/min γ, t_end = t_discard + 50/γ₁,
/// t_burn = 10/|spectral abscissa|.
StochasticSettings resolve_sim_settings(const RunConfig& cfg, const EnvelopeConfig& env);

/// Each command writes its files under cfg.output_dir and progress notes to
/// `log`. They throw ConfigError for bad input and optomech::Error otherwise.
void cmd_gain_sweep(const RunConfig& cfg, std::ostream& log);
void cmd_phase_sweep(const RunConfig& cfg, std::ostream& log);
void cmd_corr(const RunConfig& cfg, std::ostream& log);
void cmd_wigner(const RunConfig& cfg, std::ostream& log);
void cmd_simulate(const RunConfig& cfg, std::ostream& log);
void cmd_omit_fit(const RunConfig& cfg, bool synthesize,
                  const std::optional<std::filesystem::path>& spectrum, std::ostream& log);
void cmd_echo_config(const RunConfig& cfg, std::ostream& out);

/// Full command-line entry point. Returns the process exit code: 0 success,
/// 1 runtime failure, 2 configuration or usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace optomech::cli
