#pragma once

// Run configuration for the optomech command-line tool.
//
// Input is one JSON document. Frequencies in the "system" and "drive"
// sections are given in Hz and converted to rad/s exactly once, here.

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "optomech/model.hpp"
#include "optomech/omit.hpp"

namespace optomech::cli {

/// Malformed or inconsistent configuration. `line` is 1-based, 0 if unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, std::size_t line = 0, std::string field = {});

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

/// φ′ = off + φ for presentation of primed phases.
struct PhaseConvention {
  double off_s = 3.0 * std::numbers::pi / 2.0;
  double off_t = std::numbers::pi / 2.0;
};

struct SweepSpec {
  std::string param;
  double start = 0.0;
  double stop = 0.0;
  std::size_t count = 1;

  double at(std::size_t i) const;
};

/// Zero means "derive from the configuration" for dt, t_end, t_discard and t_burn.
struct SimSettings {
  double dt = 0.0;
  double t_end = 0.0;
  double t_discard = 0.0;
  double t_burn = 0.0;
  std::size_t n_traj = 200;
  std::uint64_t seed = 1;
  std::size_t record_stride = 10;
  bool write_traces = false;
  unsigned threads = 1;
};

struct WignerSettings {
  double extent = 4.0;  ///< half width of the grid in off-state standard deviations
  std::size_t points = 81;
};

struct OmitSettings {
  Mode mode = Mode::control;
  std::size_t points = 401;
  double half_width_linewidths = 10.0;
  double noise_rel = 0.0;
  std::uint64_t seed = 1;
  std::string spectrum;  ///< CSV path, relative to the config file
  OmitFreeMask free;
};

struct RunConfig {
  SystemParams system;
  DriveConfig drive;
  PhaseConvention phases;
  std::optional<SweepSpec> sweep;
  SimSettings sim;
  WignerSettings wigner;
  OmitSettings omit;
  std::filesystem::path output_dir = "out";
  std::filesystem::path source_dir = ".";  ///< directory of the config file
  std::vector<std::string> warnings;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Internal (rad/s) view of a configuration, as printed by echo-config.
nlohmann::ordered_json to_json(const RunConfig& cfg);

}  // namespace optomech::cli
