#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "optomech/errors.hpp"

namespace optomech::cli {

namespace {

using json = nlohmann::json;

const std::set<std::string> kSweepParams = {"beta_s",       "beta_t",       "phi_s",      "phi_t",
                                            "phi_s_primed", "phi_t_primed", "force_phase"};

std::size_t line_at(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

// Best-effort source line of `"key"` inside `"section"`.
std::size_t line_of(const std::string& text, const std::string& section, const std::string& key) {
  std::size_t from = 0;
  if (!section.empty()) {
    from = text.find('"' + section + '"');
    if (from == std::string::npos) return 0;
  }
  if (key.empty()) return line_at(text, from);
  const std::size_t pos = text.find('"' + key + '"', from);
  return pos == std::string::npos ? line_at(text, from) : line_at(text, pos);
}

// Typed, exhaustive access to one JSON object: every key must be consumed.
class Section {
 public:
  Section(const std::string& text, const json& obj, std::string name)
      : text_(text), obj_(obj), name_(std::move(name)) {
    if (!obj_.is_object()) fail("", "section must be a JSON object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    const std::string field = key.empty() ? name_ : name_ + "." + key;
    throw ConfigError(message, line_of(text_, name_, key), field);
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return obj_.at(key);
  }

  double number(const std::string& key) {
    if (!has(key)) fail(key, "missing required field");
    const json& v = raw(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "expected a finite number");
    return d;
  }

  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  std::uint64_t integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_unsigned()) {
      fail(key, "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  std::array<double, 2> pair(const std::string& key, std::optional<std::array<double, 2>> fallback = {}) {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(key, "missing required field");
    }
    const json& v = raw(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(key, "expected an array of two numbers (control, target)");
    }
    return {v[0].get<double>(), v[1].get<double>()};
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!used_.count(it.key())) fail(it.key(), "unknown key");
    }
  }

 private:
  const std::string& text_;
  const json& obj_;
  std::string name_;
  std::set<std::string> used_;
};

void read_system(Section s, RunConfig& cfg) {
  SystemParams& p = cfg.system;
  p.omega_c = kTwoPi * s.number("omega_c_hz");
  p.kappa = kTwoPi * s.number("kappa_hz");
  p.kappa_ex = kTwoPi * s.number("kappa_ex_hz");
  const auto wm = s.pair("omega_m_hz");
  const auto gm = s.pair("gamma_m_hz");
  const auto g0 = s.pair("g0_hz");
  for (std::size_t j = 0; j < 2; ++j) {
    p.omega_m[j] = kTwoPi * wm[j];
    p.gamma_m[j] = kTwoPi * gm[j];
    p.g0[j] = kTwoPi * g0[j];
  }
  p.n_bath = s.pair("n_bath");
  s.finish();
}

void read_drive(Section s, RunConfig& cfg) {
  DriveConfig& d = cfg.drive;
  const bool hz = s.has("detuning_hz");
  const bool rel = s.has("detuning_over_kappa");
  if (hz == rel) s.fail("detuning_hz", "give exactly one of detuning_hz and detuning_over_kappa");
  d.detuning = hz ? kTwoPi * s.number("detuning_hz")
                  : s.number("detuning_over_kappa") * cfg.system.kappa;
  d.n_d = s.number("n_d");
  d.beta_s = s.number("beta_s", 0.0);
  d.beta_t = s.number("beta_t", 0.0);
  d.phi_s = s.number("phi_s", 0.0);
  d.phi_t = s.number("phi_t", 0.0);
  s.finish();
}

void read_phases(Section s, RunConfig& cfg) {
  cfg.phases.off_s = s.number("off_s", cfg.phases.off_s);
  cfg.phases.off_t = s.number("off_t", cfg.phases.off_t);
  s.finish();
}

void read_sweep(Section s, RunConfig& cfg) {
  SweepSpec sw;
  if (!s.has("param")) s.fail("param", "missing required field");
  sw.param = s.string("param", "");
  if (!kSweepParams.count(sw.param)) s.fail("param", "unsupported sweep parameter '" + sw.param + "'");
  sw.start = s.number("start");
  sw.stop = s.number("stop");
  sw.count = s.integer("count", 1);
  if (sw.count < 1 || sw.count > 1000000) s.fail("count", "sweep count must lie in [1, 1e6]");
  if (s.string("scale", "linear") != "linear") s.fail("scale", "only linear sweeps are supported");
  s.finish();
  cfg.sweep = sw;
}

void read_sim(Section s, RunConfig& cfg) {
  SimSettings& m = cfg.sim;
  m.dt = s.number("dt", 0.0);
  m.t_end = s.number("t_end", 0.0);
  m.t_discard = s.number("t_discard", 0.0);
  m.t_burn = s.number("t_burn", 0.0);
  if (m.dt < 0.0 || m.t_end < 0.0 || m.t_discard < 0.0 || m.t_burn < 0.0) {
    s.fail("", "times must be non-negative (0 selects the derived default)");
  }
  m.n_traj = s.integer("n_traj", m.n_traj);
  m.seed = s.integer("seed", m.seed);
  m.record_stride = s.integer("record_stride", m.record_stride);
  m.write_traces = s.boolean("write_traces", m.write_traces);
  m.threads = static_cast<unsigned>(s.integer("threads", m.threads));
  if (m.n_traj < 1) s.fail("n_traj", "need at least one trajectory");
  if (m.record_stride < 1) s.fail("record_stride", "must be at least 1");
  s.finish();
}

void read_wigner(Section s, RunConfig& cfg) {
  cfg.wigner.extent = s.number("extent", cfg.wigner.extent);
  cfg.wigner.points = s.integer("points", cfg.wigner.points);
  if (!(cfg.wigner.extent > 0.0)) s.fail("extent", "must be positive");
  if (cfg.wigner.points < 2) s.fail("points", "need at least two grid points");
  s.finish();
}

void read_omit(Section s, RunConfig& cfg) {
  OmitSettings& o = cfg.omit;
  const auto mode = s.integer("mode", 1);
  if (mode != 1 && mode != 2) s.fail("mode", "mode must be 1 (control) or 2 (target)");
  o.mode = mode == 1 ? Mode::control : Mode::target;
  o.points = s.integer("points", o.points);
  o.half_width_linewidths = s.number("half_width_linewidths", o.half_width_linewidths);
  o.noise_rel = s.number("noise_rel", o.noise_rel);
  o.seed = s.integer("seed", o.seed);
  o.spectrum = s.string("spectrum", o.spectrum);
  if (o.points < 5) s.fail("points", "need at least 5 points");
  if (o.noise_rel < 0.0) s.fail("noise_rel", "must be non-negative");
  if (s.has("free")) {
    const json& f = s.raw("free");
    if (!f.is_array()) s.fail("free", "expected an array of parameter names");
    OmitFreeMask m{false, false, false, false, false, false, false, false};
    for (const auto& e : f) {
      const std::string name = e.is_string() ? e.get<std::string>() : "";
      if (name == "g0") m.g0 = true;
      else if (name == "gamma_m") m.gamma_m = true;
      else if (name == "omega_m") m.omega_m = true;
      else if (name == "kappa") m.kappa = true;
      else if (name == "kappa_ex") m.kappa_ex = true;
      else if (name == "n_d") m.n_d = true;
      else if (name == "scale") m.scale = true;
      else if (name == "offset") m.offset = true;
      else s.fail("free", "unknown fit parameter '" + name + "'");
    }
    o.free = m;
  }
  s.finish();
}

}  // namespace

ConfigError::ConfigError(const std::string& message, std::size_t line, std::string field)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "config error";
        if (line > 0) os << " at line " << line;
        if (!field.empty()) os << " (" << field << ")";
        os << ": " << message;
        return os.str();
      }()),
      line_(line),
      field_(std::move(field)) {}

double SweepSpec::at(std::size_t i) const {
  if (count <= 1) return start;
  return start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1);
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(e.what(), line_at(text, e.byte > 0 ? e.byte - 1 : 0));
  }
  if (!doc.is_object()) throw ConfigError("top level must be a JSON object", 1);

  RunConfig cfg;
  static const std::set<std::string> kSections = {"system", "drive",  "phase_convention", "sweep",
                                                  "sim",    "output", "wigner",           "omit"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!kSections.count(it.key())) {
      throw ConfigError("unknown section", line_of(text, it.key(), ""), it.key());
    }
  }
  if (!doc.contains("system")) throw ConfigError("missing required section", 0, "system");
  if (!doc.contains("drive")) throw ConfigError("missing required section", 0, "drive");

  read_system(Section(text, doc["system"], "system"), cfg);
  read_drive(Section(text, doc["drive"], "drive"), cfg);
  if (doc.contains("phase_convention")) {
    read_phases(Section(text, doc["phase_convention"], "phase_convention"), cfg);
  }
  if (doc.contains("sweep")) read_sweep(Section(text, doc["sweep"], "sweep"), cfg);
  if (doc.contains("sim")) read_sim(Section(text, doc["sim"], "sim"), cfg);
  if (doc.contains("wigner")) read_wigner(Section(text, doc["wigner"], "wigner"), cfg);
  if (doc.contains("omit")) read_omit(Section(text, doc["omit"], "omit"), cfg);
  if (doc.contains("output")) {
    Section s(text, doc["output"], "output");
    cfg.output_dir = s.string("dir", cfg.output_dir.string());
    s.finish();
  }

  try {
    cfg.warnings = validate(cfg.system);
    const auto more = validate(cfg.drive, cfg.system);
    cfg.warnings.insert(cfg.warnings.end(), more.begin(), more.end());
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig cfg = parse_config(buf.str());
  cfg.source_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return cfg;
}

nlohmann::ordered_json to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  const SystemParams& p = cfg.system;
  j["units"] = "rad/s";
  j["system"] = {{"omega_c", p.omega_c},     {"kappa", p.kappa},     {"kappa_ex", p.kappa_ex},
                 {"omega_m", p.omega_m},     {"gamma_m", p.gamma_m}, {"g0", p.g0},
                 {"n_bath", p.n_bath}};
  const DriveConfig& d = cfg.drive;
  j["drive"] = {{"detuning", d.detuning}, {"n_d", d.n_d},     {"beta_s", d.beta_s},
                {"beta_t", d.beta_t},     {"phi_s", d.phi_s}, {"phi_t", d.phi_t}};
  j["phase_convention"] = {{"off_s", cfg.phases.off_s}, {"off_t", cfg.phases.off_t}};
  if (cfg.sweep) {
    j["sweep"] = {{"param", cfg.sweep->param},
                  {"start", cfg.sweep->start},
                  {"stop", cfg.sweep->stop},
                  {"count", cfg.sweep->count}};
  }
  const SimSettings& s = cfg.sim;
  j["sim"] = {{"dt", s.dt},
              {"t_end", s.t_end},
              {"t_discard", s.t_discard},
              {"t_burn", s.t_burn},
              {"n_traj", s.n_traj},
              {"seed", s.seed},
              {"record_stride", s.record_stride},
              {"write_traces", s.write_traces},
              {"threads", s.threads}};
  j["wigner"] = {{"extent", cfg.wigner.extent}, {"points", cfg.wigner.points}};
  j["output"] = {{"dir", cfg.output_dir.string()}};
  return j;
}

}  // namespace optomech::cli
