#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "helpers.hpp"

using namespace optomech;
using namespace optomech::cli;
using nlohmann::json;
using testing::kPi;

namespace {

const std::filesystem::path kGolden = OPTOMECH_GOLDEN_DIR;
const std::filesystem::path kConfigs = OPTOMECH_CONFIG_DIR;

json reference_json() { return json::parse(testing::slurp(kConfigs / "reference.json")); }

std::filesystem::path write_config(const std::filesystem::path& dir, const json& j) {
  const auto p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "optomech");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(f, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("reference config parses and converts Hz exactly once") {
  const RunConfig cfg = load_config(kConfigs / "reference.json");
  CHECK(cfg.system.kappa == kTwoPi * 38.9e6);
  CHECK(cfg.system.omega_m[0] == kTwoPi * 159.5e3);
  CHECK(cfg.system.gamma_m[1] == kTwoPi * 13.8);
  CHECK(cfg.system.g0[0] == kTwoPi * 28.2e-3);
  CHECK(cfg.system.n_bath[0] == 1.0e4);
  CHECK(cfg.drive.detuning == doctest::Approx(-cfg.system.kappa / (2 * std::sqrt(3.0))).epsilon(1e-15));
  CHECK(cfg.phases.off_s + cfg.drive.phi_s == doctest::Approx(2 * kPi));

  const Run r = run({"echo-config", "--config", (kConfigs / "reference.json").string()});
  CHECK(r.code == 0);
  const json echo = json::parse(r.out);
  CHECK(echo["units"] == "rad/s");
  CHECK(echo["system"]["kappa"].get<double>() == kTwoPi * 38.9e6);
  CHECK(echo["system"]["omega_m"][1].get<double>() == kTwoPi * 351.1e3);
}

TEST_CASE("detuning in Hz") {
  json j = reference_json();
  j["drive"].erase("detuning_over_kappa");
  j["drive"]["detuning_hz"] = -1.0e6;
  CHECK(parse_config(j.dump()).drive.detuning == -kTwoPi * 1.0e6);
  j["drive"]["detuning_over_kappa"] = -0.3;
  CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);
  j["drive"].erase("detuning_over_kappa");
  j["drive"].erase("detuning_hz");
  CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);
}

TEST_CASE("unknown keys are errors with line and field") {
  try {
    load_config(kGolden / "bad_unknown_key.json");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "drive.beta_tt");
    CHECK(e.line() == 15);
    CHECK(std::string(e.what()).find("line 15") != std::string::npos);
  }
  json j = reference_json();
  j["bogus"] = 1;
  try {
    parse_config(j.dump(2));
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "bogus");
  }
}

TEST_CASE("type and range errors") {
  auto field_of = [](const json& j) {
    try {
      parse_config(j.dump(2));
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  json j = reference_json();
  j["system"]["kappa_hz"] = "big";
  CHECK(field_of(j) == "system.kappa_hz");
  j = reference_json();
  j["system"]["omega_m_hz"] = json::array({1.0});
  CHECK(field_of(j) == "system.omega_m_hz");
  j = reference_json();
  j["sweep"] = {{"param", "beta_s"}, {"start", 0.0}, {"stop", 0.1}, {"count", 0}};
  CHECK(field_of(j) == "sweep.count");
  j["sweep"]["count"] = 2000000;
  CHECK(field_of(j) == "sweep.count");
  j["sweep"]["count"] = 5;
  j["sweep"]["param"] = "kappa";
  CHECK(field_of(j) == "sweep.param");
  j["sweep"]["param"] = "beta_s";
  j["sweep"]["scale"] = "log";
  CHECK(field_of(j) == "sweep.scale");
  j = reference_json();
  j["sim"]["n_traj"] = -3;
  CHECK(field_of(j) == "sim.n_traj");
  j = reference_json();
  j.erase("drive");
  CHECK(field_of(j) == "drive");
}

TEST_CASE("exit codes") {
  const auto dir = testing::scratch_dir("cli_exit");
  CHECK(run({}).code == 2);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"gain-sweep"}).code == 2);
  CHECK(run({"corr", "--config", (dir / "missing.json").string()}).code == 2);
  CHECK(run({"corr", "--config", (kGolden / "bad_unknown_key.json").string()}).code == 2);

  json j = reference_json();
  j["drive"]["beta_t"] = 0.0;
  j["output"]["dir"] = (dir / "out").string();
  const Run r = run({"wigner", "--config", write_config(dir, j).string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("parametric instability") != std::string::npos);

  CHECK(run({"wigner", "--config", (kConfigs / "reference.json").string(), "--out", (dir / "ok").string()}).code == 0);
  CHECK(run({"wigner", "--config", (kConfigs / "reference.json").string(), "--beta-s", "-1",
             "--out", (dir / "ok").string()})
            .code == 2);
}

TEST_CASE("gain sweep") {
  const auto dir = testing::scratch_dir("cli_gain");
  json j = reference_json();
  j["drive"]["beta_t"] = 0.0;
  j["drive"]["phi_s"] = kPi / 2;
  j["sweep"] = {{"param", "beta_s"}, {"start", 0.0}, {"stop", 0.06}, {"count", 31}};
  const auto cfg_path = write_config(dir, j);
  REQUIRE(run({"gain-sweep", "--config", cfg_path.string(), "--out", (dir / "bare").string()}).code == 0);
  REQUIRE(run({"gain-sweep", "--config", cfg_path.string(), "--beta-t", "0.28", "--out",
               (dir / "transfer").string()})
              .code == 0);

  const RunConfig cfg = load_config(cfg_path);
  const double th = effective_couplings(cfg.system, cfg.drive).beta_th;
  const auto bare = read_csv(dir / "bare" / "gain_sweep.csv");
  REQUIRE(bare.size() == 32);
  for (std::size_t c = 1; c <= 4; ++c) CHECK(std::stod(bare[1][c]) == doctest::Approx(1.0).epsilon(1e-12));
  auto first_unstable = [](const std::vector<std::vector<std::string>>& rows) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i][5] == "false") return std::stod(rows[i][0]);
    }
    return 1e9;
  };
  for (std::size_t i = 1; i < bare.size(); ++i) {
    if (bare[i][5] != "true") {
      CHECK(bare[i][1].empty());
      continue;
    }
    const double b = std::stod(bare[i][0]);
    CHECK(std::stod(bare[i][1]) == doctest::Approx(std::pow(1.0 + b / th, -0.5)).epsilon(1e-9));
  }
  const auto transfer = read_csv(dir / "transfer" / "gain_sweep.csv");
  CHECK(first_unstable(transfer) > first_unstable(bare));
  CHECK(first_unstable(bare) < 1e9);
}

TEST_CASE("phase sweep slopes") {
  const auto dir = testing::scratch_dir("cli_phase");
  json j = reference_json();
  j["sweep"] = {{"param", "phi_s_primed"}, {"start", -kPi}, {"stop", kPi}, {"count", 13}};
  REQUIRE(run({"phase-sweep", "--config", write_config(dir, j).string(), "--out", (dir / "s").string()}).code == 0);
  auto rows = read_csv(dir / "s" / "phase_sweep.csv");
  REQUIRE(rows.size() == 14);
  std::vector<double> x, y;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    x.push_back(std::stod(rows[i][2]));
    y.push_back(std::stod(rows[i][6]));
  }
  CHECK(slope(x, y) == doctest::Approx(0.5).epsilon(1e-6));

  j["sweep"]["param"] = "phi_t_primed";
  REQUIRE(run({"phase-sweep", "--config", write_config(dir, j).string(), "--out", (dir / "t").string()}).code == 0);
  rows = read_csv(dir / "t" / "phase_sweep.csv");
  x.clear();
  y.clear();
  for (std::size_t i = 1; i < rows.size(); ++i) {
    x.push_back(std::stod(rows[i][3]));
    y.push_back(std::stod(rows[i][7]) - std::stod(rows[i][6]));
  }
  CHECK(slope(x, y) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("coherent phase sweep is pi periodic") {
  const auto dir = testing::scratch_dir("cli_coherent");
  json j = reference_json();
  j["drive"]["beta_t"] = 0.0;
  j["drive"]["beta_s"] = 0.02;
  j["sweep"] = {{"param", "force_phase"}, {"start", 0.0}, {"stop", 2 * kPi}, {"count", 9}};
  REQUIRE(run({"phase-sweep", "--config", write_config(dir, j).string(), "--out", dir.string()}).code == 0);
  const auto rows = read_csv(dir / "coherent_gain.csv");
  REQUIRE(rows.size() == 10);
  const RunConfig cfg = load_config(dir / "config.json");
  const double th = effective_couplings(cfg.system, cfg.drive).beta_th;
  for (std::size_t i = 1; i + 4 < rows.size(); ++i) {
    CHECK(std::stod(rows[i][1]) == doctest::Approx(std::stod(rows[i + 4][1])).epsilon(1e-6));
    CHECK(std::stod(rows[i][1]) ==
          doctest::Approx(analytic_gain(0.02, th, std::stod(rows[i][0]))).epsilon(0.01));
  }
}

TEST_CASE("correlation output") {
  const auto dir = testing::scratch_dir("cli_corr");
  json j = reference_json();
  j["sweep"] = {{"param", "phi_t_primed"}, {"start", -kPi / 4}, {"stop", 3 * kPi / 4}, {"count", 2}};
  REQUIRE(run({"corr", "--config", write_config(dir, j).string(), "--out", dir.string()}).code == 0);
  const json doc = json::parse(testing::slurp(dir / "corr.json"));
  CHECK(doc["ordering"] == json::array({"X1", "Y1", "X2", "Y2"}));
  CHECK(doc["layout"] == "row-major");
  REQUIRE(doc["points"].size() == 2);
  const json& a = doc["points"][0];
  const json& b = doc["points"][1];
  CHECK(a["stable"] == true);
  for (int r = 0; r < 2; ++r) {
    for (int c = 2; c < 4; ++c) {
      CHECK(a["matrix"][4 * r + c].get<double>() == doctest::Approx(-b["matrix"][4 * r + c].get<double>()).epsilon(1e-8));
    }
  }
  for (int i = 0; i < 4; ++i) CHECK(a["matrix"][5 * i].get<double>() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(a["elements"]["X2Y1"].get<double>() == a["matrix"][9].get<double>());
}

TEST_CASE("Wigner regimes") {
  const auto dir = testing::scratch_dir("cli_wigner");
  const std::string ref = (kConfigs / "reference.json").string();
  Run r = run({"wigner", "--config", ref, "--beta-s", "0", "--out", (dir / "b").string()});
  CHECK(r.code == 0);
  CHECK(r.err.find("mode1_wigner.csv (isotropic)") != std::string::npos);
  CHECK(r.err.find("mode2_wigner.csv (isotropic)") != std::string::npos);
  r = run({"wigner", "--config", ref, "--out", (dir / "c").string()});
  CHECK(r.code == 0);
  CHECK(r.err.find("mode1_wigner.csv (elliptical") != std::string::npos);
  CHECK(r.err.find("mode2_wigner.csv (elliptical") != std::string::npos);
  r = run({"wigner", "--config", ref, "--beta-t", "0", "--out", (dir / "a").string()});
  CHECK(r.code == 1);
  CHECK_FALSE(std::filesystem::exists(dir / "a" / "mode1_wigner.csv"));

  const auto rows = read_csv(dir / "c" / "mode1_wigner.csv");
  REQUIRE(rows.size() == 1 + 81 * 81);
  std::size_t peak = 1;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::stod(rows[i][2]) > 0.0);
    if (std::stod(rows[i][2]) > std::stod(rows[peak][2])) peak = i;
  }
  CHECK(std::stod(rows[peak][0]) == 0.0);
  CHECK(std::stod(rows[peak][1]) == 0.0);
}

TEST_CASE("simulate summary is deterministic and consistent") {
  const auto dir = testing::scratch_dir("cli_sim");
  json j = reference_json();
  j["sim"] = {{"n_traj", 100}, {"seed", 5}, {"record_stride", 20}, {"write_traces", true}, {"t_end", 0.3}};
  const auto cfg = write_config(dir, j).string();
  REQUIRE(run({"simulate", "--config", cfg, "--out", (dir / "a").string()}).code == 0);
  REQUIRE(run({"simulate", "--config", cfg, "--out", (dir / "b").string()}).code == 0);
  const std::string a = testing::slurp(dir / "a" / "summary.json");
  CHECK(a == testing::slurp(dir / "b" / "summary.json"));
  const json doc = json::parse(a);
  const json& p = doc["points"][0];
  CHECK(p["max_abs_z"].get<double>() < 3.0);
  CHECK(p["gains"]["g1_squeezed"].get<double>() < 1.0);
  CHECK(std::filesystem::exists(dir / "a" / "traces" / "point0" / "trace_seed5_99.csv"));

  REQUIRE(run({"simulate", "--config", cfg, "--seed", "6", "--out", (dir / "c").string()}).code == 0);
  CHECK(testing::slurp(dir / "c" / "summary.json") != a);
}

TEST_CASE("OMIT fit via the command line") {
  const auto dir = testing::scratch_dir("cli_omit");
  json j = reference_json();
  j["omit"] = {{"mode", 1}, {"noise_rel", 0.01}, {"seed", 3}};
  const auto cfg = write_config(dir, j).string();
  REQUIRE(run({"omit-fit", "--config", cfg, "--synthesize", "--out", dir.string()}).code == 0);
  json fit = json::parse(testing::slurp(dir / "omit_fit.json"));
  CHECK(fit["converged"] == true);
  CHECK(fit["fitted"]["g0_hz"].get<double>() == doctest::Approx(28.2e-3).epsilon(0.05));

  // Fitting the spectrum file that was just written gives the same answer.
  REQUIRE(run({"omit-fit", "--config", cfg, "--spectrum", (dir / "omit_spectrum.csv").string(), "--out",
               (dir / "again").string()})
              .code == 0);
  const json again = json::parse(testing::slurp(dir / "again" / "omit_fit.json"));
  CHECK(again["fitted"]["g0_hz"].get<double>() ==
        doctest::Approx(fit["fitted"]["g0_hz"].get<double>()).epsilon(1e-9));

  const Run bad = run({"omit-fit", "--config", cfg, "--spectrum", (kGolden / "malformed_spectrum.csv").string(),
                       "--out", dir.string()});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("row 3") != std::string::npos);
}

TEST_CASE("feature outside the spectrum window") {
  const auto dir = testing::scratch_dir("cli_omit_window");
  const RunConfig cfg = load_config(kConfigs / "reference.json");
  auto offsets = omit_window(cfg.system, cfg.drive, Mode::control, 201);
  for (auto& w : offsets) w += 50.0 * cfg.system.gamma_m[0];
  write_spectrum_csv(synthesize_spectrum(cfg.system, cfg.drive, Mode::control, offsets), dir / "s.csv");
  const Run r = run({"omit-fit", "--config", (kConfigs / "reference.json").string(), "--spectrum",
                     (dir / "s.csv").string(), "--out", dir.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("not bracketed") != std::string::npos);
}

TEST_CASE("golden CSV headers") {
  const auto dir = testing::scratch_dir("cli_golden");
  json j = reference_json();
  j["sim"] = {{"n_traj", 2},         {"seed", 5},        {"record_stride", 50},
              {"write_traces", true}, {"t_end", 0.05},    {"t_discard", 0.01}};
  j["omit"] = {{"points", 51}};
  j["wigner"] = {{"extent", 3.0}, {"points", 5}};
  j["output"]["dir"] = dir.string();
  const auto cfg_dir = testing::scratch_dir("cli_golden_cfg");
  const auto base = write_config(cfg_dir, j);
  int n = 0;
  auto with_sweep = [&](const json& sweep) {
    json k = j;
    k["sweep"] = sweep;
    // The coherent sweep integrates to its own settling time.
    if (sweep["param"] == "force_phase") k.erase("sim");
    const auto sub = cfg_dir / std::to_string(n++);
    std::filesystem::create_directories(sub);
    return write_config(sub, k).string();
  };
  REQUIRE(run({"wigner", "--config", base.string()}).code == 0);
  REQUIRE(run({"simulate", "--config", base.string()}).code == 0);
  REQUIRE(run({"omit-fit", "--config", base.string(), "--synthesize"}).code == 0);
  REQUIRE(run({"gain-sweep", "--config", with_sweep({{"param", "beta_s"}, {"start", 0}, {"stop", 0.05}, {"count", 3}})}).code == 0);
  REQUIRE(run({"phase-sweep", "--config", with_sweep({{"param", "phi_t"}, {"start", 0}, {"stop", 1}, {"count", 3}})}).code == 0);
  REQUIRE(run({"phase-sweep", "--config", with_sweep({{"param", "force_phase"}, {"start", 0}, {"stop", 1}, {"count", 3}})}).code == 0);

  std::ifstream golden(kGolden / "csv_headers.txt");
  std::string line;
  int checked = 0;
  while (std::getline(golden, line)) {
    const auto eq = line.find('=');
    REQUIRE(eq != std::string::npos);
    CAPTURE(line);
    CHECK(testing::first_line(dir / line.substr(0, eq)) == line.substr(eq + 1));
    ++checked;
  }
  CHECK(checked == 7);
}

}  // TEST_SUITE
