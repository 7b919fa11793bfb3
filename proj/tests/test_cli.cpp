#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunOutcome {
  int exit_code = -1;
  std::string stderr_text;
};

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("surfaceflow_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const json& cfg) {
  fs::path path = dir / "config.json";
  std::ofstream f(path);
  f << cfg.dump(2);
  return path;
}

RunOutcome run_cli(const fs::path& config, const fs::path& out,
                   const std::string& extra = "") {
  const fs::path err_file = out / "stderr.txt";
  std::string cmd = std::string("SURFACEFLOW_THREADS=4 ") + SURFACEFLOW_CLI_PATH +
                    " run " + config.string() + " --out " + out.string() + " " +
                    extra + " 2> " + err_file.string();
  const int status = std::system(cmd.c_str());
  RunOutcome r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream ef(err_file);
  std::stringstream ss;
  ss << ef.rdbuf();
  r.stderr_text = ss.str();
  fs::remove(err_file);
  return r;
}

std::string slurp(const fs::path& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(f, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

json coarse_convergence_config() {
  return {{"experiment", "heat-convergence"},
          {"dx", {0.4, 0.3}},
          {"condition", 1},
          {"interp_degree", 2}};
}

}  // namespace

TEST_CASE("convergence run writes the csv and a complete manifest") {
  fs::path dir = fresh_dir("conv");
  fs::path cfg = write_config(dir, coarse_convergence_config());
  RunOutcome r = run_cli(cfg, dir);
  CHECK(r.exit_code == 0);

  auto rows = read_csv(dir / "convergence.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"dx", "linf_error"});
  CHECK(std::stod(rows[1][0]) == doctest::Approx(0.4));
  CHECK(std::stod(rows[2][0]) == doctest::Approx(0.3));
  CHECK(std::stod(rows[1][1]) > 0.0);

  json manifest = json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["termination"] == "completed");
  CHECK(manifest["config"]["experiment"] == "heat-convergence");
  CHECK(manifest["version"].is_string());
  CHECK(manifest["duration_seconds"].is_number());

  // Every file in the output directory is accounted for, and vice versa.
  std::vector<std::string> listed = manifest["outputs"];
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name == "manifest.json" || name == "config.json") continue;
    CHECK(std::find(listed.begin(), listed.end(), name) != listed.end());
  }
  for (const auto& name : listed) CHECK(fs::exists(dir / name));
}

TEST_CASE("missing required key fails with exit 2 naming the key") {
  fs::path dir = fresh_dir("missing");
  json cfg = coarse_convergence_config();
  cfg.erase("dx");
  RunOutcome r = run_cli(write_config(dir, cfg), dir);
  CHECK(r.exit_code == 2);
  CHECK(r.stderr_text.find("dx") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "manifest.json"));
}

TEST_CASE("unknown experiment fails with exit 2") {
  fs::path dir = fresh_dir("unknown");
  RunOutcome r =
      run_cli(write_config(dir, {{"experiment", "frobnicate"}}), dir);
  CHECK(r.exit_code == 2);
}

TEST_CASE("invalid parameter value fails with exit 3") {
  fs::path dir = fresh_dir("badvalue");
  json cfg = coarse_convergence_config();
  cfg["condition"] = 7;
  RunOutcome r = run_cli(write_config(dir, cfg), dir);
  CHECK(r.exit_code == 3);
}

TEST_CASE("reruns of one config are byte-identical") {
  fs::path dir_a = fresh_dir("rerun_a");
  fs::path dir_b = fresh_dir("rerun_b");
  json cfg = coarse_convergence_config();
  REQUIRE(run_cli(write_config(dir_a, cfg), dir_a).exit_code == 0);
  REQUIRE(run_cli(write_config(dir_b, cfg), dir_b).exit_code == 0);
  CHECK(slurp(dir_a / "convergence.csv") == slurp(dir_b / "convergence.csv"));
}

TEST_CASE("flow run emits snapshots that round-trip the labeling") {
  fs::path dir = fresh_dir("mbo");
  json cfg = {{"experiment", "mbo"},     {"dx", 0.15},
              {"h", 0.01},              {"m_substeps", 1},
              {"n_steps", 1},           {"interp_degree", 2},
              {"surface_samples", 2000}, {"epsilon", 0.25},
              {"phases", 2}};
  RunOutcome r = run_cli(write_config(dir, cfg), dir, "--snapshots 1");
  CHECK(r.exit_code == 0);
  REQUIRE(fs::exists(dir / "snapshot_0000.csv"));
  REQUIRE(fs::exists(dir / "snapshot_0001.csv"));
  REQUIRE(fs::exists(dir / "interface_0000.csv"));

  // The initial snapshot is the default 45-degree cap: phase follows z.
  auto rows = read_csv(dir / "snapshot_0000.csv");
  REQUIRE(rows.size() == 2001);
  CHECK(rows[0] == std::vector<std::string>{"x", "y", "z", "phase"});
  const double z0 = std::sqrt(0.5);
  int ones = 0;
  for (size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 4);
    const double z = std::stod(rows[i][2]);
    const int phase = std::stoi(rows[i][3]);
    CHECK(phase == (z > z0 ? 1 : 0));
    ones += phase;
  }
  CHECK(ones > 0);
  CHECK(ones < 2000);

  json manifest = json::parse(slurp(dir / "manifest.json"));
  std::vector<std::string> listed = manifest["outputs"];
  CHECK(std::find(listed.begin(), listed.end(), "snapshot_0001.csv") !=
        listed.end());
}

TEST_CASE("circle benchmark reports its trace and termination") {
  fs::path dir = fresh_dir("bench");
  json cfg = {{"experiment", "circle-benchmark"},
              {"flow", "mbo"},
              {"dx", 0.15},
              {"t_end", 0.03},
              {"surface_samples", 1500}};
  RunOutcome r = run_cli(write_config(dir, cfg), dir);
  CHECK(r.exit_code == 0);
  auto rows = read_csv(dir / "radius.csv");
  REQUIRE(rows.size() >= 3);
  CHECK(rows[0] == std::vector<std::string>{"t", "mean_radius"});
  CHECK(std::stod(rows[1][0]) == 0.0);
  json manifest = json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["termination"] == "final time");
}
