// Configuration-driven front end: reads a JSON experiment description,
// runs it, writes CSV artifacts and a manifest.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "surfaceflow/flows.hpp"
#include "surfaceflow/studies.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "surfaceflow 0.1.0";

// Config errors are reported with the offending key (exit 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double get_num(const json& cfg, const std::string& key, double fallback,
               bool required = false) {
  if (!cfg.contains(key)) {
    if (required) throw ConfigError("missing key \"" + key + "\"");
    return fallback;
  }
  if (!cfg[key].is_number())
    throw ConfigError("key \"" + key + "\" must be a number");
  return cfg[key].get<double>();
}

int get_int(const json& cfg, const std::string& key, int fallback,
            bool required = false) {
  if (!cfg.contains(key)) {
    if (required) throw ConfigError("missing key \"" + key + "\"");
    return fallback;
  }
  if (!cfg[key].is_number_integer())
    throw ConfigError("key \"" + key + "\" must be an integer");
  return cfg[key].get<int>();
}

std::string get_str(const json& cfg, const std::string& key,
                    const std::string& fallback, bool required = false) {
  if (!cfg.contains(key)) {
    if (required) throw ConfigError("missing key \"" + key + "\"");
    return fallback;
  }
  if (!cfg[key].is_string())
    throw ConfigError("key \"" + key + "\" must be a string");
  return cfg[key].get<std::string>();
}

// Scalar or array of numbers.
std::vector<double> get_list(const json& cfg, const std::string& key) {
  if (!cfg.contains(key)) throw ConfigError("missing key \"" + key + "\"");
  const json& v = cfg[key];
  if (v.is_number()) return {v.get<double>()};
  if (v.is_array()) {
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number())
        throw ConfigError("key \"" + key + "\" must hold numbers");
      out.push_back(e.get<double>());
    }
    if (out.empty()) throw ConfigError("key \"" + key + "\" must not be empty");
    return out;
  }
  throw ConfigError("key \"" + key + "\" must be a number or array");
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct RunContext {
  fs::path out_dir;
  int snapshot_cadence = 0;
  std::vector<std::string> outputs;
  std::string termination = "completed";
};

void write_csv(RunContext& ctx, const std::string& name,
               const std::string& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream f(ctx.out_dir / name);
  if (!f) throw std::runtime_error("cannot write " + name);
  f << header << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i)
      f << (i ? "," : "") << fmt17(row[i]);
    f << "\n";
  }
  ctx.outputs.push_back(name);
}

void write_snapshot(RunContext& ctx, int index,
                    const sf::SurfaceSampling& sampling,
                    const std::vector<int>& labels,
                    const sf::InterfaceSet& iface) {
  char name[64];
  std::snprintf(name, sizeof(name), "snapshot_%04d.csv", index);
  {
    std::ofstream f(ctx.out_dir / name);
    if (!f) throw std::runtime_error(std::string("cannot write ") + name);
    f << "x,y,z,phase\n";
    for (int i = 0; i < sampling.size(); ++i) {
      const sf::Vec3& p = sampling.points[i];
      f << fmt17(p.x) << "," << fmt17(p.y) << "," << fmt17(p.z) << ","
        << labels[i] << "\n";
    }
  }
  ctx.outputs.push_back(name);

  std::snprintf(name, sizeof(name), "interface_%04d.csv", index);
  std::ofstream f(ctx.out_dir / name);
  if (!f) throw std::runtime_error(std::string("cannot write ") + name);
  f << "x,y,z\n";
  for (const auto& e : iface.edges)
    f << fmt17(e.point.x) << "," << fmt17(e.point.y) << ","
      << fmt17(e.point.z) << "\n";
  ctx.outputs.push_back(name);
}

void run_convergence(const json& cfg, RunContext& ctx, bool wave) {
  const std::vector<double> dxs = get_list(cfg, "dx");
  const int cond = get_int(cfg, "condition", 1);
  if (cond != 1 && cond != 2)
    throw std::invalid_argument("condition must be 1 or 2");
  const int degree = get_int(cfg, "interp_degree", 3);
  sf::ConvergenceProblem problem =
      wave ? (cond == 1 ? sf::ConvergenceProblem::WaveCond1
                        : sf::ConvergenceProblem::WaveCond2)
           : (cond == 1 ? sf::ConvergenceProblem::HeatCond1
                        : sf::ConvergenceProblem::HeatCond2);
  sf::ConvergenceReport report = sf::convergence_study(problem, dxs, degree);
  std::vector<std::vector<double>> rows;
  for (const auto& r : report.rows) rows.push_back({r.dx, r.linf});
  write_csv(ctx, "convergence.csv", "dx,linf_error", rows);
}

void run_circle_benchmark(const json& cfg, RunContext& ctx) {
  const std::string flow = get_str(cfg, "flow", "mbo");
  const double dx = get_num(cfg, "dx", 0.0, true);
  const double r0 = get_num(cfg, "r0", 2.0 / 3.0);
  const int samples = get_int(cfg, "surface_samples", 32768);
  sf::RadiusTrace trace;
  if (flow == "mbo") {
    trace = sf::mbo_circle_benchmark(dx, r0, get_num(cfg, "t_end", 0.24), samples);
  } else if (flow == "hmbo") {
    trace = sf::hmbo_circle_benchmark(dx, r0, get_num(cfg, "v0", 0.0),
                                      get_num(cfg, "t_end", 0.6), samples);
  } else {
    throw std::invalid_argument("flow must be \"mbo\" or \"hmbo\"");
  }
  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < trace.times.size(); ++i)
    rows.push_back({trace.times[i], trace.radii[i]});
  write_csv(ctx, "radius.csv", "t,mean_radius", rows);
  ctx.termination = trace.vanished ? "interface vanished" : "final time";
}

void run_flow_experiment(const json& cfg, RunContext& ctx, bool hyperbolic) {
  const double dx = get_num(cfg, "dx", 0.0, true);
  const int K = get_int(cfg, "phases", 2);
  sf::FlowConfig config;
  config.alpha = get_num(cfg, "alpha", 1.0);
  config.h = get_num(cfg, "h", dx * dx / 6.0);
  config.substeps = get_int(cfg, "m_substeps", 1);
  config.steps = get_int(cfg, "n_steps", 1, true);
  config.degree = get_int(cfg, "interp_degree", 3);
  config.eps = get_num(cfg, "epsilon", 0.03);
  config.rho = get_num(cfg, "rho", 0.0);
  config.validate();

  const int samples = get_int(cfg, "surface_samples", 32768);
  const double lambda = sf::lambda_for_degree(config.degree, dx);
  sf::BandedGrid band = sf::build_band(sf::sphere_domain(dx, lambda),
                                       sf::SurfaceModel::unit_sphere(), lambda);
  sf::SurfaceSampling sampling =
      sf::fibonacci_sample(sf::SurfaceModel::unit_sphere(), samples);

  std::vector<int> labels;
  if (K == 2) {
    const double r0 = get_num(cfg, "cap_radius", std::sin(std::numbers::pi / 4));
    const double z0 = std::sqrt(std::max(0.0, 1.0 - r0 * r0));
    labels.resize(sampling.size());
    for (int i = 0; i < sampling.size(); ++i)
      labels[i] = sampling.points[i].z > z0 ? 1 : 0;
  } else {
    // Voronoi seeding; default sites are tetrahedron vertices.
    std::vector<sf::Vec3> sites;
    if (cfg.contains("sites")) {
      for (const auto& s : cfg["sites"]) {
        if (!s.is_array() || s.size() != 3)
          throw ConfigError("key \"sites\" must hold [x,y,z] triples");
        sites.push_back({s[0].get<double>(), s[1].get<double>(),
                         s[2].get<double>()});
      }
    } else {
      sites = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
    }
    if (static_cast<int>(sites.size()) != K)
      throw std::invalid_argument("need one site per phase");
    labels = sf::nearest_site_labels(sampling, sites);
  }

  sf::FlowResult result =
      hyperbolic ? sf::hmbo_multiphase(band, sampling, labels, K, config)
                 : sf::mbo_multiphase(band, sampling, labels, K, config);

  const int cadence = ctx.snapshot_cadence;
  for (int s = 0; s < static_cast<int>(result.labels_history.size()); ++s) {
    const bool last = s + 1 == static_cast<int>(result.labels_history.size());
    if (last || (cadence > 0 && s % cadence == 0))
      write_snapshot(ctx, s, sampling, result.labels_history[s],
                     result.interfaces_history[s]);
  }
}

void run_area_sweep(const json& cfg, RunContext& ctx) {
  const std::string flow = get_str(cfg, "flow", "mcf");
  if (flow != "mcf" && flow != "hmcf")
    throw std::invalid_argument("flow must be \"mcf\" or \"hmcf\"");
  std::vector<double> rhos;
  if (cfg.contains("rho")) {
    rhos = get_list(cfg, "rho");
  } else {
    for (int k = -2; k <= 6; ++k) rhos.push_back(std::pow(10.0, 0.5 * k));
  }
  const int samples = get_int(cfg, "surface_samples", 32768);
  auto rows = sf::area_error_sweep(
      flow == "mcf" ? sf::SweepFlow::Mcf : sf::SweepFlow::Hmcf, rhos, samples);
  std::vector<std::vector<double>> out;
  for (const auto& r : rows) out.push_back({r.rho, r.err});
  write_csv(ctx, "areasweep.csv", "rho,err", out);
}

void write_manifest(const json& cfg, const RunContext& ctx, double seconds) {
  json manifest;
  manifest["config"] = cfg;
  manifest["version"] = kVersion;
  manifest["duration_seconds"] = seconds;
  manifest["termination"] = ctx.termination;
  manifest["outputs"] = ctx.outputs;
  std::ofstream f(ctx.out_dir / "manifest.json");
  if (!f) throw std::runtime_error("cannot write manifest.json");
  f << manifest.dump(2) << "\n";
}

int fail(const char* category, const std::string& message, int code) {
  json rec;
  rec["category"] = category;
  rec["message"] = message;
  std::fprintf(stderr, "%s\n", rec.dump().c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef _OPENMP
  if (const char* env = std::getenv("SURFACEFLOW_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
#endif

  CLI::App app{"Surface interface flow experiments"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "Run an experiment from a config file");
  std::string config_path, out_dir = ".";
  int snapshots = 0;
  run->add_option("config", config_path, "JSON config file")->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--snapshots", snapshots, "Snapshot every K threshold steps");
  CLI11_PARSE(app, argc, argv);

  json cfg;
  try {
    std::ifstream f(config_path);
    if (!f) return fail("parse", "cannot open " + config_path, 2);
    cfg = json::parse(f);
    if (!cfg.is_object()) return fail("parse", "config must be an object", 2);
  } catch (const json::exception& e) {
    return fail("parse", e.what(), 2);
  }

  const auto start = std::chrono::steady_clock::now();
  RunContext ctx;
  ctx.out_dir = out_dir;
  ctx.snapshot_cadence = snapshots;
  try {
    fs::create_directories(ctx.out_dir);
    const std::string experiment = get_str(cfg, "experiment", "", true);
    if (experiment == "heat-convergence") run_convergence(cfg, ctx, false);
    else if (experiment == "wave-convergence") run_convergence(cfg, ctx, true);
    else if (experiment == "mbo") run_flow_experiment(cfg, ctx, false);
    else if (experiment == "hmbo") run_flow_experiment(cfg, ctx, true);
    else if (experiment == "circle-benchmark") run_circle_benchmark(cfg, ctx);
    else if (experiment == "area-sweep") run_area_sweep(cfg, ctx);
    else throw ConfigError("unknown experiment \"" + experiment + "\"");

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    write_manifest(cfg, ctx, seconds);
  } catch (const ConfigError& e) {
    return fail("parse", e.what(), 2);
  } catch (const std::invalid_argument& e) {
    return fail("validation", e.what(), 3);
  } catch (const std::domain_error& e) {
    return fail("validation", e.what(), 3);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 4);
  }
  return 0;
}
