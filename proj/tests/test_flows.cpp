#include <cmath>
#include <numbers>

#include "doctest.h"
#include "surfaceflow/flows.hpp"
#include "surfaceflow/studies.hpp"

using namespace sf;

namespace {

BandedGrid sphere_band(double dx, int degree) {
  const double lambda = lambda_for_degree(degree, dx);
  return build_band(sphere_domain(dx, lambda), SurfaceModel::unit_sphere(),
                    lambda);
}

std::vector<int> cap_labels(const SurfaceSampling& sampling, double r0) {
  const double z0 = std::sqrt(std::max(0.0, 1.0 - r0 * r0));
  std::vector<int> labels(sampling.size());
  for (int i = 0; i < sampling.size(); ++i)
    labels[i] = sampling.points[i].z > z0 ? 1 : 0;
  return labels;
}

double cap_radius(const SurfaceSampling& sampling,
                  const std::vector<int>& labels) {
  return mean_radius(extract_interface(sampling, labels));
}

}  // namespace

TEST_CASE("flow config validation rejects bad parameters") {
  FlowConfig good;
  CHECK_NOTHROW(good.validate());
  auto expect_throw = [](auto&& mutate) {
    FlowConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  };
  expect_throw([](FlowConfig& c) { c.alpha = 0.0; });
  expect_throw([](FlowConfig& c) { c.h = -1e-3; });
  expect_throw([](FlowConfig& c) { c.substeps = 0; });
  expect_throw([](FlowConfig& c) { c.steps = -1; });
  expect_throw([](FlowConfig& c) { c.degree = 4; });
  expect_throw([](FlowConfig& c) { c.eps = 0.0; });
  expect_throw([](FlowConfig& c) { c.rho = -1.0; });
  CHECK(good.tau() == doctest::Approx(good.substeps * good.h));
}

TEST_CASE("sign threshold recovers the height-field hemisphere") {
  BandedGrid band = sphere_band(0.15, 2);
  SurfaceSampling sampling = fibonacci_sample(SurfaceModel::unit_sphere(), 600);
  GridField u = extend_from_surface(band, [](const Vec3& p) { return p.z; });
  std::vector<int> labels = threshold_sign_labels(u, band, sampling, 2);
  for (int i = 0; i < sampling.size(); ++i)
    if (std::abs(sampling.points[i].z) > 0.05)
      CHECK(labels[i] == (sampling.points[i].z > 0.0 ? 1 : 0));
}

TEST_CASE("threshold dynamics shrink a convex cap") {
  BandedGrid band = sphere_band(0.1, 2);
  SurfaceSampling sampling =
      fibonacci_sample(SurfaceModel::unit_sphere(), 4000);
  const double r0 = 0.8;
  std::vector<int> labels = cap_labels(sampling, r0);

  FlowConfig config;
  config.alpha = 1.0;
  config.h = 0.005;
  config.substeps = 10;
  config.steps = 4;
  config.degree = 2;
  FlowResult result = mbo_two_phase(band, sampling, labels, config);

  CHECK(result.steps_taken() == 4);
  CHECK(result.all_converged);
  CHECK_FALSE(result.interface_vanished);
  CHECK(result.sample_counts.size() == 5);

  const double r_start = cap_radius(sampling, result.labels_history.front());
  const double r_end = cap_radius(sampling, result.labels());
  CHECK(r_end < r_start - 0.04);
  CHECK(r_end > 0.4);

  // Interface length proxy (edge count) never grows on a shrinking cap.
  int prev_edges = -1;
  for (const auto& step : result.labels_history) {
    const int edges = extract_interface(sampling, step).size();
    if (prev_edges >= 0) CHECK(edges <= prev_edges + 3);
    prev_edges = edges;
  }
}

TEST_CASE("hyperbolic flow follows an inward initial velocity and stays axial") {
  BandedGrid band = sphere_band(0.1, 2);
  SurfaceSampling sampling =
      fibonacci_sample(SurfaceModel::unit_sphere(), 3000);
  const double r0 = 0.7;
  std::vector<int> labels = cap_labels(sampling, r0);

  // The threshold interval must exceed the sample spacing for the
  // back-advected state to differ at all.
  FlowConfig config;
  config.alpha = 1.0;
  config.h = 0.01;
  config.substeps = 10;
  config.steps = 3;
  config.degree = 2;
  std::vector<int> prev =
      advect_initial_interface(sampling, labels, -1.0, config.tau());
  CHECK(cap_radius(sampling, prev) > cap_radius(sampling, labels));

  FlowResult result = hmbo_two_phase(band, sampling, labels, config, &prev);
  CHECK_FALSE(result.interface_vanished);
  const double r_end = cap_radius(sampling, result.labels());
  CHECK(r_end < r0 - 0.05);

  // The cap interface stays a circle of latitude: edge midpoints share one z.
  InterfaceSet iface = extract_interface(sampling, result.labels());
  double zmin = 1.0, zmax = -1.0;
  for (const auto& e : iface.edges) {
    zmin = std::min(zmin, e.point.z);
    zmax = std::max(zmax, e.point.z);
  }
  CHECK(zmax - zmin <= 3.0 * sampling.mean_spacing);
}

TEST_CASE("interface extinction is reported instead of thrown") {
  BandedGrid band = sphere_band(0.15, 2);
  SurfaceSampling sampling =
      fibonacci_sample(SurfaceModel::unit_sphere(), 1500);
  std::vector<int> labels = cap_labels(sampling, 0.3);
  REQUIRE_FALSE(extract_interface(sampling, labels).empty());

  FlowConfig config;
  config.alpha = 1.0;
  config.h = 0.01;
  config.substeps = 6;
  config.steps = 6;
  config.degree = 2;
  FlowResult result;
  CHECK_NOTHROW(result = mbo_two_phase(band, sampling, labels, config));
  CHECK(result.interface_vanished);
  CHECK(result.steps_taken() < 6);
  for (int l : result.labels()) CHECK(l == 0);
}

TEST_CASE("two-phase and K=2 vector drivers agree on a coarse step") {
  BandedGrid band = sphere_band(0.1, 2);
  SurfaceSampling sampling =
      fibonacci_sample(SurfaceModel::unit_sphere(), 3000);
  std::vector<int> labels = cap_labels(sampling, 0.8);

  FlowConfig config;
  config.alpha = 1.0;
  config.h = 0.006;
  config.substeps = 5;
  config.steps = 1;
  config.degree = 2;
  config.eps = 4.0 * sampling.mean_spacing;

  FlowResult scalar = mbo_two_phase(band, sampling, labels, config);
  FlowResult vector = mbo_multiphase(band, sampling, labels, 2, config);
  int mismatched = 0;
  for (int i = 0; i < sampling.size(); ++i)
    if (scalar.labels()[i] != vector.labels()[i]) ++mismatched;
  CHECK(mismatched < sampling.size() / 20);
  CHECK(std::abs(cap_radius(sampling, scalar.labels()) -
                 cap_radius(sampling, vector.labels())) < 0.05);
}

TEST_CASE("hyperbolic vector driver at rest matches the scalar trace") {
  BandedGrid band = sphere_band(0.15, 2);
  SurfaceSampling sampling =
      fibonacci_sample(SurfaceModel::unit_sphere(), 2000);
  std::vector<int> labels = cap_labels(sampling, 0.7);

  FlowConfig config;
  config.alpha = 1.0;
  config.h = 0.01;
  config.substeps = 2;
  config.steps = 3;
  config.degree = 2;
  config.eps = 4.0 * sampling.mean_spacing;

  FlowResult scalar = hmbo_two_phase(band, sampling, labels, config);
  FlowResult vector = hmbo_multiphase(band, sampling, labels, 2, config);
  REQUIRE(scalar.steps_taken() == vector.steps_taken());
  for (int n = 0; n <= scalar.steps_taken(); ++n) {
    const double rs = cap_radius(sampling, scalar.labels_history[n]);
    const double rv = cap_radius(sampling, vector.labels_history[n]);
    CHECK(std::abs(rs - rv) <= sampling.mean_spacing);
  }
}

TEST_CASE("volume penalty reduces the drift of a shrinking cap") {
  BandedGrid band = sphere_band(0.1, 2);
  SurfaceSampling sampling =
      fibonacci_sample(SurfaceModel::unit_sphere(), 3000);
  std::vector<int> labels =
      cap_labels(sampling, std::sin(std::numbers::pi / 4.0));

  FlowConfig config;
  config.alpha = 0.05;
  config.h = 0.1 * 0.1 / 6.0;
  config.substeps = 20;
  config.steps = 1;
  config.degree = 2;
  config.eps = 4.0 * sampling.mean_spacing;

  const double v0 =
      phase_volumes(band, sampling, labels, 2, config.eps)[1];
  config.rho = 0.0;
  FlowResult free_run = mbo_multiphase(band, sampling, labels, 2, config);
  config.rho = 1e3;
  FlowResult constrained = mbo_multiphase(band, sampling, labels, 2, config);

  const double drift_free = std::abs(
      phase_volumes(band, sampling, free_run.labels(), 2, config.eps)[1] - v0);
  const double drift_pen = std::abs(
      phase_volumes(band, sampling, constrained.labels(), 2, config.eps)[1] -
      v0);
  CHECK(drift_free > 0.0);
  CHECK(drift_pen < drift_free);

  // Unconstrained runs skip the volume diagnostics; constrained runs record
  // a partition of the band at every step.
  CHECK(free_run.volume_history.empty());
  REQUIRE(constrained.volume_history.size() == 2);
  const double cell = band.spec.dx * band.spec.dx * band.spec.dx;
  const double band_volume = cell * band.num_interior();
  for (const auto& vols : constrained.volume_history) {
    double total = 0.0;
    for (double v : vols) total += v;
    CHECK(std::abs(total - band_volume) / band_volume < 0.02);
  }
}

TEST_CASE("interface advection moves labels by the signed displacement") {
  SurfaceSampling sampling =
      fibonacci_sample(SurfaceModel::unit_sphere(), 2000);
  std::vector<int> labels(sampling.size());
  for (int i = 0; i < sampling.size(); ++i)
    labels[i] = sampling.points[i].z > 0.0 ? 1 : 0;

  CHECK(advect_initial_interface(sampling, labels, 0.0, 0.5) == labels);

  // Negative speed grows the higher-id phase: the northern cap expands
  // south by 0.1, so latitudes below -0.1 keep label 0.
  std::vector<int> grown = advect_initial_interface(sampling, labels, -1.0, 0.1);
  const double tol = 1.5 * sampling.mean_spacing;
  int grown_count = 0, base_count = 0;
  for (int i = 0; i < sampling.size(); ++i) {
    const double lat = std::asin(sampling.points[i].z);
    if (lat < -0.1 - tol) CHECK(grown[i] == 0);
    if (lat > tol) CHECK(grown[i] == 1);
    grown_count += grown[i];
    base_count += labels[i];
  }
  CHECK(grown_count > base_count);

  // Positive speed shrinks it symmetrically.
  std::vector<int> shrunk = advect_initial_interface(sampling, labels, 1.0, 0.1);
  int shrunk_count = 0;
  for (int i = 0; i < sampling.size(); ++i) {
    const double lat = std::asin(sampling.points[i].z);
    if (lat > 0.1 + tol) CHECK(shrunk[i] == 1);
    if (lat < -tol) CHECK(shrunk[i] == 0);
    shrunk_count += shrunk[i];
  }
  CHECK(shrunk_count < base_count);

  CHECK_THROWS_AS(advect_initial_interface(sampling, labels, 1.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(advect_initial_interface(sampling, labels, 1.0, -0.1),
                  std::invalid_argument);
  std::vector<int> uniform(sampling.size(), 1);
  CHECK_THROWS_AS(advect_initial_interface(sampling, uniform, 1.0, 0.1),
                  VanishedInterface);
}

TEST_CASE("single-substep unconstrained runs repeat bit for bit") {
  BandedGrid band = sphere_band(0.15, 2);
  SurfaceSampling sampling =
      fibonacci_sample(SurfaceModel::unit_sphere(), 1500);
  std::vector<int> labels = cap_labels(sampling, 0.8);

  FlowConfig config;
  config.alpha = 1.0;
  config.h = 0.01;
  config.substeps = 1;
  config.steps = 2;
  config.degree = 2;
  config.eps = 4.0 * sampling.mean_spacing;
  config.rho = 0.0;

  FlowResult a = mbo_multiphase(band, sampling, labels, 2, config);
  FlowResult b = mbo_multiphase(band, sampling, labels, 2, config);
  CHECK(a.labels_history == b.labels_history);
  CHECK(a.total_minimize_iterations == b.total_minimize_iterations);
}
