#include <benchmark/benchmark.h>

#include <cmath>

#include "surfaceflow/mm.hpp"
#include "surfaceflow/studies.hpp"

using namespace sf;

namespace {

BandedGrid sphere_band(double dx, int degree) {
  const double lambda = lambda_for_degree(degree, dx);
  return build_band(sphere_domain(dx, lambda), SurfaceModel::unit_sphere(),
                    lambda);
}

void BM_BuildBand(benchmark::State& state) {
  const double dx = 1.0 / state.range(0);
  for (auto _ : state) {
    BandedGrid band = sphere_band(dx, 3);
    benchmark::DoNotOptimize(band.num_points());
  }
}
BENCHMARK(BM_BuildBand)->Arg(10)->Arg(20)->Arg(40);

void BM_Extension(benchmark::State& state) {
  const double dx = 1.0 / state.range(0);
  BandedGrid band = sphere_band(dx, 3);
  for (auto _ : state) {
    GridField u = extend_from_surface(band, [](const Vec3& p) { return p.z; });
    benchmark::DoNotOptimize(u.v.data());
  }
}
BENCHMARK(BM_Extension)->Arg(10)->Arg(20)->Arg(40);

void BM_Interpolate(benchmark::State& state) {
  const double dx = 0.05;
  const int degree = static_cast<int>(state.range(0));
  BandedGrid band = sphere_band(dx, degree);
  GridField u = extend_from_surface(band, [](const Vec3& p) { return p.z; });
  SurfaceSampling sampling =
      fibonacci_sample(SurfaceModel::unit_sphere(), 4096);
  for (auto _ : state) {
    double acc = 0.0;
    for (int i = 0; i < sampling.size(); ++i)
      acc += interpolate(u, band, sampling.points[i], degree);
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_Interpolate)->Arg(1)->Arg(2)->Arg(3);

void BM_ObjectiveEval(benchmark::State& state) {
  const double dx = 1.0 / state.range(0);
  BandedGrid band = sphere_band(dx, 3);
  GridField u0 = extend_from_surface(band, [](const Vec3& p) { return p.z; });
  MMObjective obj = MMObjective::heat(band, u0, {1e-3, 1.0});
  std::vector<double> x = obj.pack(u0), grad(x.size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(obj.eval(x, grad));
  }
}
BENCHMARK(BM_ObjectiveEval)->Arg(10)->Arg(20)->Arg(40);

void BM_HeatStep(benchmark::State& state) {
  const double dx = 1.0 / state.range(0);
  BandedGrid band = sphere_band(dx, 3);
  for (auto _ : state) {
    GridField u = mm_heat_solve(
        band, [](const Vec3& p) { return p.z; }, 1.0, dx * dx / 6.0, 1, 3);
    benchmark::DoNotOptimize(u.v.data());
  }
}
BENCHMARK(BM_HeatStep)->Arg(10)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
