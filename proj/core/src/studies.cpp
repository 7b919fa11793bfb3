#include "surfaceflow/studies.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <string>

namespace sf {

namespace {
constexpr double kPi = std::numbers::pi;
}

double real_y60(const Vec3& s) {
  const double z = s.z;
  const double z2 = z * z;
  const double poly = ((231.0 * z2 - 315.0) * z2 + 105.0) * z2 - 5.0;
  return std::sqrt(13.0 / (4.0 * kPi)) * poly / 16.0;
}

double real_y65(const Vec3& s) {
  // sin^5(theta) cos(5 phi) expressed through the cylindrical coordinates.
  const double rxy2 = s.x * s.x + s.y * s.y;
  const double phi = std::atan2(s.y, s.x);
  const double sin5 = rxy2 * rxy2 * std::sqrt(std::max(0.0, rxy2));
  const double norm =
      std::sqrt(2.0) * std::sqrt(13.0 / (4.0 * kPi * 39916800.0)) * 10395.0;
  return norm * sin5 * s.z * std::cos(5.0 * phi);
}

namespace {

double harmonic_mix(const Vec3& s) {
  return real_y60(s) + std::sqrt(14.0 / 11.0) * real_y65(s);
}

}  // namespace

double heat_exact_cond1(const Vec3& s, double t) {
  return std::exp(-2.0 * t) * s.z;
}

double heat_exact_cond2(const Vec3& s, double t) {
  return std::exp(-t) * harmonic_mix(s);
}

double wave_exact_cond1(const Vec3& s, double t) {
  return -std::cos(std::sqrt(2.0) * t) * s.z;
}

double wave_exact_cond2(const Vec3& s, double t) {
  return std::cos(std::sqrt(42.0) * t) * harmonic_mix(s);
}

double linf_error(const GridField& u, const BandedGrid& band, int degree,
                  const std::function<double(const Vec3&)>& exact) {
  const auto& interior = band.interior();
  std::vector<double> errs(interior.size(), 0.0);
  std::exception_ptr err;
#pragma omp parallel for schedule(static)
  for (size_t t = 0; t < interior.size(); ++t) {
    try {
      const Vec3& cp = band.cp[interior[t]];
      errs[t] = std::abs(exact(cp) - interpolate(u, band, cp, degree));
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return *std::max_element(errs.begin(), errs.end());
}

GridSpec sphere_domain(double dx, double lambda) {
  const double needed = 1.0 + lambda + 2.0 * dx;
  const double half = dx * std::ceil(needed / dx);
  return GridSpec::cube(half, dx);
}

ConvergenceReport convergence_study(ConvergenceProblem problem,
                                    std::span<const double> dxs, int degree,
                                    const MinimizeOptions& opts) {
  if (dxs.size() < 1)
    throw std::invalid_argument("convergence_study: need at least one dx");

  ConvergenceReport report;
  std::vector<double> sorted(dxs.begin(), dxs.end());
  std::sort(sorted.rbegin(), sorted.rend());

  for (double dx : sorted) {
    const double lambda = lambda_for_degree(degree, dx);
    const BandedGrid band =
        build_band(sphere_domain(dx, lambda), SurfaceModel::unit_sphere(), lambda);

    double alpha = 1.0, t_e = 0.0, h_nominal = 0.0;
    bool is_wave = false;
    std::function<double(const Vec3&, double)> exact;
    switch (problem) {
      case ConvergenceProblem::HeatCond1:
        t_e = 0.25;
        h_nominal = dx * dx / 6.0;
        exact = heat_exact_cond1;
        break;
      case ConvergenceProblem::HeatCond2:
        alpha = 1.0 / 42.0;
        t_e = 0.25;
        h_nominal = dx * dx / 6.0;
        exact = heat_exact_cond2;
        break;
      case ConvergenceProblem::WaveCond1:
        t_e = 2.0 * kPi / std::sqrt(2.0);
        h_nominal = dx / 10.0;
        is_wave = true;
        exact = wave_exact_cond1;
        break;
      case ConvergenceProblem::WaveCond2:
        t_e = 2.0 * kPi / std::sqrt(42.0);
        h_nominal = dx / 10.0;
        is_wave = true;
        exact = wave_exact_cond2;
        break;
    }
    // Land on t_e exactly while staying close to the nominal coupling.
    const int n_steps = std::max(1, static_cast<int>(std::round(t_e / h_nominal)));
    const double h = t_e / n_steps;

    auto f = [&](const Vec3& p) { return exact(p, 0.0); };
    GridField u =
        is_wave ? mm_wave_solve(band, f, [](const Vec3&) { return 0.0; }, alpha,
                                h, n_steps, degree, opts)
                : mm_heat_solve(band, f, alpha, h, n_steps, degree, opts);
    report.rows.push_back(
        {dx, linf_error(u, band, degree,
                        [&](const Vec3& p) { return exact(p, t_e); })});
  }

  if (report.rows.size() >= 2) {
    // Least-squares slope of log(err) against log(dx).
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(report.rows.size());
    for (const auto& row : report.rows) {
      const double lx = std::log(row.dx), ly = std::log(row.linf);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    report.order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    report.order_defined = true;
  }
  return report;
}

double mean_radius(const InterfaceSet& interface) {
  if (interface.empty())
    throw std::invalid_argument("mean_radius: empty interface");
  double acc = 0.0;
  for (const auto& e : interface.edges)
    acc += std::sqrt(e.point.x * e.point.x + e.point.y * e.point.y);
  return acc / interface.size();
}

double mcf_radius_exact(double t, double r0) {
  if (r0 <= 0.0 || r0 > 1.0)
    throw std::invalid_argument("mcf_radius_exact: r0 must be in (0, 1]");
  const double arg = 1.0 - (1.0 - r0 * r0) * std::exp(2.0 * t);
  if (arg <= 0.0)
    throw std::domain_error("mcf_radius_exact: past the extinction time " +
                            std::to_string(-0.5 * std::log(1.0 - r0 * r0)));
  return std::sqrt(arg);
}

double hmcf_radius_oracle(double t, double r0, double v0) {
  if (r0 <= 0.0 || r0 > 1.0)
    throw std::invalid_argument("hmcf_radius_oracle: r0 must be in (0, 1]");
  if (t < 0.0) throw std::invalid_argument("hmcf_radius_oracle: t must be >= 0");
  const double dt = 1e-4;
  double r = r0, v = v0, time = 0.0;
  auto acc = [](double rr) { return (rr * rr - 1.0) / rr; };
  while (time < t) {
    const double step = std::min(dt, t - time);
    const double k1r = v, k1v = acc(r);
    const double k2r = v + 0.5 * step * k1v, k2v = acc(r + 0.5 * step * k1r);
    const double k3r = v + 0.5 * step * k2v, k3v = acc(r + 0.5 * step * k2r);
    const double k4r = v + step * k3v, k4v = acc(r + step * k3r);
    r += step * (k1r + 2.0 * k2r + 2.0 * k3r + k4r) / 6.0;
    v += step * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0;
    time += step;
    if (r <= 0.0)
      throw VanishedInterface("hmcf_radius_oracle: collapse at t = " +
                              std::to_string(time));
  }
  return r;
}

namespace {

// Cap of cylindrical radius r0 about the north pole, labeled phase 1.
std::vector<int> cap_labels(const SurfaceSampling& sampling, double r0) {
  const double z0 = std::sqrt(std::max(0.0, 1.0 - r0 * r0));
  std::vector<int> labels(sampling.size());
  for (int i = 0; i < sampling.size(); ++i)
    labels[i] = sampling.points[i].z > z0 ? 1 : 0;
  return labels;
}

// Cap interface with the edge points refined to the exact latitude circle
// (zero crossings of z - z0 along the crossing edges).
InterfaceSet cap_interface(const SurfaceSampling& sampling,
                           const std::vector<int>& labels, double z0) {
  InterfaceSet iface = extract_interface(sampling, labels);
  std::vector<double> vals(sampling.size());
  for (int i = 0; i < sampling.size(); ++i)
    vals[i] = sampling.points[i].z - z0;
  refine_interface(sampling, vals, iface);
  return iface;
}

struct BenchSetup {
  BandedGrid band;
  SurfaceSampling sampling;
};

BenchSetup bench_setup(double dx, int n_samples) {
  constexpr int degree = 3;
  const double lambda = lambda_for_degree(degree, dx);
  BenchSetup s{build_band(sphere_domain(dx, lambda), SurfaceModel::unit_sphere(),
                          lambda),
               fibonacci_sample(SurfaceModel::unit_sphere(), n_samples)};
  return s;
}

void trace_from_history(RadiusTrace& trace, const FlowResult& result,
                        double tau) {
  for (size_t k = 0; k < result.interfaces_history.size(); ++k) {
    const InterfaceSet& iface = result.interfaces_history[k];
    if (iface.empty()) {
      trace.vanished = true;
      return;
    }
    trace.times.push_back(static_cast<double>(k) * tau);
    trace.radii.push_back(mean_radius(iface));
  }
  if (result.interface_vanished) trace.vanished = true;
}

}  // namespace

RadiusTrace mbo_circle_benchmark(double dx, double r0, double t_end,
                                 int n_samples, const MinimizeOptions& opts) {
  const double tau = 0.03;
  const double h = dx * dx / 5.0;
  FlowConfig config;
  config.alpha = 1.0;
  config.substeps = std::max(1, static_cast<int>(std::round(tau / h)));
  config.h = tau / config.substeps;
  config.steps = static_cast<int>(std::round(t_end / tau));
  config.degree = 3;
  config.minimize = opts;

  BenchSetup s = bench_setup(dx, n_samples);
  const std::vector<int> labels = cap_labels(s.sampling, r0);
  const InterfaceSet iface0 =
      cap_interface(s.sampling, labels, std::sqrt(std::max(0.0, 1.0 - r0 * r0)));

  FlowResult result = mbo_two_phase(s.band, s.sampling, labels, config, &iface0);
  RadiusTrace trace;
  trace_from_history(trace, result, tau);
  return trace;
}

RadiusTrace hmbo_circle_benchmark(double dx, double r0, double v0, double t_end,
                                  int n_samples, const MinimizeOptions& opts) {
  const double tau = 0.01;
  const double h = dx / 10.0;
  FlowConfig config;
  config.alpha = 1.0;
  config.substeps = std::max(1, static_cast<int>(std::round(tau / h)));
  config.h = tau / config.substeps;
  config.steps = static_cast<int>(std::round(t_end / tau));
  config.degree = 3;
  config.minimize = opts;

  BenchSetup s = bench_setup(dx, n_samples);
  const std::vector<int> labels = cap_labels(s.sampling, r0);
  const InterfaceSet iface0 =
      cap_interface(s.sampling, labels, std::sqrt(std::max(0.0, 1.0 - r0 * r0)));

  RadiusTrace trace;
  if (v0 == 0.0) {
    FlowResult result =
        hmbo_two_phase(s.band, s.sampling, labels, config, nullptr, &iface0);
    trace_from_history(trace, result, tau);
    return trace;
  }
  // The previous labeling encodes the initial radial speed: positive v0
  // grows the cap, so one interval back the cap was geodesically smaller
  // by v0 * tau.
  const double theta_prev = std::asin(std::clamp(r0, 0.0, 1.0)) - v0 * tau;
  if (theta_prev <= 0.0 || theta_prev >= kPi / 2.0)
    throw std::invalid_argument(
        "hmbo_circle_benchmark: initial speed moves the cap too far");
  const std::vector<int> prev = cap_labels(s.sampling, std::sin(theta_prev));
  const InterfaceSet prev_iface =
      cap_interface(s.sampling, prev, std::cos(theta_prev));
  FlowResult result = hmbo_two_phase(s.band, s.sampling, labels, config, &prev,
                                     &iface0, &prev_iface);
  trace_from_history(trace, result, tau);
  return trace;
}

std::vector<AreaSweepRow> area_error_sweep(SweepFlow flow,
                                           std::span<const double> rhos,
                                           int n_samples,
                                           const MinimizeOptions& opts) {
  const double dx = 0.05;
  FlowConfig config;
  config.degree = 3;
  config.eps = 0.03;
  config.steps = 1;
  config.minimize = opts;
  if (flow == SweepFlow::Mcf) {
    config.alpha = 0.05;
    config.h = dx * dx / 6.0;
    config.substeps = 100;
  } else {
    config.alpha = 0.1;
    config.h = dx;
    config.substeps = 5;
  }

  BenchSetup s = bench_setup(dx, n_samples);
  const std::vector<int> initial = cap_labels(s.sampling, std::sin(kPi / 4.0));
  const InterfaceSet iface0 =
      cap_interface(s.sampling, initial, std::cos(kPi / 4.0));
  const double v0 =
      phase_volumes(s.band, s.sampling, initial, 2, config.eps, iface0)[1];

  std::vector<AreaSweepRow> rows;
  for (double rho : rhos) {
    config.rho = rho;
    FlowResult res =
        flow == SweepFlow::Mcf
            ? mbo_multiphase(s.band, s.sampling, initial, 2, config, &iface0)
            : hmbo_multiphase(s.band, s.sampling, initial, 2, config, nullptr,
                              &iface0);
    const double v_tau = phase_volumes(s.band, s.sampling, res.labels(), 2,
                                       config.eps,
                                       res.interfaces_history.back())[1];
    rows.push_back({rho, std::abs(v0 - v_tau)});
  }
  return rows;
}

std::vector<int> nearest_site_labels(const SurfaceSampling& sampling,
                                     std::span<const Vec3> sites) {
  if (sites.empty())
    throw std::invalid_argument("nearest_site_labels: no sites");
  std::vector<int> labels(sampling.size(), 0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < sampling.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < sites.size(); ++k) {
      const double d = sampling.surface.geodesic_distance(
          sampling.points[i], sites[k].normalized());
      if (d < best) {
        best = d;
        labels[i] = static_cast<int>(k);
      }
    }
  }
  return labels;
}

}  // namespace sf
