#pragma once

#include <span>
#include <vector>

#include "surfaceflow/flows.hpp"
#include "surfaceflow/mm.hpp"

namespace sf {

// Real orthonormal degree-6 spherical harmonics (order 0 and order 5,
// cosine branch, no Condon-Shortley sign); both are -42 eigenfunctions of
// the spherical Laplacian.
double real_y60(const Vec3& on_sphere);
double real_y65(const Vec3& on_sphere);

// Closed-form reference solutions on the unit sphere.
double heat_exact_cond1(const Vec3& s, double t);  // alpha = 1
double heat_exact_cond2(const Vec3& s, double t);  // alpha = 1/42
double wave_exact_cond1(const Vec3& s, double t);  // alpha = 1, rest start
double wave_exact_cond2(const Vec3& s, double t);  // alpha = 1, rest start

// Largest deviation from the reference over the band, both fields read at
// the closest point of each interior band point.
double linf_error(const GridField& u, const BandedGrid& band, int degree,
                  const std::function<double(const Vec3&)>& exact);

struct ConvergenceRow {
  double dx = 0.0;
  double linf = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;  // sorted by decreasing dx
  double order = 0.0;                // log-log slope of error vs dx
  bool order_defined = false;        // needs >= 2 rows
};

enum class ConvergenceProblem { HeatCond1, HeatCond2, WaveCond1, WaveCond2 };

/// Time-steps each problem to its reference time with the grid-coupled step
/// sizes (heat: h = dx^2/6 to t = 0.25; wave: h = dx/10 to one full period)
/// and fits the convergence order. The step count is rounded so the final
/// time is hit exactly. Cubic re-extension is the default; repeated
/// extension at lower degrees drifts over long step counts.
ConvergenceReport convergence_study(ConvergenceProblem problem,
                                    std::span<const double> dxs, int degree = 3,
                                    const MinimizeOptions& opts = {});

// Mean cylindrical radius sqrt(x^2+y^2) of the interface points.
double mean_radius(const InterfaceSet& interface);

// Shrinking circle on the unit sphere under curvature flow:
// r(t) = sqrt(1 - (1 - r0^2) e^{2t}); throws std::domain_error past the
// extinction time -(1/2) ln(1 - r0^2).
double mcf_radius_exact(double t, double r0);

// Reference radius for the accelerated flow r'' = (r^2-1)/r, integrated by
// classical RK4 with step 1e-4. Throws VanishedInterface at collapse, with
// the collapse time in the message.
double hmcf_radius_oracle(double t, double r0, double v0);

struct RadiusTrace {
  std::vector<double> times;
  std::vector<double> radii;
  bool vanished = false;  // interface disappeared before t_end
};

/// Shrinking-cap benchmark: cap of cylindrical radius r0 about the north
/// pole, thresholded curvature flow with h = dx^2/5 and threshold interval
/// 0.03, radius traced after each threshold step.
RadiusTrace mbo_circle_benchmark(double dx, double r0, double t_end,
                                 int n_samples = 32768,
                                 const MinimizeOptions& opts = {});

/// Accelerated variant: h = dx/10, threshold interval 0.01, initial radial
/// speed v0 encoded by back-advecting the initial labels.
RadiusTrace hmbo_circle_benchmark(double dx, double r0, double v0, double t_end,
                                  int n_samples = 32768,
                                  const MinimizeOptions& opts = {});

struct AreaSweepRow {
  double rho = 0.0;
  double err = 0.0;  // |V_0 - V_tau|, phase-1 volumes by band quadrature
};

enum class SweepFlow { Mcf, Hmcf };

/// Volume drift of a 45-degree cap over one threshold step as a function of
/// the penalty weight. Mcf: alpha = 0.05, h = dx^2/6, 100 substeps.
/// Hmcf: alpha = 0.1, h = dx, 5 substeps. dx = 0.05, profile collar 0.03.
std::vector<AreaSweepRow> area_error_sweep(SweepFlow flow,
                                           std::span<const double> rhos,
                                           int n_samples = 32768,
                                           const MinimizeOptions& opts = {});

// Voronoi labeling of the samples by geodesic distance to the sites; used
// to seed multiphase partitions.
std::vector<int> nearest_site_labels(const SurfaceSampling& sampling,
                                     std::span<const Vec3> sites);

// Smallest grid-aligned cube that contains the unit sphere inflated by
// lambda plus a boundary margin.
GridSpec sphere_domain(double dx, double lambda);

}  // namespace sf
