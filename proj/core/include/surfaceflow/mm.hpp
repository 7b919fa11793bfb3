#pragma once

#include <functional>
#include <span>
#include <vector>

#include "surfaceflow/grid.hpp"

namespace sf {

struct HeatMMParams {
  double h = 1e-3;
  double alpha = 1.0;
};

struct WaveMMParams {
  double h = 1e-3;
  double alpha = 1.0;
};

struct MinimizeOptions {
  double g_tol = 1e-8;  // max-abs gradient tolerance
  int max_iters = 500;
  int memory = 10;  // quasi-Newton history length
};

struct MinimizeResult {
  std::vector<double> x;
  double grad_norm = 0.0;  // max-abs at exit
  int iterations = 0;
  bool converged = false;
  bool line_search_failed = false;
};

/// value and gradient at x; grad has the same size as x.
using ObjectiveFn = std::function<double(std::span<const double>, std::span<double>)>;

// Limited-memory BFGS with Armijo backtracking. Deterministic given inputs;
// non-finite trial values trigger step halving before failure is reported.
MinimizeResult minimize(const ObjectiveFn& objective, std::span<const double> x0,
                        const MinimizeOptions& opts = {});

/// Discrete minimizing-movement functional over the band: fidelity plus
/// Dirichlet energy, summed over interior band points with boundary values
/// frozen at their extended values. Unknowns are the interior values
/// (interior count x components). Gradients are analytic.
class MMObjective {
 public:
  // Fidelity |u - u_prev|^2 / (2h).
  static MMObjective heat(const BandedGrid& band, const GridField& u_prev,
                          const HeatMMParams& params);
  // Fidelity |u - 2 u_prev + u_prev2|^2 / (2 h^2).
  static MMObjective wave(const BandedGrid& band, const GridField& u_prev,
                          const GridField& u_prev2, const WaveMMParams& params);

  // Additional term evaluated on the assembled field; accumulates its
  // gradient on the passed field (interior rows only are read back).
  using ExtraTerm = std::function<double(const GridField&, GridField&)>;
  void set_extra(ExtraTerm extra) { extra_ = std::move(extra); }

  int components() const { return target_.m; }
  int dim() const { return band_->num_interior() * target_.m; }

  std::vector<double> pack(const GridField& field) const;
  // Interior rows from x, boundary rows from the frozen base field.
  GridField unpack(std::span<const double> x) const;

  double eval(std::span<const double> x, std::span<double> grad) const;
  ObjectiveFn function() const;

 private:
  const BandedGrid* band_ = nullptr;
  GridField target_;   // b: u_prev (heat) or 2 u_prev - u_prev2 (wave)
  GridField base_;     // supplies frozen boundary values
  double fidelity_h_ = 1.0;  // h or h^2
  double alpha_ = 1.0;
  ExtraTerm extra_;
};

// One explicit closest-point step: re-extension of u + h a Lap_D(u).
// Input must already be a closest-point extension.
GridField explicit_heat_step(const GridField& u_extended, const BandedGrid& band,
                             double alpha, double h, int degree);
// Three-level explicit update, re-extended.
GridField explicit_wave_step(const GridField& u_extended,
                             const GridField& u_prev_extended,
                             const BandedGrid& band, double alpha, double h,
                             int degree);

using StepObserver = std::function<void(int step, const GridField& u_extended)>;

// MM time stepping for the surface heat equation: minimize, restrict to the
// surface by interpolation at closest points, re-extend; n_steps times.
GridField mm_heat_solve(const BandedGrid& band,
                        const std::function<double(const Vec3&)>& f,
                        double alpha, double h, int n_steps, int degree,
                        const MinimizeOptions& opts = {},
                        const StepObserver& observer = nullptr);

// MM time stepping for the surface wave equation with backward-difference
// velocity initialization u_{-1} = u_0 - h V_0.
GridField mm_wave_solve(const BandedGrid& band,
                        const std::function<double(const Vec3&)>& f,
                        const std::function<double(const Vec3&)>& v0,
                        double alpha, double h, int n_steps, int degree,
                        const MinimizeOptions& opts = {},
                        const StepObserver& observer = nullptr);

}  // namespace sf
