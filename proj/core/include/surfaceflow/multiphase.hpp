#pragma once

#include <memory>
#include <span>
#include <vector>

#include "surfaceflow/grid.hpp"
#include "surfaceflow/surface.hpp"

namespace sf {

/// K unit vectors in R^(K-1) forming a regular simplex: |p_i| = 1,
/// sum_i p_i = 0, p_i . p_j = -1/(K-1) for i != j. Deterministic
/// orientation; K = 2 yields {+1, -1}.
struct SimplexFrame {
  int K = 0;
  std::vector<std::vector<double>> p;  // K rows of dimension K-1

  int dim() const { return K - 1; }
  double dot_with(int i, std::span<const double> w) const;
};

SimplexFrame simplex_vectors(int K);

// C^1 ramp from 0 to 1 across [-eps, eps].
double smoothed_heaviside(double u, double eps);
double smoothed_heaviside_deriv(double u, double eps);

// argmax_i w . p_i; ties resolve to the lowest phase id.
int argmax_phase(std::span<const double> w, const SimplexFrame& frame);

/// Vector-valued signed distance profile built from per-phase signed
/// geodesic distances d_i: each phase contributes its simplex direction at
/// full weight beyond eps/2 inside, ramps linearly across the collar
/// (-eps/2, eps/2), and drops out beyond. Evaluable anywhere on the surface.
class SdvfEvaluator {
 public:
  SdvfEvaluator(const SurfaceSampling& sampling, std::vector<int> labels,
                int K, double eps);
  // Per-phase distances measured to an explicit (possibly refined)
  // interface instead of the label-edge midpoints.
  SdvfEvaluator(const SurfaceSampling& sampling, std::vector<int> labels,
                int K, double eps, const InterfaceSet& interface);

  int num_phases() const { return frame_.K; }
  int dim() const { return frame_.dim(); }
  double eps() const { return eps_; }
  const SimplexFrame& frame() const { return frame_; }
  const std::vector<int>& labels() const { return labels_; }

  void eval(const Vec3& on_surface, std::span<double> out) const;
  // Signed geodesic distance to the boundary of one phase (+-inf when the
  // phase has no interface).
  double phase_distance(int phase, const Vec3& on_surface) const;

 private:
  void init(const InterfaceSet* interface);

  const SurfaceSampling* sampling_;
  std::vector<int> labels_;
  SimplexFrame frame_;
  double eps_;
  std::vector<std::unique_ptr<SignedDistanceField>> fields_;
};

// Extend an SDVF to the band: z(x) = z(C_S(x)). m = K-1 components.
GridField extend_sdvf(const BandedGrid& band, const SdvfEvaluator& sdvf);

// Per-point phase labels from a vector field on the band.
std::vector<int> field_labels_at_samples(const GridField& w, const BandedGrid& band,
                                         const SurfaceSampling& sampling,
                                         const SimplexFrame& frame, int degree);

// Field values at the sample points, row-major (sample, component).
std::vector<double> profile_at_samples(const GridField& w, const BandedGrid& band,
                                       const SurfaceSampling& sampling, int degree);

/// Move each edge point to the zero crossing of the pairwise margin
/// w . (p_i - p_j) between its two phases (linear along the chord, projected
/// back to the surface); `profile` holds the per-sample field values.
void refine_interface(const SurfaceSampling& sampling,
                      const std::vector<int>& labels,
                      const std::vector<double>& profile,
                      const SimplexFrame& frame, InterfaceSet& iface);

/// Phase volumes of a labeling by band quadrature: V_i = dx^3 sum over band
/// points of H_eps(d_i(C_S(x))) with d_i the signed geodesic distance to
/// the phase boundary. Phases without an interface contribute their exact
/// indicator (0 or 1) through the Heaviside limit.
std::vector<double> phase_volumes(const BandedGrid& band,
                                  const SurfaceSampling& sampling,
                                  const std::vector<int>& labels, int K,
                                  double eps);

// Same, with the distances measured to an explicit interface.
std::vector<double> phase_volumes(const BandedGrid& band,
                                  const SurfaceSampling& sampling,
                                  const std::vector<int>& labels, int K,
                                  double eps, const InterfaceSet& interface);

// Same quadrature with the labeling taken from the argmax regions of a
// vector field on the band.
std::vector<double> phase_volumes(const GridField& w, const BandedGrid& band,
                                  const SurfaceSampling& sampling,
                                  const SimplexFrame& frame, double eps,
                                  int degree);

/// Quadratic volume penalty rho * sum_i (V~_i - target_i)^2 with the
/// differentiable volume surrogate
///   V~_i = dx^3 sum_q H_eps(margin_i(w_q)),
///   margin_i(w) = w . p_i - max_{j != i} w . p_j.
/// With a distance-scaled profile (collar 2K/(K-1)) the margin equals the
/// pairwise signed distance near the interface, so H_eps(margin) matches the
/// faithful quadrature H_eps(d) and the penalty pushes the zero set at full
/// strength instead of through the profile's compression factor.
class VolumePenalty {
 public:
  VolumePenalty(const BandedGrid& band, SimplexFrame frame,
                std::vector<double> targets, double rho, double eps);

  // Surrogate volumes of an assembled field (interior quadrature).
  std::vector<double> surrogate_volumes(const GridField& w) const;

  // Penalty value; gradient accumulated into interior rows of grad.
  double value_and_grad(const GridField& w, GridField& grad) const;

  const std::vector<double>& targets() const { return targets_; }
  double rho() const { return rho_; }

 private:
  const BandedGrid* band_;
  SimplexFrame frame_;
  std::vector<double> targets_;
  double rho_;
  double margin_eps_;
};

}  // namespace sf
