#pragma once

#include <vector>

#include "surfaceflow/mm.hpp"
#include "surfaceflow/multiphase.hpp"

namespace sf {

/// Threshold-dynamics parameters. Each outer step evolves the profile by
/// `substeps` minimizing movements of size h (total tau = substeps * h)
/// before thresholding and rebuilding the distance profile.
struct FlowConfig {
  double alpha = 1.0;
  double h = 1e-3;
  int substeps = 1;  // M
  int steps = 1;     // outer threshold steps
  int degree = 3;
  double eps = 0.05;  // Heaviside width of the volume quadrature
  double rho = 0.0;   // volume penalty strength, 0 disables
  // Collar of the multiphase distance profile; 0 picks 2K/(K-1), which
  // makes the pairwise margins distance-valued (unit slope) near every
  // interface. A collar narrower than the grid spacing makes the profile a
  // near-jump the grid cannot resolve (spurious interface motion) and
  // steepens it so much that the volume penalty cannot compete with the
  // fidelity term.
  double sdvf_collar = 0.0;
  MinimizeOptions minimize;

  double tau() const { return substeps * h; }
  void validate() const;
};

struct FlowResult {
  // Sample labels after each outer step; front() is the initial labeling.
  std::vector<std::vector<int>> labels_history;
  // Matching interfaces: zero crossings of the evolved field along the
  // crossing edges (sub-sample accurate); front() is the initial interface.
  std::vector<InterfaceSet> interfaces_history;
  // Per-phase sample counts per recorded step; constrained runs (rho > 0)
  // additionally record the band volumes.
  std::vector<std::vector<int>> sample_counts;
  std::vector<std::vector<double>> volume_history;
  int total_minimize_iterations = 0;
  bool all_converged = true;
  // The flow ran out of interface before completing its steps.
  bool interface_vanished = false;

  const std::vector<int>& labels() const { return labels_history.back(); }
  int steps_taken() const { return static_cast<int>(labels_history.size()) - 1; }
};

// Sign threshold of a scalar field at the sample points.
std::vector<int> threshold_sign_labels(const GridField& u, const BandedGrid& band,
                                       const SurfaceSampling& sampling, int degree);

/// Two-phase mean curvature flow by thresholding: rebuild the signed
/// geodesic distance (positive inside phase 1), diffuse it by minimizing
/// movements for time tau, threshold at zero. Each threshold step keeps the
/// zero crossings of the evolved field as the new interface, so sub-sample
/// motion carries over to the next distance rebuild. An explicit initial
/// interface (e.g. from analytic initial data) replaces the default
/// label-edge midpoints.
FlowResult mbo_two_phase(const BandedGrid& band, const SurfaceSampling& sampling,
                         const std::vector<int>& initial_labels,
                         const FlowConfig& config,
                         const InterfaceSet* initial_interface = nullptr);

/// Two-phase hyperbolic variant: the wave profile restarts from
/// 2 d_n - d_{n-1} with zero initial velocity each outer step. Distinct
/// previous labels encode a nonzero initial interface velocity; they
/// default to the initial labels (flow starts at rest).
FlowResult hmbo_two_phase(const BandedGrid& band, const SurfaceSampling& sampling,
                          const std::vector<int>& initial_labels,
                          const FlowConfig& config,
                          const std::vector<int>* previous_labels = nullptr,
                          const InterfaceSet* initial_interface = nullptr,
                          const InterfaceSet* previous_interface = nullptr);

/// Multiphase flows on the vector-valued profile with K phases; thresholding
/// picks the simplex direction of largest projection. rho > 0 adds the
/// quadratic volume penalty with targets frozen at the initial surrogate
/// volumes.
FlowResult mbo_multiphase(const BandedGrid& band, const SurfaceSampling& sampling,
                          const std::vector<int>& initial_labels, int K,
                          const FlowConfig& config,
                          const InterfaceSet* initial_interface = nullptr);

FlowResult hmbo_multiphase(const BandedGrid& band, const SurfaceSampling& sampling,
                           const std::vector<int>& initial_labels, int K,
                           const FlowConfig& config,
                           const std::vector<int>* previous_labels = nullptr,
                           const InterfaceSet* initial_interface = nullptr,
                           const InterfaceSet* previous_interface = nullptr);

/// Relabel samples as if the interface moved for time t at normal speed V,
/// positive V expanding the lower-id phase of the local pair. Rejects
/// displacements beyond pi/4 (a quarter turn on the unit sphere).
std::vector<int> advect_initial_interface(const SurfaceSampling& sampling,
                                          const std::vector<int>& labels,
                                          double V, double t);

}  // namespace sf
