#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "surfaceflow/vec3.hpp"

namespace sf {

struct UnsupportedOperation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VanishedInterface : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SurfaceKind { UnitSphere, Parametric };

/// Closed smooth surface in R^3 described by its closest point map.
///
/// The unit sphere carries analytic closest points, normals and great-circle
/// geodesics. Parametric surfaces supply their own evaluators; the geodesic
/// evaluator is optional and geodesic queries without one throw
/// UnsupportedOperation.
class SurfaceModel {
 public:
  using PointFn = std::function<Vec3(const Vec3&)>;
  using DistFn = std::function<double(const Vec3&, const Vec3&)>;

  static SurfaceModel unit_sphere();
  static SurfaceModel parametric(PointFn closest_point, PointFn unit_normal,
                                 DistFn geodesic = nullptr);

  SurfaceKind kind() const { return kind_; }

  // The degenerate sphere center maps to the fixed point (1,0,0).
  Vec3 closest_point(const Vec3& x) const;
  Vec3 unit_normal(const Vec3& on_surface) const;
  double geodesic_distance(const Vec3& p, const Vec3& q) const;
  bool has_geodesic() const;

 private:
  SurfaceKind kind_ = SurfaceKind::UnitSphere;
  PointFn cp_;
  PointFn normal_;
  DistFn geodesic_;
};

/// Quasi-uniform point cloud on the surface with a symmetrized k-nearest
/// neighbor graph. Carrier for phase labels and interface extraction.
struct SurfaceSampling {
  SurfaceModel surface;
  std::vector<Vec3> points;
  std::vector<std::vector<int>> neighbors;
  double mean_spacing = 0.0;

  int size() const { return static_cast<int>(points.size()); }
  int nearest_sample(const Vec3& x) const;

  // Cell hash over the samples, built lazily by fibonacci_sample.
  struct Locator {
    double cell = 0.0;
    Vec3 lo;
    int nx = 0, ny = 0, nz = 0;
    std::vector<std::vector<int>> cells;
  };
  Locator locator;
};

SurfaceSampling fibonacci_sample(const SurfaceModel& surface, int n);

/// Label-crossing edges of the neighbor graph, each carrying one point that
/// represents the interface on that edge: the projected chord midpoint by
/// default, or a field zero crossing after refine_interface.
struct InterfaceSet {
  struct Edge {
    int a = -1, b = -1;
    Vec3 point;
  };
  std::vector<Edge> edges;

  bool empty() const { return edges.empty(); }
  int size() const { return static_cast<int>(edges.size()); }
};

// All edges whose endpoints carry different labels.
InterfaceSet extract_interface(const SurfaceSampling& sampling,
                               const std::vector<int>& labels);
// Only edges with exactly one endpoint in `phase`.
InterfaceSet extract_interface(const SurfaceSampling& sampling,
                               const std::vector<int>& labels, int phase);

/// Move each edge point to the zero crossing of the per-sample values along
/// the chord (linear in the chord parameter, projected back to the surface).
/// Edges whose endpoint values do not straddle zero keep their point. This
/// recovers sub-sample interface positions that label thresholding discards.
void refine_interface(const SurfaceSampling& sampling,
                      const std::vector<double>& values, InterfaceSet& iface);

/// Signed geodesic distance of every sample to the boundary of `phase`:
/// positive inside the phase, negative outside, magnitude the minimum
/// geodesic distance to the interface points.
/// Throws VanishedInterface when the phase is absent or covers everything.
std::vector<double> signed_geodesic_distance(const SurfaceSampling& sampling,
                                             const std::vector<int>& labels,
                                             int phase);

/// Signed geodesic distance to a fixed interface, evaluable at arbitrary
/// surface points. The sign at a query point comes from the label of the
/// nearest sample. The magnitude is measured to short chords linking each
/// interface point to its neighbors (a polyline through the point cloud):
/// bare point-cloud distances carry a sawtooth of ~half the point spacing
/// along the curve, which is fatal for velocity extraction from distance
/// differences.
class SignedDistanceField {
 public:
  SignedDistanceField(const SurfaceSampling& sampling,
                      const std::vector<int>& labels, int phase);
  // Same labels, but the interface points taken from an explicit (possibly
  // refined) interface; only edges touching `phase` contribute.
  SignedDistanceField(const SurfaceSampling& sampling,
                      const std::vector<int>& labels, int phase,
                      const InterfaceSet& interface);

  bool has_interface() const { return !points_.empty(); }
  bool phase_present() const { return phase_present_; }

  // +inf / -inf when the phase has no interface (covers all / nothing).
  double signed_at(const Vec3& on_surface) const;

 private:
  struct Segment {
    Vec3 a, b;
  };
  void build_segments();

  const SurfaceSampling* sampling_;
  const std::vector<int>* labels_;
  int phase_;
  bool phase_present_ = false;
  std::vector<Vec3> points_;
  std::vector<Segment> segments_;
};

}  // namespace sf
