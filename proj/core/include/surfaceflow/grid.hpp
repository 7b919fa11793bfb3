#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "surfaceflow/surface.hpp"
#include "surfaceflow/vec3.hpp"

namespace sf {

struct OutOfBand : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Uniform Cartesian grid covering the surface. Spacing is the same in all
/// three directions.
struct GridSpec {
  Vec3 lo{-1.5, -1.5, -1.5};
  Vec3 hi{1.5, 1.5, 1.5};
  double dx = 0.1;

  int nx() const { return static_cast<int>(std::round((hi.x - lo.x) / dx)) + 1; }
  int ny() const { return static_cast<int>(std::round((hi.y - lo.y) / dx)) + 1; }
  int nz() const { return static_cast<int>(std::round((hi.z - lo.z) / dx)) + 1; }

  Vec3 point(int i, int j, int k) const {
    return {lo.x + i * dx, lo.y + j * dx, lo.z + k * dx};
  }

  static GridSpec cube(double half_extent, double dx) {
    return {{-half_extent, -half_extent, -half_extent},
            {half_extent, half_extent, half_extent},
            dx};
  }
};

// Band half-width required by a degree-p tensor interpolation stencil.
double lambda_for_degree(int degree, double dx);

/// The computational band: grid points within lambda of the surface, plus
/// the layer of boundary points needed to close difference stencils.
/// Closest points are cached per point.
class BandedGrid {
 public:
  GridSpec spec;
  double lambda = 0.0;

  // All points of the band union its boundary, band points first is NOT
  // guaranteed; use is_boundary / interior().
  std::vector<std::array<int, 3>> ijk;
  std::vector<Vec3> coords;
  std::vector<Vec3> cp;
  std::vector<std::uint8_t> is_boundary;

  int num_points() const { return static_cast<int>(coords.size()); }
  const std::vector<int>& interior() const { return interior_; }
  int num_interior() const { return static_cast<int>(interior_.size()); }

  // Index into the point list, -1 when (i,j,k) is outside the band union.
  int point_at(int i, int j, int k) const;
  // Axis in {0,1,2}, dir in {-1,+1}.
  int neighbor(int point, int axis, int dir) const;

  friend BandedGrid build_band(const GridSpec&, const SurfaceModel&, double);

 private:
  std::vector<int> interior_;
  std::vector<std::int32_t> cell_to_point_;
};

BandedGrid build_band(const GridSpec& spec, const SurfaceModel& surface,
                      double lambda);

/// Values over the band points; m components per point (m = 1 scalar,
/// m = K-1 for phase vector fields).
struct GridField {
  int m = 1;
  std::vector<double> v;

  GridField() = default;
  GridField(const BandedGrid& band, int components)
      : m(components), v(static_cast<size_t>(band.num_points()) * components, 0.0) {}

  double& at(int point, int c = 0) { return v[static_cast<size_t>(point) * m + c]; }
  double at(int point, int c = 0) const { return v[static_cast<size_t>(point) * m + c]; }
  int num_points() const { return static_cast<int>(v.size()) / m; }
};

// Central difference along an axis; defined at interior points, zero at
// boundary rows.
GridField central_diff(const GridField& field, const BandedGrid& band, int axis);

// Seven-point discrete Laplacian at interior points, zero at boundary rows.
GridField discrete_laplacian(const GridField& field, const BandedGrid& band);

/// Tensor-product polynomial interpolation of degree p per axis. The stencil
/// is the (p+1)^3 node cube whose barycenter is nearest to the query point,
/// ties toward lower indices. Throws OutOfBand when a stencil node is
/// outside the band union.
double interpolate(const GridField& field, const BandedGrid& band, const Vec3& x,
                   int degree, int component = 0);
void interpolate_all(const GridField& field, const BandedGrid& band, const Vec3& x,
                     int degree, std::span<double> out);

// u(x) := I[field](C_S(x)) at every band point; constant along grid-normal
// fibers up to interpolation error.
GridField extend_via_cp(const BandedGrid& band, const GridField& surface_values,
                        int degree);

// Initialize a field from a function on the surface: u(x) = f(C_S(x)).
GridField extend_from_surface(const BandedGrid& band,
                              const std::function<double(const Vec3&)>& f);
GridField extend_from_surface_vec(
    const BandedGrid& band, int m,
    const std::function<void(const Vec3&, std::span<double>)>& f);

// Deterministic pairwise tree summation.
double pairwise_sum(std::span<const double> values);

}  // namespace sf
