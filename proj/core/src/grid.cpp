#include "surfaceflow/grid.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <string>

namespace sf {

double lambda_for_degree(int degree, double dx) {
  if (degree < 1 || degree > 3)
    throw std::invalid_argument("lambda_for_degree: degree must be 1, 2 or 3");
  if (dx <= 0.0) throw std::invalid_argument("lambda_for_degree: dx must be > 0");
  const double half = (degree + 1) / 2.0;
  return std::sqrt(2.0 * half * half + (1.0 + half) * (1.0 + half)) * dx;
}

int BandedGrid::point_at(int i, int j, int k) const {
  const int nx = spec.nx(), ny = spec.ny(), nz = spec.nz();
  if (i < 0 || j < 0 || k < 0 || i >= nx || j >= ny || k >= nz) return -1;
  return cell_to_point_[(static_cast<size_t>(i) * ny + j) * nz + k];
}

int BandedGrid::neighbor(int point, int axis, int dir) const {
  auto [i, j, k] = ijk[point];
  if (axis == 0) i += dir;
  else if (axis == 1) j += dir;
  else k += dir;
  return point_at(i, j, k);
}

BandedGrid build_band(const GridSpec& spec, const SurfaceModel& surface,
                      double lambda) {
  BandedGrid band;
  band.spec = spec;
  band.lambda = lambda;
  const int nx = spec.nx(), ny = spec.ny(), nz = spec.nz();
  const size_t ncells = static_cast<size_t>(nx) * ny * nz;

  // Membership predicate of the band proper: ||x - C_S(x)|| <= lambda.
  std::vector<std::uint8_t> in_band(ncells, 0);
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nz; ++k) {
        const Vec3 x = spec.point(i, j, k);
        if (distance(x, surface.closest_point(x)) <= lambda)
          in_band[(static_cast<size_t>(i) * ny + j) * nz + k] = 1;
      }

  auto flat = [&](int i, int j, int k) {
    return (static_cast<size_t>(i) * ny + j) * nz + k;
  };
  auto is_in = [&](int i, int j, int k) {
    if (i < 0 || j < 0 || k < 0 || i >= nx || j >= ny || k >= nz) return false;
    return in_band[flat(i, j, k)] != 0;
  };

  band.cell_to_point_.assign(ncells, -1);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nz; ++k) {
        const bool member = in_band[flat(i, j, k)];
        // Boundary: outside points with a band point among the 6 axis
        // neighbors, so every band point has a complete difference stencil.
        bool boundary = false;
        if (!member) {
          boundary = is_in(i - 1, j, k) || is_in(i + 1, j, k) ||
                     is_in(i, j - 1, k) || is_in(i, j + 1, k) ||
                     is_in(i, j, k - 1) || is_in(i, j, k + 1);
        }
        if (!member && !boundary) continue;
        const int idx = band.num_points();
        band.cell_to_point_[flat(i, j, k)] = idx;
        band.ijk.push_back({i, j, k});
        const Vec3 x = spec.point(i, j, k);
        band.coords.push_back(x);
        band.cp.push_back(surface.closest_point(x));
        band.is_boundary.push_back(member ? 0 : 1);
        if (member) band.interior_.push_back(idx);
      }

  if (band.interior_.empty())
    throw std::runtime_error("build_band: empty band (lambda too small or "
                             "surface outside the grid bounds)");
  return band;
}

GridField central_diff(const GridField& field, const BandedGrid& band, int axis) {
  GridField out(band, field.m);
  const double inv2dx = 1.0 / (2.0 * band.spec.dx);
  const auto& interior = band.interior();
#pragma omp parallel for schedule(static)
  for (size_t t = 0; t < interior.size(); ++t) {
    const int q = interior[t];
    const int qm = band.neighbor(q, axis, -1);
    const int qp = band.neighbor(q, axis, +1);
    if (qm < 0 || qp < 0)
      throw std::logic_error("central_diff: missing neighbor at interior point");
    for (int c = 0; c < field.m; ++c)
      out.at(q, c) = (field.at(qp, c) - field.at(qm, c)) * inv2dx;
  }
  return out;
}

GridField discrete_laplacian(const GridField& field, const BandedGrid& band) {
  GridField out(band, field.m);
  const double invdx2 = 1.0 / (band.spec.dx * band.spec.dx);
  const auto& interior = band.interior();
#pragma omp parallel for schedule(static)
  for (size_t t = 0; t < interior.size(); ++t) {
    const int q = interior[t];
    for (int c = 0; c < field.m; ++c) {
      double acc = -6.0 * field.at(q, c);
      for (int axis = 0; axis < 3; ++axis) {
        acc += field.at(band.neighbor(q, axis, -1), c);
        acc += field.at(band.neighbor(q, axis, +1), c);
      }
      out.at(q, c) = acc * invdx2;
    }
  }
  return out;
}

namespace {

// Stencil base index along one axis: the (p+1)-node run whose barycenter is
// nearest to v (grid units); ties toward lower indices.
inline int stencil_base(double v, int degree) {
  return static_cast<int>(std::ceil(v - degree / 2.0 - 0.5));
}

inline void lagrange_weights(double s, int degree, double* w) {
  for (int j = 0; j <= degree; ++j) {
    double acc = 1.0;
    for (int k = 0; k <= degree; ++k)
      if (k != j) acc *= (s - k) / static_cast<double>(j - k);
    w[j] = acc;
  }
}

}  // namespace

void interpolate_all(const GridField& field, const BandedGrid& band, const Vec3& x,
                     int degree, std::span<double> out) {
  if (degree < 1 || degree > 3)
    throw std::invalid_argument("interpolate: degree must be 1, 2 or 3");
  const GridSpec& spec = band.spec;
  const double vx = (x.x - spec.lo.x) / spec.dx;
  const double vy = (x.y - spec.lo.y) / spec.dx;
  const double vz = (x.z - spec.lo.z) / spec.dx;
  const int i0 = stencil_base(vx, degree);
  const int j0 = stencil_base(vy, degree);
  const int k0 = stencil_base(vz, degree);

  double wx[4], wy[4], wz[4];
  lagrange_weights(vx - i0, degree, wx);
  lagrange_weights(vy - j0, degree, wy);
  lagrange_weights(vz - k0, degree, wz);

  for (int c = 0; c < field.m; ++c) out[c] = 0.0;
  for (int a = 0; a <= degree; ++a)
    for (int b = 0; b <= degree; ++b) {
      const double wab = wx[a] * wy[b];
      for (int c = 0; c <= degree; ++c) {
        const int pt = band.point_at(i0 + a, j0 + b, k0 + c);
        if (pt < 0) {
          char buf[128];
          std::snprintf(buf, sizeof(buf),
                        "interpolate: stencil escapes band at point "
                        "(%.6g, %.6g, %.6g)", x.x, x.y, x.z);
          throw OutOfBand(buf);
        }
        const double w = wab * wz[c];
        for (int q = 0; q < field.m; ++q) out[q] += w * field.at(pt, q);
      }
    }
}

double interpolate(const GridField& field, const BandedGrid& band, const Vec3& x,
                   int degree, int component) {
  std::vector<double> buf(field.m);
  interpolate_all(field, band, x, degree, buf);
  return buf[component];
}

GridField extend_via_cp(const BandedGrid& band, const GridField& surface_values,
                        int degree) {
  GridField out(band, surface_values.m);
  std::exception_ptr err;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < band.num_points(); ++p) {
    try {
      std::array<double, 8> buf;
      interpolate_all(surface_values, band, band.cp[p], degree,
                      std::span<double>(buf.data(), surface_values.m));
      for (int c = 0; c < surface_values.m; ++c) out.at(p, c) = buf[c];
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

GridField extend_from_surface(const BandedGrid& band,
                              const std::function<double(const Vec3&)>& f) {
  GridField out(band, 1);
#pragma omp parallel for schedule(static)
  for (int p = 0; p < band.num_points(); ++p) out.at(p) = f(band.cp[p]);
  return out;
}

GridField extend_from_surface_vec(
    const BandedGrid& band, int m,
    const std::function<void(const Vec3&, std::span<double>)>& f) {
  GridField out(band, m);
#pragma omp parallel for schedule(static)
  for (int p = 0; p < band.num_points(); ++p) {
    std::array<double, 8> buf;
    f(band.cp[p], std::span<double>(buf.data(), m));
    for (int c = 0; c < m; ++c) out.at(p, c) = buf[c];
  }
  return out;
}

double pairwise_sum(std::span<const double> values) {
  const size_t n = values.size();
  if (n <= 64) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const size_t half = n / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace sf
