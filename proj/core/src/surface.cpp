#include "surfaceflow/surface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace sf {

namespace {
constexpr double kDegenerateRadius = 1e-12;
}

SurfaceModel SurfaceModel::unit_sphere() {
  SurfaceModel s;
  s.kind_ = SurfaceKind::UnitSphere;
  return s;
}

SurfaceModel SurfaceModel::parametric(PointFn closest_point, PointFn unit_normal,
                                      DistFn geodesic) {
  SurfaceModel s;
  s.kind_ = SurfaceKind::Parametric;
  s.cp_ = std::move(closest_point);
  s.normal_ = std::move(unit_normal);
  s.geodesic_ = std::move(geodesic);
  return s;
}

Vec3 SurfaceModel::closest_point(const Vec3& x) const {
  if (kind_ == SurfaceKind::UnitSphere) {
    const double r = x.norm();
    if (r < kDegenerateRadius) return {1.0, 0.0, 0.0};
    return x / r;
  }
  return cp_(x);
}

Vec3 SurfaceModel::unit_normal(const Vec3& on_surface) const {
  if (kind_ == SurfaceKind::UnitSphere) return on_surface.normalized();
  return normal_(on_surface);
}

bool SurfaceModel::has_geodesic() const {
  return kind_ == SurfaceKind::UnitSphere || static_cast<bool>(geodesic_);
}

double SurfaceModel::geodesic_distance(const Vec3& p, const Vec3& q) const {
  if (kind_ == SurfaceKind::UnitSphere) {
    const double c = std::clamp(p.dot(q), -1.0, 1.0);
    return std::acos(c);
  }
  if (!geodesic_) {
    throw UnsupportedOperation(
        "geodesic_distance: surface has no geodesic evaluator");
  }
  return geodesic_(p, q);
}

SurfaceSampling fibonacci_sample(const SurfaceModel& surface, int n) {
  if (n < 32) throw std::invalid_argument("fibonacci_sample: n must be >= 32");
  if (surface.kind() != SurfaceKind::UnitSphere) {
    throw UnsupportedOperation(
        "fibonacci_sample: only the unit sphere is supported");
  }

  SurfaceSampling s;
  s.surface = surface;
  s.points.reserve(n);
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = 2.0 * std::numbers::pi * (i / golden - std::floor(i / golden));
    s.points.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }

  // Cell hash sized to the expected spacing; used for neighbor search and
  // nearest-sample queries.
  const double spacing_est = std::sqrt(4.0 * std::numbers::pi / n);
  auto& loc = s.locator;
  loc.cell = std::max(spacing_est, 1e-3);
  loc.lo = {-1.0 - loc.cell, -1.0 - loc.cell, -1.0 - loc.cell};
  loc.nx = loc.ny = loc.nz = static_cast<int>(std::ceil(2.0 / loc.cell)) + 2;
  loc.cells.assign(static_cast<size_t>(loc.nx) * loc.ny * loc.nz, {});
  auto cell_of = [&](const Vec3& p) {
    int ix = std::clamp(static_cast<int>((p.x - loc.lo.x) / loc.cell), 0, loc.nx - 1);
    int iy = std::clamp(static_cast<int>((p.y - loc.lo.y) / loc.cell), 0, loc.ny - 1);
    int iz = std::clamp(static_cast<int>((p.z - loc.lo.z) / loc.cell), 0, loc.nz - 1);
    return (static_cast<size_t>(ix) * loc.ny + iy) * loc.nz + iz;
  };
  for (int i = 0; i < n; ++i) loc.cells[cell_of(s.points[i])].push_back(i);

  // k=6 nearest by Euclidean distance, then symmetrized.
  constexpr int k = 6;
  s.neighbors.assign(n, {});
  double spacing_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec3& p = s.points[i];
    std::vector<std::pair<double, int>> cand;
    int ring = 1;
    while (true) {
      cand.clear();
      int cx = std::clamp(static_cast<int>((p.x - loc.lo.x) / loc.cell), 0, loc.nx - 1);
      int cy = std::clamp(static_cast<int>((p.y - loc.lo.y) / loc.cell), 0, loc.ny - 1);
      int cz = std::clamp(static_cast<int>((p.z - loc.lo.z) / loc.cell), 0, loc.nz - 1);
      for (int ix = std::max(0, cx - ring); ix <= std::min(loc.nx - 1, cx + ring); ++ix)
        for (int iy = std::max(0, cy - ring); iy <= std::min(loc.ny - 1, cy + ring); ++iy)
          for (int iz = std::max(0, cz - ring); iz <= std::min(loc.nz - 1, cz + ring); ++iz)
            for (int j : loc.cells[(static_cast<size_t>(ix) * loc.ny + iy) * loc.nz + iz])
              if (j != i) cand.emplace_back((s.points[j] - p).norm2(), j);
      if (static_cast<int>(cand.size()) >= k || ring > loc.nx) break;
      ++ring;
    }
    const int kk = std::min<int>(k, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + kk, cand.end());
    for (int t = 0; t < kk; ++t) s.neighbors[i].push_back(cand[t].second);
    if (kk > 0) spacing_sum += std::sqrt(cand[0].first);
  }
  s.mean_spacing = spacing_sum / n;

  // Symmetrize.
  for (int i = 0; i < n; ++i)
    for (int j : s.neighbors[i])
      if (std::find(s.neighbors[j].begin(), s.neighbors[j].end(), i) ==
          s.neighbors[j].end())
        s.neighbors[j].push_back(i);
  for (auto& nb : s.neighbors) std::sort(nb.begin(), nb.end());
  return s;
}

int SurfaceSampling::nearest_sample(const Vec3& x) const {
  const auto& loc = locator;
  if (loc.cells.empty()) {
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (int i = 0; i < size(); ++i) {
      const double d = (points[i] - x).norm2();
      if (d < bd) { bd = d; best = i; }
    }
    return best;
  }
  int cx = std::clamp(static_cast<int>((x.x - loc.lo.x) / loc.cell), 0, loc.nx - 1);
  int cy = std::clamp(static_cast<int>((x.y - loc.lo.y) / loc.cell), 0, loc.ny - 1);
  int cz = std::clamp(static_cast<int>((x.z - loc.lo.z) / loc.cell), 0, loc.nz - 1);
  int best = -1;
  double bd = std::numeric_limits<double>::infinity();
  for (int ring = 1; ring <= std::max({loc.nx, loc.ny, loc.nz}); ++ring) {
    for (int ix = std::max(0, cx - ring); ix <= std::min(loc.nx - 1, cx + ring); ++ix)
      for (int iy = std::max(0, cy - ring); iy <= std::min(loc.ny - 1, cy + ring); ++iy)
        for (int iz = std::max(0, cz - ring); iz <= std::min(loc.nz - 1, cz + ring); ++iz)
          for (int j : loc.cells[(static_cast<size_t>(ix) * loc.ny + iy) * loc.nz + iz]) {
            const double d = (points[j] - x).norm2();
            if (d < bd) { bd = d; best = j; }
          }
    // One extra ring after the first hit guards against cell-boundary misses.
    if (best >= 0 && std::sqrt(bd) <= (ring - 1) * loc.cell) break;
  }
  return best;
}

InterfaceSet extract_interface(const SurfaceSampling& sampling,
                               const std::vector<int>& labels) {
  InterfaceSet out;
  for (int i = 0; i < sampling.size(); ++i)
    for (int j : sampling.neighbors[i])
      if (i < j && labels[i] != labels[j]) {
        Vec3 mid = (sampling.points[i] + sampling.points[j]) * 0.5;
        out.edges.push_back({i, j, sampling.surface.closest_point(mid)});
      }
  return out;
}

InterfaceSet extract_interface(const SurfaceSampling& sampling,
                               const std::vector<int>& labels, int phase) {
  InterfaceSet out;
  for (int i = 0; i < sampling.size(); ++i)
    for (int j : sampling.neighbors[i])
      if (i < j && labels[i] != labels[j] &&
          (labels[i] == phase || labels[j] == phase)) {
        Vec3 mid = (sampling.points[i] + sampling.points[j]) * 0.5;
        out.edges.push_back({i, j, sampling.surface.closest_point(mid)});
      }
  return out;
}

void refine_interface(const SurfaceSampling& sampling,
                      const std::vector<double>& values, InterfaceSet& iface) {
  if (values.size() != static_cast<size_t>(sampling.size()))
    throw std::invalid_argument("refine_interface: value count mismatch");
  for (auto& e : iface.edges) {
    const double va = values[e.a], vb = values[e.b];
    if ((va > 0.0) == (vb > 0.0)) continue;
    const double t = va / (va - vb);
    const Vec3& pa = sampling.points[e.a];
    const Vec3& pb = sampling.points[e.b];
    e.point = sampling.surface.closest_point(pa + (pb - pa) * t);
  }
}

SignedDistanceField::SignedDistanceField(const SurfaceSampling& sampling,
                                         const std::vector<int>& labels,
                                         int phase)
    : SignedDistanceField(sampling, labels, phase,
                          extract_interface(sampling, labels, phase)) {}

SignedDistanceField::SignedDistanceField(const SurfaceSampling& sampling,
                                         const std::vector<int>& labels,
                                         int phase, const InterfaceSet& interface)
    : sampling_(&sampling), labels_(&labels), phase_(phase) {
  for (int l : labels)
    if (l == phase) { phase_present_ = true; break; }
  points_.reserve(interface.edges.size());
  for (const auto& e : interface.edges)
    if (labels[e.a] == phase || labels[e.b] == phase)
      points_.push_back(e.point);
  build_segments();
}

void SignedDistanceField::build_segments() {
  const int M = static_cast<int>(points_.size());
  segments_.clear();
  if (M == 0) return;
  if (M == 1) {
    segments_.push_back({points_[0], points_[0]});
    return;
  }
  // Link each point to its nearest neighbor and to the nearest point on the
  // opposite side along the curve; chords much longer than the typical
  // spacing would cut across gaps and junctions, so they are dropped.
  std::vector<int> nn1(M, -1), nn2(M, -1);
  std::vector<double> d1(M, std::numeric_limits<double>::infinity());
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < M; ++j) {
      if (j == i) continue;
      const double d = (points_[j] - points_[i]).norm2();
      if (d < d1[i]) {
        d1[i] = d;
        nn1[i] = j;
      }
    }
    double d2 = std::numeric_limits<double>::infinity();
    const Vec3 dir = points_[nn1[i]] - points_[i];
    for (int j = 0; j < M; ++j) {
      if (j == i || j == nn1[i]) continue;
      if ((points_[j] - points_[i]).dot(dir) > 0.0) continue;
      const double d = (points_[j] - points_[i]).norm2();
      if (d < d2) {
        d2 = d;
        nn2[i] = j;
      }
    }
  }
  std::vector<double> spacing(d1);
  std::nth_element(spacing.begin(), spacing.begin() + M / 2, spacing.end());
  const double cap2 = 16.0 * spacing[M / 2];  // chord length <= 4x median
  std::vector<std::pair<int, int>> links;
  for (int i = 0; i < M; ++i) {
    bool linked = false;
    for (int j : {nn1[i], nn2[i]}) {
      if (j < 0 || (points_[j] - points_[i]).norm2() > cap2) continue;
      links.emplace_back(std::min(i, j), std::max(i, j));
      linked = true;
    }
    if (!linked) segments_.push_back({points_[i], points_[i]});
  }
  std::sort(links.begin(), links.end());
  links.erase(std::unique(links.begin(), links.end()), links.end());
  for (auto [i, j] : links) segments_.push_back({points_[i], points_[j]});
}

double SignedDistanceField::signed_at(const Vec3& s) const {
  const int ns = sampling_->nearest_sample(s);
  const bool inside = (*labels_)[ns] == phase_;
  if (points_.empty()) {
    const double inf = std::numeric_limits<double>::infinity();
    return inside ? inf : -inf;
  }
  double d = std::numeric_limits<double>::infinity();
  for (const Segment& seg : segments_) {
    const Vec3 ab = seg.b - seg.a;
    const double len2 = ab.norm2();
    const double t =
        len2 > 0.0 ? std::clamp((s - seg.a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    const Vec3 q = sampling_->surface.closest_point(seg.a + ab * t);
    d = std::min(d, sampling_->surface.geodesic_distance(s, q));
  }
  return inside ? d : -d;
}

std::vector<double> signed_geodesic_distance(const SurfaceSampling& sampling,
                                             const std::vector<int>& labels,
                                             int phase) {
  if (labels.size() != static_cast<size_t>(sampling.size()))
    throw std::invalid_argument("signed_geodesic_distance: label count mismatch");
  SignedDistanceField field(sampling, labels, phase);
  if (!field.has_interface()) {
    throw VanishedInterface(
        "signed_geodesic_distance: phase " + std::to_string(phase) +
        (field.phase_present() ? " covers the whole surface" : " is absent"));
  }
  std::vector<double> out(sampling.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < sampling.size(); ++i)
    out[i] = field.signed_at(sampling.points[i]);
  return out;
}

}  // namespace sf
