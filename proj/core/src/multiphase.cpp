#include "surfaceflow/multiphase.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace sf {

double SimplexFrame::dot_with(int i, std::span<const double> w) const {
  double acc = 0.0;
  for (int c = 0; c < dim(); ++c) acc += p[i][c] * w[c];
  return acc;
}

SimplexFrame simplex_vectors(int K) {
  if (K < 2 || K > 8)
    throw std::invalid_argument("simplex_vectors: K must be in [2, 8]");
  SimplexFrame frame;
  frame.K = K;
  frame.p.assign(K, std::vector<double>(K - 1, 0.0));
  // Coordinates of sqrt(K/(K-1)) (e_i - 1/K) in the Helmert basis of the
  // sum-zero hyperplane; the mean part drops out.
  const double scale = std::sqrt(static_cast<double>(K) / (K - 1));
  for (int j = 1; j < K; ++j) {
    const double norm = 1.0 / std::sqrt(static_cast<double>(j) * (j + 1));
    for (int i = 0; i < j; ++i) frame.p[i][j - 1] = scale * norm;
    frame.p[j][j - 1] = -scale * norm * j;
  }
  return frame;
}

double smoothed_heaviside(double u, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("smoothed_heaviside: eps must be > 0");
  if (u > eps) return 1.0;
  if (u < -eps) return 0.0;
  return 0.5 + u / (2.0 * eps) +
         std::sin(std::numbers::pi * u / eps) / (2.0 * std::numbers::pi);
}

double smoothed_heaviside_deriv(double u, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("smoothed_heaviside: eps must be > 0");
  if (u > eps || u < -eps) return 0.0;
  return (1.0 + std::cos(std::numbers::pi * u / eps)) / (2.0 * eps);
}

int argmax_phase(std::span<const double> w, const SimplexFrame& frame) {
  int best = 0;
  double bv = frame.dot_with(0, w);
  for (int i = 1; i < frame.K; ++i) {
    const double v = frame.dot_with(i, w);
    if (v > bv) {
      bv = v;
      best = i;
    }
  }
  return best;
}

SdvfEvaluator::SdvfEvaluator(const SurfaceSampling& sampling,
                             std::vector<int> labels, int K, double eps)
    : sampling_(&sampling),
      labels_(std::move(labels)),
      frame_(simplex_vectors(K)),
      eps_(eps) {
  init(nullptr);
}

SdvfEvaluator::SdvfEvaluator(const SurfaceSampling& sampling,
                             std::vector<int> labels, int K, double eps,
                             const InterfaceSet& interface)
    : sampling_(&sampling),
      labels_(std::move(labels)),
      frame_(simplex_vectors(K)),
      eps_(eps) {
  init(&interface);
}

void SdvfEvaluator::init(const InterfaceSet* interface) {
  const int K = frame_.K;
  if (eps_ <= 0.0) throw std::invalid_argument("SdvfEvaluator: eps must be > 0");
  if (labels_.size() != static_cast<size_t>(sampling_->size()))
    throw std::invalid_argument("SdvfEvaluator: label count mismatch");
  for (int l : labels_)
    if (l < 0 || l >= K)
      throw std::invalid_argument("SdvfEvaluator: label out of range");
  // Collars narrower than a few sample spacings make the profile a
  // near-jump the sampling cannot resolve; flag once instead of failing.
  static bool warned = false;
  const double ms = sampling_->mean_spacing;
  if (!warned && ms > 0.0 && eps_ < 3.0 * ms) {
    std::fprintf(stderr,
                 "warning: profile collar %.4g below 3x mean sample "
                 "spacing %.4g\n",
                 eps_, ms);
    warned = true;
  }
  fields_.reserve(K);
  for (int i = 0; i < K; ++i)
    fields_.push_back(interface
                          ? std::make_unique<SignedDistanceField>(
                                *sampling_, labels_, i, *interface)
                          : std::make_unique<SignedDistanceField>(*sampling_,
                                                                  labels_, i));
}

double SdvfEvaluator::phase_distance(int phase, const Vec3& s) const {
  return fields_[phase]->signed_at(s);
}

void SdvfEvaluator::eval(const Vec3& s, std::span<double> out) const {
  for (int c = 0; c < dim(); ++c) out[c] = 0.0;
  for (int i = 0; i < frame_.K; ++i) {
    const double d = fields_[i]->signed_at(s);
    double coef;
    if (d >= eps_ / 2.0) coef = 1.0;
    else if (d <= -eps_ / 2.0) coef = 0.0;
    else coef = (eps_ / 2.0 + d) / eps_;
    if (coef != 0.0)
      for (int c = 0; c < dim(); ++c) out[c] += coef * frame_.p[i][c];
  }
}

GridField extend_sdvf(const BandedGrid& band, const SdvfEvaluator& sdvf) {
  return extend_from_surface_vec(
      band, sdvf.dim(),
      [&](const Vec3& s, std::span<double> out) { sdvf.eval(s, out); });
}

std::vector<double> profile_at_samples(const GridField& w, const BandedGrid& band,
                                       const SurfaceSampling& sampling, int degree) {
  std::vector<double> out(static_cast<size_t>(sampling.size()) * w.m);
  std::exception_ptr err;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < sampling.size(); ++i) {
    try {
      interpolate_all(w, band, sampling.points[i], degree,
                      std::span<double>(&out[static_cast<size_t>(i) * w.m], w.m));
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

std::vector<int> field_labels_at_samples(const GridField& w, const BandedGrid& band,
                                         const SurfaceSampling& sampling,
                                         const SimplexFrame& frame, int degree) {
  if (w.m != frame.dim())
    throw std::invalid_argument("field_labels_at_samples: component mismatch");
  const std::vector<double> prof = profile_at_samples(w, band, sampling, degree);
  std::vector<int> labels(sampling.size());
  for (int i = 0; i < sampling.size(); ++i)
    labels[i] = argmax_phase(
        std::span<const double>(&prof[static_cast<size_t>(i) * w.m], w.m), frame);
  return labels;
}

void refine_interface(const SurfaceSampling& sampling,
                      const std::vector<int>& labels,
                      const std::vector<double>& profile,
                      const SimplexFrame& frame, InterfaceSet& iface) {
  const int m = frame.dim();
  if (profile.size() != static_cast<size_t>(sampling.size()) * m)
    throw std::invalid_argument("refine_interface: profile size mismatch");
  for (auto& e : iface.edges) {
    const int i = labels[e.a], j = labels[e.b];
    // Margin of phase i over phase j: >= 0 at a, <= 0 at b by the argmax
    // labeling; degenerate (equal) margins keep the midpoint.
    double ga = 0.0, gb = 0.0;
    for (int c = 0; c < m; ++c) {
      const double d = frame.p[i][c] - frame.p[j][c];
      ga += d * profile[static_cast<size_t>(e.a) * m + c];
      gb += d * profile[static_cast<size_t>(e.b) * m + c];
    }
    if (!(ga - gb > 0.0)) continue;
    const double t = std::clamp(ga / (ga - gb), 0.0, 1.0);
    const Vec3& pa = sampling.points[e.a];
    const Vec3& pb = sampling.points[e.b];
    e.point = sampling.surface.closest_point(pa + (pb - pa) * t);
  }
}

namespace {

std::vector<double> heaviside_volumes(
    const BandedGrid& band,
    const std::vector<std::unique_ptr<SignedDistanceField>>& fields,
    double eps) {
  const auto& interior = band.interior();
  const double cell = band.spec.dx * band.spec.dx * band.spec.dx;
  std::vector<double> volumes(fields.size(), 0.0);
  std::vector<double> contrib(interior.size());
  for (size_t i = 0; i < fields.size(); ++i) {
#pragma omp parallel for schedule(static)
    for (size_t t = 0; t < interior.size(); ++t) {
      const double d = fields[i]->signed_at(band.cp[interior[t]]);
      // +-inf from interface-free phases collapses to the sharp indicator.
      contrib[t] = std::isinf(d) ? (d > 0.0 ? 1.0 : 0.0)
                                 : smoothed_heaviside(d, eps);
    }
    volumes[i] = cell * pairwise_sum(contrib);
  }
  return volumes;
}

}  // namespace

std::vector<double> phase_volumes(const BandedGrid& band,
                                  const SurfaceSampling& sampling,
                                  const std::vector<int>& labels, int K,
                                  double eps) {
  if (eps <= 0.0) throw std::invalid_argument("phase_volumes: eps must be > 0");
  std::vector<std::unique_ptr<SignedDistanceField>> fields;
  fields.reserve(K);
  for (int i = 0; i < K; ++i)
    fields.push_back(std::make_unique<SignedDistanceField>(sampling, labels, i));
  return heaviside_volumes(band, fields, eps);
}

std::vector<double> phase_volumes(const BandedGrid& band,
                                  const SurfaceSampling& sampling,
                                  const std::vector<int>& labels, int K,
                                  double eps, const InterfaceSet& interface) {
  if (eps <= 0.0) throw std::invalid_argument("phase_volumes: eps must be > 0");
  std::vector<std::unique_ptr<SignedDistanceField>> fields;
  fields.reserve(K);
  for (int i = 0; i < K; ++i)
    fields.push_back(
        std::make_unique<SignedDistanceField>(sampling, labels, i, interface));
  return heaviside_volumes(band, fields, eps);
}

std::vector<double> phase_volumes(const GridField& w, const BandedGrid& band,
                                  const SurfaceSampling& sampling,
                                  const SimplexFrame& frame, double eps,
                                  int degree) {
  const std::vector<int> labels =
      field_labels_at_samples(w, band, sampling, frame, degree);
  return phase_volumes(band, sampling, labels, frame.K, eps);
}

VolumePenalty::VolumePenalty(const BandedGrid& band, SimplexFrame frame,
                             std::vector<double> targets, double rho, double eps)
    : band_(&band),
      frame_(std::move(frame)),
      targets_(std::move(targets)),
      rho_(rho),
      margin_eps_(eps) {
  if (rho < 0.0) throw std::invalid_argument("VolumePenalty: rho must be >= 0");
  if (eps <= 0.0) throw std::invalid_argument("VolumePenalty: eps must be > 0");
  if (targets_.size() != static_cast<size_t>(frame_.K))
    throw std::invalid_argument("VolumePenalty: one target per phase required");
}

namespace {

// Margin of each phase against the best other phase: needs the top two
// dot products; ties resolve toward the lowest phase id.
struct TopTwo {
  int i1 = 0, i2 = -1;
  double v1 = 0.0, v2 = 0.0;
};

TopTwo top_two(const SimplexFrame& frame, std::span<const double> w) {
  TopTwo r;
  r.v1 = frame.dot_with(0, w);
  for (int i = 1; i < frame.K; ++i) {
    const double v = frame.dot_with(i, w);
    if (v > r.v1) {
      r.v2 = r.v1;
      r.i2 = r.i1;
      r.v1 = v;
      r.i1 = i;
    } else if (r.i2 < 0 || v > r.v2) {
      r.v2 = v;
      r.i2 = i;
    }
  }
  return r;
}

}  // namespace

std::vector<double> VolumePenalty::surrogate_volumes(const GridField& w) const {
  const auto& interior = band_->interior();
  const int K = frame_.K;
  const double cell = band_->spec.dx * band_->spec.dx * band_->spec.dx;
  std::vector<double> contrib(interior.size() * K);
#pragma omp parallel for schedule(static)
  for (size_t t = 0; t < interior.size(); ++t) {
    const int q = interior[t];
    std::span<const double> wq(&w.v[static_cast<size_t>(q) * w.m], w.m);
    const TopTwo tt = top_two(frame_, wq);
    for (int i = 0; i < K; ++i) {
      const double other = (i == tt.i1) ? tt.v2 : tt.v1;
      const double margin = frame_.dot_with(i, wq) - other;
      contrib[t * K + i] = smoothed_heaviside(margin, margin_eps_);
    }
  }
  std::vector<double> volumes(K);
  std::vector<double> col(interior.size());
  for (int i = 0; i < K; ++i) {
    for (size_t t = 0; t < interior.size(); ++t) col[t] = contrib[t * K + i];
    volumes[i] = cell * pairwise_sum(col);
  }
  return volumes;
}

double VolumePenalty::value_and_grad(const GridField& w, GridField& grad) const {
  if (rho_ == 0.0) return 0.0;
  const auto& interior = band_->interior();
  const int K = frame_.K;
  const int m = frame_.dim();
  const double cell = band_->spec.dx * band_->spec.dx * band_->spec.dx;

  const std::vector<double> vol = surrogate_volumes(w);
  double value = 0.0;
  std::vector<double> coef(K);
  for (int i = 0; i < K; ++i) {
    const double diff = vol[i] - targets_[i];
    value += rho_ * diff * diff;
    coef[i] = 2.0 * rho_ * diff * cell;
  }

#pragma omp parallel for schedule(static)
  for (size_t t = 0; t < interior.size(); ++t) {
    const int q = interior[t];
    std::span<const double> wq(&w.v[static_cast<size_t>(q) * w.m], w.m);
    const TopTwo tt = top_two(frame_, wq);
    for (int i = 0; i < K; ++i) {
      const int j = (i == tt.i1) ? tt.i2 : tt.i1;
      const double other = (i == tt.i1) ? tt.v2 : tt.v1;
      const double margin = frame_.dot_with(i, wq) - other;
      const double dh = smoothed_heaviside_deriv(margin, margin_eps_);
      if (dh == 0.0) continue;
      const double c = coef[i] * dh;
      for (int a = 0; a < m; ++a)
        grad.at(q, a) += c * (frame_.p[i][a] - frame_.p[j][a]);
    }
  }
  return value;
}

}  // namespace sf
