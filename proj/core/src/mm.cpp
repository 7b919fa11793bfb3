#include "surfaceflow/mm.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace sf {

namespace {

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

MinimizeResult minimize(const ObjectiveFn& objective, std::span<const double> x0,
                        const MinimizeOptions& opts) {
  if (opts.memory < 1 || opts.max_iters < 0 || opts.g_tol <= 0.0)
    throw std::invalid_argument("minimize: bad options");
  const size_t n = x0.size();

  MinimizeResult res;
  res.x.assign(x0.begin(), x0.end());
  std::vector<double> g(n), x_new(n), g_new(n), d(n);
  double f = objective(res.x, g);
  res.grad_norm = max_abs(g);
  if (res.grad_norm <= opts.g_tol) {
    res.converged = true;
    return res;
  }

  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> hist;
  std::vector<double> alpha_buf;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    // Two-loop recursion for d = -H g.
    d.assign(g.begin(), g.end());
    alpha_buf.assign(hist.size(), 0.0);
    for (size_t t = hist.size(); t-- > 0;) {
      const Pair& p = hist[t];
      const double a = p.rho * dot(p.s, d);
      alpha_buf[t] = a;
      for (size_t i = 0; i < n; ++i) d[i] -= a * p.y[i];
    }
    if (!hist.empty()) {
      const Pair& last = hist.back();
      const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (double& v : d) v *= gamma;
    }
    for (size_t t = 0; t < hist.size(); ++t) {
      const Pair& p = hist[t];
      const double b = p.rho * dot(p.y, d);
      for (size_t i = 0; i < n; ++i) d[i] += (alpha_buf[t] - b) * p.s[i];
    }
    for (double& v : d) v = -v;

    double gd = dot(g, d);
    if (!(gd < 0.0)) {  // not a descent direction; fall back to steepest
      d.assign(g.begin(), g.end());
      for (double& v : d) v = -v;
      gd = -dot(g, g);
      hist.clear();
    }

    // Armijo backtracking.
    double step = hist.empty() ? 1.0 / std::max(1.0, std::sqrt(dot(g, g))) : 1.0;
    constexpr double c1 = 1e-4;
    bool accepted = false;
    double f_new = f;
    for (int ls = 0; ls < 60; ++ls) {
      for (size_t i = 0; i < n; ++i) x_new[i] = res.x[i] + step * d[i];
      f_new = objective(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= f + c1 * step * gd) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++res.iterations;
    if (!accepted) {
      res.line_search_failed = true;
      break;
    }

    Pair p;
    p.s.resize(n);
    p.y.resize(n);
    for (size_t i = 0; i < n; ++i) {
      p.s[i] = x_new[i] - res.x[i];
      p.y[i] = g_new[i] - g[i];
    }
    const double sy = dot(p.s, p.y);
    if (sy > 1e-14 * dot(p.y, p.y)) {  // curvature guard
      p.rho = 1.0 / sy;
      hist.push_back(std::move(p));
      if (static_cast<int>(hist.size()) > opts.memory) hist.pop_front();
    }

    res.x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    res.grad_norm = max_abs(g);
    if (res.grad_norm <= opts.g_tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

MMObjective MMObjective::heat(const BandedGrid& band, const GridField& u_prev,
                              const HeatMMParams& params) {
  if (params.h <= 0.0) throw std::invalid_argument("heat objective: h must be > 0");
  if (params.alpha < 0.0)
    throw std::invalid_argument("heat objective: alpha must be >= 0");
  MMObjective obj;
  obj.band_ = &band;
  obj.target_ = u_prev;
  obj.base_ = u_prev;
  obj.fidelity_h_ = params.h;
  obj.alpha_ = params.alpha;
  return obj;
}

MMObjective MMObjective::wave(const BandedGrid& band, const GridField& u_prev,
                              const GridField& u_prev2,
                              const WaveMMParams& params) {
  if (params.h <= 0.0) throw std::invalid_argument("wave objective: h must be > 0");
  if (params.alpha < 0.0)
    throw std::invalid_argument("wave objective: alpha must be >= 0");
  if (u_prev.m != u_prev2.m || u_prev.v.size() != u_prev2.v.size())
    throw std::invalid_argument("wave objective: history shape mismatch");
  MMObjective obj;
  obj.band_ = &band;
  obj.target_ = u_prev;
  for (size_t i = 0; i < obj.target_.v.size(); ++i)
    obj.target_.v[i] = 2.0 * u_prev.v[i] - u_prev2.v[i];
  obj.base_ = u_prev;
  obj.fidelity_h_ = params.h * params.h;
  obj.alpha_ = params.alpha;
  return obj;
}

std::vector<double> MMObjective::pack(const GridField& field) const {
  const auto& interior = band_->interior();
  std::vector<double> x(dim());
  for (size_t t = 0; t < interior.size(); ++t)
    for (int c = 0; c < target_.m; ++c)
      x[t * target_.m + c] = field.at(interior[t], c);
  return x;
}

GridField MMObjective::unpack(std::span<const double> x) const {
  GridField w = base_;
  const auto& interior = band_->interior();
  for (size_t t = 0; t < interior.size(); ++t)
    for (int c = 0; c < target_.m; ++c)
      w.at(interior[t], c) = x[t * target_.m + c];
  return w;
}

double MMObjective::eval(std::span<const double> x, std::span<double> grad) const {
  const BandedGrid& band = *band_;
  const auto& interior = band.interior();
  const int m = target_.m;
  const double dx = band.spec.dx;
  const double cell = dx * dx * dx;
  const double inv2dx = 1.0 / (2.0 * dx);

  GridField w = unpack(x);
  GridField gfield(band, m);  // gradient rows, interior only meaningful

  // Per-point value contributions, summed pairwise for determinism.
  std::vector<double> contrib(interior.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (size_t t = 0; t < interior.size(); ++t) {
    const int q = interior[t];
    double val = 0.0;
    for (int c = 0; c < m; ++c) {
      const double r = w.at(q, c) - target_.at(q, c);
      val += r * r / (2.0 * fidelity_h_);
      double g = r / fidelity_h_;
      for (int axis = 0; axis < 3; ++axis) {
        const int qm = band.neighbor(q, axis, -1);
        const int qp = band.neighbor(q, axis, +1);
        const double D = (w.at(qp, c) - w.at(qm, c)) * inv2dx;
        val += 0.5 * alpha_ * D * D;
        // dE/dw_q collects the two neighboring difference quotients that
        // reference w_q, provided their center is an interior point.
        if (qm >= 0 && !band.is_boundary[qm]) {
          const int qmm = band.neighbor(qm, axis, -1);
          g += alpha_ * (w.at(q, c) - w.at(qmm, c)) * inv2dx * inv2dx;
        }
        if (qp >= 0 && !band.is_boundary[qp]) {
          const int qpp = band.neighbor(qp, axis, +1);
          g -= alpha_ * (w.at(qpp, c) - w.at(q, c)) * inv2dx * inv2dx;
        }
      }
      gfield.at(q, c) = cell * g;
    }
    contrib[t] = cell * val;
  }

  double value = pairwise_sum(contrib);
  if (extra_) value += extra_(w, gfield);

  for (size_t t = 0; t < interior.size(); ++t)
    for (int c = 0; c < m; ++c) grad[t * m + c] = gfield.at(interior[t], c);
  return value;
}

ObjectiveFn MMObjective::function() const {
  return [this](std::span<const double> x, std::span<double> g) {
    return eval(x, g);
  };
}

GridField explicit_heat_step(const GridField& u_extended, const BandedGrid& band,
                             double alpha, double h, int degree) {
  GridField lap = discrete_laplacian(u_extended, band);
  GridField v = u_extended;
  const auto& interior = band.interior();
  for (size_t t = 0; t < interior.size(); ++t)
    for (int c = 0; c < v.m; ++c)
      v.at(interior[t], c) += h * alpha * lap.at(interior[t], c);
  return extend_via_cp(band, v, degree);
}

GridField explicit_wave_step(const GridField& u_extended,
                             const GridField& u_prev_extended,
                             const BandedGrid& band, double alpha, double h,
                             int degree) {
  GridField lap = discrete_laplacian(u_extended, band);
  GridField v(band, u_extended.m);
  const auto& interior = band.interior();
  for (size_t t = 0; t < interior.size(); ++t) {
    const int q = interior[t];
    for (int c = 0; c < v.m; ++c)
      v.at(q, c) = 2.0 * u_extended.at(q, c) - u_prev_extended.at(q, c) +
                   h * h * alpha * lap.at(q, c);
  }
  return extend_via_cp(band, v, degree);
}

GridField mm_heat_solve(const BandedGrid& band,
                        const std::function<double(const Vec3&)>& f,
                        double alpha, double h, int n_steps, int degree,
                        const MinimizeOptions& opts, const StepObserver& observer) {
  GridField u = extend_from_surface(band, f);
  if (observer) observer(0, u);
  for (int n = 1; n <= n_steps; ++n) {
    MMObjective obj = MMObjective::heat(band, u, {h, alpha});
    MinimizeResult res = minimize(obj.function(), obj.pack(u), opts);
    u = extend_via_cp(band, obj.unpack(res.x), degree);
    if (observer) observer(n, u);
  }
  return u;
}

GridField mm_wave_solve(const BandedGrid& band,
                        const std::function<double(const Vec3&)>& f,
                        const std::function<double(const Vec3&)>& v0,
                        double alpha, double h, int n_steps, int degree,
                        const MinimizeOptions& opts, const StepObserver& observer) {
  GridField u = extend_from_surface(band, f);
  GridField u_prev = extend_from_surface(
      band, [&](const Vec3& p) { return f(p) - h * v0(p); });
  if (observer) observer(0, u);
  for (int n = 1; n <= n_steps; ++n) {
    MMObjective obj = MMObjective::wave(band, u, u_prev, {h, alpha});
    MinimizeResult res = minimize(obj.function(), obj.pack(u), opts);
    u_prev = u;
    u = extend_via_cp(band, obj.unpack(res.x), degree);
    if (observer) observer(n, u);
  }
  return u;
}

}  // namespace sf
