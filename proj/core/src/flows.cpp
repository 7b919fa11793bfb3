#include "surfaceflow/flows.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace sf {

void FlowConfig::validate() const {
  if (alpha <= 0.0) throw std::invalid_argument("FlowConfig: alpha must be > 0");
  if (h <= 0.0) throw std::invalid_argument("FlowConfig: h must be > 0");
  if (substeps < 1) throw std::invalid_argument("FlowConfig: substeps must be >= 1");
  if (steps < 0) throw std::invalid_argument("FlowConfig: steps must be >= 0");
  if (degree < 1 || degree > 3)
    throw std::invalid_argument("FlowConfig: degree must be 1, 2 or 3");
  if (eps <= 0.0) throw std::invalid_argument("FlowConfig: eps must be > 0");
  if (rho < 0.0) throw std::invalid_argument("FlowConfig: rho must be >= 0");
  if (sdvf_collar < 0.0)
    throw std::invalid_argument("FlowConfig: sdvf_collar must be >= 0");
}

std::vector<int> threshold_sign_labels(const GridField& u, const BandedGrid& band,
                                       const SurfaceSampling& sampling, int degree) {
  std::vector<int> labels(sampling.size());
  std::exception_ptr err;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < sampling.size(); ++i) {
    try {
      labels[i] =
          interpolate(u, band, sampling.points[i], degree) > 0.0 ? 1 : 0;
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return labels;
}

namespace {

void check_two_phase(const std::vector<int>& labels) {
  for (int l : labels)
    if (l != 0 && l != 1)
      throw std::invalid_argument("two-phase flow: labels must be 0 or 1");
}

// Signed geodesic distance to the phase-1 boundary, extended to the band.
// Throws VanishedInterface once a phase disappears.
GridField extend_signed_distance(const BandedGrid& band,
                                 const SurfaceSampling& sampling,
                                 const std::vector<int>& labels,
                                 const InterfaceSet& interface) {
  SignedDistanceField sdf(sampling, labels, 1, interface);
  if (!sdf.has_interface()) {
    throw VanishedInterface(std::string("flow interface vanished: phase 1 ") +
                            (sdf.phase_present() ? "covers the whole surface"
                                                 : "is absent"));
  }
  return extend_from_surface(band,
                             [&](const Vec3& p) { return sdf.signed_at(p); });
}

// Labels plus the interface refined to the field's zero crossings.
struct ThresholdedState {
  std::vector<int> labels;
  InterfaceSet interface;
};

ThresholdedState threshold_two_phase(const GridField& u, const BandedGrid& band,
                                     const SurfaceSampling& sampling, int degree) {
  std::vector<double> vals(sampling.size());
  std::exception_ptr err;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < sampling.size(); ++i) {
    try {
      vals[i] = interpolate(u, band, sampling.points[i], degree);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  ThresholdedState st;
  st.labels.resize(sampling.size());
  for (int i = 0; i < sampling.size(); ++i) st.labels[i] = vals[i] > 0.0 ? 1 : 0;
  st.interface = extract_interface(sampling, st.labels);
  refine_interface(sampling, vals, st.interface);
  return st;
}

ThresholdedState threshold_multiphase(const GridField& w, const BandedGrid& band,
                                      const SurfaceSampling& sampling,
                                      const SimplexFrame& frame, int degree) {
  const std::vector<double> prof = profile_at_samples(w, band, sampling, degree);
  ThresholdedState st;
  st.labels.resize(sampling.size());
  for (int i = 0; i < sampling.size(); ++i)
    st.labels[i] = argmax_phase(
        std::span<const double>(&prof[static_cast<size_t>(i) * w.m], w.m), frame);
  st.interface = extract_interface(sampling, st.labels);
  refine_interface(sampling, st.labels, prof, frame, st.interface);
  return st;
}

void run_minimize(MMObjective& obj, const GridField& warm_start,
                  const BandedGrid& band, const FlowConfig& config,
                  GridField& out, FlowResult& result) {
  MinimizeResult res =
      minimize(obj.function(), obj.pack(warm_start), config.minimize);
  result.total_minimize_iterations += res.iterations;
  if (!res.converged) result.all_converged = false;
  out = extend_via_cp(band, obj.unpack(res.x), config.degree);
}

void record_step(FlowResult& result, const BandedGrid& band,
                 const SurfaceSampling& sampling, const std::vector<int>& labels,
                 const InterfaceSet& interface, int K, const FlowConfig& config) {
  std::vector<int> counts(K, 0);
  for (int l : labels) ++counts[l];
  result.sample_counts.push_back(std::move(counts));
  if (config.rho > 0.0)
    result.volume_history.push_back(
        phase_volumes(band, sampling, labels, K, config.eps, interface));
}

void seed_history(FlowResult& result, const SurfaceSampling& sampling,
                  const std::vector<int>& initial_labels,
                  const InterfaceSet* initial_interface) {
  result.labels_history.push_back(initial_labels);
  result.interfaces_history.push_back(
      initial_interface ? *initial_interface
                        : extract_interface(sampling, initial_labels));
}

}  // namespace

FlowResult mbo_two_phase(const BandedGrid& band, const SurfaceSampling& sampling,
                         const std::vector<int>& initial_labels,
                         const FlowConfig& config,
                         const InterfaceSet* initial_interface) {
  config.validate();
  check_two_phase(initial_labels);
  FlowResult result;
  seed_history(result, sampling, initial_labels, initial_interface);
  record_step(result, band, sampling, initial_labels,
              result.interfaces_history.back(), 2, config);
  for (int step = 0; step < config.steps; ++step) {
    GridField u;
    try {
      u = extend_signed_distance(band, sampling, result.labels_history.back(),
                                 result.interfaces_history.back());
    } catch (const VanishedInterface&) {
      result.interface_vanished = true;
      break;
    }
    for (int k = 0; k < config.substeps; ++k) {
      MMObjective obj = MMObjective::heat(band, u, {config.h, config.alpha});
      run_minimize(obj, u, band, config, u, result);
    }
    ThresholdedState st = threshold_two_phase(u, band, sampling, config.degree);
    result.labels_history.push_back(std::move(st.labels));
    result.interfaces_history.push_back(std::move(st.interface));
    record_step(result, band, sampling, result.labels_history.back(),
                result.interfaces_history.back(), 2, config);
  }
  return result;
}

FlowResult hmbo_two_phase(const BandedGrid& band, const SurfaceSampling& sampling,
                          const std::vector<int>& initial_labels,
                          const FlowConfig& config,
                          const std::vector<int>* previous_labels,
                          const InterfaceSet* initial_interface,
                          const InterfaceSet* previous_interface) {
  config.validate();
  check_two_phase(initial_labels);
  std::vector<int> prev =
      previous_labels ? *previous_labels : initial_labels;
  check_two_phase(prev);

  FlowResult result;
  seed_history(result, sampling, initial_labels, initial_interface);
  InterfaceSet prev_iface =
      previous_interface
          ? *previous_interface
          : (previous_labels ? extract_interface(sampling, prev)
                             : result.interfaces_history.back());
  record_step(result, band, sampling, initial_labels,
              result.interfaces_history.back(), 2, config);
  for (int step = 0; step < config.steps; ++step) {
    const std::vector<int>& cur = result.labels_history.back();
    GridField d_cur, d_prev;
    try {
      d_cur = extend_signed_distance(band, sampling, cur,
                                     result.interfaces_history.back());
      d_prev = extend_signed_distance(band, sampling, prev, prev_iface);
    } catch (const VanishedInterface&) {
      result.interface_vanished = true;
      break;
    }
    // Wave profile restarts at 2 d_n - d_{n-1} with zero velocity.
    GridField u = d_cur;
    for (size_t i = 0; i < u.v.size(); ++i)
      u.v[i] = 2.0 * d_cur.v[i] - d_prev.v[i];
    GridField u_before = u;
    for (int k = 0; k < config.substeps; ++k) {
      MMObjective obj =
          MMObjective::wave(band, u, u_before, {config.h, config.alpha});
      GridField u_next;
      run_minimize(obj, u, band, config, u_next, result);
      u_before = std::move(u);
      u = std::move(u_next);
    }
    prev = cur;
    prev_iface = result.interfaces_history.back();
    ThresholdedState st = threshold_two_phase(u, band, sampling, config.degree);
    result.labels_history.push_back(std::move(st.labels));
    result.interfaces_history.push_back(std::move(st.interface));
    record_step(result, band, sampling, result.labels_history.back(),
                result.interfaces_history.back(), 2, config);
  }
  return result;
}

namespace {

void check_k_phase(const std::vector<int>& labels, int K) {
  for (int l : labels)
    if (l < 0 || l >= K)
      throw std::invalid_argument("multiphase flow: label out of range");
}

GridField extend_profile(const BandedGrid& band, const SurfaceSampling& sampling,
                         const std::vector<int>& labels, int K, double collar,
                         const InterfaceSet& interface) {
  SdvfEvaluator sdvf(sampling, labels, K, collar, interface);
  return extend_sdvf(band, sdvf);
}

// Collar of the evolving profile. The default 2K/(K-1) makes the per-phase
// ramps shallow enough that the pairwise margins carry unit slope in
// distance, i.e. the profile is the signed distance itself near every
// interface (the clamp sits far outside the band).
double profile_collar(const FlowConfig& config, int K) {
  return config.sdvf_collar > 0.0 ? config.sdvf_collar
                                  : 2.0 * K / (K - 1.0);
}

}  // namespace

FlowResult mbo_multiphase(const BandedGrid& band, const SurfaceSampling& sampling,
                          const std::vector<int>& initial_labels, int K,
                          const FlowConfig& config,
                          const InterfaceSet* initial_interface) {
  config.validate();
  check_k_phase(initial_labels, K);
  const SimplexFrame frame = simplex_vectors(K);

  FlowResult result;
  seed_history(result, sampling, initial_labels, initial_interface);
  record_step(result, band, sampling, initial_labels,
              result.interfaces_history.back(), K, config);

  const double collar = profile_collar(config, K);
  GridField z = extend_profile(band, sampling, initial_labels, K, collar,
                               result.interfaces_history.back());
  std::unique_ptr<VolumePenalty> penalty;
  if (config.rho > 0.0) {
    VolumePenalty probe(band, frame, std::vector<double>(K, 0.0), config.rho,
                        config.eps);
    penalty = std::make_unique<VolumePenalty>(band, frame,
                                              probe.surrogate_volumes(z),
                                              config.rho, config.eps);
  }

  for (int step = 0; step < config.steps; ++step) {
    if (result.interfaces_history.back().empty()) {
      result.interface_vanished = true;
      break;
    }
    if (step > 0)
      z = extend_profile(band, sampling, result.labels_history.back(), K,
                         collar, result.interfaces_history.back());
    for (int k = 0; k < config.substeps; ++k) {
      MMObjective obj = MMObjective::heat(band, z, {config.h, config.alpha});
      if (penalty)
        obj.set_extra([&](const GridField& w, GridField& g) {
          return penalty->value_and_grad(w, g);
        });
      run_minimize(obj, z, band, config, z, result);
    }
    ThresholdedState st =
        threshold_multiphase(z, band, sampling, frame, config.degree);
    result.labels_history.push_back(std::move(st.labels));
    result.interfaces_history.push_back(std::move(st.interface));
    record_step(result, band, sampling, result.labels_history.back(),
                result.interfaces_history.back(), K, config);
  }
  return result;
}

FlowResult hmbo_multiphase(const BandedGrid& band, const SurfaceSampling& sampling,
                           const std::vector<int>& initial_labels, int K,
                           const FlowConfig& config,
                           const std::vector<int>* previous_labels,
                           const InterfaceSet* initial_interface,
                           const InterfaceSet* previous_interface) {
  config.validate();
  check_k_phase(initial_labels, K);
  const SimplexFrame frame = simplex_vectors(K);
  const double collar = profile_collar(config, K);
  std::vector<int> prev = previous_labels ? *previous_labels : initial_labels;
  check_k_phase(prev, K);

  FlowResult result;
  seed_history(result, sampling, initial_labels, initial_interface);
  InterfaceSet prev_iface =
      previous_interface
          ? *previous_interface
          : (previous_labels ? extract_interface(sampling, prev)
                             : result.interfaces_history.back());
  record_step(result, band, sampling, initial_labels,
              result.interfaces_history.back(), K, config);

  std::unique_ptr<VolumePenalty> penalty;
  if (config.rho > 0.0) {
    GridField z0 = extend_profile(band, sampling, initial_labels, K, collar,
                                  result.interfaces_history.back());
    VolumePenalty probe(band, frame, std::vector<double>(K, 0.0), config.rho,
                        config.eps);
    penalty = std::make_unique<VolumePenalty>(band, frame,
                                              probe.surrogate_volumes(z0),
                                              config.rho, config.eps);
  }

  for (int step = 0; step < config.steps; ++step) {
    if (result.interfaces_history.back().empty()) {
      result.interface_vanished = true;
      break;
    }
    const std::vector<int> cur = result.labels_history.back();
    GridField z_cur = extend_profile(band, sampling, cur, K, collar,
                                     result.interfaces_history.back());
    GridField z_prev =
        extend_profile(band, sampling, prev, K, collar, prev_iface);
    GridField w = z_cur;
    for (size_t i = 0; i < w.v.size(); ++i)
      w.v[i] = 2.0 * z_cur.v[i] - z_prev.v[i];
    GridField w_before = w;
    for (int k = 0; k < config.substeps; ++k) {
      MMObjective obj =
          MMObjective::wave(band, w, w_before, {config.h, config.alpha});
      if (penalty)
        obj.set_extra([&](const GridField& f, GridField& g) {
          return penalty->value_and_grad(f, g);
        });
      GridField w_next;
      run_minimize(obj, w, band, config, w_next, result);
      w_before = std::move(w);
      w = std::move(w_next);
    }
    prev = cur;
    prev_iface = result.interfaces_history.back();
    ThresholdedState st =
        threshold_multiphase(w, band, sampling, frame, config.degree);
    result.labels_history.push_back(std::move(st.labels));
    result.interfaces_history.push_back(std::move(st.interface));
    record_step(result, band, sampling, result.labels_history.back(),
                result.interfaces_history.back(), K, config);
  }
  return result;
}

std::vector<int> advect_initial_interface(const SurfaceSampling& sampling,
                                          const std::vector<int>& labels,
                                          double V, double t) {
  if (t < 0.0) throw std::invalid_argument("advect_initial_interface: t must be >= 0");
  const double s = V * t;
  if (std::abs(s) > std::numbers::pi / 4.0)
    throw std::invalid_argument(
        "advect_initial_interface: displacement exceeds pi/4");

  InterfaceSet iface = extract_interface(sampling, labels);
  if (iface.empty())
    throw VanishedInterface("advect_initial_interface: no interface to move");

  std::vector<int> out(labels);
  if (s == 0.0) return out;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < sampling.size(); ++i) {
    // Nearest interface edge decides the local phase pair.
    double best = std::numeric_limits<double>::infinity();
    int best_e = 0;
    for (int e = 0; e < iface.size(); ++e) {
      const double d = sampling.surface.geodesic_distance(
          sampling.points[i], iface.edges[e].point);
      if (d < best) {
        best = d;
        best_e = e;
      }
    }
    const auto& edge = iface.edges[best_e];
    const int a = std::min(labels[edge.a], labels[edge.b]);
    const int b = std::max(labels[edge.a], labels[edge.b]);
    // Positive s grows phase a by s; negative shrinks it.
    if (labels[i] == b && best < s) out[i] = a;
    else if (labels[i] == a && best < -s) out[i] = b;
  }
  return out;
}

}  // namespace sf
