#pragma once

#include <cmath>
#include <optional>

#include "eastsim/core.hpp"

// Projective-measurement (gamma = pi/2) limit: the circuit reduces to a
// kinetically constrained stochastic cellular automaton in which site i
// flips with probability p = sin^2(omega) right after its East gate fires,
// provided its left neighbor is up (site 1 is always eligible). The even
// layer updates the odd sites, the odd layer then updates the even sites
// from the post-even-layer configuration.

namespace eastsim {

struct ClassicalParams {
  int sites = 1;
  double p = 0.0;  // flip probability

  bool deterministic() const { return p >= 1.0; }
  void validate() const {
    if (sites < 1) throw std::invalid_argument("sites must be >= 1");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("flip probability must lie in [0, 1]");
  }
};

inline int max_transition_sites() {
  static const int v = detail::env_limit("EASTSIM_MAX_TRANSITION_SITES", 12);
  return v;
}

inline void check_transition_sites(int sites) {
  if (sites < 1) throw std::invalid_argument("transition matrix needs at least one site");
  if (sites > max_transition_sites())
    throw std::runtime_error("transition matrix of " + std::to_string(sites) +
                             " sites exceeds dense limit (" +
                             std::to_string(max_transition_sites()) +
                             "); raise EASTSIM_MAX_TRANSITION_SITES to override");
}

// Column-stochastic single-step transition matrix: column n holds the
// outgoing distribution of configuration n.
struct TransitionMatrix {
  int sites = 1;
  double p = 0.0;
  Eigen::MatrixXd entries;
};

namespace detail {

// Targets of the even layer are the odd sites (1, 3, 5, ...), of the odd
// layer the even sites (2, 4, ...). Eligibility of target t reads the
// current state of t-1; target 1 is always eligible.
inline bool layer_target_eligible(BasisIndex config, int target) {
  return target == 1 || ((config >> (target - 2)) & 1u);
}

template <class Visit>
inline void for_each_layer_outcome(BasisIndex config, int sites, bool even_layer, double p,
                                   Visit&& visit) {
  int eligible[32];
  int count = 0;
  for (int target = even_layer ? 1 : 2; target <= sites; target += 2)
    if (layer_target_eligible(config, target)) eligible[count++] = target;
  const int subsets = 1 << count;
  for (int sel = 0; sel < subsets; ++sel) {
    double weight = 1.0;
    BasisIndex next = config;
    for (int j = 0; j < count; ++j) {
      if (sel >> j & 1) {
        weight *= p;
        next ^= BasisIndex{1} << (eligible[j] - 1);
      } else {
        weight *= 1.0 - p;
      }
    }
    visit(next, weight);
  }
}

// out += P_layer * in restricted to one column is handled by the subset
// enumeration above; the vector kernel below applies a whole layer to a
// distribution in O(L 2^L).
inline void apply_stochastic_layer(double* data, int sites, bool even_layer, double p) {
  const std::size_t dim = std::size_t{1} << sites;
  for (int target = even_layer ? 1 : 2; target <= sites; target += 2) {
    const std::size_t tmask = std::size_t{1} << (target - 1);
    const std::size_t cmask = target == 1 ? 0 : (std::size_t{1} << (target - 2));
    for (std::size_t base = 0; base < dim; base += 2 * tmask) {
      for (std::size_t low = 0; low < tmask; ++low) {
        const std::size_t i0 = base + low;
        if (cmask && !(i0 & cmask)) continue;
        const double a0 = data[i0];
        const double a1 = data[i0 + tmask];
        data[i0] = (1.0 - p) * a0 + p * a1;
        data[i0 + tmask] = p * a0 + (1.0 - p) * a1;
      }
    }
  }
}

}  // namespace detail

// Applies the one-step classical map to a probability vector in place.
inline void classical_step_inplace(Eigen::VectorXd& dist, const ClassicalParams& params) {
  if (dist.size() != (std::int64_t{1} << params.sites))
    throw std::invalid_argument("classical_step: dimension mismatch");
  detail::apply_stochastic_layer(dist.data(), params.sites, true, params.p);
  detail::apply_stochastic_layer(dist.data(), params.sites, false, params.p);
}

inline TransitionMatrix transition_matrix(const ClassicalParams& params) {
  params.validate();
  check_transition_sites(params.sites);
  const std::int64_t dim = std::int64_t{1} << params.sites;
  TransitionMatrix out;
  out.sites = params.sites;
  out.p = params.p;
  out.entries = Eigen::MatrixXd::Zero(dim, dim);
  for (std::int64_t n = 0; n < dim; ++n) {
    detail::for_each_layer_outcome(
        static_cast<BasisIndex>(n), params.sites, true, params.p,
        [&](BasisIndex mid, double w_even) {
          detail::for_each_layer_outcome(
              mid, params.sites, false, params.p, [&](BasisIndex fin, double w_odd) {
                out.entries(static_cast<std::int64_t>(fin), n) += w_even * w_odd;
              });
        });
  }
  return out;
}

// Tilted matrix: destination row m is reweighted by e^{-s f(m)} with f the
// occupation count.
inline Eigen::MatrixXd tilted_matrix(const TransitionMatrix& base, double s) {
  Eigen::MatrixXd out = base.entries;
  for (std::int64_t m = 0; m < out.rows(); ++m)
    out.row(m) *= std::exp(-s * std::popcount(static_cast<BasisIndex>(m)));
  return out;
}

inline Eigen::MatrixXd tilted_matrix(const ClassicalParams& params, double s) {
  return tilted_matrix(transition_matrix(params), s);
}

struct PowerIterationResult {
  double eigenvalue = 0.0;
  Eigen::VectorXd eigenvector;
  long iterations = 0;
  double gap_estimate = 1.0;
  bool tolerance_relaxed = false;
};

class PowerIterationError : public std::runtime_error {
 public:
  PowerIterationError(const std::string& what, double last, double gap, Eigen::VectorXd iterate)
      : std::runtime_error(what), last_estimate(last), gap_estimate(gap),
        last_iterate(std::move(iterate)) {}
  double last_estimate;
  double gap_estimate;
  Eigen::VectorXd last_iterate;
};

// Power iteration with per-iteration normalization. Converged when
// successive Rayleigh quotients differ by less than tol. Near-degenerate
// spectra (estimated gap < 1e-8) accept a relaxed tolerance of 1e-9 and are
// flagged, since the convergence rate stalls exactly where the dominant
// eigenvalue crossing closes the gap.
template <class ApplyFn>
inline PowerIterationResult power_iteration(Eigen::Index dim, ApplyFn&& apply, double tol = 1e-12,
                                            long max_iter = 1000000,
                                            const Eigen::VectorXd* warm_start = nullptr) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(dim);
  if (warm_start && warm_start->size() == dim) v = warm_start->cwiseAbs();
  v /= v.norm();
  Eigen::VectorXd w(dim);
  double prev_rq = 0.0, prev_diff = -1.0, rate = 0.0;
  for (long it = 1; it <= max_iter; ++it) {
    apply(v, w);
    const double rq = v.dot(w);
    const double wn = w.norm();
    if (!(wn > 0.0))
      throw PowerIterationError("power iteration collapsed to the zero vector", rq, 0.0, v);
    v = w / wn;
    const double diff = std::abs(rq - prev_rq);
    if (it >= 2 && prev_diff > 0.0 && diff > 0.0) rate = diff / prev_diff;
    const double gap = std::max(0.0, 1.0 - std::min(1.0, rate));
    if (it >= 3) {
      if (diff < tol)
        return {rq, v, it, gap, false};
      if (gap < 1e-8 && diff < std::max(tol, 1e-9))
        return {rq, v, it, gap, true};
    }
    prev_rq = rq;
    prev_diff = diff;
  }
  throw PowerIterationError("power iteration failed to converge after " +
                                std::to_string(max_iter) + " iterations (last estimate " +
                                std::to_string(prev_rq) + ", gap estimate " +
                                std::to_string(std::max(0.0, 1.0 - rate)) + ")",
                            prev_rq, std::max(0.0, 1.0 - rate), v);
}

inline PowerIterationResult dominant_eigenvalue(const Eigen::MatrixXd& matrix, double tol = 1e-12,
                                                long max_iter = 1000000,
                                                const Eigen::VectorXd* warm_start = nullptr) {
  if (matrix.rows() != matrix.cols()) throw std::invalid_argument("dominant_eigenvalue: not square");
  return power_iteration(
      matrix.rows(), [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) { out.noalias() = matrix * in; },
      tol, max_iter, warm_start);
}

// Infinite-time SCGF theta_L(s) = (1/L) log dom(P(s)). The tilted action is
// applied in layered form, so only vectors of length 2^L are materialized.
inline PowerIterationResult classical_scgf_result(const ClassicalParams& params, double s,
                                                  double tol = 1e-12, long max_iter = 1000000,
                                                  const Eigen::VectorXd* warm_start = nullptr) {
  params.validate();
  if (params.p <= 0.0 || params.deterministic())
    throw std::invalid_argument(
        "classical_scgf requires p in (0, 1); p = 1 is the deterministic, "
        "ergodicity-breaking case");
  const std::int64_t dim = std::int64_t{1} << params.sites;
  Eigen::VectorXd tilt(dim);
  for (std::int64_t m = 0; m < dim; ++m)
    tilt[m] = std::exp(-s * std::popcount(static_cast<BasisIndex>(m)));
  auto apply = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
    out = in;
    detail::apply_stochastic_layer(out.data(), params.sites, true, params.p);
    detail::apply_stochastic_layer(out.data(), params.sites, false, params.p);
    out.array() *= tilt.array();
  };
  auto result = power_iteration(dim, apply, tol, max_iter, warm_start);
  return result;
}

inline double classical_scgf(const ClassicalParams& params, double s, double tol = 1e-12,
                             long max_iter = 1000000) {
  return std::log(classical_scgf_result(params, s, tol, max_iter).eigenvalue) / params.sites;
}

// Closed-form SCGF of non-interacting spins that flip with probability p
// each step regardless of their neighbors; coincides with the L = 1 chain.
inline double ni_scgf(double p, double s) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("ni_scgf: p must lie in [0, 1]");
  const double es = std::exp(s);
  const double radicand = (p - 1.0) * (p - 1.0) * (es + 1.0) * (es + 1.0) + 4.0 * (2.0 * p - 1.0) * es;
  if (radicand < 0.0) throw std::domain_error("ni_scgf: negative radicand");
  return std::log(0.5 * std::exp(-s) * (-p * es + std::sqrt(radicand) - p + es + 1.0));
}

// Exact probability that the whole L x T record is inactive, starting from
// the uniform state: only the all-down initial configuration (or the one
// with just site 1 up, immediately flipped down) can stay silent.
inline double zero_activity_probability(int sites, int steps, double p) {
  if (sites < 1 || steps < 1) throw std::invalid_argument("zero_activity_probability: bad size");
  if (p < 0.0 || p >= 1.0)
    throw std::invalid_argument("zero_activity_probability: requires p in [0, 1)");
  return std::ldexp(std::pow(1.0 - p, steps - 1), -sites);
}

// Bit-level trajectory of the stochastic cellular automaton; valid for any
// system size. The record holds the configuration after each full step,
// which is exactly the projective measurement outcome pattern.
inline MeasurementRecord sample_classical_trajectory(const ClassicalParams& params, int steps,
                                                     std::uint64_t seed,
                                                     const std::vector<std::uint8_t>& initial) {
  params.validate();
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (initial.size() != static_cast<std::size_t>(params.sites))
    throw std::invalid_argument("initial state size mismatch");
  Rng rng = Rng::substream(seed, 0);
  std::vector<std::uint8_t> state = initial;
  MeasurementRecord record;
  record.resize(params.sites, steps);
  record.seed = seed;
  auto layer = [&](int first_target) {
    for (int target = first_target; target <= params.sites; target += 2) {
      const bool eligible = target == 1 || state[target - 2];
      if (eligible && rng.next_double() < params.p) state[target - 1] ^= 1;
    }
  };
  for (int t = 1; t <= steps; ++t) {
    layer(1);
    layer(2);
    for (int site = 1; site <= params.sites; ++site) record.at(site, t) = state[site - 1];
  }
  return record;
}

// Same, starting from a uniformly random configuration drawn from the seed.
inline MeasurementRecord sample_classical_trajectory(const ClassicalParams& params, int steps,
                                                     std::uint64_t seed) {
  Rng init_rng = Rng::substream(seed, 1);
  std::vector<std::uint8_t> initial(params.sites);
  for (auto& b : initial) b = static_cast<std::uint8_t>(init_rng.next_u64() & 1u);
  return sample_classical_trajectory(params, steps, seed, initial);
}

}  // namespace eastsim
