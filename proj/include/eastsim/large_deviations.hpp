#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "eastsim/parallel.hpp"
#include "eastsim/quantum_circuit.hpp"

// Dynamical partition function Z_{L,T}(s), its SCGF theta_{L,T}(s) =
// log(Z)/(LT), the activity density a = -d theta/ds and the crossover field
// s* = argmax_s |a'(s)| for the monitored dynamics.

namespace eastsim {

struct TiltedEvolutionResult {
  double s = 0.0;
  // log(Z_t / Z_{t-1}) per step; equals L * lambda_t.
  std::vector<double> step_log_increments;
  double log_z = 0.0;
  double theta = 0.0;
  CircuitParams params;
};

// Composes the tilted channel T times from `initial` (the maximally mixed
// state by default), accumulating log-trace increments. Deterministic.
inline TiltedEvolutionResult partition_function(const CircuitParams& params, double s,
                                                DensityMatrix initial) {
  params.validate();
  check_density_sites(params.sites);
  if (initial.entries.rows() != params.dim() || initial.entries.cols() != params.dim())
    throw std::invalid_argument("partition_function: dimension mismatch");
  TiltedEvolutionResult out;
  out.s = s;
  out.params = params;
  out.step_log_increments.reserve(params.steps);
  DensityMatrix rho = std::move(initial);
  for (int t = 0; t < params.steps; ++t)
    out.step_log_increments.push_back(tilted_step_inplace(rho, params, s));
  out.log_z = std::accumulate(out.step_log_increments.begin(), out.step_log_increments.end(), 0.0);
  out.theta = out.log_z / (static_cast<double>(params.sites) * params.steps);
  return out;
}

inline TiltedEvolutionResult partition_function(const CircuitParams& params, double s) {
  return partition_function(params, s, maximally_mixed_state(params.sites));
}

// a_{L,T}(s) by central finite difference of log Z.
inline double activity_density(const CircuitParams& params, double s, double ds = 1e-3) {
  if (!(ds > 0.0)) throw std::invalid_argument("activity_density: ds must be positive");
  const double plus = partition_function(params, s + ds).log_z;
  const double minus = partition_function(params, s - ds).log_z;
  return -(plus - minus) / (2.0 * ds * params.sites * params.steps);
}

// Per-step increments lambda_t = log(Z_t/Z_{t-1}) / L; their mean over t is
// exactly theta * ... == theta_{L,T} (algebraic identity).
inline std::vector<double> instantaneous_increment_series(const TiltedEvolutionResult& result) {
  std::vector<double> lambda(result.step_log_increments.size());
  for (std::size_t t = 0; t < lambda.size(); ++t)
    lambda[t] = result.step_log_increments[t] / result.params.sites;
  return lambda;
}

// Stationarity diagnostic: relative spread of lambda_t over the last 10% of
// steps, against the final value. Reported, never enforced -- the spectral
// gap closes near the crossover and plateaus become metastable.
inline double increment_plateau_change(const TiltedEvolutionResult& result) {
  const auto lambda = instantaneous_increment_series(result);
  if (lambda.empty()) return 0.0;
  const std::size_t tail = std::max<std::size_t>(1, lambda.size() / 10);
  const double last = lambda.back();
  double max_dev = 0.0;
  for (std::size_t t = lambda.size() - tail; t < lambda.size(); ++t)
    max_dev = std::max(max_dev, std::abs(lambda[t] - last));
  const double scale = std::max(std::abs(last), 1e-15);
  return max_dev / scale;
}

struct ActivityCurve {
  std::vector<double> s_grid;
  std::vector<double> a_values;
  double gamma = 0.0;
  double omega = 0.0;
  int sites = 0;
  int steps = 0;
  std::optional<double> s_star;
};

struct CrossoverEstimate {
  double refined = 0.0;      // quadratic-interpolated abscissa of max |a'|
  double grid_argmax = 0.0;  // raw grid point with the steepest slope
  std::size_t index = 0;
};

// Steepest-descent location of a(s): central differences on the (possibly
// non-uniform) grid, then a parabola through the three slope samples around
// the discrete maximum. Requires the extremum to be interior.
inline CrossoverEstimate crossover_field(const std::vector<double>& s_grid,
                                         const std::vector<double>& a_values) {
  const std::size_t n = s_grid.size();
  if (n < 5 || a_values.size() != n)
    throw std::invalid_argument("crossover_field: need >= 5 grid points spanning the crossover");
  std::vector<double> slope(n - 2), at(n - 2);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    slope[i - 1] = std::abs((a_values[i + 1] - a_values[i - 1]) / (s_grid[i + 1] - s_grid[i - 1]));
    at[i - 1] = s_grid[i];
  }
  const std::size_t j = static_cast<std::size_t>(
      std::max_element(slope.begin(), slope.end()) - slope.begin());
  if (j == 0 || j + 1 == slope.size())
    throw std::runtime_error("crossover outside grid");
  // Vertex of the parabola through (x0,y0), (x1,y1), (x2,y2).
  const double x0 = at[j - 1], x1 = at[j], x2 = at[j + 1];
  const double y0 = slope[j - 1], y1 = slope[j], y2 = slope[j + 1];
  const double d0 = (y1 - y0) / (x1 - x0);
  const double d1 = (y2 - y1) / (x2 - x1);
  const double curvature = (d1 - d0) / (x2 - x0);
  double vertex = x1;
  if (curvature < 0.0) vertex = 0.5 * (x0 + x1 + (d0 / -curvature));
  // Clamp pathological interpolations back into the bracket.
  vertex = std::clamp(vertex, x0, x2);
  return {vertex, x1, j + 1};
}

inline CrossoverEstimate crossover_field(const ActivityCurve& curve) {
  return crossover_field(curve.s_grid, curve.a_values);
}

// Legendre-Fenchel transform on sampled data: phi(a) = sup_s [-s a - theta(s)].
inline std::vector<double> legendre_rate_function(const std::vector<double>& s_grid,
                                                  const std::vector<double>& theta,
                                                  const std::vector<double>& a_grid) {
  if (s_grid.size() != theta.size() || s_grid.empty())
    throw std::invalid_argument("legendre_rate_function: bad curve data");
  std::vector<double> phi(a_grid.size());
  for (std::size_t j = 0; j < a_grid.size(); ++j) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s_grid.size(); ++i)
      best = std::max(best, -s_grid[i] * a_grid[j] - theta[i]);
    phi[j] = best;
  }
  return phi;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < count; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return out;
}

// theta on an s grid (parallel over grid points), with the activity curve
// obtained from centered differences of log Z on the same grid.
inline ActivityCurve scgf_activity_curve(const CircuitParams& params,
                                         const std::vector<double>& s_grid, int threads = 1) {
  std::vector<double> log_z(s_grid.size());
  parallel_for(s_grid.size(), threads,
               [&](std::size_t i) { log_z[i] = partition_function(params, s_grid[i]).log_z; });
  ActivityCurve curve;
  curve.s_grid = s_grid;
  curve.gamma = params.gamma;
  curve.omega = params.omega;
  curve.sites = params.sites;
  curve.steps = params.steps;
  curve.a_values.assign(s_grid.size(), 0.0);
  const double volume = static_cast<double>(params.sites) * params.steps;
  for (std::size_t i = 0; i < s_grid.size(); ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == s_grid.size() ? i : i + 1;
    curve.a_values[i] = -(log_z[hi] - log_z[lo]) / ((s_grid[hi] - s_grid[lo]) * volume);
  }
  return curve;
}

// Two-stage crossover search: locate the steepest slope on the coarse curve,
// then re-evaluate theta on a finer grid spanning two coarse cells around it.
// Returns the refined curve restricted to the window, with s_star set.
template <class CurveFn>
inline ActivityCurve refine_crossover(const std::vector<double>& coarse_s, CurveFn&& make_curve,
                                      std::size_t refine_points = 21) {
  ActivityCurve coarse = make_curve(coarse_s);
  const CrossoverEstimate rough = crossover_field(coarse);
  const std::size_t j = rough.index;
  const double lo = coarse.s_grid[j - (j >= 2 ? 2 : 1)];
  const double hi = coarse.s_grid[std::min(coarse.s_grid.size() - 1, j + 2)];
  ActivityCurve fine = make_curve(linspace(lo, hi, refine_points));
  fine.s_star = crossover_field(fine).refined;
  return fine;
}

}  // namespace eastsim
