#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "eastsim/quantum_circuit.hpp"

// Statistics of inactive space-time clusters: the probability p_{l x tau}
// that an l-site, tau-step window of the record contains no outcome-1
// measurements, the free energy F = -log p, area/perimeter fits of its
// temporal increments and the crossover time tau*.
//
// Conditioned clusters occupy the rightmost l sites {L-l+1, ..., L}, far
// from the driven boundary; temporal placement is immaterial because the
// evolution starts from the stationary state.

namespace eastsim {

inline BasisIndex rightmost_sites_mask(int sites, int ell) {
  if (ell < 1 || ell > sites) throw std::invalid_argument("cluster width out of range");
  return ((BasisIndex{1} << ell) - 1) << (sites - ell);
}

// F_{l x tau} for tau = 1..tau_max from one conditioned evolution: per step
// the unitary acts, cluster sites keep only their outcome-0 Kraus term and
// the rest get the full two-term sum; the running log-trace gives -F.
inline std::vector<double> inactive_cluster_free_energies(const CircuitParams& params, int ell,
                                                          int tau_max) {
  params.validate();
  check_density_sites(params.sites);
  if (tau_max < 1) throw std::invalid_argument("tau_max must be >= 1");
  const BasisIndex mask = rightmost_sites_mask(params.sites, ell);
  DensityMatrix rho = maximally_mixed_state(params.sites);
  std::vector<double> f(tau_max);
  double log_p = 0.0;
  for (int tau = 1; tau <= tau_max; ++tau) {
    log_p += conditioned_step_inplace(rho, params, mask);
    f[tau - 1] = -log_p;
  }
  return f;
}

inline double inactive_cluster_probability(const CircuitParams& params, int ell, int tau) {
  return std::exp(-inactive_cluster_free_energies(params, ell, tau)[tau - 1]);
}

struct AreaPerimeterFit {
  double alpha = 0.0;     // area coefficient (slope in l)
  double beta = 0.0;      // perimeter coefficient (intercept)
  double residual = 0.0;  // rms residual of the fit
};

// Ordinary least squares of Delta F = alpha * l + beta over an l grid.
inline AreaPerimeterFit fit_area_perimeter(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3)
    throw std::invalid_argument("fit_area_perimeter: need >= 3 distinct cluster widths");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : points) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(points.size());
  const double det = n * sxx - sx * sx;
  if (!(std::abs(det) > 1e-12)) throw std::invalid_argument("fit_area_perimeter: degenerate l grid");
  AreaPerimeterFit fit;
  fit.alpha = (n * sxy - sx * sy) / det;
  fit.beta = (sy * sxx - sx * sxy) / det;
  double ss = 0;
  for (auto [x, y] : points) {
    const double r = y - (fit.alpha * x + fit.beta);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

struct ClusterFreeEnergyTable {
  double gamma = 0.0;
  double omega = 0.0;
  int sites = 0;
  std::vector<int> ells;
  // entries[(ell, tau)] = F, tau in 1..tau_max
  std::map<std::pair<int, int>, double> entries;
  // fits[tau] from increments F_{l x (tau+1)} - F_{l x tau}
  std::map<int, AreaPerimeterFit> fits;
  std::optional<int> tau_star;
  bool tau_star_censored = false;   // never crossed within the computed range
  bool alpha_nonpositive = false;   // perimeter already dominant at some tau

  double at(int ell, int tau) const {
    auto it = entries.find({ell, tau});
    if (it == entries.end()) throw std::out_of_range("cluster table: missing (l, tau) entry");
    return it->second;
  }
};

inline double temporal_increment(const ClusterFreeEnergyTable& table, int ell, int tau) {
  return table.at(ell, tau + 1) - table.at(ell, tau);
}

// Smallest tau with beta/alpha > L; non-positive alpha counts as an
// immediate crossing (the area term has already collapsed).
inline std::optional<int> crossover_time(const std::map<int, AreaPerimeterFit>& fits, int sites,
                                         bool* alpha_nonpositive = nullptr) {
  for (const auto& [tau, fit] : fits) {
    if (fit.alpha <= 0.0) {
      if (alpha_nonpositive) *alpha_nonpositive = true;
      return tau;
    }
    if (fit.beta / fit.alpha > static_cast<double>(sites)) return tau;
  }
  return std::nullopt;
}

// Conditioned-channel cluster table over an l grid with fits and tau*.
inline ClusterFreeEnergyTable compute_cluster_table(const CircuitParams& params,
                                                    const std::vector<int>& ells, int tau_max) {
  ClusterFreeEnergyTable table;
  table.gamma = params.gamma;
  table.omega = params.omega;
  table.sites = params.sites;
  table.ells = ells;
  for (int ell : ells) {
    const auto f = inactive_cluster_free_energies(params, ell, tau_max);
    for (int tau = 1; tau <= tau_max; ++tau) table.entries[{ell, tau}] = f[tau - 1];
  }
  for (int tau = 1; tau < tau_max; ++tau) {
    std::vector<std::pair<double, double>> points;
    points.reserve(ells.size());
    for (int ell : ells) points.emplace_back(ell, temporal_increment(table, ell, tau));
    table.fits[tau] = fit_area_perimeter(points);
  }
  table.tau_star = crossover_time(table.fits, params.sites, &table.alpha_nonpositive);
  table.tau_star_censored = !table.tau_star.has_value();
  return table;
}

struct EmpiricalFreeEnergy {
  double f = 0.0;
  // Binomial proxy ignores the correlation between overlapping windows and
  // between windows of one trajectory; the robust value treats trajectories
  // as the independent unit.
  double stderr_binomial = 0.0;
  double stderr_robust = 0.0;
  bool censored = false;  // zero hits: f is the lower bound log(#windows)
  long long windows = 0;
  long long hits = 0;
  long long trajectories = 0;
};

// Sliding-window estimate of F over a batch of records sharing (L, T).
// Window positions overlapping the first `margin` sites or steps are
// skipped to suppress boundary and transient effects.
inline EmpiricalFreeEnergy empirical_cluster_free_energy(const std::vector<MeasurementRecord>& records,
                                                         int ell, int tau, int margin) {
  if (records.empty()) throw std::invalid_argument("empirical F: no records");
  const int sites = records.front().sites;
  const int steps = records.front().steps;
  if (ell < 1 || tau < 1 || margin < 0) throw std::invalid_argument("empirical F: bad window");
  const int first_site = margin + 1, first_step = margin + 1;
  const int last_site = sites - ell + 1, last_step = steps - tau + 1;
  if (first_site > last_site || first_step > last_step)
    throw std::invalid_argument("empirical F: no window positions after margin exclusion");
  EmpiricalFreeEnergy out;
  out.trajectories = static_cast<long long>(records.size());
  const long long per_record =
      static_cast<long long>(last_site - first_site + 1) * (last_step - first_step + 1);
  double frac_sum = 0.0, frac_sq_sum = 0.0;
  for (const auto& record : records) {
    if (record.sites != sites || record.steps != steps)
      throw std::invalid_argument("empirical F: records disagree on (L, T)");
    long long hits = 0;
    for (int s0 = first_site; s0 <= last_site; ++s0) {
      for (int t0 = first_step; t0 <= last_step; ++t0) {
        bool quiet = true;
        for (int t = t0; quiet && t < t0 + tau; ++t)
          for (int i = s0; i < s0 + ell; ++i)
            if (record.at(i, t)) {
              quiet = false;
              break;
            }
        hits += quiet;
      }
    }
    out.hits += hits;
    const double frac = static_cast<double>(hits) / static_cast<double>(per_record);
    frac_sum += frac;
    frac_sq_sum += frac * frac;
  }
  out.windows = per_record * out.trajectories;
  if (out.hits == 0) {
    out.censored = true;
    out.f = std::log(static_cast<double>(out.windows));
    out.stderr_binomial = out.stderr_robust = std::numeric_limits<double>::infinity();
    return out;
  }
  const double q = static_cast<double>(out.hits) / static_cast<double>(out.windows);
  out.f = -std::log(q);
  out.stderr_binomial = std::sqrt((1.0 - q) / (q * static_cast<double>(out.windows)));
  const double n_traj = static_cast<double>(out.trajectories);
  const double mean = frac_sum / n_traj;
  const double var = std::max(0.0, frac_sq_sum / n_traj - mean * mean);
  out.stderr_robust = n_traj > 1 ? std::sqrt(var / (n_traj - 1)) / q : out.stderr_binomial;
  return out;
}

}  // namespace eastsim
