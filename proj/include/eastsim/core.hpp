#pragma once

#include <Eigen/Dense>

#include <bit>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "eastsim/rng.hpp"

// Shared domain types and basis-index arithmetic.
//
// Basis convention: a length-L qubit register is indexed by integers in
// [0, 2^L); bit (i-1) of the index holds the occupation of site i, so the
// driven site 1 is the least-significant bit.

namespace eastsim {

using cplx = std::complex<double>;
using BasisIndex = std::uint64_t;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

namespace detail {

inline int env_limit(const char* name, int fallback) {
  if (const char* v = std::getenv(name)) {
    const int parsed = std::atoi(v);
    if (parsed >= 1) return parsed;
  }
  return fallback;
}

}  // namespace detail

// Dense-representation guards. A state vector needs 16*2^L bytes, a density
// matrix 16*4^L bytes; the defaults keep both under ~1 GiB and can be raised
// through the environment for bigger machines.
inline int max_state_sites() {
  static const int v = detail::env_limit("EASTSIM_MAX_STATE_SITES", 12);
  return v;
}

inline int max_density_sites() {
  static const int v = detail::env_limit("EASTSIM_MAX_DENSITY_SITES", 10);
  return v;
}

inline void check_state_sites(int sites) {
  if (sites < 1) throw std::invalid_argument("state must have at least one site");
  if (sites > max_state_sites())
    throw std::runtime_error("state of " + std::to_string(sites) +
                             " sites exceeds dense limit (" + std::to_string(max_state_sites()) +
                             "); raise EASTSIM_MAX_STATE_SITES to override");
}

inline void check_density_sites(int sites) {
  if (sites < 1) throw std::invalid_argument("density matrix must have at least one site");
  if (sites > max_density_sites())
    throw std::runtime_error("density matrix of " + std::to_string(sites) +
                             " sites exceeds dense limit (" + std::to_string(max_density_sites()) +
                             "); raise EASTSIM_MAX_DENSITY_SITES to override");
}

// Circuit parameters: system size L, horizon T, unitary rotation angle omega
// and measurement strength gamma. gamma = pi/2 is the projective (classical)
// limit, gamma = 0 purely unitary evolution.
struct CircuitParams {
  int sites = 1;
  int steps = 1;
  double omega = 0.0;
  double gamma = 0.0;

  void validate() const {
    if (sites < 1) throw std::invalid_argument("sites must be >= 1");
    if (steps < 1) throw std::invalid_argument("steps must be >= 1");
    if (gamma < 0.0 || gamma > kPi / 2 + 1e-12)
      throw std::invalid_argument("gamma must lie in [0, pi/2]");
  }

  std::int64_t dim() const { return std::int64_t{1} << sites; }
};

// Number of occupied sites in a basis configuration.
inline int occupation_count(BasisIndex config, int sites) {
  if (sites < 1 || sites > 63) throw std::out_of_range("occupation_count: bad site count");
  if (config >> sites) throw std::out_of_range("occupation_count: index out of range");
  return std::popcount(config);
}

inline bool occupied(BasisIndex config, int site /*1-based*/) {
  return (config >> (site - 1)) & 1u;
}

// Dense pure state over `sites` qubits.
struct StateVector {
  int sites = 0;
  Eigen::VectorXcd amp;

  double norm() const { return amp.norm(); }
  // Occupation expectation value of `site` (1-based).
  double occupation(int site) const {
    const BasisIndex mask = BasisIndex{1} << (site - 1);
    double w = 0.0;
    for (Eigen::Index m = 0; m < amp.size(); ++m)
      if (m & static_cast<Eigen::Index>(mask)) w += std::norm(amp[m]);
    return w;
  }
};

inline StateVector basis_state(int sites, BasisIndex config) {
  check_state_sites(sites);
  if (config >> sites) throw std::out_of_range("basis_state: index out of range");
  StateVector psi;
  psi.sites = sites;
  psi.amp = Eigen::VectorXcd::Zero(std::int64_t{1} << sites);
  psi.amp[static_cast<Eigen::Index>(config)] = 1.0;
  return psi;
}

// Dense mixed state over `sites` qubits.
struct DensityMatrix {
  int sites = 0;
  Eigen::MatrixXcd entries;

  double trace_real() const { return entries.trace().real(); }
  double occupation(int site) const {
    const BasisIndex mask = BasisIndex{1} << (site - 1);
    double w = 0.0;
    for (Eigen::Index m = 0; m < entries.rows(); ++m)
      if (m & static_cast<Eigen::Index>(mask)) w += entries(m, m).real();
    return w;
  }
  Eigen::VectorXd diagonal_real() const { return entries.diagonal().real(); }
};

inline DensityMatrix maximally_mixed_state(int sites) {
  check_density_sites(sites);
  const std::int64_t dim = std::int64_t{1} << sites;
  DensityMatrix rho;
  rho.sites = sites;
  rho.entries = Eigen::MatrixXcd::Identity(dim, dim) / static_cast<double>(dim);
  return rho;
}

inline DensityMatrix pure_density(const StateVector& psi) {
  check_density_sites(psi.sites);
  DensityMatrix rho;
  rho.sites = psi.sites;
  rho.entries = psi.amp * psi.amp.adjoint();
  return rho;
}

inline DensityMatrix diagonal_density(int sites, const Eigen::VectorXd& probabilities) {
  check_density_sites(sites);
  if (probabilities.size() != (std::int64_t{1} << sites))
    throw std::invalid_argument("diagonal_density: dimension mismatch");
  DensityMatrix rho;
  rho.sites = sites;
  rho.entries = probabilities.cast<cplx>().asDiagonal();
  return rho;
}

// Space-time record of binary ancilla outcomes, one per (site, step).
struct MeasurementRecord {
  int sites = 0;
  int steps = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint8_t> outcomes;  // [(step-1)*sites + (site-1)]

  std::uint8_t& at(int site /*1-based*/, int step /*1-based*/) {
    return outcomes[static_cast<std::size_t>(step - 1) * sites + (site - 1)];
  }
  std::uint8_t at(int site, int step) const {
    return outcomes[static_cast<std::size_t>(step - 1) * sites + (site - 1)];
  }
  void resize(int s, int t) {
    sites = s;
    steps = t;
    outcomes.assign(static_cast<std::size_t>(s) * t, 0);
  }
  bool valid() const {
    if (outcomes.size() != static_cast<std::size_t>(sites) * steps) return false;
    for (auto k : outcomes)
      if (k > 1) return false;
    return true;
  }
};

// Time-integrated activity: total count of outcome-1 measurements.
inline std::int64_t activity(const MeasurementRecord& record) {
  std::int64_t total = 0;
  for (auto k : record.outcomes) total += k;
  return total;
}

inline Rng seeded_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace eastsim
