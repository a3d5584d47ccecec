#pragma once

#include <array>
#include <cmath>
#include <utility>

#include "eastsim/core.hpp"

// Brickwork East circuit and ancilla-induced weak measurements.
//
// One timestep applies U = U_o U_e followed by a weak measurement of every
// site. U_e carries the gates on pairs (2j, 2j+1) -- pair (0,1) degenerates
// to an unconditioned rotation of site 1 because the virtual site 0 is
// pinned up -- and U_o the gates on pairs (2j-1, 2j); trailing incomplete
// pairs are dropped.
//
// The single-site measurement Kraus pair is diagonal in the computational
// basis: K0 = diag(1, cos g), K1 = diag(0, -i sin g). Acting on a density
// matrix, the two-term sum therefore reduces to an entrywise reweighting of
// rho_{mn} that depends only on the (row bit, column bit) pattern per site,
// which is what the channel kernels below exploit.

namespace eastsim {

// Two-site conditioned rotation: identity when the control qubit is down,
// an x rotation of the target by `omega` when it is up. Basis order of the
// 4x4 matrix is (control bit)*2 + (target bit) -- control is the left/first
// ket label.
struct EastGate {
  double omega = 0.0;
  Eigen::Matrix4cd matrix;
};

inline EastGate east_gate(double omega) {
  const double c = std::cos(omega), s = std::sin(omega);
  EastGate g;
  g.omega = omega;
  g.matrix = Eigen::Matrix4cd::Identity();
  g.matrix(2, 2) = c;
  g.matrix(2, 3) = cplx(0, -s);
  g.matrix(3, 2) = cplx(0, -s);
  g.matrix(3, 3) = c;
  return g;
}

// Single-site measurement operators for outcome 0 and 1.
struct KrausPair {
  double gamma = 0.0;
  Eigen::Matrix2cd k0, k1;
};

inline KrausPair kraus_pair(double gamma) {
  KrausPair k;
  k.gamma = gamma;
  k.k0 = Eigen::Matrix2cd::Zero();
  k.k1 = Eigen::Matrix2cd::Zero();
  k.k0(0, 0) = 1.0;
  k.k0(1, 1) = std::cos(gamma);
  k.k1(1, 1) = cplx(0, -std::sin(gamma));
  return k;
}

namespace detail {

struct Block2 {
  cplx a00, a01, a10, a11;
};

inline Block2 x_rotation_block(double omega, bool conjugated) {
  const double c = std::cos(omega);
  const cplx off(0.0, conjugated ? std::sin(omega) : -std::sin(omega));
  return {c, off, off, c};
}

// Applies a 2x2 block to `target_bit` of every index, restricted to indices
// whose `control_bit` is set (control_bit < 0: unconditional). `data` holds
// 2^total_bits amplitudes.
inline void apply_block(cplx* data, int total_bits, int target_bit, int control_bit,
                        const Block2& g) {
  const std::size_t dim = std::size_t{1} << total_bits;
  const std::size_t tmask = std::size_t{1} << target_bit;
  const std::size_t cmask = control_bit >= 0 ? (std::size_t{1} << control_bit) : 0;
  for (std::size_t base = 0; base < dim; base += 2 * tmask) {
    for (std::size_t low = 0; low < tmask; ++low) {
      const std::size_t i0 = base + low;
      if (cmask && !(i0 & cmask)) continue;
      const cplx a0 = data[i0];
      const cplx a1 = data[i0 + tmask];
      data[i0] = g.a00 * a0 + g.a01 * a1;
      data[i0 + tmask] = g.a10 * a0 + g.a11 * a1;
    }
  }
}

// Brickwork unitary on the register occupying bits [reg, reg+sites) of a
// 2^total_bits array: even layer (boundary rotation of site 1, then pairs
// (2,3), (4,5), ...) followed by the odd layer ((1,2), (3,4), ...).
// `conjugated` applies the complex conjugate gates (for acting on the
// column index of a density matrix).
inline void apply_brickwork_raw(cplx* data, int total_bits, int reg, int sites, double omega,
                                bool conjugated) {
  const Block2 rot = x_rotation_block(omega, conjugated);
  apply_block(data, total_bits, reg, -1, rot);  // site 1, virtual control pinned up
  for (int control = 2; control + 1 <= sites; control += 2)
    apply_block(data, total_bits, reg + control, reg + control - 1, rot);
  for (int control = 1; control + 1 <= sites; control += 2)
    apply_block(data, total_bits, reg + control, reg + control - 1, rot);
}

// Entrywise measurement-layer weights for a density matrix. For a site with
// row bit a and column bit b the two-term (tilted) Kraus sum multiplies the
// entry by 1 (a=b=0), cos g (a!=b) or cos^2 g + e^{-s} sin^2 g (a=b=1);
// sites listed in `conditioned_mask` keep only the outcome-0 term, replacing
// the last weight by cos^2 g. Returns the trace after reweighting.
struct MaskWeights {
  double offdiag;  // weight for (0,1)/(1,0) site patterns
  double diag1;    // weight for (1,1)
};

inline MaskWeights full_mask(double gamma, double s) {
  const double c = std::cos(gamma), sn = std::sin(gamma);
  return {c, c * c + std::exp(-s) * sn * sn};
}

inline MaskWeights conditioned_mask(double gamma) {
  const double c = std::cos(gamma);
  return {c, c * c};
}

inline double apply_measurement_masks(DensityMatrix& rho, const MaskWeights& outside,
                                      const MaskWeights& inside, BasisIndex inside_mask) {
  const std::size_t dim = static_cast<std::size_t>(rho.entries.rows());
  const int sites = rho.sites;
  std::array<double, 65> pow_out_d, pow_out_o, pow_in_d, pow_in_o;
  pow_out_d[0] = pow_out_o[0] = pow_in_d[0] = pow_in_o[0] = 1.0;
  for (int k = 1; k <= sites; ++k) {
    pow_out_d[k] = pow_out_d[k - 1] * outside.diag1;
    pow_out_o[k] = pow_out_o[k - 1] * outside.offdiag;
    pow_in_d[k] = pow_in_d[k - 1] * inside.diag1;
    pow_in_o[k] = pow_in_o[k - 1] * inside.offdiag;
  }
  const BasisIndex out_mask = ((dim - 1)) & ~inside_mask;
  cplx* data = rho.entries.data();
  double trace = 0.0;
  for (std::size_t n = 0; n < dim; ++n) {
    cplx* col = data + n * dim;
    for (std::size_t m = 0; m < dim; ++m) {
      const BasisIndex both = m & n;
      const BasisIndex diff = m ^ n;
      const double w = pow_out_d[std::popcount(both & out_mask)] *
                       pow_out_o[std::popcount(diff & out_mask)] *
                       pow_in_d[std::popcount(both & inside_mask)] *
                       pow_in_o[std::popcount(diff & inside_mask)];
      col[m] *= w;
    }
    trace += col[n].real();
  }
  return trace;
}

}  // namespace detail

// One brickwork layer pair applied to a pure state; norm preserving.
inline StateVector apply_brickwork(StateVector psi, const CircuitParams& params) {
  if (psi.amp.size() != params.dim()) throw std::invalid_argument("apply_brickwork: dimension mismatch");
  detail::apply_brickwork_raw(psi.amp.data(), params.sites, 0, params.sites, params.omega, false);
  return psi;
}

// Weak measurement of `site` (1-based): draws the outcome with its Born
// probability and collapses/renormalizes the state.
inline std::pair<int, StateVector> measure_site(StateVector psi, int site, double gamma, Rng& rng) {
  const BasisIndex mask = BasisIndex{1} << (site - 1);
  const double sg = std::sin(gamma), cg = std::cos(gamma);
  double occ = 0.0;
  for (Eigen::Index m = 0; m < psi.amp.size(); ++m)
    if (m & static_cast<Eigen::Index>(mask)) occ += std::norm(psi.amp[m]);
  const double p1 = sg * sg * occ;
  const int outcome = rng.next_double() < p1 ? 1 : 0;
  if (outcome == 1) {
    const double inv = 1.0 / std::sqrt(p1);
    const cplx factor = cplx(0, -sg) * inv;
    for (Eigen::Index m = 0; m < psi.amp.size(); ++m)
      psi.amp[m] = (m & static_cast<Eigen::Index>(mask)) ? factor * psi.amp[m] : cplx(0);
  } else {
    const double inv = 1.0 / std::sqrt(1.0 - p1);
    for (Eigen::Index m = 0; m < psi.amp.size(); ++m)
      psi.amp[m] *= (m & static_cast<Eigen::Index>(mask)) ? cg * inv : inv;
  }
  return {outcome, std::move(psi)};
}

struct TrajectoryResult {
  MeasurementRecord record;
  StateVector final_state;
  // Post-measurement occupation expectations, [(step-1)*sites + (site-1)].
  std::vector<double> occupations;
};

// Samples one stochastic realization: T repetitions of the brickwork
// unitary followed by measurements of sites 1..L in ascending order. The
// per-site measurement maps commute, so the order only fixes how the seed
// is consumed, not the statistics.
inline TrajectoryResult sample_trajectory(const CircuitParams& params, StateVector initial,
                                          std::uint64_t seed) {
  params.validate();
  check_state_sites(params.sites);
  if (initial.amp.size() != params.dim())
    throw std::invalid_argument("sample_trajectory: dimension mismatch");
  Rng rng = Rng::substream(seed, 0);
  TrajectoryResult out;
  out.record.resize(params.sites, params.steps);
  out.record.seed = seed;
  out.occupations.assign(static_cast<std::size_t>(params.sites) * params.steps, 0.0);
  StateVector psi = std::move(initial);
  for (int t = 1; t <= params.steps; ++t) {
    psi = apply_brickwork(std::move(psi), params);
    for (int site = 1; site <= params.sites; ++site) {
      auto [k, next] = measure_site(std::move(psi), site, params.gamma, rng);
      psi = std::move(next);
      out.record.at(site, t) = static_cast<std::uint8_t>(k);
    }
    for (int site = 1; site <= params.sites; ++site)
      out.occupations[static_cast<std::size_t>(t - 1) * params.sites + (site - 1)] =
          psi.occupation(site);
  }
  out.final_state = std::move(psi);
  return out;
}

// Uniformly random computational basis state; together with trajectory
// averaging this unravels the maximally mixed initial condition.
inline StateVector sample_mixed_initial(int sites, Rng& rng) {
  return basis_state(sites, rng.next_below(BasisIndex{1} << sites));
}

inline void unitary_conjugate_inplace(DensityMatrix& rho, const CircuitParams& params) {
  if (rho.entries.rows() != params.dim())
    throw std::invalid_argument("channel: dimension mismatch");
  const int bits = 2 * params.sites;
  // rho is column-major: row index bits are [0, L), column index bits
  // [L, 2L). Left multiplication by U acts on the row bits, right
  // multiplication by U^dagger is the conjugated brickwork on column bits.
  detail::apply_brickwork_raw(rho.entries.data(), bits, 0, params.sites, params.omega, false);
  detail::apply_brickwork_raw(rho.entries.data(), bits, params.sites, params.sites, params.omega,
                              true);
}

// Average (s = 0) channel step: unitary conjugation followed by the
// per-site two-term Kraus sums. Trace and Hermiticity preserving.
inline void channel_step_inplace(DensityMatrix& rho, const CircuitParams& params) {
  unitary_conjugate_inplace(rho, params);
  detail::apply_measurement_masks(rho, detail::full_mask(params.gamma, 0.0),
                                  detail::conditioned_mask(params.gamma), 0);
}

inline DensityMatrix channel_step(DensityMatrix rho, const CircuitParams& params) {
  channel_step_inplace(rho, params);
  return rho;
}

// Tilted channel step with counting field s: outcome-1 Kraus terms carry an
// extra e^{-s}. Renormalizes the state and returns log of the trace it
// removed, so that callers accumulate log Z stably.
inline double tilted_step_inplace(DensityMatrix& rho, const CircuitParams& params, double s) {
  unitary_conjugate_inplace(rho, params);
  const double trace = detail::apply_measurement_masks(
      rho, detail::full_mask(params.gamma, s), detail::conditioned_mask(params.gamma), 0);
  if (!(trace > 1e-300))
    throw std::runtime_error("tilted channel: trace underflow (horizon too long for this s)");
  rho.entries /= trace;
  return std::log(trace);
}

inline std::pair<DensityMatrix, double> tilted_channel_step(DensityMatrix rho,
                                                            const CircuitParams& params,
                                                            double s) {
  const double inc = tilted_step_inplace(rho, params, s);
  return {std::move(rho), inc};
}

// Conditioned step for inactive-cluster probabilities: sites in
// `conditioned_sites` keep only their outcome-0 Kraus term, every other
// site gets the full two-term sum. Renormalizes and returns the log of the
// removed trace (the log survival weight of this step).
inline double conditioned_step_inplace(DensityMatrix& rho, const CircuitParams& params,
                                       BasisIndex conditioned_sites) {
  unitary_conjugate_inplace(rho, params);
  const double trace = detail::apply_measurement_masks(rho, detail::full_mask(params.gamma, 0.0),
                                                       detail::conditioned_mask(params.gamma),
                                                       conditioned_sites);
  if (!(trace > 1e-300)) throw std::runtime_error("conditioned channel: trace underflow");
  rho.entries /= trace;
  return std::log(trace);
}

}  // namespace eastsim
