#pragma once

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <vector>

#include "eastsim/classical_east.hpp"
#include "eastsim/quantum_circuit.hpp"

// Perturbative classical limit for strong monitoring: after adiabatic
// elimination of the coherences (damped by cos g per step), the diagonal of
// the average state evolves under the continuous-time East generator
//   W = w2 * sum_i n_{i-1} (sigma_i^x - 1),   n_0 = 1,
// at an effective rate w2 per step. Two candidate rates circulate for this
// model: w2 = cot^2(g/2) omega^2 and w2 = omega^2 / (1 - cos g). They agree
// only at g = pi/2. The exact slow-mode eigenvalue of the L = 1 channel,
//   lambda = 1 - 2 omega^2 cot^2(g/2) + O(omega^4),
// singles out the cotangent form, which is therefore the default; both are
// kept so that the comparison harness can report the discrepancy.

namespace eastsim {

enum class FlipRateForm {
  cot_half_angle,  // cot^2(g/2) omega^2
  geometric_sum,   // omega^2 / (1 - cos g)
};

inline const char* to_string(FlipRateForm form) {
  return form == FlipRateForm::cot_half_angle ? "cot_half_angle" : "geometric_sum";
}

inline double effective_flip_rate(double omega, double gamma,
                                  FlipRateForm form = FlipRateForm::cot_half_angle) {
  if (!(gamma > 0.0) || gamma > kPi + 1e-12)
    throw std::invalid_argument("effective_flip_rate: needs gamma in (0, pi]");
  if (form == FlipRateForm::cot_half_angle) {
    const double t = std::tan(gamma / 2.0);
    return (omega * omega) / (t * t);
  }
  return omega * omega / (1.0 - std::cos(gamma));
}

struct EffectiveParams {
  double omega_tilde_sq = 0.0;
  int sites = 1;

  // The single-step linear form stays a stochastic matrix only while every
  // diagonal entry is non-negative.
  bool linear_form_valid() const { return sites * omega_tilde_sq <= 1.0; }
};

// East-model Markov generator (column convention: column n carries the
// outgoing rates of configuration n; columns sum to zero).
inline Eigen::MatrixXd east_generator(int sites, double omega_tilde_sq) {
  check_transition_sites(sites);
  const std::int64_t dim = std::int64_t{1} << sites;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(dim, dim);
  for (std::int64_t n = 0; n < dim; ++n) {
    for (int site = 1; site <= sites; ++site) {
      const bool eligible = site == 1 || ((n >> (site - 2)) & 1);
      if (!eligible) continue;
      const std::int64_t flipped = n ^ (std::int64_t{1} << (site - 1));
      w(flipped, n) += omega_tilde_sq;
      w(n, n) -= omega_tilde_sq;
    }
  }
  return w;
}

enum class StepForm { linear, exponential };

struct EffectiveStep {
  Eigen::MatrixXd matrix;
  StepForm form = StepForm::exponential;
  bool fell_back_to_exponential = false;
};

// Single-step matrix of the effective chain: 1 + W when the linear form is
// requested and valid, exp(W) otherwise. exp(W) is stochastic for every
// rate; the linear form only inside its validity regime.
inline EffectiveStep effective_transition_step(int sites, double omega_tilde_sq,
                                               StepForm requested = StepForm::exponential) {
  if (omega_tilde_sq < 0.0) throw std::invalid_argument("negative effective rate");
  const Eigen::MatrixXd w = east_generator(sites, omega_tilde_sq);
  EffectiveStep step;
  if (requested == StepForm::linear) {
    if (EffectiveParams{omega_tilde_sq, sites}.linear_form_valid()) {
      step.matrix = Eigen::MatrixXd::Identity(w.rows(), w.cols()) + w;
      step.form = StepForm::linear;
      return step;
    }
    step.fell_back_to_exponential = true;
  }
  step.matrix = w.exp();
  step.form = StepForm::exponential;
  return step;
}

// Evolves (a) the full channel and (b) the effective chain from the same
// diagonal distribution and returns the max-norm deviation of the diagonal
// occupation probabilities after each step.
inline std::vector<double> compare_effective_vs_full(const CircuitParams& params, int horizon,
                                                     FlipRateForm form = FlipRateForm::cot_half_angle,
                                                     StepForm step_form = StepForm::exponential,
                                                     const Eigen::VectorXd* initial = nullptr) {
  params.validate();
  check_density_sites(params.sites);
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  const std::int64_t dim = params.dim();
  Eigen::VectorXd dist = initial ? *initial : Eigen::VectorXd::Zero(dim);
  if (!initial) dist[0] = 1.0;  // all sites down
  if (dist.size() != dim) throw std::invalid_argument("compare_effective_vs_full: bad initial");
  DensityMatrix rho = diagonal_density(params.sites, dist);
  Eigen::VectorXd mu = dist;
  const double rate = params.omega == 0.0 ? 0.0
                                          : effective_flip_rate(params.omega, params.gamma, form);
  const EffectiveStep step = effective_transition_step(params.sites, rate, step_form);
  std::vector<double> deviation(horizon);
  for (int t = 0; t < horizon; ++t) {
    channel_step_inplace(rho, params);
    mu = step.matrix * mu;
    deviation[t] = (rho.diagonal_real() - mu).cwiseAbs().maxCoeff();
  }
  return deviation;
}

// Collapse variable for comparing cluster crossover times across gamma:
// tan^2(g/2) tau measures tau in units of the inverse effective flip rate.
inline double rescaled_time(double tau, double gamma) {
  const double t = std::tan(gamma / 2.0);
  return t * t * tau;
}

}  // namespace eastsim
