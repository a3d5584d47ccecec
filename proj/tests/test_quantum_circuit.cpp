#include <catch2/catch_amalgamated.hpp>

#include "eastsim/quantum_circuit.hpp"

#include <cmath>

#include "support/dense_reference.hpp"

using namespace eastsim;
using Catch::Approx;

namespace {

double matrix_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

StateVector make_random_state(int sites, Rng& rng) {
  StateVector psi;
  psi.sites = sites;
  psi.amp = reference::random_state(sites, rng);
  return psi;
}

DensityMatrix make_random_density(int sites, Rng& rng) {
  DensityMatrix rho;
  rho.sites = sites;
  rho.entries = reference::random_density(sites, rng);
  return rho;
}

}  // namespace

TEST_CASE("east gate blocks: identity on control-down, x rotation on control-up") {
  const auto id = east_gate(0.0);
  REQUIRE(matrix_distance(id.matrix, Eigen::Matrix4cd::Identity()) < 1e-15);

  for (double omega : {0.1, 0.7, 2.0}) {
    const auto g = east_gate(omega);
    REQUIRE(matrix_distance(g.matrix * g.matrix.adjoint(), Eigen::Matrix4cd::Identity()) < 1e-12);
    // control-down 2x2 block is identity
    REQUIRE(matrix_distance(g.matrix.block<2, 2>(0, 0), Eigen::Matrix2cd::Identity()) < 1e-15);
    REQUIRE(g.matrix.block<2, 2>(0, 2).cwiseAbs().maxCoeff() < 1e-15);
    REQUIRE(g.matrix.block<2, 2>(2, 0).cwiseAbs().maxCoeff() < 1e-15);
  }

  // matrix-exponential oracle on the control-up block
  const auto g = east_gate(0.1);
  Eigen::Vector4cd in = Eigen::Vector4cd::Zero();
  in[2] = 1.0;  // control up, target down
  const Eigen::Vector4cd out = g.matrix * in;
  REQUIRE(std::abs(out[2] - cplx(0.99500416527802577, 0)) < 1e-14);
  REQUIRE(std::abs(out[3] - cplx(0, -0.09983341664682815)) < 1e-14);

  // constraint blocks the transition: |01> unchanged for any omega
  const auto g2 = east_gate(1.3);
  Eigen::Vector4cd blocked = Eigen::Vector4cd::Zero();
  blocked[1] = 1.0;
  REQUIRE((g2.matrix * blocked - blocked).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("kraus completeness holds for every measurement strength") {
  for (double gamma : {0.0, 0.1, 0.3, 0.9, 1.4, kPi / 2}) {
    const auto k = kraus_pair(gamma);
    const Eigen::Matrix2cd sum = k.k0.adjoint() * k.k0 + k.k1.adjoint() * k.k1;
    REQUIRE(matrix_distance(sum, Eigen::Matrix2cd::Identity()) < 1e-14);
  }
}

TEST_CASE("brickwork layer matches the dense unitary oracle") {
  Rng rng(21);
  for (int sites = 1; sites <= 5; ++sites) {
    for (double omega : {0.0, 0.1, 0.9}) {
      const CircuitParams params{sites, 1, omega, 0.3};
      auto psi = make_random_state(sites, rng);
      const Eigen::VectorXcd expected = reference::brickwork_unitary(sites, omega) * psi.amp;
      const auto evolved = apply_brickwork(psi, params);
      REQUIRE((evolved.amp - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("brickwork preserves the norm and omega=0 freezes the state") {
  Rng rng(22);
  const CircuitParams params{6, 1, 0.63, 0.2};
  auto psi = make_random_state(6, rng);
  const auto before = psi.amp;
  const auto evolved = apply_brickwork(psi, params);
  REQUIRE(evolved.norm() == Approx(1.0).margin(1e-12));

  const CircuitParams frozen{6, 1, 0.0, 0.2};
  StateVector copy;
  copy.sites = 6;
  copy.amp = before;
  const auto still = apply_brickwork(copy, frozen);
  REQUIRE((still.amp - before).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("brickwork at omega=pi/2 ignites the first two sites from vacuum") {
  const CircuitParams params{3, 1, kPi / 2, 0.0};
  auto evolved = apply_brickwork(basis_state(3, 0), params);
  REQUIRE(evolved.occupation(1) == Approx(1.0).margin(1e-12));
  REQUIRE(evolved.occupation(2) == Approx(1.0).margin(1e-12));
  REQUIRE(evolved.occupation(3) == Approx(0.0).margin(1e-12));
  // equality with the dense oracle including the global phase
  const Eigen::VectorXcd expected =
      reference::brickwork_unitary(3, kPi / 2) * basis_state(3, 0).amp;
  REQUIRE((evolved.amp - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("measure_site collapses with Born probabilities") {
  // |0>: outcome 0 with certainty, state untouched
  {
    Rng rng(5);
    auto [k, post] = measure_site(basis_state(1, 0), 1, 1.1, rng);
    REQUIRE(k == 0);
    REQUIRE(std::abs(post.amp[0] - cplx(1, 0)) < 1e-15);
  }
  // gamma = 0: no measurement at all
  {
    Rng rng(6);
    StateVector psi;
    psi.sites = 1;
    psi.amp = Eigen::Vector2cd(cplx(std::sqrt(0.3), 0), cplx(0, std::sqrt(0.7)));
    auto [k, post] = measure_site(psi, 1, 0.0, rng);
    REQUIRE(k == 0);
    REQUIRE(std::abs(post.amp[1] - cplx(0, std::sqrt(0.7))) < 1e-15);
  }
  // (|0>+|1>)/sqrt(2) under projective measurement: half the outcomes are 1
  // and the collapsed state is exactly -i|1>.
  int ones = 0;
  const int trials = 4000;
  for (int seed = 0; seed < trials; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed));
    StateVector psi;
    psi.sites = 1;
    psi.amp = Eigen::Vector2cd(cplx(1 / std::sqrt(2.0), 0), cplx(1 / std::sqrt(2.0), 0));
    auto [k, post] = measure_site(psi, 1, kPi / 2, rng);
    REQUIRE(post.norm() == Approx(1.0).margin(1e-12));
    if (k == 1) {
      ++ones;
      REQUIRE(std::abs(post.amp[0]) < 1e-12);
      REQUIRE(std::abs(post.amp[1] - cplx(0, -1)) < 1e-12);
    }
  }
  const double se = std::sqrt(0.25 / trials);
  REQUIRE(std::abs(ones / static_cast<double>(trials) - 0.5) < 3 * se);
}

TEST_CASE("trajectories are frozen when omega=0 and classical when gamma=pi/2") {
  const CircuitParams frozen{4, 6, 0.0, kPi / 2};
  const auto traj = sample_trajectory(frozen, basis_state(4, 0), 1);
  REQUIRE(activity(traj.record) == 0);

  const CircuitParams classical{4, 8, 0.4, kPi / 2};
  for (std::uint64_t seed : {2ull, 3ull}) {
    const auto t = sample_trajectory(classical, basis_state(4, 0b0101), seed);
    for (double occ : t.occupations)
      REQUIRE(std::min(std::abs(occ), std::abs(occ - 1.0)) < 1e-9);
    // one-to-one correspondence: outcomes equal post-measurement occupations
    for (int step = 1; step <= classical.steps; ++step)
      for (int site = 1; site <= classical.sites; ++site) {
        const double occ = t.occupations[(step - 1) * classical.sites + (site - 1)];
        REQUIRE(static_cast<int>(std::lround(occ)) == t.record.at(site, step));
      }
  }
}

TEST_CASE("trajectories are seed-reproducible and seed-sensitive") {
  const CircuitParams params{5, 7, 0.3, 0.8};
  Rng init(77);
  const auto initial = sample_mixed_initial(5, init);
  const auto a = sample_trajectory(params, initial, 123);
  const auto b = sample_trajectory(params, initial, 123);
  REQUIRE(a.record.outcomes == b.record.outcomes);
  REQUIRE((a.final_state.amp - b.final_state.amp).cwiseAbs().maxCoeff() == 0.0);

  const auto c = sample_trajectory(params, initial, 124);
  bool differs = c.record.outcomes != a.record.outcomes;
  REQUIRE(differs);
}

TEST_CASE("mean sampled activity reproduces sin^2(gamma)/2") {
  const CircuitParams params{4, 5, 0.4, 0.3};
  const int trajectories = 10000;
  double sum = 0.0, sum_sq = 0.0;
  for (int j = 0; j < trajectories; ++j) {
    Rng init = Rng::substream(900, static_cast<std::uint64_t>(j) * 2 + 1);
    const auto traj =
        sample_trajectory(params, sample_mixed_initial(4, init), static_cast<std::uint64_t>(j));
    const double a = static_cast<double>(activity(traj.record)) /
                     (static_cast<double>(params.sites) * params.steps);
    sum += a;
    sum_sq += a * a;
  }
  const double mean = sum / trajectories;
  const double var = sum_sq / trajectories - mean * mean;
  const double se = std::sqrt(var / trajectories);
  const double expected = std::sin(0.3) * std::sin(0.3) / 2.0;
  REQUIRE(std::abs(mean - expected) < 3 * se);
}

TEST_CASE("channel step fixes the maximally mixed state") {
  for (double gamma : {0.3, 0.9, kPi / 2}) {
    const CircuitParams params{3, 1, 0.7, gamma};
    const auto rho = channel_step(maximally_mixed_state(3), params);
    REQUIRE(matrix_distance(rho.entries, maximally_mixed_state(3).entries) < 1e-12);
  }
}

TEST_CASE("channel step equals the explicit outcome-sum oracle") {
  Rng rng(31);
  for (int sites = 1; sites <= 4; ++sites) {
    for (double gamma : {0.0, 0.5, 1.2, kPi / 2}) {
      const CircuitParams params{sites, 1, 0.37, gamma};
      auto rho = make_random_density(sites, rng);
      const auto expected =
          reference::channel_step_outcome_sum(rho.entries, sites, params.omega, gamma);
      const auto stepped = channel_step(rho, params);
      REQUIRE(matrix_distance(stepped.entries, expected) < 1e-12);
      REQUIRE(stepped.trace_real() == Approx(1.0).margin(1e-12));
      REQUIRE(matrix_distance(stepped.entries, stepped.entries.adjoint()) < 1e-12);
    }
  }
}

TEST_CASE("gamma=0 channel step is a pure unitary conjugation") {
  Rng rng(32);
  const CircuitParams params{3, 1, 0.8, 0.0};
  auto rho = make_random_density(3, rng);
  const auto u = reference::brickwork_unitary(3, 0.8);
  const Eigen::MatrixXcd expected = u * rho.entries * u.adjoint();
  REQUIRE(matrix_distance(channel_step(rho, params).entries, expected) < 1e-12);
}

TEST_CASE("projective channel keeps diagonal states diagonal") {
  Rng rng(33);
  const CircuitParams params{4, 1, 0.5, kPi / 2};
  Eigen::VectorXd probs(16);
  for (int i = 0; i < 16; ++i) probs[i] = rng.next_double();
  probs /= probs.sum();
  auto rho = diagonal_density(4, probs);
  const auto stepped = channel_step(rho, params);
  for (int m = 0; m < 16; ++m)
    for (int n = 0; n < 16; ++n)
      if (m != n) REQUIRE(std::abs(stepped.entries(m, n)) < 1e-13);
  REQUIRE(stepped.trace_real() == Approx(1.0).margin(1e-12));
}

TEST_CASE("tilted step at s=0 is the plain channel with zero log increment") {
  Rng rng(34);
  const CircuitParams params{3, 1, 0.6, 0.9};
  auto rho = make_random_density(3, rng);
  const auto plain = channel_step(rho, params);
  auto [tilted, increment] = tilted_channel_step(rho, params, 0.0);
  REQUIRE(std::abs(increment) < 1e-12);
  REQUIRE(matrix_distance(tilted.entries, plain.entries) < 1e-12);
}

TEST_CASE("single tilted step from the mixed state factorizes over sites") {
  // Starting from the stationary state the outcome of every site is an
  // independent Bernoulli(sin^2 g / 2) draw, so the trace multiplier is
  // ((1-a0) + a0 e^{-s})^L.
  for (double gamma : {0.4, 1.0}) {
    for (double s : {-0.7, 0.5, 2.0}) {
      const CircuitParams params{2, 1, 0.3, gamma};
      auto [rho, increment] = tilted_channel_step(maximally_mixed_state(2), params, s);
      const double a0 = std::sin(gamma) * std::sin(gamma) / 2.0;
      const double expected = std::pow((1.0 - a0) + a0 * std::exp(-s), 2.0);
      REQUIRE(std::exp(increment) == Approx(expected).margin(1e-12));
      // cross-check against the exhaustive outcome enumeration
      const double enumerated =
          reference::partition_function_enumeration(2, 1, params.omega, gamma, s);
      REQUIRE(std::exp(increment) == Approx(enumerated).margin(1e-12));
    }
  }
}

TEST_CASE("trajectory averages converge to the channel at the 1/sqrt(N) rate") {
  const CircuitParams params{4, 3, 0.5, 0.7};
  DensityMatrix rho = maximally_mixed_state(4);
  for (int t = 0; t < params.steps; ++t) channel_step_inplace(rho, params);
  const int trajectories = 10000;
  std::vector<double> occ_sum(4, 0.0), occ_sq(4, 0.0);
  for (int j = 0; j < trajectories; ++j) {
    Rng init = Rng::substream(4242, static_cast<std::uint64_t>(j) * 2 + 1);
    const auto traj =
        sample_trajectory(params, sample_mixed_initial(4, init), static_cast<std::uint64_t>(j));
    for (int site = 1; site <= 4; ++site) {
      const double v = traj.occupations[(params.steps - 1) * 4 + (site - 1)];
      occ_sum[site - 1] += v;
      occ_sq[site - 1] += v * v;
    }
  }
  for (int site = 1; site <= 4; ++site) {
    const double mean = occ_sum[site - 1] / trajectories;
    const double var = occ_sq[site - 1] / trajectories - mean * mean;
    const double se = std::sqrt(var / trajectories);
    REQUIRE(std::abs(mean - rho.occupation(site)) < 3 * std::max(se, 1e-6));
  }
}
