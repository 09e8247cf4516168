#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "qherald/herald.hpp"
#include "support.hpp"

using namespace qherald;
using fock::occupation;
using fock::OccupationVector;
using herald::KrausOperator;

namespace {

const std::vector<OccupationVector> kSingleRail = {occupation({0}), occupation({1})};
const std::vector<OccupationVector> kDualRail = {occupation({0, 0}), occupation({1, 0}),
                                                 occupation({0, 1}), occupation({1, 1})};

KrausOperator expected(const std::vector<OccupationVector>& in, const std::vector<OccupationVector>& out,
                       const std::map<std::pair<std::size_t, OccupationVector>, double>& entries) {
  KrausOperator k{in, out, optics::Matrix::Zero(static_cast<Eigen::Index>(out.size()),
                                                static_cast<Eigen::Index>(in.size())), {}};
  for (const auto& [key, v] : entries) {
    const auto row = std::find(out.begin(), out.end(), key.second) - out.begin();
    k.matrix(row, static_cast<Eigen::Index>(key.first)) = v;
  }
  return k;
}

// Extracted operators scaled by √(pattern count) and corrected by the fitted
// feed-forward; returns the worst deviation from `ideal`.
double corrected_deviation(const herald::CircuitDescription& c, const std::vector<OccupationVector>& in,
                           const std::function<KrausOperator(const std::vector<OccupationVector>&)>& ideal) {
  const auto ks = herald::extract_kraus(c, in);
  const double scale = std::sqrt(static_cast<double>(ks.size()));
  double worst = 0.0;
  for (auto k : ks) {
    k.matrix *= scale;
    const auto ref = ideal(k.basis_out);
    const auto ff = herald::fit_feedforward(k, ref);
    if (!ff) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, herald::max_abs_difference(herald::apply_feedforward(k, *ff), ref));
  }
  return worst;
}

double qubit_fraction(const fock::BranchEnsemble& e) {
  double q = 0.0, total = 0.0;
  for (const auto& br : e.branches()) {
    q += br.weight * (std::norm(br.state.amplitude(occupation({1, 0}))) +
                      std::norm(br.state.amplitude(occupation({0, 1}))));
    total += br.weight * br.state.norm_sq();
  }
  return q / total;
}

}  // namespace

class KrausByT : public ::testing::TestWithParam<double> {};

TEST_P(KrausByT, RalphLundIsDiagonalAttenuation) {
  const double t = GetParam();
  const auto dev = corrected_deviation(herald::ralph_lund(t), kSingleRail, [&](const auto& out) {
    return expected(kSingleRail, out, {{{0, occupation({0})}, std::sqrt(1 - t)}, {{1, occupation({1})}, std::sqrt(t)}});
  });
  EXPECT_LT(dev, 1e-10);
}

TEST_P(KrausByT, QubitAmplifierLeaksTheTwoPhotonTerm) {
  const double t = GetParam();
  const double r = std::sqrt(t * (1 - t));
  const auto dev = corrected_deviation(herald::qubit_amplifier(t), kDualRail, [&](const auto& out) {
    return expected(kDualRail, out,
                    {{{0, occupation({0, 0})}, 1 - t}, {{1, occupation({1, 0})}, r},
                     {{2, occupation({0, 1})}, r}, {{3, occupation({1, 1})}, t}});
  });
  EXPECT_LT(dev, 1e-10);
}

TEST_P(KrausByT, ModifiedAmplifierCancelsVacuum) {
  const double t = GetParam();
  const double r = std::sqrt(t * (1 - t));
  const double b = t / std::numbers::sqrt2;
  const auto dev = corrected_deviation(herald::modified_amplifier(t), kDualRail, [&](const auto& out) {
    return expected(kDualRail, out,
                    {{{1, occupation({1, 0})}, r}, {{2, occupation({0, 1})}, r},
                     {{3, occupation({2, 0})}, b}, {{3, occupation({0, 2})}, b}});
  });
  EXPECT_LT(dev, 1e-10);
}

INSTANTIATE_TEST_SUITE_P(Transmissivities, KrausByT, ::testing::Values(0.1, 0.5, 0.9));

TEST(Herald, VacuumHeraldProbabilities) {
  const double t = 0.3;
  const auto vac2 = testkit::basis_state({0, 0});
  EXPECT_EQ(herald::herald(herald::modified_amplifier(t), vac2).herald_probability, 0.0);
  EXPECT_NEAR(herald::herald(herald::qubit_amplifier(t), vac2).herald_probability, (1 - t) * (1 - t), 1e-14);
  EXPECT_NEAR(herald::herald(herald::ralph_lund(t), testkit::basis_state({0})).herald_probability, 1 - t, 1e-14);
}

TEST(Herald, ModifiedAmplifierNeverHeraldsVacuumInAnyPattern) {
  const auto c = herald::modified_amplifier(0.6);
  const auto e = herald::run(c, fock::BranchEnsemble::pure(herald::prepare(c, testkit::basis_state({0, 0}))));
  const auto det = c.detector_modes();
  const auto dist = herald::outcome_distribution(e, det);
  for (const auto& p : c.accepted_patterns()) {
    const auto it = dist.find(p.counts);
    EXPECT_TRUE(it == dist.end() || it->second < 1e-28);
  }
}

TEST(Herald, LossyHeraldingEqualsLossThenCondition) {
  std::mt19937_64 rng(21);
  const auto amps = testkit::random_amplitudes(4, rng);
  const auto input = fock::make_state(2, {{{0, 0}, amps[0]}, {{1, 0}, amps[1]}, {{0, 1}, amps[2]}, {{1, 1}, amps[3]}});
  const double eta = 0.8;
  for (const auto& c : {herald::modified_amplifier(0.4), herald::qubit_amplifier(0.7)}) {
    const auto e = herald::run(c, fock::BranchEnsemble::pure(herald::prepare(c, input)));
    const auto accepted = c.accepted_patterns();
    testkit::Density fused;
    for (const auto& br : herald::condition_lossy(e, accepted, eta)) testkit::accumulate(fused, br.weight, br.state);
    auto lossy = e;
    for (auto m : c.detector_modes()) lossy = optics::loss({eta, m}, lossy);
    const auto reference = herald::condition(lossy, accepted);
    EXPECT_LT(testkit::max_difference(fused, testkit::density(reference.conditional)), 1e-13);
  }
}

TEST(Herald, DeferredOutputStageCommutesWithHeralding) {
  const auto c = herald::modified_amplifier(0.35);
  const auto [front, tail] = herald::defer_output_stage(c);
  ASSERT_EQ(tail.size(), 1u);
  EXPECT_EQ(tail.front().kind, "symmetric_conjugate");
  const auto input = fock::make_state(2, {{{1, 0}, 0.6}, {{1, 1}, 0.8}});
  const auto full = herald::herald(c, input);
  const auto part = herald::herald(front, input);
  // Tail acts on circuit modes 2, 3, which are survivors 0, 1 after heralding.
  const auto local = tail.front().on({0, 1});
  const auto moved = fock::ensemble_map(part.conditional, [&](const fock::FockState& s) { return optics::apply(local, s); });
  EXPECT_NEAR(full.herald_probability, part.herald_probability, 1e-14);
  EXPECT_LT(testkit::max_difference(testkit::density(full.conditional), testkit::density(moved)), 1e-13);
}

TEST(Herald, QubitFractionBoundMatchesSweep) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const double c00 = u(rng), c01 = u(rng), c10 = u(rng), c11 = u(rng);
    const auto input = fock::make_state(2, {{{0, 0}, c00}, {{0, 1}, c01}, {{1, 0}, c10}, {{1, 1}, c11}});
    auto fraction = [&](double t) {
      return qubit_fraction(herald::herald(herald::qubit_amplifier(t), input).conditional);
    };
    double lo = 1e-6, hi = 1 - 1e-6;
    const double g = (std::sqrt(5.0) - 1) / 2;
    for (int i = 0; i < 80; ++i) {
      const double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
      if (fraction(a) < fraction(b))
        lo = a;
      else
        hi = b;
    }
    const auto bound = herald::qubit_fraction_bound(c00, c01, c10, c11);
    EXPECT_NEAR(bound.fraction, fraction((lo + hi) / 2), 1e-6);
    EXPECT_NEAR(bound.t_opt, (lo + hi) / 2, 1e-4);
  }
}

TEST(Herald, TextRoundTrip) {
  for (const char* name : {"ralph_lund", "qubit_amplifier", "modified_amplifier"}) {
    const auto c = herald::circuit_by_name(name, 0.37);
    const auto text = herald::to_text(c);
    EXPECT_EQ(herald::to_text(herald::parse_circuit(text)), text);
  }
}

TEST(Herald, GoldenModifiedAmplifierText) {
  std::ifstream f(std::string(QHERALD_GOLDEN_DIR) + "/modified_amplifier_t0.5.txt");
  ASSERT_TRUE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  EXPECT_EQ(herald::to_text(herald::modified_amplifier(0.5)), ss.str());
}

TEST(Herald, ParseRejectsMalformedText) {
  EXPECT_THROW(herald::parse_circuit("circuit x\nmodes two\n"), std::invalid_argument);
  EXPECT_THROW(herald::parse_circuit("frobnicate 1\n"), std::invalid_argument);
}

TEST(Herald, ValidateRejectsInconsistentCircuits) {
  auto c = herald::modified_amplifier(0.5);
  c.output_modes = {0, 2};
  EXPECT_THROW(herald::validate(c), std::invalid_argument);
  auto d = herald::ralph_lund(0.5);
  d.preparation.pop_back();
  EXPECT_THROW(herald::validate(d), std::invalid_argument);
}

TEST(Herald, LossyCircuitHasNoKrausForm) {
  auto c = herald::ralph_lund(0.5);
  c.elements.push_back(optics::LossSpec{0.9, 1});
  EXPECT_THROW(herald::extract_kraus(c, kSingleRail), std::invalid_argument);
}
