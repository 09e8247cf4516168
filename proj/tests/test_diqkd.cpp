#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qherald/diqkd.hpp"
#include "qherald/herald.hpp"
#include "support.hpp"

using namespace qherald;
using namespace qherald::diqkd;

namespace {

constexpr double kTsirelson = 2.0 * std::numbers::sqrt2;

double h(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return -x * std::log2(x) - (1 - x) * std::log2(1 - x);
}

fock::BranchEnsemble phi_plus() { return fock::BranchEnsemble::pure(sources::epr_order(1)); }

const ModePair kAlice{0, 1};
const ModePair kBob{2, 3};

}  // namespace

TEST(Diqkd, BinaryEntropy) {
  EXPECT_DOUBLE_EQ(entropy_h(0.5), 1.0);
  EXPECT_DOUBLE_EQ(entropy_h(0.0), 0.0);
  EXPECT_DOUBLE_EQ(entropy_h(1.0), 0.0);
  EXPECT_NEAR(entropy_h(0.11), h(0.11), 1e-15);
  EXPECT_NEAR(entropy_h(0.11), 0.499916, 1e-6);
  EXPECT_THROW(entropy_h(1.1), std::domain_error);
  EXPECT_THROW(entropy_h(-0.2), std::domain_error);
}

TEST(Diqkd, Chi) {
  EXPECT_NEAR(chi(2.0), 1.0, 1e-15);
  EXPECT_NEAR(chi(kTsirelson), 0.0, 1e-12);
  EXPECT_NEAR(chi(2.5), h(0.875), 1e-12);
  EXPECT_DOUBLE_EQ(chi(1.2), 1.0);
  EXPECT_DOUBLE_EQ(chi(-3.0), 1.0);
}

TEST(Diqkd, RestrictedAnchors) {
  EXPECT_NEAR(key_restricted(1.0, 0.0, 0.0, kTsirelson), 1.0, 1e-12);
  EXPECT_NEAR(key_restricted(1.0, 0.0, 0.0, 2.0), 0.0, 1e-12);
  for (double s : {2.0, 2.3, 2.6, kTsirelson})
    for (double q : {0.0, 0.05, 0.2}) EXPECT_LE(key_restricted(0.4, 0.4, q, s), -h(q) * 0.4 + 1e-12);
  EXPECT_THROW(key_restricted(0.0, 0.1, 0.0, 2.5), std::domain_error);
}

TEST(Diqkd, UnrestrictedAnchors) {
  EXPECT_NEAR(key_unrestricted(1.0, 0.0, kTsirelson), 1.0, 1e-12);
  for (double mu = 0.0; mu <= 1.0; mu += 0.05)
    for (double q = 0.0; q <= 0.5; q += 0.05)
      for (double s = -4.0; s <= 2.0; s += 0.25) EXPECT_LE(key_unrestricted(mu, q, s), 0.0);
}

TEST(Diqkd, DetectorIndependentAnchors) {
  EXPECT_NEAR(key_detector_independent(1.0, 0.0), 1.0, 1e-12);
  EXPECT_LT(key_detector_independent(0.9, 0.5), 0.0);
  EXPECT_NEAR(key_detector_independent(0.8, 0.02, 0.5), 0.5 * key_detector_independent(0.8, 0.02), 1e-15);
  double lo = 0.5, hi = 1.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = (lo + hi) / 2;
    (mid - h((1 - mid) / 2) > 0 ? hi : lo) = mid;
  }
  EXPECT_LT(key_detector_independent(lo - 1e-6, 0.0), 0.0);
  EXPECT_GT(key_detector_independent(lo + 1e-6, 0.0), 0.0);
}

TEST(Diqkd, ClassifyOutcomes) {
  EXPECT_EQ(classify(1, 0), bit0);
  EXPECT_EQ(classify(0, 1), bit1);
  EXPECT_EQ(classify(0, 0), inconclusive);
  EXPECT_EQ(classify(1, 1), inconclusive);
  EXPECT_EQ(classify(2, 0), inconclusive);
}

TEST(Diqkd, SettingsAreNormalized) {
  EXPECT_NEAR(make_setting(Party::bob, -std::numbers::pi / 8, Role::bell).angle, 15 * std::numbers::pi / 8, 1e-15);
  EXPECT_THROW(make_setting(Party::alice, std::nan(""), Role::key), std::invalid_argument);
}

TEST(Diqkd, VacuumIsInconclusive) {
  const auto d = measure(fock::BranchEnsemble::pure(fock::FockState::vacuum(4)), standard_settings().alice_key, kAlice);
  EXPECT_DOUBLE_EQ(d[inconclusive], 1.0);
}

TEST(Diqkd, IdealBellStateStatistics) {
  const auto t = tally_settings(phi_plus(), standard_settings(), kAlice, kBob);
  const auto s = summarize(t, Framework::unrestricted);
  EXPECT_NEAR(s.mu_cc, 1.0, 1e-12);
  EXPECT_NEAR(s.Q_cc, 0.0, 1e-12);
  EXPECT_NEAR(s.S, kTsirelson, 1e-12);
  EXPECT_NEAR(s.S_cc, kTsirelson, 1e-12);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      EXPECT_NEAR(std::abs(correlator(t.bell[a][b], Assignment::discard)), 1 / std::numbers::sqrt2, 1e-12);
  EXPECT_NEAR(key_rate(s, Framework::unrestricted).K_raw, 1.0, 1e-10);
}

TEST(Diqkd, UniformTalliesGiveNoCorrelation) {
  Tally t;
  for (auto& row : t) row.fill(1.0 / 9);
  std::array<std::array<Tally, 2>, 2> bell{{{t, t}, {t, t}}};
  EXPECT_NEAR(chsh(bell, Assignment::random), 0.0, 1e-15);
  EXPECT_NEAR(chsh(bell, Assignment::discard), 0.0, 1e-15);
}

TEST(Diqkd, RandomAssignmentShrinksTheBellParameter) {
  // Conclusive fraction μ on each side with ideal correlations: S = μ² · 2√2.
  const double mu = 0.8;
  const auto lossy = optics::loss({mu, 3}, optics::loss({mu, 2}, optics::loss({mu, 1}, optics::loss({mu, 0}, phi_plus()))));
  const auto s = summarize(tally_settings(lossy, standard_settings(), kAlice, kBob), Framework::unrestricted);
  EXPECT_NEAR(s.S, mu * mu * kTsirelson, 1e-12);
  EXPECT_NEAR(s.S_cc, kTsirelson, 1e-12);
  EXPECT_NEAR(s.mu_minus_c, mu, 1e-12);
}

TEST(Diqkd, FusedDetectorLossEqualsExplicitLoss) {
  const auto e = fock::BranchEnsemble::pure(sources::epr_order(2));
  const double eta = 0.7;
  const auto lossy = optics::loss({eta, 3}, optics::loss({eta, 2}, optics::loss({eta, 1}, optics::loss({eta, 0}, e))));
  const auto plan = standard_settings();
  for (const auto& s : {plan.bob_bell[0], plan.bob_bell[1], plan.bob_key}) {
    const auto fused = measure(e, s, kBob, eta);
    const auto explicit_loss = measure(lossy, s, kBob);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(fused[i], explicit_loss[i], 1e-14);
  }
  const auto a = joint_tally(e, plan.alice_bell[1], plan.bob_bell[0], kAlice, kBob, eta);
  const auto b = joint_tally(lossy, plan.alice_bell[1], plan.bob_bell[0], kAlice, kBob);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a[i][j], b[i][j], 1e-14);
}

TEST(Diqkd, LowerBoundBehaviour) {
  TallySummary t;
  t.mu_cc = 0.9;
  t.mu_c = 0.02;
  t.mu_minus_c = 0.95;
  t.S = 2.6;
  t.S_cc = 2.75;
  t.Q_cc = t.Q_minus_c = 0.01;
  t.alice_conclusive = 0.93;
  for (auto f : {Framework::restricted, Framework::unrestricted, Framework::detector_independent}) {
    t.truncation_weight = 0.0;
    const auto base = key_rate(t, f);
    EXPECT_DOUBLE_EQ(lower_bound(t, base).K_lower, base.K_approx);
    t.truncation_weight = 1.0;
    EXPECT_LE(lower_bound(t, key_rate(t, f)).K_lower_raw, 0.0);
    double previous = std::numeric_limits<double>::infinity();
    for (double w = 0.0; w <= 0.02; w += 0.001) {
      t.truncation_weight = w;
      const auto r = lower_bound(t, key_rate(t, f));
      EXPECT_LE(r.K_lower, r.K_approx);
      EXPECT_LE(r.K_lower_raw, previous + 1e-15);
      previous = r.K_lower_raw;
    }
  }
}

TEST(Diqkd, ReportsRecomputeTheRate) {
  TallySummary t;
  t.mu_cc = 0.95;
  t.mu_minus_c = 0.97;
  t.S = t.S_cc = 2.7;
  t.herald_prob = 3e-4;
  const auto r = key_rate(t, Framework::unrestricted);
  EXPECT_GT(r.K_approx, 0.0);
  EXPECT_NEAR(r.rate_per_second, r.K_approx * t.herald_prob * kRepetitionRate, 1e-9);
}

TEST(Diqkd, NoAmplifierSmallPumpApproachesIdealCorrelations) {
  const auto ev = pipeline({1e-5, 0.0, 1.0, 1.0, 6}, Amplifier::none, 0.5, Framework::restricted);
  EXPECT_LT(ev.tallies.Q_cc, 1e-4);
  EXPECT_NEAR(ev.tallies.S_cc, kTsirelson, 1e-4);
  EXPECT_NEAR(ev.tallies.herald_prob, 1.0 - std::pow(1e-5, 3), 1e-12);
}

TEST(Diqkd, SummaryInvariantsOnThePipeline) {
  for (auto amp : {Amplifier::original, Amplifier::modified}) {
    const auto ev = pipeline({3e-3, 2e-3, 0.85, 0.5, 6}, amp, 0.4, Framework::unrestricted);
    const auto& s = ev.tallies;
    for (double p : {s.mu_cc, s.mu_c, s.mu_minus_c, s.herald_prob}) {
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
    }
    EXPECT_LE(s.mu_cc + s.mu_c, 1.0 + 1e-12);
    EXPECT_LE(std::abs(s.S), 4.0);
    EXPECT_LE(s.Q_cc, 0.5 + 1e-12);
    EXPECT_LE(ev.report.K_lower, ev.report.K_approx);
  }
}

TEST(Diqkd, ModifiedAmplifierSuppressesFalseHeralds) {
  const sources::SourceConfig cfg{1e-3, 1e-3, 0.855, 1.0, 6};
  const auto modified = pipeline(cfg, Amplifier::modified, 0.5, Framework::detector_independent);
  const auto original = pipeline(cfg, Amplifier::original, 0.5, Framework::detector_independent);
  EXPECT_LT(modified.tallies.herald_prob, 1e-2 * original.tallies.herald_prob);
  EXPECT_GT(modified.tallies.mu_cc, original.tallies.mu_cc);
}

TEST(Diqkd, OriginalAmplifierConclusiveRateRespectsQubitFractionBound) {
  const double p = 1e-3;
  const auto w = sources::epr_weights(p);
  const double bound = herald::qubit_fraction_bound(std::sqrt(w.kept[0]), std::sqrt(w.kept[1] / 2),
                                                    std::sqrt(w.kept[1] / 2), std::sqrt(w.kept[2] / 3))
                           .fraction;
  for (double t : {0.2, 0.5, 0.8, 0.95}) {
    const auto ev = pipeline({p, 1e-5, 1.0, 1.0, 6}, Amplifier::original, t, Framework::unrestricted);
    EXPECT_LE(ev.tallies.mu_minus_c, bound + 1e-9);
  }
  EXPECT_LT(bound, 3.0 / 5.0);
}

TEST(Diqkd, ParseNames) {
  EXPECT_EQ(parse_framework("detector_independent"), Framework::detector_independent);
  EXPECT_EQ(parse_amplifier(to_string(Amplifier::original)), Amplifier::original);
  EXPECT_THROW(parse_framework("bb84"), std::invalid_argument);
}
