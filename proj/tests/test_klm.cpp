#include <gtest/gtest.h>

#include <stdexcept>

#include "qherald/klm.hpp"
#include "support.hpp"

using namespace qherald;
using fock::occupation;

namespace {

fock::FockState random_single(std::mt19937_64& rng) {
  const auto a = testkit::random_amplitudes(2, rng);
  return fock::make_state(1, {{{0}, a[0]}, {{1}, a[1]}});
}

fock::FockState random_dual(std::mt19937_64& rng) {
  const auto a = testkit::random_amplitudes(2, rng);
  return fock::make_state(2, {{{1, 0}, a[0]}, {{0, 1}, a[1]}});
}

}  // namespace

TEST(Klm, SPatternLayout) {
  EXPECT_EQ(klm::s_pattern(3, 1), occupation({1, 0, 0, 0, 1, 1}));
  EXPECT_EQ(klm::s_pattern(2, 2), occupation({1, 1, 0, 0}));
}

TEST(Klm, AncillasAreNormalizedUniformSuperpositions) {
  for (int n = 1; n <= 4; ++n) {
    const auto single = klm::build_ancilla(n, klm::AncillaKind::single);
    EXPECT_EQ(single.state.mode_count(), static_cast<std::size_t>(2 * n));
    EXPECT_EQ(single.state.size(), static_cast<std::size_t>(n + 1));
    EXPECT_NEAR(single.state.norm_sq(), 1.0, 1e-14);
    for (const auto& [occ, _] : single.state.terms()) EXPECT_EQ(fock::total_photons(occ), n);
    const auto dual = klm::build_ancilla(n, klm::AncillaKind::dual);
    EXPECT_EQ(dual.state.mode_count(), static_cast<std::size_t>(4 * n));
    EXPECT_NEAR(dual.state.norm_sq(), 1.0, 1e-14);
  }
}

TEST(Klm, TeleportSucceedsWithProbabilityNOverNPlusOne) {
  std::mt19937_64 rng(1);
  for (int n = 1; n <= 4; ++n) {
    const auto in = random_single(rng);
    const auto s = klm::summarize(klm::teleport(in, n), in);
    EXPECT_NEAR(s.success_probability, n / (n + 1.0), 1e-10);
    EXPECT_NEAR(s.min_fidelity, 1.0, 1e-10);
  }
}

TEST(Klm, TeleportBranchProbabilitiesSumToOne) {
  std::mt19937_64 rng(2);
  const auto in = random_single(rng);
  double total = 0.0;
  for (const auto& r : klm::teleport(in, 3)) total += r.probability;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Klm, RawTeleportedPopulationsMatchInput) {
  std::mt19937_64 rng(3);
  const auto in = random_single(rng);
  const double p1 = std::norm(in.amplitude(occupation({1})));
  for (const auto& r : klm::teleport(in, 3)) {
    if (!r.success) continue;
    ASSERT_EQ(r.output_modes.size(), 1u);
    const auto mode = r.output_modes[0] - 1;
    double one = 0.0;
    for (const auto& [occ, a] : r.residual.terms())
      if (occ[mode] == 1) one += std::norm(a);
    EXPECT_NEAR(one / r.residual.norm_sq(), p1, 1e-12);
  }
}

TEST(Klm, QndHeraldLaw) {
  std::mt19937_64 rng(4);
  for (int n = 1; n <= 3; ++n) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto in = random_dual(rng);
      const auto s = klm::summarize(klm::qnd_herald(in, n), in);
      EXPECT_NEAR(s.success_probability, n / (n + 1.0), 1e-10);
      EXPECT_NEAR(s.min_fidelity, 1.0, 1e-10);
    }
  }
}

TEST(Klm, QndNeverFlagsNonQubitInputs) {
  for (const auto& counts : {std::vector<int>{0, 0}, {1, 1}, {2, 0}, {0, 2}}) {
    const auto in = testkit::basis_state(counts);
    for (const auto& r : klm::qnd_herald(in, 2)) EXPECT_FALSE(r.success && r.probability > 1e-14);
  }
}

TEST(Klm, QndOutputPairIsMirrored) {
  std::mt19937_64 rng(5);
  const int n = 3;
  for (const auto& r : klm::qnd_herald(random_dual(rng), n)) {
    if (!r.success) continue;
    ASSERT_EQ(r.output_modes.size(), 2u);
    EXPECT_EQ(static_cast<int>(r.output_modes[0] + r.output_modes[1]), 2 * n + 1);
  }
}

TEST(Klm, RejectsMultiphotonInput) {
  EXPECT_THROW(klm::teleport(testkit::basis_state({2}), 2), std::invalid_argument);
}
