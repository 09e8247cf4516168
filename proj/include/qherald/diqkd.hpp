#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "qherald/fock.hpp"
#include "qherald/optics.hpp"
#include "qherald/sources.hpp"

namespace qherald::diqkd {

enum class Party { alice, bob };
enum class Role { bell, key };
enum class Framework { restricted, unrestricted, detector_independent };
enum class Amplifier { none, original, modified };
enum class Assignment { discard, random };

std::string to_string(Framework f);
std::string to_string(Amplifier a);
Framework parse_framework(const std::string& s);
Amplifier parse_amplifier(const std::string& s);

inline constexpr double kRepetitionRate = 10e9;

struct MeasurementSetting {
  Party party = Party::alice;
  double angle = 0.0;  // in [0, 2π)
  Role role = Role::bell;
};

MeasurementSetting make_setting(Party party, double angle, Role role);

struct SettingPlan {
  MeasurementSetting alice_key, bob_key;
  std::array<MeasurementSetting, 2> alice_bell, bob_bell;
};

/// Alice {0, π/4}, Bob {π/8, −π/8}, key settings at 0.
SettingPlan standard_settings();

enum Outcome : std::size_t { bit0 = 0, bit1 = 1, inconclusive = 2 };

/// (1,0) → bit0, (0,1) → bit1, anything else inconclusive.
Outcome classify(int h, int v);

using OutcomeDistribution = std::array<double, 3>;
using Tally = std::array<std::array<double, 3>, 3>;  // [alice outcome][bob outcome]

struct SettingTallies {
  Tally key{};
  std::array<std::array<Tally, 2>, 2> bell{};  // [alice setting][bob setting]
};

using ModePair = std::array<std::size_t, 2>;

/// Rotates the party's (h, v) pair by the setting angle (after an optional
/// frame) and counts photons with detectors of efficiency `eta`.
OutcomeDistribution measure(const fock::BranchEnsemble& e, const MeasurementSetting& s,
                            ModePair modes, double eta = 1.0,
                            const optics::Matrix& frame = optics::Matrix::Identity(2, 2));

Tally joint_tally(const fock::BranchEnsemble& e, const MeasurementSetting& a,
                  const MeasurementSetting& b, ModePair alice_modes, ModePair bob_modes,
                  double eta = 1.0, const optics::Matrix& bob_frame = optics::Matrix::Identity(2, 2));

SettingTallies tally_settings(const fock::BranchEnsemble& e, const SettingPlan& plan,
                              ModePair alice_modes, ModePair bob_modes, double eta = 1.0,
                              const optics::Matrix& bob_frame = optics::Matrix::Identity(2, 2));

/// E = P(equal) − P(different). Random assignment counts inconclusive rows
/// and columns as uncorrelated; discard conditions on both conclusive.
double correlator(const Tally& t, Assignment policy);

/// S = E₁₁ + E₁₂ + E₂₁ − E₂₂.
double chsh(const std::array<std::array<Tally, 2>, 2>& bell, Assignment policy);

struct TallySummary {
  double mu_cc = 0.0;
  double mu_c = 0.0;
  double mu_minus_c = 0.0;
  double S = 0.0;
  double S_cc = 0.0;
  double Q_cc = 0.0;
  double Q_minus_c = 0.0;
  double alice_conclusive = 1.0;  // sift fraction of the detector-independent rate
  double herald_prob = 0.0;
  double truncation_weight = 0.0;  // conditional on the herald
};

/// Summary statistics from normalized tallies. μ₋c and Q₋c follow the
/// framework: Bob-conclusive with Alice's inconclusives as coin flips for
/// the unrestricted theory; conditioned on Alice conclusive for the
/// detector-independent theory.
TallySummary summarize(const SettingTallies& t, Framework f, double herald_prob = 1.0,
                       double truncation_weight = 0.0);

double entropy_h(double x);

/// χ[x] = h[(1 + √((x/2)² − 1))/2], with χ = 1 for x ≤ 2 and 0 for x ≥ 2√2.
double chi(double x);

/// Throws std::domain_error when mu_cc = 0.
double key_restricted(double mu_cc, double mu_c, double q_cc, double s_cc);
double key_unrestricted(double mu_minus_c, double q_minus_c, double s);
double key_detector_independent(double mu_minus_c, double q_minus_c, double sift = 1.0);

struct KeyRateReport {
  Framework framework = Framework::restricted;
  double K_raw = 0.0;
  double K_approx = 0.0;  // max(0, K_raw)
  double K_lower_raw = 0.0;
  double K_lower = 0.0;
  double rate_per_second = 0.0;  // K_approx · herald_prob · repetition rate
};

KeyRateReport key_restricted(const TallySummary& t, double repetition_rate = kRepetitionRate);
KeyRateReport key_unrestricted(const TallySummary& t, double repetition_rate = kRepetitionRate);
KeyRateReport key_detector_independent(const TallySummary& t,
                                       double repetition_rate = kRepetitionRate);
KeyRateReport key_rate(const TallySummary& t, Framework f,
                       double repetition_rate = kRepetitionRate);

/// Worst case over the neglected mass w: S → (1−w)S − 4w, Q → min(Q(1−w) + w, ½),
/// conclusive probabilities → μ(1−w), and μ_c → μ_c(1−w) or μ_c(1−w) + w.
KeyRateReport lower_bound(const TallySummary& t, KeyRateReport report);

struct Scenario {
  Amplifier amplifier = Amplifier::modified;
  double t = 0.5;
  double eta_t = 1.0;
  double eta_cd = 1.0;
  int photon_cap = fock::kDefaultPhotonCap;
  SettingPlan settings = standard_settings();
};

/// Heralded statistics of one source component (EPR order, two ancilla orders).
struct ComboResponse {
  int epr = 0;
  int aux_a = 0;  // photons in each ancilla; 0 when there is no amplifier
  int aux_b = 0;
  bool over_cap = false;
  double herald = 0.0;
  SettingTallies tallies;  // joint with the herald, not normalized
};

/// Everything that does not depend on the pump parameters: the final
/// statistics are linear in the source weights.
struct Response {
  Scenario scenario;
  std::vector<ComboResponse> combos;
};

Response simulate_response(const Scenario& s);

struct Evaluation {
  TallySummary tallies;
  KeyRateReport report;
};

Evaluation evaluate(const Response& r, double p, double p_prime, Framework f,
                    double repetition_rate = kRepetitionRate);

/// Full chain for one configuration.
Evaluation pipeline(const sources::SourceConfig& cfg, Amplifier amplifier, double t, Framework f,
                    double repetition_rate = kRepetitionRate);

}  // namespace qherald::diqkd
