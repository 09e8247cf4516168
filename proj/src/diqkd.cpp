#include "qherald/diqkd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "qherald/herald.hpp"

namespace qherald::diqkd {

using fock::BranchEnsemble;
using fock::FockState;
using optics::Matrix;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Matrix rotation(double theta) { return optics::polarization_rotation(theta).matrix; }

std::array<double, 3> detect(int h, int v, double eta) {
  const double q = 1.0 - eta;
  const double p0 = h >= 1 ? h * eta * std::pow(q, h - 1) * std::pow(q, v) : 0.0;
  const double p1 = v >= 1 ? v * eta * std::pow(q, v - 1) * std::pow(q, h) : 0.0;
  return {p0, p1, 1.0 - p0 - p1};
}

void check_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw std::invalid_argument(fmt::format("detector efficiency {} outside [0, 1]", eta));
}

void add_tally(Tally& t, double weight, const FockState& s, ModePair a, ModePair b, double eta) {
  for (const auto& [occ, amp] : s.terms()) {
    const double pr = weight * std::norm(amp);
    if (pr == 0.0) continue;
    const auto da = detect(occ[a[0]], occ[a[1]], eta);
    const auto db = detect(occ[b[0]], occ[b[1]], eta);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) t[i][j] += pr * da[i] * db[j];
  }
}

FockState turn(const FockState& s, const Matrix& m, ModePair modes) {
  return optics::apply(optics::from_matrix(m, {modes[0], modes[1]}), s);
}

void accumulate_branch(SettingTallies& acc, double weight, const FockState& s,
                       const SettingPlan& plan, ModePair a, ModePair b, double eta,
                       const Matrix& bob_frame) {
  if (weight == 0.0 || s.empty()) return;
  const auto bob = [&](const MeasurementSetting& m) { return Matrix(rotation(m.angle) * bob_frame); };
  const auto ak = turn(s, rotation(plan.alice_key.angle), a);
  add_tally(acc.key, weight, turn(ak, bob(plan.bob_key), b), a, b, eta);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto ab = turn(s, rotation(plan.alice_bell[i].angle), a);
    for (std::size_t j = 0; j < 2; ++j)
      add_tally(acc.bell[i][j], weight, turn(ab, bob(plan.bob_bell[j]), b), a, b, eta);
  }
}

void add_scaled(Tally& dst, const Tally& src, double w) {
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) dst[i][j] += w * src[i][j];
}

void add_scaled(SettingTallies& dst, const SettingTallies& src, double w) {
  add_scaled(dst.key, src.key, w);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) add_scaled(dst.bell[i][j], src.bell[i][j], w);
}

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

KeyRateReport finish_report(Framework f, double raw, const TallySummary& t, double rep) {
  KeyRateReport r;
  r.framework = f;
  r.K_raw = raw;
  r.K_approx = std::max(0.0, raw);
  r.K_lower_raw = raw;
  r.K_lower = r.K_approx;
  r.rate_per_second = r.K_approx * t.herald_prob * rep;
  return r;
}

double restricted_or_zero(double mu_cc, double mu_c, double q, double s) {
  return mu_cc > 0.0 ? key_restricted(mu_cc, mu_c, q, s) : 0.0;
}

}  // namespace

std::string to_string(Framework f) {
  switch (f) {
    case Framework::restricted: return "restricted";
    case Framework::unrestricted: return "unrestricted";
    case Framework::detector_independent: return "detector_independent";
  }
  return "?";
}

std::string to_string(Amplifier a) {
  switch (a) {
    case Amplifier::none: return "none";
    case Amplifier::original: return "original";
    case Amplifier::modified: return "modified";
  }
  return "?";
}

Framework parse_framework(const std::string& s) {
  if (s == "restricted") return Framework::restricted;
  if (s == "unrestricted") return Framework::unrestricted;
  if (s == "detector_independent" || s == "detector-independent") return Framework::detector_independent;
  throw std::invalid_argument(fmt::format("unknown framework '{}'", s));
}

Amplifier parse_amplifier(const std::string& s) {
  if (s == "none") return Amplifier::none;
  if (s == "original") return Amplifier::original;
  if (s == "modified") return Amplifier::modified;
  throw std::invalid_argument(fmt::format("unknown amplifier '{}'", s));
}

MeasurementSetting make_setting(Party party, double angle, Role role) {
  if (!std::isfinite(angle)) throw std::invalid_argument("measurement angle must be finite");
  double a = std::fmod(angle, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;
  return {party, a, role};
}

SettingPlan standard_settings() {
  const double pi = std::numbers::pi;
  SettingPlan p;
  p.alice_key = make_setting(Party::alice, 0.0, Role::key);
  p.bob_key = make_setting(Party::bob, 0.0, Role::key);
  p.alice_bell = {make_setting(Party::alice, 0.0, Role::bell),
                  make_setting(Party::alice, pi / 4, Role::bell)};
  p.bob_bell = {make_setting(Party::bob, pi / 8, Role::bell),
                make_setting(Party::bob, -pi / 8, Role::bell)};
  return p;
}

Outcome classify(int h, int v) {
  if (h == 1 && v == 0) return bit0;
  if (h == 0 && v == 1) return bit1;
  return inconclusive;
}

OutcomeDistribution measure(const BranchEnsemble& e, const MeasurementSetting& s, ModePair modes,
                            double eta, const Matrix& frame) {
  check_eta(eta);
  OutcomeDistribution d{};
  const Matrix m = rotation(s.angle) * frame;
  for (const auto& br : e.branches()) {
    const auto rotated = turn(br.state, m, modes);
    for (const auto& [occ, amp] : rotated.terms()) {
      const auto p = detect(occ[modes[0]], occ[modes[1]], eta);
      for (std::size_t i = 0; i < 3; ++i) d[i] += br.weight * std::norm(amp) * p[i];
    }
  }
  return d;
}

Tally joint_tally(const BranchEnsemble& e, const MeasurementSetting& a, const MeasurementSetting& b,
                  ModePair alice_modes, ModePair bob_modes, double eta, const Matrix& bob_frame) {
  check_eta(eta);
  Tally t{};
  const Matrix mb = rotation(b.angle) * bob_frame;
  for (const auto& br : e.branches()) {
    const auto s = turn(turn(br.state, rotation(a.angle), alice_modes), mb, bob_modes);
    add_tally(t, br.weight, s, alice_modes, bob_modes, eta);
  }
  return t;
}

SettingTallies tally_settings(const BranchEnsemble& e, const SettingPlan& plan, ModePair alice_modes,
                              ModePair bob_modes, double eta, const Matrix& bob_frame) {
  check_eta(eta);
  SettingTallies acc;
  for (const auto& br : e.branches())
    accumulate_branch(acc, br.weight, br.state, plan, alice_modes, bob_modes, eta, bob_frame);
  return acc;
}

double correlator(const Tally& t, Assignment policy) {
  const double e = t[0][0] + t[1][1] - t[0][1] - t[1][0];
  if (policy == Assignment::random) return e;
  return ratio(e, t[0][0] + t[1][1] + t[0][1] + t[1][0]);
}

double chsh(const std::array<std::array<Tally, 2>, 2>& bell, Assignment policy) {
  return correlator(bell[0][0], policy) + correlator(bell[0][1], policy) +
         correlator(bell[1][0], policy) - correlator(bell[1][1], policy);
}

TallySummary summarize(const SettingTallies& t, Framework f, double herald_prob,
                       double truncation_weight) {
  const auto& k = t.key;
  TallySummary s;
  s.herald_prob = herald_prob;
  s.truncation_weight = truncation_weight;
  const double errors = k[0][1] + k[1][0];
  s.mu_cc = k[0][0] + k[0][1] + k[1][0] + k[1][1];
  s.mu_c = k[0][2] + k[1][2] + k[2][0] + k[2][1];
  s.Q_cc = ratio(errors, s.mu_cc);
  s.S = chsh(t.bell, Assignment::random);
  s.S_cc = chsh(t.bell, Assignment::discard);
  s.alice_conclusive = s.mu_cc + k[0][2] + k[1][2];
  if (f == Framework::detector_independent) {
    s.mu_minus_c = ratio(s.mu_cc, s.alice_conclusive);
    s.Q_minus_c = s.Q_cc;
  } else {
    s.mu_minus_c = s.mu_cc + k[2][0] + k[2][1];
    s.Q_minus_c = ratio(errors + 0.5 * (k[2][0] + k[2][1]), s.mu_minus_c);
  }
  return s;
}

double entropy_h(double x) {
  constexpr double slack = 1e-12;
  if (!(x >= -slack && x <= 1.0 + slack))
    throw std::domain_error(fmt::format("binary entropy argument {} outside [0, 1]", x));
  x = std::clamp(x, 0.0, 1.0);
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double chi(double x) {
  if (x <= 2.0) return 1.0;
  if (x >= 2.0 * std::numbers::sqrt2) return 0.0;
  return entropy_h((1.0 + std::sqrt((x / 2.0) * (x / 2.0) - 1.0)) / 2.0);
}

double key_restricted(double mu_cc, double mu_c, double q_cc, double s_cc) {
  if (!(mu_cc > 0.0)) throw std::domain_error("restricted key rate needs mu_cc > 0");
  const double r = mu_c / mu_cc;
  return mu_cc * (1.0 - entropy_h(q_cc) -
                  ((1.0 - r) * chi((mu_cc * s_cc - 4.0 * mu_c) / (mu_cc + mu_c)) + r));
}

double key_unrestricted(double mu_minus_c, double q_minus_c, double s) {
  return mu_minus_c * (1.0 - entropy_h(q_minus_c)) - chi(s);
}

double key_detector_independent(double mu_minus_c, double q_minus_c, double sift) {
  const double delta = mu_minus_c * q_minus_c + (1.0 - mu_minus_c) / 2.0;
  return sift * (mu_minus_c * (1.0 - entropy_h(q_minus_c)) - entropy_h(delta));
}

KeyRateReport key_restricted(const TallySummary& t, double repetition_rate) {
  return finish_report(Framework::restricted,
                       restricted_or_zero(t.mu_cc, t.mu_c, t.Q_cc, t.S_cc), t, repetition_rate);
}

KeyRateReport key_unrestricted(const TallySummary& t, double repetition_rate) {
  return finish_report(Framework::unrestricted, key_unrestricted(t.mu_minus_c, t.Q_minus_c, t.S), t,
                       repetition_rate);
}

KeyRateReport key_detector_independent(const TallySummary& t, double repetition_rate) {
  return finish_report(Framework::detector_independent,
                       key_detector_independent(t.mu_minus_c, t.Q_minus_c, t.alice_conclusive), t,
                       repetition_rate);
}

KeyRateReport key_rate(const TallySummary& t, Framework f, double repetition_rate) {
  switch (f) {
    case Framework::restricted: return key_restricted(t, repetition_rate);
    case Framework::unrestricted: return key_unrestricted(t, repetition_rate);
    case Framework::detector_independent: return key_detector_independent(t, repetition_rate);
  }
  throw std::invalid_argument("unknown framework");
}

KeyRateReport lower_bound(const TallySummary& t, KeyRateReport report) {
  const double w = std::clamp(t.truncation_weight, 0.0, 1.0);
  const double keep = 1.0 - w;
  const auto worst_q = [&](double q) { return std::min(q * keep + w, 0.5); };
  double worst = report.K_raw;
  switch (report.framework) {
    case Framework::restricted:
      for (double mu_c : {t.mu_c * keep, t.mu_c * keep + w})
        worst = std::min(worst, restricted_or_zero(t.mu_cc * keep, mu_c, worst_q(t.Q_cc),
                                                   keep * t.S_cc - 4.0 * w));
      break;
    case Framework::unrestricted:
      worst = std::min(worst, key_unrestricted(t.mu_minus_c * keep, worst_q(t.Q_minus_c),
                                               keep * t.S - 4.0 * w));
      break;
    case Framework::detector_independent:
      worst = std::min(worst, key_detector_independent(t.mu_minus_c * keep, worst_q(t.Q_minus_c),
                                                       t.alice_conclusive * keep));
      break;
  }
  report.K_lower_raw = worst;
  report.K_lower = std::max(0.0, worst);
  return report;
}

Response simulate_response(const Scenario& s) {
  check_eta(s.eta_t);
  check_eta(s.eta_cd);
  Response r{s, {}};
  const ModePair a{0, 1}, b{2, 3};

  if (s.amplifier == Amplifier::none) {
    for (int k = 0; k < 3; ++k) {
      ComboResponse c;
      c.epr = k;
      auto e = BranchEnsemble::pure(sources::epr_order(k).with_photon_cap(s.photon_cap));
      c.over_cap = 2 * k > s.photon_cap;
      if (!c.over_cap) {
        e = optics::loss({s.eta_t, 2}, optics::loss({s.eta_t, 3}, e));
        c.herald = e.total_weight();
        c.tallies = tally_settings(e, s.settings, a, b, s.eta_cd);
      }
      r.combos.push_back(std::move(c));
    }
    return r;
  }

  const auto local = herald::circuit_by_name(to_string(s.amplifier), s.t);
  const auto [front, tail] = herald::defer_output_stage(local);

  // Receiver frame per pattern: deferred output optics, then the feed-forward.
  Matrix deferred = Matrix::Identity(2, 2);
  for (const auto& u : tail) {
    auto placed = u;
    for (auto& m : placed.modes)
      m = static_cast<std::size_t>(
          std::find(local.output_modes.begin(), local.output_modes.end(), m) -
          local.output_modes.begin());
    deferred = optics::compose(placed, optics::from_matrix(deferred, {0, 1})).matrix;
  }
  const std::vector<fock::OccupationVector> basis{fock::occupation({0, 0}), fock::occupation({1, 0}),
                                                  fock::occupation({0, 1}), fock::occupation({1, 1})};
  std::vector<Matrix> frames;
  for (const auto& k : herald::extract_kraus(local, basis)) {
    const auto ff = herald::fit_feedforward(k, herald::reference_kraus(local, basis, k.basis_out));
    if (!ff) throw std::logic_error("no feed-forward reproduces the amplifier's closed form");
    frames.push_back(herald::feedforward_transform(*ff).matrix * deferred);
  }

  const auto global = herald::embed(front, 2, 8);
  const auto patterns = global.accepted_patterns();
  for (int k = 0; k < 3; ++k) {
    for (int na = 1; na <= 3; ++na) {
      for (int nb = 1; nb <= 3; ++nb) {
        ComboResponse c;
        c.epr = k;
        c.aux_a = na;
        c.aux_b = nb;
        c.over_cap = 2 * k + na + nb > s.photon_cap;
        if (c.over_cap) {
          r.combos.push_back(std::move(c));
          continue;
        }
        fock::StateBuilder builder(8, s.photon_cap);
        const auto pair = sources::epr_order(k);
        for (const auto& [occ, amp] : pair.terms()) {
          auto full = occ;
          full.insert(full.end(), {static_cast<std::uint8_t>(na), static_cast<std::uint8_t>(nb), 0, 0});
          builder.add(std::move(full), amp);
        }
        auto e = BranchEnsemble::pure(std::move(builder).finish().state);
        e = optics::loss({s.eta_t, 3}, optics::loss({s.eta_t, 2}, e));
        e = herald::run(global, e);
        for (const auto& pb : herald::condition_lossy(e, patterns, s.eta_cd)) {
          c.herald += pb.weight * pb.state.norm_sq();
          accumulate_branch(c.tallies, pb.weight, pb.state, s.settings, a, b, s.eta_cd,
                            frames[pb.pattern]);
        }
        r.combos.push_back(std::move(c));
      }
    }
  }
  return r;
}

Evaluation evaluate(const Response& r, double p, double p_prime, Framework f,
                    double repetition_rate) {
  const bool amplified = r.scenario.amplifier != Amplifier::none;
  const auto ew = sources::epr_weights(p);
  const auto aw = amplified ? sources::heralded_weights(p_prime, r.scenario.eta_cd)
                            : sources::SourceWeights{{1.0, 1.0, 1.0}, 0.0};
  double truncation = 1.0 - (1.0 - ew.truncation) * (amplified ? std::pow(1.0 - aw.truncation, 2) : 1.0);
  double herald = 0.0;
  SettingTallies acc;
  for (const auto& c : r.combos) {
    double w = ew.kept[static_cast<std::size_t>(c.epr)];
    if (amplified)
      w *= aw.kept[static_cast<std::size_t>(c.aux_a - 1)] * aw.kept[static_cast<std::size_t>(c.aux_b - 1)];
    if (w == 0.0) continue;
    if (c.over_cap) {
      truncation += w;
      continue;
    }
    herald += w * c.herald;
    add_scaled(acc, c.tallies, w);
  }
  if (herald > 0.0) {
    SettingTallies norm;
    add_scaled(norm, acc, 1.0 / herald);
    acc = norm;
  }
  const double cond_truncation = ratio(truncation, herald + truncation);
  Evaluation ev;
  ev.tallies = summarize(acc, f, herald, cond_truncation);
  ev.report = lower_bound(ev.tallies, key_rate(ev.tallies, f, repetition_rate));
  return ev;
}

Evaluation pipeline(const sources::SourceConfig& cfg, Amplifier amplifier, double t, Framework f,
                    double repetition_rate) {
  sources::validate(cfg);
  Scenario s;
  s.amplifier = amplifier;
  s.t = t;
  s.eta_t = cfg.eta_t;
  s.eta_cd = cfg.eta_cd;
  s.photon_cap = cfg.photon_cap;
  return evaluate(simulate_response(s), cfg.p, cfg.p_prime, f, repetition_rate);
}

}  // namespace qherald::diqkd
