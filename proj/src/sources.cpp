#include "qherald/sources.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace qherald::sources {

using fock::BranchEnsemble;
using fock::FockState;

namespace {

void check_pump(double p, const char* what) {
  if (!(p >= 0.0 && p <= kMaxPump))
    throw std::invalid_argument(fmt::format("{} = {} outside [0, {}]", what, p, kMaxPump));
}

void check_efficiency(double eta, const char* what) {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw std::invalid_argument(fmt::format("{} = {} outside [0, 1]", what, eta));
}

}  // namespace

void validate(const SourceConfig& cfg) {
  check_pump(cfg.p, "p");
  check_pump(cfg.p_prime, "p_prime");
  check_efficiency(cfg.eta_cd, "eta_cd");
  check_efficiency(cfg.eta_t, "eta_t");
  if (cfg.photon_cap < 1) throw std::invalid_argument("photon_cap must be positive");
}

SourceWeights epr_weights(double p) {
  check_pump(p, "p");
  return {{1.0 - p, (1.0 - p) * p, (1.0 - p) * p * p}, p * p * p};
}

SourceWeights heralded_weights(double p_prime, double eta_cd) {
  check_pump(p_prime, "p_prime");
  check_efficiency(eta_cd, "eta_cd");
  const double q = 1.0 - eta_cd;
  const double pp = p_prime;
  SourceWeights w;
  w.kept = {eta_cd * pp, 2.0 * q * eta_cd * pp * pp, 3.0 * q * q * eta_cd * pp * pp * pp};
  const double tail =
      eta_cd * q * q * q * std::pow(pp, 4) * (4.0 / (1.0 - pp) + pp / ((1.0 - pp) * (1.0 - pp)));
  const double z = w.kept[0] + w.kept[1] + w.kept[2] + tail;
  if (z <= 0.0) return {};
  for (auto& k : w.kept) k /= z;
  w.truncation = tail / z;
  return w;
}

FockState epr_order(int k) {
  switch (k) {
    case 0:
      return FockState::vacuum(4);
    case 1: {
      const double a = 1.0 / std::sqrt(2.0);
      return fock::make_state(4, {{{1, 0, 1, 0}, a}, {{0, 1, 0, 1}, a}});
    }
    case 2: {
      const double a = 1.0 / std::sqrt(3.0);
      return fock::make_state(4, {{{2, 0, 2, 0}, a}, {{1, 1, 1, 1}, a}, {{0, 2, 0, 2}, a}});
    }
    default:
      throw std::invalid_argument(fmt::format("EPR order {} is not modeled", k));
  }
}

BranchEnsemble epr_source(double p) {
  const auto w = epr_weights(p);
  std::vector<fock::Branch> b;
  for (int k = 0; k < 3; ++k)
    if (w.kept[static_cast<std::size_t>(k)] > 0.0) b.push_back({w.kept[static_cast<std::size_t>(k)], epr_order(k)});
  return BranchEnsemble(4, std::move(b), w.truncation);
}

BranchEnsemble heralded_single_photon(double p_prime, double eta_cd) {
  const auto w = heralded_weights(p_prime, eta_cd);
  std::vector<fock::Branch> b;
  for (int n = 1; n <= 3; ++n) {
    const double weight = w.kept[static_cast<std::size_t>(n - 1)];
    if (weight > 0.0) b.push_back({weight, fock::make_state(1, {{{n}, 1.0}})});
  }
  return BranchEnsemble(1, std::move(b), w.truncation);
}

BranchEnsemble total_input(const SourceConfig& cfg) {
  validate(cfg);
  auto with_cap = [&](const BranchEnsemble& e) {
    return fock::ensemble_map(e, [&](const FockState& s) { return s.with_photon_cap(cfg.photon_cap); });
  };
  const auto aux = with_cap(heralded_single_photon(cfg.p_prime, cfg.eta_cd));
  auto e = fock::tensor(with_cap(epr_source(cfg.p)), aux);
  e = fock::tensor(e, aux);
  return fock::tensor(e, BranchEnsemble::pure(FockState::vacuum(2, cfg.photon_cap)));
}

}  // namespace qherald::sources
