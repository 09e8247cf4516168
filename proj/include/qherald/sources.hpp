#pragma once

#include <array>

#include "qherald/fock.hpp"

namespace qherald::sources {

inline constexpr double kMaxPump = 1e-2;

struct SourceConfig {
  double p = 0.0;
  double p_prime = 0.0;
  double eta_cd = 1.0;
  double eta_t = 1.0;
  int photon_cap = fock::kDefaultPhotonCap;
};

/// Throws std::invalid_argument if a field is out of range.
void validate(const SourceConfig& cfg);

/// Kept orders of a source: normalized branch weights and the tail mass.
struct SourceWeights {
  std::array<double, 3> kept{};
  double truncation = 0.0;
};

/// (1−p)p^k for k = 0, 1, 2; the tail is exactly p³.
SourceWeights epr_weights(double p);

/// n(1−η)^{n−1}η p′^n for n = 1, 2, 3 with a geometric bound on n ≥ 4, all
/// divided by their sum. p′ = 0 yields all-zero weights.
SourceWeights heralded_weights(double p_prime, double eta_cd);

/// Pair states over (A_h, A_v, B_h, B_v): vacuum, |φ⁺⟩, |φ⁺²⟩.
fock::FockState epr_order(int k);

fock::BranchEnsemble epr_source(double p);

/// One-mode ensemble of 1, 2, 3 photons. Degenerate (no branches) at p′ = 0.
fock::BranchEnsemble heralded_single_photon(double p_prime, double eta_cd);

/// EPR ⊗ aux ⊗ aux ⊗ vacuum ⊗ vacuum over 8 modes.
fock::BranchEnsemble total_input(const SourceConfig& cfg);

}  // namespace qherald::sources
