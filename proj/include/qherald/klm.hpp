#pragma once

#include <cstddef>
#include <vector>

#include "qherald/fock.hpp"

namespace qherald::klm {

using fock::Amplitude;

enum class AncillaKind { single, dual };

struct KlmAncilla {
  int n = 0;
  AncillaKind kind = AncillaKind::single;
  fock::FockState state;  // 2n modes (single) or 4n modes (dual)
};

/// |s_{n,i}⟩ = |1⟩^i |0⟩^{n−i} |0⟩^i |1⟩^{n−i}.
fock::OccupationVector s_pattern(int n, int i);

/// single: |t_n⟩ = Σ_i |s_{n,i}⟩ / √(n+1), modes (teleporting, output).
/// dual:   |t̃_n⟩ = Σ_i |s_{n,i}⟩|s_{n,n−i}⟩ / √(n+1).
KlmAncilla build_ancilla(int n, AncillaKind kind);

struct TeleportResult {
  std::vector<int> counts;  // photon counts on every measured mode
  int k = 0;                // photons in the (first) Fourier measurement
  int k2 = 0;               // photons in the second measurement (QND only)
  bool success = false;
  double probability = 0.0;
  fock::FockState residual;          // all unmeasured modes, raw and unnormalized
  fock::FockState output_state;      // corrected, normalized qubit (success only)
  std::vector<std::size_t> output_modes;  // 1-based indices among the output modes
  Amplitude applied_phase{1.0, 0.0};      // phase shifter on the last output mode
  Amplitude global_phase{1.0, 0.0};
};

/// Teleports a one-mode state c0|0⟩ + c1|1⟩ through |t_n⟩. One result per
/// detection pattern with nonzero probability. Throws std::invalid_argument
/// if the input has more than one photon.
std::vector<TeleportResult> teleport(const fock::FockState& input, int n);

/// Two Fourier measurements against |t̃_n⟩. Success means the counts sum to
/// n+1 with neither equal to 0 or n+1; the dual-rail qubit then sits in
/// output pair (k, 2n−k+1).
std::vector<TeleportResult> qnd_herald(const fock::FockState& input, int n);

struct LawSummary {
  double success_probability = 0.0;
  double min_fidelity = 1.0;  // over success branches
};

LawSummary summarize(const std::vector<TeleportResult>& results, const fock::FockState& input);

}  // namespace qherald::klm
