#include "qherald/klm.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "qherald/optics.hpp"

namespace qherald::klm {

using fock::FockState;
using fock::OccupationVector;

namespace {

void check_n(int n) {
  if (n < 1) throw std::invalid_argument(fmt::format("ancilla size n = {} must be positive", n));
}

std::vector<std::size_t> range(std::size_t from, std::size_t count) {
  std::vector<std::size_t> v(count);
  std::iota(v.begin(), v.end(), from);
  return v;
}

struct Calibration {
  Amplitude global{1.0, 0.0};
  Amplitude phase{1.0, 0.0};
};

// Global phase and a phase on the second qubit mode that make a0·c0 and a1·c1
// come out with equal real positive prefactors.
Calibration calibrate(Amplitude a0, Amplitude a1) {
  Calibration c;
  if (std::abs(a0) > 0.0) c.global = std::conj(a0) / std::abs(a0);
  if (std::abs(a1) > 0.0) c.phase = std::conj(a1 * c.global) / std::abs(a1);
  return c;
}

// One detection pattern of a measured state and where the qubit ended up.
struct Split {
  std::vector<int> counts;
  int k = 0, k2 = 0;
  bool success = false;
  FockState residual;
  std::vector<std::size_t> modes;  // positions of the qubit modes inside the residual
};

FockState qubit_from_residual(const FockState& residual, const std::vector<std::size_t>& modes) {
  fock::StateBuilder b(modes.size(), std::nullopt);
  for (const auto& [occ, amp] : residual.terms()) {
    OccupationVector q;
    for (auto m : modes) q.push_back(occ[m]);
    b.add(std::move(q), amp);
  }
  return std::move(b).finish().state;
}

std::vector<Split> run_teleport(const FockState& input, int n) {
  const auto anc = build_ancilla(n, AncillaKind::single);
  auto s = fock::tensor(input, anc.state).state;
  const auto measured = range(0, static_cast<std::size_t>(n) + 1);
  s = optics::apply(optics::fourier(n + 1), s);
  std::vector<Split> out;
  for (auto& [counts, residual] : fock::partition_by_modes(s, measured)) {
    Split sp;
    sp.counts.assign(counts.begin(), counts.end());
    sp.k = fock::total_photons(counts);
    sp.success = sp.k >= 1 && sp.k <= n;
    if (sp.success) sp.modes = {static_cast<std::size_t>(sp.k - 1)};
    sp.residual = std::move(residual);
    out.push_back(std::move(sp));
  }
  return out;
}

std::vector<Split> run_qnd(const FockState& input, int n) {
  const auto un = static_cast<std::size_t>(n);
  const auto anc = build_ancilla(n, AncillaKind::dual);
  auto s = fock::tensor(input, anc.state).state;
  // Modes: in_a, in_b, T1, O1, T2, O2.
  std::vector<std::size_t> first{0}, second{1};
  for (auto m : range(2, un)) first.push_back(m);
  for (auto m : range(2 + 2 * un, un)) second.push_back(m);
  const auto f = optics::fourier(n + 1);
  s = optics::apply(f.on(first), s);
  s = optics::apply(f.on(second), s);
  std::vector<std::size_t> measured = first;
  measured.insert(measured.end(), second.begin(), second.end());
  std::vector<Split> out;
  for (auto& [counts, residual] : fock::partition_by_modes(s, measured)) {
    Split sp;
    sp.counts.assign(counts.begin(), counts.end());
    sp.k = std::accumulate(counts.begin(), counts.begin() + n + 1, 0);
    sp.k2 = std::accumulate(counts.begin() + n + 1, counts.end(), 0);
    sp.success = sp.k + sp.k2 == n + 1 && sp.k >= 1 && sp.k <= n && sp.k2 >= 1 && sp.k2 <= n;
    // Residual modes: O1 (0..n-1) then O2 (n..2n-1).
    if (sp.success) sp.modes = {static_cast<std::size_t>(sp.k - 1), un + static_cast<std::size_t>(sp.k2 - 1)};
    sp.residual = std::move(residual);
    out.push_back(std::move(sp));
  }
  return out;
}

std::vector<TeleportResult> finish(std::vector<Split> actual, const std::vector<Split>& reference,
                                   const OccupationVector& zero_basis,
                                   const OccupationVector& one_basis) {
  std::map<std::vector<int>, Calibration> table;
  for (const auto& r : reference) {
    if (!r.success) continue;
    const auto q = qubit_from_residual(r.residual, r.modes);
    table[r.counts] = calibrate(q.amplitude(zero_basis), q.amplitude(one_basis));
  }
  std::vector<TeleportResult> out;
  for (auto& sp : actual) {
    TeleportResult r;
    r.counts = sp.counts;
    r.k = sp.k;
    r.k2 = sp.k2;
    r.success = sp.success;
    r.probability = sp.residual.norm_sq();
    if (sp.success) {
      const auto it = table.find(sp.counts);
      if (it == table.end()) throw std::logic_error("detection pattern missing from calibration");
      r.global_phase = it->second.global;
      r.applied_phase = it->second.phase;
      const auto q = qubit_from_residual(sp.residual, sp.modes);
      fock::StateBuilder b(q.mode_count(), std::nullopt);
      for (const auto& [occ, amp] : q.terms())
        b.add(occ, amp * r.global_phase * (occ.back() ? r.applied_phase : Amplitude{1.0, 0.0}));
      auto corrected = std::move(b).finish().state;
      const double norm = corrected.norm_sq();
      r.output_state = norm > 0.0 ? corrected.scaled(1.0 / std::sqrt(norm)) : corrected;
      for (auto m : sp.modes) r.output_modes.push_back(m + 1);
    }
    r.residual = std::move(sp.residual);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

OccupationVector s_pattern(int n, int i) {
  if (i < 0 || i > n) throw std::invalid_argument("s pattern index out of range");
  OccupationVector occ(static_cast<std::size_t>(2 * n), 0);
  for (int m = 0; m < i; ++m) occ[static_cast<std::size_t>(m)] = 1;
  for (int m = n + i; m < 2 * n; ++m) occ[static_cast<std::size_t>(m)] = 1;
  return occ;
}

KlmAncilla build_ancilla(int n, AncillaKind kind) {
  check_n(n);
  const double amp = 1.0 / std::sqrt(n + 1.0);
  const auto modes = static_cast<std::size_t>(kind == AncillaKind::single ? 2 * n : 4 * n);
  fock::StateBuilder b(modes, std::nullopt);
  for (int i = 0; i <= n; ++i) {
    auto occ = s_pattern(n, i);
    if (kind == AncillaKind::dual) {
      const auto other = s_pattern(n, n - i);
      occ.insert(occ.end(), other.begin(), other.end());
    }
    b.add(std::move(occ), amp);
  }
  return {n, kind, std::move(b).finish().state};
}

std::vector<TeleportResult> teleport(const FockState& input, int n) {
  check_n(n);
  if (input.mode_count() != 1) throw std::invalid_argument("teleport takes a one-mode input");
  for (const auto& [occ, amp] : input.terms())
    if (occ[0] > 1) throw std::invalid_argument("teleport input must lie in span{|0⟩, |1⟩}");
  const double s = 1.0 / std::sqrt(2.0);
  const auto ref = fock::make_state(1, {{{0}, s}, {{1}, s}});
  return finish(run_teleport(input, n), run_teleport(ref, n), fock::occupation({0}),
                fock::occupation({1}));
}

std::vector<TeleportResult> qnd_herald(const FockState& input, int n) {
  check_n(n);
  if (input.mode_count() != 2) throw std::invalid_argument("qnd_herald takes a two-mode input");
  const double s = 1.0 / std::sqrt(2.0);
  const auto ref = fock::make_state(2, {{{1, 0}, s}, {{0, 1}, s}});
  return finish(run_qnd(input, n), run_qnd(ref, n), fock::occupation({1, 0}),
                fock::occupation({0, 1}));
}

LawSummary summarize(const std::vector<TeleportResult>& results, const FockState& input) {
  LawSummary s;
  const double norm = input.norm_sq();
  if (norm <= 0.0) throw std::invalid_argument("input state has zero norm");
  const auto target = input.scaled(1.0 / std::sqrt(norm));
  for (const auto& r : results) {
    if (!r.success) continue;
    s.success_probability += r.probability / norm;
    s.min_fidelity = std::min(s.min_fidelity, std::norm(fock::inner_product(target, r.output_state)));
  }
  return s;
}

}  // namespace qherald::klm
