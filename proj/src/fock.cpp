#include "qherald/fock.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace qherald::fock {

int total_photons(const OccupationVector& occ) {
  int n = 0;
  for (auto c : occ) n += c;
  return n;
}

OccupationVector occupation(std::span<const int> counts) {
  OccupationVector occ;
  occ.reserve(counts.size());
  for (int c : counts) {
    if (c < 0) throw std::invalid_argument(fmt::format("negative photon count {}", c));
    if (c > std::numeric_limits<std::uint8_t>::max())
      throw std::invalid_argument(fmt::format("photon count {} too large", c));
    occ.push_back(static_cast<std::uint8_t>(c));
  }
  return occ;
}

OccupationVector occupation(std::initializer_list<int> counts) {
  return occupation(std::span<const int>(counts.begin(), counts.size()));
}

std::string to_string(const OccupationVector& occ) {
  std::string s = "|";
  for (std::size_t i = 0; i < occ.size(); ++i) {
    if (i > 0 && occ.size() > 9) s += ',';
    s += std::to_string(occ[i]);
  }
  return s + "⟩";
}

FockState::FockState(std::size_t mode_count, std::optional<int> photon_cap)
    : mode_count_(mode_count), photon_cap_(photon_cap) {}

FockState FockState::vacuum(std::size_t mode_count, std::optional<int> photon_cap) {
  FockState s(mode_count, photon_cap);
  s.terms_.emplace_back(OccupationVector(mode_count, 0), Amplitude{1.0, 0.0});
  return s;
}

Amplitude FockState::amplitude(const OccupationVector& occ) const {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), occ,
                             [](const Term& t, const OccupationVector& o) { return t.first < o; });
  if (it != terms_.end() && it->first == occ) return it->second;
  return {};
}

double FockState::norm_sq() const {
  double n = 0.0;
  for (const auto& [occ, amp] : terms_) n += std::norm(amp);
  return n;
}

FockState FockState::scaled(Amplitude factor) const {
  StateBuilder b(mode_count_, photon_cap_);
  b.reserve(terms_.size());
  for (const auto& [occ, amp] : terms_) b.add(occ, amp * factor);
  return std::move(b).finish().state;
}

FockState FockState::with_photon_cap(std::optional<int> cap) const {
  StateBuilder b(mode_count_, cap);
  b.reserve(terms_.size());
  for (const auto& [occ, amp] : terms_) b.add(occ, amp);
  return std::move(b).finish().state;
}

StateBuilder::StateBuilder(std::size_t mode_count, std::optional<int> photon_cap)
    : mode_count_(mode_count), photon_cap_(photon_cap) {}

void StateBuilder::add(OccupationVector occ, Amplitude amp) {
  terms_.emplace_back(std::move(occ), amp);
}

StateBuilder::Result StateBuilder::finish() && {
  Result r;
  r.state = FockState(mode_count_, photon_cap_);
  std::sort(terms_.begin(), terms_.end(),
            [](const FockState::Term& a, const FockState::Term& b) { return a.first < b.first; });
  auto& out = r.state.terms_;
  out.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size();) {
    std::size_t j = i;
    Amplitude sum{};
    while (j < terms_.size() && terms_[j].first == terms_[i].first) sum += terms_[j++].second;
    if (std::abs(sum) <= kPruneThreshold) {
      r.pruned_weight += std::norm(sum);
    } else if (photon_cap_ && total_photons(terms_[i].first) > *photon_cap_) {
      r.over_cap_weight += std::norm(sum);
    } else {
      out.emplace_back(std::move(terms_[i].first), sum);
    }
    i = j;
  }
  terms_.clear();
  return r;
}

FockState make_state(std::size_t mode_count, std::span<const TermSpec> terms,
                     std::optional<int> photon_cap) {
  if (mode_count == 0) throw std::invalid_argument("mode_count must be positive");
  StateBuilder b(mode_count, photon_cap);
  for (const auto& t : terms) {
    if (t.counts.size() != mode_count)
      throw std::invalid_argument(fmt::format("occupation vector of length {} for a {}-mode state",
                                              t.counts.size(), mode_count));
    b.add(occupation(t.counts), t.amplitude);
  }
  return std::move(b).finish().state;
}

FockState make_state(std::size_t mode_count, std::initializer_list<TermSpec> terms,
                     std::optional<int> photon_cap) {
  return make_state(mode_count, std::span<const TermSpec>(terms.begin(), terms.size()),
                    photon_cap);
}

namespace {

std::optional<int> tighter_cap(std::optional<int> a, std::optional<int> b) {
  if (a && b) return std::min(*a, *b);
  return a ? a : b;
}

}  // namespace

TensorResult tensor(const FockState& a, const FockState& b) {
  const std::size_t modes = a.mode_count() + b.mode_count();
  StateBuilder builder(modes, tighter_cap(a.photon_cap(), b.photon_cap()));
  builder.reserve(a.size() * b.size());
  for (const auto& [oa, xa] : a.terms()) {
    for (const auto& [ob, xb] : b.terms()) {
      OccupationVector occ;
      occ.reserve(modes);
      occ.insert(occ.end(), oa.begin(), oa.end());
      occ.insert(occ.end(), ob.begin(), ob.end());
      builder.add(std::move(occ), xa * xb);
    }
  }
  auto built = std::move(builder).finish();
  return {std::move(built.state), built.over_cap_weight};
}

double norm_sq(const FockState& s) { return s.norm_sq(); }

double max_abs_difference(const FockState& a, const FockState& b) {
  if (a.mode_count() != b.mode_count())
    throw std::invalid_argument("states have different mode counts");
  double worst = 0.0;
  auto ia = a.terms().begin();
  auto ib = b.terms().begin();
  while (ia != a.terms().end() || ib != b.terms().end()) {
    if (ib == b.terms().end() || (ia != a.terms().end() && ia->first < ib->first)) {
      worst = std::max(worst, std::abs(ia->second));
      ++ia;
    } else if (ia == a.terms().end() || ib->first < ia->first) {
      worst = std::max(worst, std::abs(ib->second));
      ++ib;
    } else {
      worst = std::max(worst, std::abs(ia->second - ib->second));
      ++ia;
      ++ib;
    }
  }
  return worst;
}

Amplitude inner_product(const FockState& a, const FockState& b) {
  Amplitude sum{};
  auto ia = a.terms().begin();
  auto ib = b.terms().begin();
  while (ia != a.terms().end() && ib != b.terms().end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      sum += std::conj(ia->second) * ib->second;
      ++ia;
      ++ib;
    }
  }
  return sum;
}

FockState project_modes(const FockState& s, std::span<const std::size_t> measured,
                        std::span<const int> counts) {
  if (measured.size() != counts.size())
    throw std::invalid_argument("measured modes and counts differ in length");
  std::vector<bool> is_measured(s.mode_count(), false);
  for (auto m : measured) {
    if (m >= s.mode_count()) throw std::out_of_range(fmt::format("mode {} out of range", m));
    if (is_measured[m]) throw std::invalid_argument(fmt::format("mode {} listed twice", m));
    is_measured[m] = true;
  }
  const std::size_t kept = s.mode_count() - measured.size();
  StateBuilder b(kept, s.photon_cap());
  for (const auto& [occ, amp] : s.terms()) {
    bool match = true;
    for (std::size_t i = 0; i < measured.size() && match; ++i)
      match = occ[measured[i]] == counts[i];
    if (!match) continue;
    OccupationVector rest;
    rest.reserve(kept);
    for (std::size_t m = 0; m < occ.size(); ++m)
      if (!is_measured[m]) rest.push_back(occ[m]);
    b.add(std::move(rest), amp);
  }
  return std::move(b).finish().state;
}

std::vector<std::pair<OccupationVector, FockState>> partition_by_modes(
    const FockState& s, std::span<const std::size_t> measured) {
  std::vector<bool> is_measured(s.mode_count(), false);
  for (auto m : measured) {
    if (m >= s.mode_count()) throw std::out_of_range(fmt::format("mode {} out of range", m));
    if (is_measured[m]) throw std::invalid_argument(fmt::format("mode {} listed twice", m));
    is_measured[m] = true;
  }
  const std::size_t kept = s.mode_count() - measured.size();
  std::map<OccupationVector, StateBuilder> parts;
  for (const auto& [occ, amp] : s.terms()) {
    OccupationVector key, rest;
    key.reserve(measured.size());
    rest.reserve(kept);
    for (auto m : measured) key.push_back(occ[m]);
    for (std::size_t m = 0; m < occ.size(); ++m)
      if (!is_measured[m]) rest.push_back(occ[m]);
    parts.try_emplace(std::move(key), kept, s.photon_cap()).first->second.add(std::move(rest), amp);
  }
  std::vector<std::pair<OccupationVector, FockState>> out;
  out.reserve(parts.size());
  for (auto& [key, b] : parts) {
    auto st = std::move(b).finish().state;
    if (!st.empty()) out.emplace_back(key, std::move(st));
  }
  return out;
}

FockState remove_modes(const FockState& s, std::span<const std::size_t> modes) {
  std::vector<int> zeros(modes.size(), 0);
  FockState r = project_modes(s, modes, zeros);
  if (std::abs(r.norm_sq() - s.norm_sq()) > 1e-12 * std::max(1.0, s.norm_sq()))
    throw std::invalid_argument("remove_modes: modes are not empty");
  return r;
}

BranchEnsemble::BranchEnsemble(std::size_t mode_count, std::vector<Branch> branches,
                               double truncation_weight)
    : mode_count_(mode_count), branches_(std::move(branches)),
      truncation_weight_(truncation_weight) {
  if (truncation_weight < 0.0) throw std::invalid_argument("negative truncation weight");
  for (const auto& b : branches_) {
    if (b.weight < 0.0) throw std::invalid_argument("negative branch weight");
    if (b.state.mode_count() != mode_count_)
      throw std::invalid_argument(fmt::format("branch over {} modes in a {}-mode ensemble",
                                              b.state.mode_count(), mode_count_));
  }
}

BranchEnsemble BranchEnsemble::pure(FockState state) {
  const auto modes = state.mode_count();
  std::vector<Branch> b;
  b.push_back({1.0, std::move(state)});
  return BranchEnsemble(modes, std::move(b));
}

double BranchEnsemble::total_weight() const {
  double w = 0.0;
  for (const auto& b : branches_) w += b.weight * b.state.norm_sq();
  return w;
}

BranchEnsemble tensor(const BranchEnsemble& a, const BranchEnsemble& b) {
  std::vector<Branch> out;
  out.reserve(a.branches().size() * b.branches().size());
  double truncated =
      1.0 - (1.0 - a.truncation_weight()) * (1.0 - b.truncation_weight());
  for (const auto& ba : a.branches()) {
    for (const auto& bb : b.branches()) {
      auto product = tensor(ba.state, bb.state);
      const double w = ba.weight * bb.weight;
      truncated += w * product.truncated_weight;
      if (!product.state.empty()) out.push_back({w, std::move(product.state)});
    }
  }
  return BranchEnsemble(a.mode_count() + b.mode_count(), std::move(out), truncated);
}

BranchEnsemble ensemble_map(const BranchEnsemble& e,
                            const std::function<FockState(const FockState&)>& f) {
  std::vector<Branch> out;
  out.reserve(e.branches().size());
  std::size_t modes = e.mode_count();
  for (const auto& b : e.branches()) {
    out.push_back({b.weight, f(b.state)});
    modes = out.back().state.mode_count();
  }
  return BranchEnsemble(modes, std::move(out), e.truncation_weight());
}

}  // namespace qherald::fock
