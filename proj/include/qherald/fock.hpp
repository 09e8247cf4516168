#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/container/small_vector.hpp>

namespace qherald::fock {

using Amplitude = std::complex<double>;

/// Per-mode photon counts, one entry per mode.
using OccupationVector = boost::container::small_vector<std::uint8_t, 32>;

/// Amplitudes with magnitude at or below this are dropped when a state is built.
inline constexpr double kPruneThreshold = 1e-14;

/// Total-photon cap used by the source and pipeline models.
inline constexpr int kDefaultPhotonCap = 6;

int total_photons(const OccupationVector& occ);
OccupationVector occupation(std::initializer_list<int> counts);
OccupationVector occupation(std::span<const int> counts);
std::string to_string(const OccupationVector& occ);

/// Sparse pure state over a fixed number of bosonic modes. States are kept
/// unnormalized; the squared norm carries the probability of the branch that
/// produced it. Terms are stored sorted by occupation vector.
class FockState {
 public:
  using Term = std::pair<OccupationVector, Amplitude>;

  FockState() = default;
  explicit FockState(std::size_t mode_count, std::optional<int> photon_cap = std::nullopt);

  static FockState vacuum(std::size_t mode_count, std::optional<int> photon_cap = std::nullopt);

  std::size_t mode_count() const { return mode_count_; }
  std::optional<int> photon_cap() const { return photon_cap_; }
  std::span<const Term> terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  /// Amplitude of a basis vector, zero when absent.
  Amplitude amplitude(const OccupationVector& occ) const;

  double norm_sq() const;
  FockState scaled(Amplitude factor) const;
  FockState with_photon_cap(std::optional<int> cap) const;

 private:
  friend class StateBuilder;
  std::size_t mode_count_ = 0;
  std::optional<int> photon_cap_;
  std::vector<Term> terms_;
};

/// Accumulates (possibly duplicate) terms and produces a canonical FockState:
/// duplicates summed, tiny amplitudes pruned, over-cap terms removed.
class StateBuilder {
 public:
  struct Result {
    FockState state;
    double over_cap_weight = 0.0;  // squared norm removed by the photon cap
    double pruned_weight = 0.0;    // squared norm removed by the prune threshold
  };

  StateBuilder(std::size_t mode_count, std::optional<int> photon_cap);

  void reserve(std::size_t n) { terms_.reserve(n); }
  void add(OccupationVector occ, Amplitude amp);
  Result finish() &&;

 private:
  std::size_t mode_count_;
  std::optional<int> photon_cap_;
  std::vector<FockState::Term> terms_;
};

struct TermSpec {
  std::vector<int> counts;
  Amplitude amplitude;
};

/// Builds a state from explicit terms. Throws std::invalid_argument on a
/// length mismatch or a negative or oversized count.
FockState make_state(std::size_t mode_count, std::span<const TermSpec> terms,
                     std::optional<int> photon_cap = std::nullopt);
FockState make_state(std::size_t mode_count, std::initializer_list<TermSpec> terms,
                     std::optional<int> photon_cap = std::nullopt);

struct TensorResult {
  FockState state;
  double truncated_weight = 0.0;
};

/// Tensor product with `a`'s modes first. The tighter of the two caps applies;
/// terms above it are removed and their weight reported.
TensorResult tensor(const FockState& a, const FockState& b);

double norm_sq(const FockState& s);

/// Max-norm distance between amplitude maps (modes must agree).
double max_abs_difference(const FockState& a, const FockState& b);

/// ⟨a|b⟩.
Amplitude inner_product(const FockState& a, const FockState& b);

/// Projects the `measured` modes onto the given photon counts and removes them.
/// The surviving modes keep their relative order. The result is unnormalized.
FockState project_modes(const FockState& s, std::span<const std::size_t> measured,
                        std::span<const int> counts);

/// Groups terms by their counts on `measured`; each part holds the remaining
/// modes, as project_modes would return for that count pattern.
std::vector<std::pair<OccupationVector, FockState>> partition_by_modes(
    const FockState& s, std::span<const std::size_t> measured);

/// Removes modes that are known to be empty in every term (checked).
FockState remove_modes(const FockState& s, std::span<const std::size_t> modes);

struct Branch {
  double weight = 0.0;
  FockState state;
};

/// Classical mixture of pure states. `truncation_weight` is the accounted
/// probability mass of everything not represented by the branches.
class BranchEnsemble {
 public:
  BranchEnsemble() = default;
  explicit BranchEnsemble(std::size_t mode_count, std::vector<Branch> branches = {},
                          double truncation_weight = 0.0);

  static BranchEnsemble pure(FockState state);

  std::size_t mode_count() const { return mode_count_; }
  std::span<const Branch> branches() const { return branches_; }
  double truncation_weight() const { return truncation_weight_; }
  bool empty() const { return branches_.empty(); }

  /// Σ weight · norm²(state).
  double total_weight() const;

  /// True if no branch carries positive probability.
  bool is_degenerate() const { return total_weight() <= 0.0; }

 private:
  std::size_t mode_count_ = 0;
  std::vector<Branch> branches_;
  double truncation_weight_ = 0.0;
};

/// Branchwise product of independent ensembles. Branch pairs whose product
/// exceeds the photon cap move into the truncation weight, which otherwise
/// combines as 1 - (1 - Ta)(1 - Tb).
BranchEnsemble tensor(const BranchEnsemble& a, const BranchEnsemble& b);

BranchEnsemble ensemble_map(const BranchEnsemble& e,
                            const std::function<FockState(const FockState&)>& f);

}  // namespace qherald::fock
