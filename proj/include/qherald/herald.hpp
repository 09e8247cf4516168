#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qherald/fock.hpp"
#include "qherald/optics.hpp"

namespace qherald::herald {

using fock::Amplitude;
using fock::OccupationVector;

struct DetectionPattern {
  std::vector<std::size_t> detector_modes;
  std::vector<int> counts;
};

/// Accepts any distribution of exactly `photons` photons over `modes`.
struct HeraldGroup {
  std::vector<std::size_t> modes;
  int photons = 1;
};

struct HeraldOutcome {
  fock::BranchEnsemble conditional;  // unnormalized, on the surviving modes
  double herald_probability = 0.0;
};

using Element = std::variant<optics::ModeTransform, optics::LossSpec>;

struct CircuitDescription {
  std::string name;
  double transmissivity = 0.0;
  std::size_t mode_count = 0;
  std::vector<std::size_t> input_modes;
  std::vector<int> preparation;  // Fock product on the ancilla modes, zero on inputs
  std::vector<Element> elements;
  std::vector<HeraldGroup> herald;
  std::vector<std::size_t> output_modes;

  std::vector<std::size_t> detector_modes() const;
  std::vector<DetectionPattern> accepted_patterns() const;
};

/// Throws std::invalid_argument describing the first inconsistency found.
void validate(const CircuitDescription& c);

CircuitDescription ralph_lund(double t);
CircuitDescription qubit_amplifier(double t);
CircuitDescription modified_amplifier(double t);
CircuitDescription circuit_by_name(const std::string& name, double t);

/// Shifts every mode by `offset` inside a `total_modes`-mode system.
CircuitDescription embed(const CircuitDescription& c, std::size_t offset, std::size_t total_modes);

/// Splits off trailing unitaries that act only on output modes. They commute
/// with the heralding measurement and can be applied by the receiver instead.
std::pair<CircuitDescription, std::vector<optics::ModeTransform>> defer_output_stage(
    const CircuitDescription& c);

/// Places `input` (over the circuit's input modes, in order) next to the ancillas.
fock::FockState prepare(const CircuitDescription& c, const fock::FockState& input);

fock::BranchEnsemble run(const CircuitDescription& c, const fock::BranchEnsemble& prepared);

HeraldOutcome condition(const fock::BranchEnsemble& e, const DetectionPattern& p);

/// Union over equivalent accepted patterns.
HeraldOutcome condition(const fock::BranchEnsemble& e, std::span<const DetectionPattern> accepted);

/// Circuit run on `input` and conditioned on the accepted patterns.
HeraldOutcome herald(const CircuitDescription& c, const fock::FockState& input);

/// Probability of every photon-count pattern on `modes`.
std::map<std::vector<int>, double> outcome_distribution(const fock::BranchEnsemble& e,
                                                        std::span<const std::size_t> modes);

struct PatternBranch {
  std::size_t pattern = 0;  // index into the accepted list
  double weight = 0.0;
  fock::FockState state;  // unnormalized, detector modes removed
};

/// Heralding with detectors of efficiency `eta`: the loss in front of each
/// detector is folded into a binomial POVM. Equivalent to applying
/// optics::loss on every detector mode and then conditioning.
std::vector<PatternBranch> condition_lossy(const fock::BranchEnsemble& e,
                                           std::span<const DetectionPattern> accepted, double eta);

struct KrausOperator {
  std::vector<OccupationVector> basis_in;
  std::vector<OccupationVector> basis_out;
  optics::Matrix matrix;
  DetectionPattern pattern;

  double max_singular_value() const;
};

/// One operator per accepted pattern. Column j holds the conditional output
/// for basis_in[j]. When `basis_out` is empty every output vector that occurs
/// is used, sorted. Circuits with loss elements have no Kraus form and throw.
std::vector<KrausOperator> extract_kraus(const CircuitDescription& c,
                                         const std::vector<OccupationVector>& basis_in,
                                         std::vector<OccupationVector> basis_out = {});

/// Ideal output of the named circuit for an input with at most one photon per
/// input mode. Throws std::domain_error otherwise.
fock::FockState closed_form(const CircuitDescription& c, const fock::FockState& input);

/// Closed form divided by √(number of accepted patterns), in the given bases.
KrausOperator reference_kraus(const CircuitDescription& c,
                              const std::vector<OccupationVector>& basis_in,
                              const std::vector<OccupationVector>& basis_out);

/// Feed-forward correction: a global phase and one phase shifter per output mode.
struct FeedForward {
  Amplitude global{1.0, 0.0};
  std::vector<Amplitude> mode_phases;
};

KrausOperator apply_feedforward(const KrausOperator& k, const FeedForward& f);

/// Diagonal phase-shifter transform over the output modes (indices 0..m-1).
optics::ModeTransform feedforward_transform(const FeedForward& f);

/// Finds the correction that maps `measured` onto `reference`, or nullopt if
/// none reaches `tol` in max-norm.
std::optional<FeedForward> fit_feedforward(const KrausOperator& measured,
                                           const KrausOperator& reference, double tol = 1e-10);

double max_abs_difference(const KrausOperator& a, const KrausOperator& b);

struct QubitFractionBound {
  double t_opt = 0.0;
  double fraction = 0.0;
  bool limit_case = false;  // c11 = 0: optimum approached only as t → 1
};

/// Largest heralded dual-rail fraction of the qubit amplifier over t.
QubitFractionBound qubit_fraction_bound(double c00, double c01, double c10, double c11);

std::string to_text(const CircuitDescription& c);
CircuitDescription parse_circuit(const std::string& text);

}  // namespace qherald::herald
