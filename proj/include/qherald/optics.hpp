#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qherald/fock.hpp"

namespace qherald::optics {

using Matrix = Eigen::MatrixXcd;
using fock::Amplitude;

/// Unitary acting on a subset of the modes of a larger state. Column j of
/// `matrix` is the image of a†_{modes[j]}.
struct ModeTransform {
  Matrix matrix;
  std::vector<std::size_t> modes;
  std::string kind = "matrix";
  std::vector<double> params;

  std::size_t dimension() const { return static_cast<std::size_t>(matrix.rows()); }

  /// Same element placed on different modes.
  ModeTransform on(std::vector<std::size_t> target) const;
};

/// [[√t, √(1−t)], [√(1−t), −√t]] on modes (0, 1).
ModeTransform beamsplitter(double t);

/// Symmetric 50:50 splitter [[1, i], [i, 1]]/√2.
ModeTransform symmetric_beamsplitter();

/// ω^{jk}/√m with ω = exp(2πi/m).
ModeTransform fourier(int m);

ModeTransform phase_shift(double phi);
ModeTransform phase_shifts(const std::vector<double>& phis);

/// Polarization rotation [[cos θ, −sin θ], [sin θ, cos θ]] on an (h, v) pair.
ModeTransform polarization_rotation(double theta);

/// Input mode j is routed to output mode perm[j].
ModeTransform permutation(const std::vector<std::size_t>& perm);

ModeTransform from_matrix(Matrix m, std::vector<std::size_t> modes);
ModeTransform identity(std::size_t m);

/// `second` after `first`, acting on the union of their modes (first's modes
/// in order, then any new ones from second).
ModeTransform compose(const ModeTransform& second, const ModeTransform& first);

bool is_unitary(const Matrix& m, double tol = 1e-12);

/// Haar-distributed m×m unitary from a seeded generator.
Matrix random_unitary(std::size_t m, std::uint64_t seed);

/// Evolves a state under the transform by substituting a†_j → Σ_k U_kj a†_k.
/// Throws std::out_of_range if a touched mode does not exist.
fock::FockState apply(const ModeTransform& u, const fock::FockState& s);

/// Per(U[out, in]) / √(∏ in! ∏ out!), by enumerating permutations.
/// Occupations are over the transform's own modes.
Amplitude amplitude_oracle(const ModeTransform& u, const fock::OccupationVector& in,
                           const fock::OccupationVector& out);

struct LossSpec {
  double eta = 1.0;
  std::size_t mode = 0;
};

/// Splits a state by the number of photons k lost from one mode. Each entry
/// is (k, E_k ψ) with Σ_k ‖E_k ψ‖² = ‖ψ‖².
std::vector<std::pair<int, fock::FockState>> loss_split(const LossSpec& l,
                                                        const fock::FockState& s);

/// Pure-loss channel. Sub-branches carry the loss probability in their weight
/// and keep the parent's norm.
fock::BranchEnsemble loss(const LossSpec& l, const fock::BranchEnsemble& e);

}  // namespace qherald::optics
