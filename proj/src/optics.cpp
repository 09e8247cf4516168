#include "qherald/optics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace qherald::optics {

using fock::FockState;
using fock::OccupationVector;

namespace {

void check_unit_interval(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument(fmt::format("{} = {} outside [0, 1]", what, x));
}

std::vector<std::size_t> iota_modes(std::size_t n) {
  std::vector<std::size_t> m(n);
  std::iota(m.begin(), m.end(), 0);
  return m;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

using Expansion = std::vector<std::pair<OccupationVector, Amplitude>>;

// Output sub-occupations and amplitudes for one input sub-occupation.
Expansion expand(const Matrix& u, const OccupationVector& in) {
  const auto d = static_cast<std::size_t>(u.rows());
  std::map<OccupationVector, Amplitude> poly;
  poly.emplace(OccupationVector(d, 0), Amplitude{1.0, 0.0});
  double in_fact = 1.0;
  for (std::size_t j = 0; j < d; ++j) {
    in_fact *= factorial(in[j]);
    for (int rep = 0; rep < in[j]; ++rep) {
      std::map<OccupationVector, Amplitude> next;
      for (const auto& [mono, c] : poly) {
        for (std::size_t k = 0; k < d; ++k) {
          const Amplitude ukj = u(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
          if (ukj == Amplitude{}) continue;
          OccupationVector m = mono;
          ++m[k];
          next[std::move(m)] += c * ukj;
        }
      }
      poly = std::move(next);
    }
  }
  Expansion out;
  out.reserve(poly.size());
  const double in_norm = 1.0 / std::sqrt(in_fact);
  for (auto& [mono, c] : poly) {
    double out_fact = 1.0;
    for (auto m : mono) out_fact *= factorial(m);
    out.emplace_back(mono, c * std::sqrt(out_fact) * in_norm);
  }
  return out;
}

}  // namespace

ModeTransform ModeTransform::on(std::vector<std::size_t> target) const {
  if (target.size() != dimension())
    throw std::invalid_argument(
        fmt::format("{}-mode element placed on {} modes", dimension(), target.size()));
  ModeTransform t = *this;
  t.modes = std::move(target);
  return t;
}

ModeTransform beamsplitter(double t) {
  check_unit_interval(t, "transmissivity");
  const double a = std::sqrt(t), b = std::sqrt(1.0 - t);
  Matrix m(2, 2);
  m << a, b, b, -a;
  return {m, {0, 1}, "beamsplitter", {t}};
}

ModeTransform symmetric_beamsplitter() {
  const double s = 1.0 / std::numbers::sqrt2;
  Matrix m(2, 2);
  m << Amplitude{s, 0}, Amplitude{0, s}, Amplitude{0, s}, Amplitude{s, 0};
  return {m, {0, 1}, "symmetric", {}};
}

ModeTransform fourier(int m) {
  if (m < 1) throw std::invalid_argument(fmt::format("fourier size {} must be positive", m));
  Matrix f(m, m);
  const double norm = 1.0 / std::sqrt(static_cast<double>(m));
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k)
      f(j, k) = std::polar(norm, 2.0 * std::numbers::pi * ((j * k) % m) / m);
  return {f, iota_modes(static_cast<std::size_t>(m)), "fourier", {static_cast<double>(m)}};
}

ModeTransform phase_shift(double phi) { return phase_shifts({phi}); }

ModeTransform phase_shifts(const std::vector<double>& phis) {
  const auto n = static_cast<Eigen::Index>(phis.size());
  Matrix m = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = std::polar(1.0, phis[static_cast<std::size_t>(i)]);
  return {m, iota_modes(phis.size()), "phase", phis};
}

ModeTransform polarization_rotation(double theta) {
  Matrix m(2, 2);
  const double c = std::cos(theta), s = std::sin(theta);
  m << c, -s, s, c;
  return {m, {0, 1}, "rotation", {theta}};
}

ModeTransform permutation(const std::vector<std::size_t>& perm) {
  const auto n = perm.size();
  std::vector<bool> seen(n, false);
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    if (perm[j] >= n || seen[perm[j]]) throw std::invalid_argument("not a permutation");
    seen[perm[j]] = true;
    m(static_cast<Eigen::Index>(perm[j]), static_cast<Eigen::Index>(j)) = 1.0;
  }
  std::vector<double> params(perm.begin(), perm.end());
  return {m, iota_modes(n), "permutation", params};
}

ModeTransform from_matrix(Matrix m, std::vector<std::size_t> modes) {
  if (m.rows() != m.cols()) throw std::invalid_argument("transform matrix must be square");
  if (static_cast<std::size_t>(m.rows()) != modes.size())
    throw std::invalid_argument("matrix dimension does not match mode list");
  return {std::move(m), std::move(modes), "matrix", {}};
}

ModeTransform identity(std::size_t m) {
  return {Matrix::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)),
          iota_modes(m), "identity", {}};
}

ModeTransform compose(const ModeTransform& second, const ModeTransform& first) {
  std::vector<std::size_t> modes = first.modes;
  for (auto m : second.modes)
    if (std::find(modes.begin(), modes.end(), m) == modes.end()) modes.push_back(m);
  const auto n = static_cast<Eigen::Index>(modes.size());
  auto embed = [&](const ModeTransform& t) {
    Matrix big = Matrix::Identity(n, n);
    std::vector<Eigen::Index> idx;
    for (auto m : t.modes)
      idx.push_back(std::find(modes.begin(), modes.end(), m) - modes.begin());
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t c = 0; c < idx.size(); ++c)
        big(idx[r], idx[c]) = t.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    return big;
  };
  return {embed(second) * embed(first), modes, "composite", {}};
}

bool is_unitary(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const Matrix d = m.adjoint() * m - Matrix::Identity(m.rows(), m.cols());
  return d.cwiseAbs().maxCoeff() <= tol;
}

Matrix random_unitary(std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(m);
  Matrix z(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) z(i, j) = Amplitude(g(rng), g(rng));
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double a = std::abs(r(j, j));
    if (a > 0.0) q.col(j) *= r(j, j) / a;
  }
  return q;
}

FockState apply(const ModeTransform& u, const FockState& s) {
  const auto d = u.dimension();
  for (auto m : u.modes)
    if (m >= s.mode_count())
      throw std::out_of_range(fmt::format("transform touches mode {} of a {}-mode state", m,
                                          s.mode_count()));
  std::map<OccupationVector, Expansion> cache;
  fock::StateBuilder b(s.mode_count(), s.photon_cap());
  for (const auto& [occ, amp] : s.terms()) {
    OccupationVector sub(d);
    for (std::size_t i = 0; i < d; ++i) sub[i] = occ[u.modes[i]];
    auto it = cache.find(sub);
    if (it == cache.end()) it = cache.emplace(sub, expand(u.matrix, sub)).first;
    for (const auto& [out, c] : it->second) {
      OccupationVector o = occ;
      for (std::size_t i = 0; i < d; ++i) o[u.modes[i]] = out[i];
      b.add(std::move(o), amp * c);
    }
  }
  return std::move(b).finish().state;
}

Amplitude amplitude_oracle(const ModeTransform& u, const OccupationVector& in,
                           const OccupationVector& out) {
  const auto d = u.dimension();
  if (in.size() != d || out.size() != d)
    throw std::invalid_argument("occupation length does not match transform");
  const int n = fock::total_photons(in);
  if (n != fock::total_photons(out))
    throw std::invalid_argument("photon numbers of input and output differ");
  std::vector<std::size_t> rows, cols;
  double norm = 1.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (int r = 0; r < out[i]; ++r) rows.push_back(i);
    for (int c = 0; c < in[i]; ++c) cols.push_back(i);
    norm *= factorial(in[i]) * factorial(out[i]);
  }
  std::vector<std::size_t> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Amplitude per{};
  do {
    Amplitude prod{1.0, 0.0};
    for (std::size_t i = 0; i < perm.size(); ++i)
      prod *= u.matrix(static_cast<Eigen::Index>(rows[perm[i]]), static_cast<Eigen::Index>(cols[i]));
    per += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return per / std::sqrt(norm);
}

std::vector<std::pair<int, FockState>> loss_split(const LossSpec& l, const FockState& s) {
  check_unit_interval(l.eta, "loss transmissivity");
  if (l.mode >= s.mode_count())
    throw std::out_of_range(fmt::format("loss on mode {} of a {}-mode state", l.mode, s.mode_count()));
  std::map<int, fock::StateBuilder> parts;
  for (const auto& [occ, amp] : s.terms()) {
    const int n = occ[l.mode];
    for (int k = 0; k <= n; ++k) {
      const double p = std::tgamma(n + 1) / (std::tgamma(k + 1) * std::tgamma(n - k + 1)) *
                       std::pow(l.eta, n - k) * std::pow(1.0 - l.eta, k);
      if (p == 0.0) continue;
      OccupationVector o = occ;
      o[l.mode] = static_cast<std::uint8_t>(n - k);
      parts.try_emplace(k, s.mode_count(), s.photon_cap()).first->second.add(std::move(o),
                                                                             amp * std::sqrt(p));
    }
  }
  std::vector<std::pair<int, FockState>> out;
  for (auto& [k, b] : parts) {
    auto st = std::move(b).finish().state;
    if (!st.empty()) out.emplace_back(k, std::move(st));
  }
  return out;
}

fock::BranchEnsemble loss(const LossSpec& l, const fock::BranchEnsemble& e) {
  std::vector<fock::Branch> out;
  for (const auto& br : e.branches()) {
    const double parent = br.state.norm_sq();
    if (parent == 0.0) {
      out.push_back(br);
      continue;
    }
    for (auto& [k, st] : loss_split(l, br.state)) {
      const double part = st.norm_sq();
      out.push_back({br.weight * part / parent, st.scaled(std::sqrt(parent / part))});
    }
  }
  return fock::BranchEnsemble(e.mode_count(), std::move(out), e.truncation_weight());
}

}  // namespace qherald::optics
