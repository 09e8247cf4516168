#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "qherald/fock.hpp"

namespace qherald::testkit {

using Density = std::map<std::pair<fock::OccupationVector, fock::OccupationVector>, std::complex<double>>;

inline void accumulate(Density& rho, double weight, const fock::FockState& s) {
  for (const auto& [a, x] : s.terms())
    for (const auto& [b, y] : s.terms()) rho[{a, b}] += weight * x * std::conj(y);
}

inline Density density(const fock::BranchEnsemble& e) {
  Density rho;
  for (const auto& br : e.branches()) accumulate(rho, br.weight, br.state);
  return rho;
}

inline double max_difference(const Density& a, const Density& b) {
  double worst = 0.0;
  for (const auto& [k, v] : a) {
    const auto it = b.find(k);
    worst = std::max(worst, std::abs(v - (it == b.end() ? 0.0 : it->second)));
  }
  for (const auto& [k, v] : b)
    if (!a.count(k)) worst = std::max(worst, std::abs(v));
  return worst;
}

inline std::vector<std::size_t> iota_modes(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

/// Normalized complex vector with Gaussian entries.
inline std::vector<std::complex<double>> random_amplitudes(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<std::complex<double>> v(n);
  double norm = 0.0;
  for (auto& z : v) {
    z = {g(rng), g(rng)};
    norm += std::norm(z);
  }
  for (auto& z : v) z /= std::sqrt(norm);
  return v;
}

inline fock::FockState basis_state(std::vector<int> counts, std::complex<double> amp = 1.0) {
  const auto n = counts.size();
  return fock::make_state(n, {{std::move(counts), amp}});
}

}  // namespace qherald::testkit
