#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qherald/diqkd.hpp"

namespace qherald::sweep {

struct SweepConfig {
  diqkd::Framework framework = diqkd::Framework::restricted;
  diqkd::Amplifier amplifier = diqkd::Amplifier::modified;
  double eta_d = 0.95;
  double eta_c = 0.90;
  std::optional<double> eta_cd;  // overrides eta_d · eta_c when set
  double atten_db_per_km = 0.2;
  double dist_min = 0.0;
  double dist_max = 100.0;
  double dist_step = 10.0;
  std::string out;  // empty: standard output
  double p_min = 1e-5, p_max = 1e-2;
  double p_prime_min = 1e-5, p_prime_max = 1e-2;
  double t_min = 0.025, t_max = 0.975;
  int grid_p = 20, grid_p_prime = 20, grid_t = 20;
  int refine_evals = 200;
  double repetition_rate = diqkd::kRepetitionRate;
  int photon_cap = fock::kDefaultPhotonCap;
  int threads = 0;  // 0: hardware concurrency

  double combined_efficiency() const;
  double channel_transmission(double distance_km) const;
  std::vector<double> distances() const;
};

/// Throws std::invalid_argument on the first bad field.
void validate(const SweepConfig& cfg);

struct PointResult {
  double distance_km = 0.0;
  double eta_t = 1.0;
  double p = 0.0;
  double p_prime = 0.0;
  double t = 0.0;
  diqkd::Evaluation evaluation;
};

/// Quantity maximized by the optimizer: signed raw key per signal sent.
double objective(const diqkd::Evaluation& e);

/// Evaluates a fixed (p, p′, t) at one distance.
PointResult evaluate_point(const SweepConfig& cfg, double distance_km, double p, double p_prime,
                           double t);

/// Every point of the coarse (p, p′, t) grid at one distance.
std::vector<PointResult> evaluate_grid(const SweepConfig& cfg, double distance_km);

/// Grid search over (p, p′, t) followed by a Nelder-Mead refinement in
/// (log₁₀ p, log₁₀ p′, t). Without an amplifier only p is searched.
PointResult optimize_point(const SweepConfig& cfg, double distance_km);

/// One optimized row per distance, in input order.
std::vector<PointResult> sweep(const SweepConfig& cfg);

std::string csv_header();
std::string csv_row(const PointResult& r);
void write_csv(std::ostream& os, const std::vector<PointResult>& rows);
/// Writes to cfg.out, or to `fallback` when cfg.out is empty. Throws
/// std::runtime_error naming the file on I/O failure.
void write_csv(const SweepConfig& cfg, const std::vector<PointResult>& rows, std::ostream& fallback);

struct KlmRow {
  int n = 0;
  double teleport_success = 0.0;
  double teleport_fidelity = 0.0;
  double qnd_success = 0.0;
  double qnd_fidelity = 0.0;
};

/// Success probability and worst success-branch fidelity for n = 1..n_max (≤ 6).
std::vector<KlmRow> report_klm(int n_max);
std::string format_klm(const std::vector<KlmRow>& rows);

}  // namespace qherald::sweep
