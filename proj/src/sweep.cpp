#include "qherald/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "qherald/klm.hpp"
#include "qherald/optimize.hpp"

namespace qherald::sweep {

using diqkd::Amplifier;
using diqkd::Evaluation;
using diqkd::Response;

double SweepConfig::combined_efficiency() const { return eta_cd.value_or(eta_d * eta_c); }

double SweepConfig::channel_transmission(double distance_km) const {
  return std::pow(10.0, -atten_db_per_km * distance_km / 10.0);
}

std::vector<double> SweepConfig::distances() const {
  const auto n = static_cast<int>(std::floor((dist_max - dist_min) / dist_step + 1e-9)) + 1;
  std::vector<double> d;
  for (int i = 0; i < n; ++i) d.push_back(dist_min + i * dist_step);
  return d;
}

void validate(const SweepConfig& cfg) {
  auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
  auto unit = [&](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) fail(fmt::format("{} = {} outside [0, 1]", name, v));
  };
  unit(cfg.eta_d, "eta_d");
  unit(cfg.eta_c, "eta_c");
  if (cfg.eta_cd) unit(*cfg.eta_cd, "eta_cd");
  if (!(cfg.atten_db_per_km >= 0.0)) fail("atten_db_per_km must be non-negative");
  if (!(cfg.dist_min >= 0.0)) fail("dist_min must be non-negative");
  if (!(cfg.dist_max >= cfg.dist_min)) fail("dist_max must not be below dist_min");
  if (!(cfg.dist_step > 0.0)) fail("dist_step must be positive");
  auto pump = [&](double lo, double hi, const char* name) {
    if (!(lo > 0.0 && lo <= hi && hi <= sources::kMaxPump))
      fail(fmt::format("{} range [{}, {}] must satisfy 0 < min <= max <= {}", name, lo, hi,
                       sources::kMaxPump));
  };
  pump(cfg.p_min, cfg.p_max, "p");
  pump(cfg.p_prime_min, cfg.p_prime_max, "p_prime");
  if (!(cfg.t_min > 0.0 && cfg.t_min <= cfg.t_max && cfg.t_max < 1.0))
    fail(fmt::format("t range [{}, {}] must lie inside (0, 1)", cfg.t_min, cfg.t_max));
  if (cfg.grid_p < 1 || cfg.grid_p_prime < 1 || cfg.grid_t < 1) fail("grid sizes must be positive");
  if (cfg.refine_evals < 0) fail("refine_evals must be non-negative");
  if (!(cfg.repetition_rate > 0.0)) fail("repetition_rate must be positive");
  if (cfg.photon_cap < 1) fail("photon_cap must be positive");
  if (cfg.threads < 0) fail("threads must be non-negative");
}

double objective(const Evaluation& e) { return e.report.K_raw * e.tallies.herald_prob; }

namespace {

class ResponseCache {
 public:
  ResponseCache(const SweepConfig& cfg, double eta_t) : cfg_(cfg), eta_t_(eta_t) {}

  const Response& at(double t) {
    if (cfg_.amplifier == Amplifier::none) t = 0.5;
    auto it = cache_.find(t);
    if (it != cache_.end()) return it->second;
    diqkd::Scenario s;
    s.amplifier = cfg_.amplifier;
    s.t = t;
    s.eta_t = eta_t_;
    s.eta_cd = cfg_.combined_efficiency();
    s.photon_cap = cfg_.photon_cap;
    return cache_.emplace(t, diqkd::simulate_response(s)).first->second;
  }

 private:
  const SweepConfig& cfg_;
  double eta_t_;
  std::map<double, Response> cache_;
};

PointResult make_result(const SweepConfig& cfg, double distance, double eta_t, double p,
                        double p_prime, double t, ResponseCache& cache) {
  PointResult r{distance, eta_t, p, p_prime, t, {}};
  r.evaluation = diqkd::evaluate(cache.at(t), p, p_prime, cfg.framework, cfg.repetition_rate);
  return r;
}

}  // namespace

PointResult evaluate_point(const SweepConfig& cfg, double distance_km, double p, double p_prime,
                           double t) {
  validate(cfg);
  const double eta_t = cfg.channel_transmission(distance_km);
  if (cfg.amplifier == Amplifier::none) p_prime = 0.0;
  ResponseCache cache(cfg, eta_t);
  return make_result(cfg, distance_km, eta_t, p, p_prime, t, cache);
}

namespace {

struct Grid {
  std::vector<double> ps, pps, ts;
};

Grid make_grid(const SweepConfig& cfg) {
  const bool amplified = cfg.amplifier != Amplifier::none;
  return {optimize::logspace(cfg.p_min, cfg.p_max, cfg.grid_p),
          amplified ? optimize::logspace(cfg.p_prime_min, cfg.p_prime_max, cfg.grid_p_prime)
                    : std::vector<double>{0.0},
          amplified ? optimize::linspace(cfg.t_min, cfg.t_max, cfg.grid_t) : std::vector<double>{0.5}};
}

}  // namespace

std::vector<PointResult> evaluate_grid(const SweepConfig& cfg, double distance_km) {
  validate(cfg);
  const double eta_t = cfg.channel_transmission(distance_km);
  ResponseCache cache(cfg, eta_t);
  const auto g = make_grid(cfg);
  std::vector<PointResult> out;
  for (double t : g.ts)
    for (double pp : g.pps)
      for (double p : g.ps) out.push_back(make_result(cfg, distance_km, eta_t, p, pp, t, cache));
  return out;
}

PointResult optimize_point(const SweepConfig& cfg, double distance_km) {
  validate(cfg);
  const bool amplified = cfg.amplifier != Amplifier::none;
  const double eta_t = cfg.channel_transmission(distance_km);
  ResponseCache cache(cfg, eta_t);
  const auto [ps, pps, ts] = make_grid(cfg);

  PointResult best;
  double best_value = -std::numeric_limits<double>::infinity();
  auto consider = [&](double p, double pp, double t) {
    auto r = make_result(cfg, distance_km, eta_t, p, pp, t, cache);
    const double v = objective(r.evaluation);
    if (v > best_value) {
      best_value = v;
      best = std::move(r);
    }
    return v;
  };
  for (double t : ts)
    for (double pp : pps)
      for (double p : ps) consider(p, pp, t);

  if (cfg.refine_evals > 0) {
    auto step = [](const std::vector<double>& g, bool log) {
      if (g.size() < 2) return 0.1;
      return log ? std::log10(g[1]) - std::log10(g[0]) : g[1] - g[0];
    };
    optimize::Box box;
    std::vector<double> start, steps;
    box.lower.push_back(std::log10(cfg.p_min));
    box.upper.push_back(std::log10(cfg.p_max));
    start.push_back(std::log10(best.p));
    steps.push_back(step(ps, true));
    if (amplified) {
      box.lower.push_back(std::log10(cfg.p_prime_min));
      box.upper.push_back(std::log10(cfg.p_prime_max));
      start.push_back(std::log10(best.p_prime));
      steps.push_back(step(pps, true));
      box.lower.push_back(cfg.t_min);
      box.upper.push_back(cfg.t_max);
      start.push_back(best.t);
      steps.push_back(step(ts, false));
    }
    for (std::size_t i = 0; i < steps.size(); ++i)
      if (box.upper[i] == box.lower[i]) steps[i] = 1e-3;
    auto f = [&](const std::vector<double>& x) {
      const double p = std::pow(10.0, x[0]);
      const double pp = amplified ? std::pow(10.0, x[1]) : 0.0;
      const double t = amplified ? x[2] : 0.5;
      return -consider(p, pp, t);
    };
    optimize::nelder_mead(f, start, steps, box, cfg.refine_evals, 1e-7);
  }
  return best;
}

std::vector<PointResult> sweep(const SweepConfig& cfg) {
  validate(cfg);
  const auto ds = cfg.distances();
  std::vector<PointResult> rows(ds.size());
  std::vector<std::exception_ptr> errors(ds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < ds.size(); i = next++) {
      try {
        rows[i] = optimize_point(cfg, ds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const auto n = std::min<std::size_t>(ds.size(), cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : hw);
  std::vector<std::jthread> pool;
  for (std::size_t i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

std::string csv_header() {
  return "distance_km,eta_t,p,p_prime,t,herald_prob,mu_cc,mu_c,mu_minus_c,S,S_cc,Q_cc,Q_minus_c,"
         "K_approx,K_lower,rate_per_second";
}

std::string csv_row(const PointResult& r) {
  const auto& s = r.evaluation.tallies;
  const auto& k = r.evaluation.report;
  return fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},"
                     "{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}",
                     r.distance_km, r.eta_t, r.p, r.p_prime, r.t, s.herald_prob, s.mu_cc, s.mu_c,
                     s.mu_minus_c, s.S, s.S_cc, s.Q_cc, s.Q_minus_c, k.K_approx, k.K_lower,
                     k.rate_per_second);
}

void write_csv(std::ostream& os, const std::vector<PointResult>& rows) {
  os << csv_header() << '\n';
  for (const auto& r : rows) os << csv_row(r) << '\n';
}

void write_csv(const SweepConfig& cfg, const std::vector<PointResult>& rows, std::ostream& fallback) {
  if (cfg.out.empty()) {
    write_csv(fallback, rows);
    return;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) throw std::runtime_error(fmt::format("cannot open {}: {}", cfg.out, std::strerror(errno)));
  write_csv(f, rows);
  f.flush();
  if (!f) throw std::runtime_error(fmt::format("write to {} failed: {}", cfg.out, std::strerror(errno)));
}

std::vector<KlmRow> report_klm(int n_max) {
  if (n_max < 1 || n_max > 6) throw std::invalid_argument("n_max must be in 1..6");
  const double a = 0.6;
  const double b = 0.8;
  const auto single = fock::make_state(1, {{{0}, {a, 0.0}}, {{1}, {0.0, b}}});
  const auto dual = fock::make_state(2, {{{1, 0}, {a, 0.0}}, {{0, 1}, {0.0, b}}});
  std::vector<KlmRow> rows;
  for (int n = 1; n <= n_max; ++n) {
    const auto tp = klm::summarize(klm::teleport(single, n), single);
    const auto qnd = klm::summarize(klm::qnd_herald(dual, n), dual);
    rows.push_back({n, tp.success_probability, tp.min_fidelity, qnd.success_probability, qnd.min_fidelity});
  }
  return rows;
}

std::string format_klm(const std::vector<KlmRow>& rows) {
  std::string s = "n,teleport_success,teleport_fidelity,qnd_success,qnd_fidelity\n";
  for (const auto& r : rows)
    s += fmt::format("{},{:.12f},{:.12f},{:.12f},{:.12f}\n", r.n, r.teleport_success,
                     r.teleport_fidelity, r.qnd_success, r.qnd_fidelity);
  return s;
}

}  // namespace qherald::sweep
