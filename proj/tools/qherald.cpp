#include <cmath>
#include <complex>
#include <exception>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "qherald/config.hpp"
#include "qherald/diqkd.hpp"
#include "qherald/herald.hpp"
#include "qherald/klm.hpp"
#include "qherald/optics.hpp"
#include "qherald/sweep.hpp"

namespace {

using namespace qherald;

struct SharedFlags {
  std::string config;
  std::optional<std::string> framework, amplifier, out;
  std::optional<double> eta_d, eta_c, eta_cd, atten, dist_min, dist_max, dist_step;
  std::vector<std::string> sets;
};

void add_shared(CLI::App* app, SharedFlags& f) {
  app->add_option("--config", f.config, "key=value configuration file");
  app->add_option("--framework", f.framework, "restricted | unrestricted | detector_independent");
  app->add_option("--amplifier", f.amplifier, "none | original | modified");
  app->add_option("--eta-d", f.eta_d, "detector efficiency");
  app->add_option("--eta-c", f.eta_c, "coupling efficiency");
  app->add_option("--eta-cd", f.eta_cd, "combined efficiency (overrides eta-d * eta-c)");
  app->add_option("--atten-db-per-km", f.atten, "fiber attenuation");
  app->add_option("--dist-min", f.dist_min, "first distance in km");
  app->add_option("--dist-max", f.dist_max, "last distance in km");
  app->add_option("--dist-step", f.dist_step, "distance step in km");
  app->add_option("--out", f.out, "CSV output path (default: stdout)");
  app->add_option("--set", f.sets, "extra key=value override, repeatable");
}

sweep::SweepConfig build_config(const SharedFlags& f) {
  sweep::SweepConfig cfg;
  if (!f.config.empty()) config::apply_file(cfg, f.config);
  auto num = [](double x) { return fmt::format("{:.17g}", x); };
  auto set = [&](const char* key, const auto& v, auto conv) {
    if (v) config::set_option(cfg, key, conv(*v));
  };
  auto str = [](const std::string& s) { return s; };
  set("framework", f.framework, str);
  set("amplifier", f.amplifier, str);
  set("out", f.out, str);
  set("eta_d", f.eta_d, num);
  set("eta_c", f.eta_c, num);
  set("eta_cd", f.eta_cd, num);
  set("atten_db_per_km", f.atten, num);
  set("dist_min", f.dist_min, num);
  set("dist_max", f.dist_max, num);
  set("dist_step", f.dist_step, num);
  for (const auto& kv : f.sets) config::apply_text(cfg, kv, "--set");
  sweep::validate(cfg);
  return cfg;
}

std::string complex_text(std::complex<double> z) {
  auto clean = [](double x) { return std::abs(x) < 5e-11 ? 0.0 : x; };
  return fmt::format("{:+.10f}{:+.10f}i", clean(z.real()), clean(z.imag()));
}

std::vector<fock::OccupationVector> input_basis(const herald::CircuitDescription& c) {
  if (c.input_modes.size() == 1) return {fock::occupation({0}), fock::occupation({1})};
  return {fock::occupation({0, 0}), fock::occupation({1, 0}), fock::occupation({0, 1}),
          fock::occupation({1, 1})};
}

int run_kraus(const std::string& name, double t, bool text) {
  const auto c = herald::circuit_by_name(name, t);
  if (text) {
    std::cout << herald::to_text(c);
    return 0;
  }
  const auto basis = input_basis(c);
  for (const auto& k : herald::extract_kraus(c, basis)) {
    std::string pattern;
    for (std::size_t i = 0; i < k.pattern.detector_modes.size(); ++i)
      pattern += fmt::format("{}{}:{}", i ? " " : "", k.pattern.detector_modes[i], k.pattern.counts[i]);
    fmt::print("pattern {}\n", pattern);
    for (Eigen::Index r = 0; r < k.matrix.rows(); ++r) {
      fmt::print("  {:>6} |", fock::to_string(k.basis_out[static_cast<std::size_t>(r)]));
      for (Eigen::Index col = 0; col < k.matrix.cols(); ++col) fmt::print(" {}", complex_text(k.matrix(r, col)));
      fmt::print("\n");
    }
    const auto ref = herald::reference_kraus(c, k.basis_in, k.basis_out);
    if (const auto ff = herald::fit_feedforward(k, ref)) {
      std::string phases;
      for (const auto& ph : ff->mode_phases) phases += " " + complex_text(ph);
      fmt::print("  feed-forward global {} modes{}\n", complex_text(ff->global), phases);
      fmt::print("  deviation after correction {:.3e}\n",
                 herald::max_abs_difference(herald::apply_feedforward(k, *ff), ref));
    } else {
      fmt::print("  no phase correction matches the ideal operator\n");
    }
  }
  return 0;
}

int run_selftest() {
  int failures = 0;
  auto check = [&](const std::string& name, bool ok, double value) {
    fmt::print("{} {} ({:.3e})\n", ok ? "PASS" : "FAIL", name, value);
    if (!ok) ++failures;
  };

  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::size_t m = 2 + seed % 3;
    const auto u = optics::from_matrix(optics::random_unitary(m, seed), [&] {
      std::vector<std::size_t> v(m);
      for (std::size_t i = 0; i < m; ++i) v[i] = i;
      return v;
    }());
    fock::OccupationVector in(m, 0);
    in[0] = 2;
    in[m - 1] += 1;
    fock::StateBuilder b(m, std::nullopt);
    b.add(in, 1.0);
    const auto out = optics::apply(u, std::move(b).finish().state);
    for (const auto& [occ, amp] : out.terms())
      worst = std::max(worst, std::abs(amp - optics::amplitude_oracle(u, in, occ)));
  }
  check("apply matches the permanent oracle", worst < 1e-10, worst);

  for (const char* name : {"ralph_lund", "qubit_amplifier", "modified_amplifier"}) {
    double dev = 0.0;
    bool all = true;
    for (double t : {0.1, 0.5, 0.9}) {
      const auto c = herald::circuit_by_name(name, t);
      for (const auto& k : herald::extract_kraus(c, input_basis(c))) {
        const auto ref = herald::reference_kraus(c, k.basis_in, k.basis_out);
        const auto ff = herald::fit_feedforward(k, ref);
        all = all && ff.has_value();
        if (ff) dev = std::max(dev, herald::max_abs_difference(herald::apply_feedforward(k, *ff), ref));
      }
    }
    check(fmt::format("{} Kraus operators match the closed form", name), all && dev < 1e-10, dev);
  }

  double law = 0.0;
  for (const auto& r : sweep::report_klm(3))
    law = std::max({law, std::abs(r.teleport_success - r.n / (r.n + 1.0)),
                    std::abs(r.qnd_success - r.n / (r.n + 1.0)), 1.0 - r.teleport_fidelity,
                    1.0 - r.qnd_fidelity});
  check("KLM success n/(n+1) with unit fidelity", law < 1e-10, law);

  const double k1 = diqkd::key_restricted(1.0, 0.0, 0.0, 2.0 * std::numbers::sqrt2);
  const double k2 = diqkd::key_unrestricted(1.0, 0.0, 2.0 * std::numbers::sqrt2);
  const double k3 = diqkd::key_detector_independent(1.0, 0.0);
  const double dev = std::max({std::abs(k1 - 1.0), std::abs(k2 - 1.0), std::abs(k3 - 1.0)});
  check("key rates equal 1 for ideal statistics", dev < 1e-12, dev);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heralded qubit amplifiers and DIQKD key rates"};
  app.require_subcommand(1);

  std::string circuit = "modified_amplifier";
  double t = 0.5;
  bool text = false;
  auto* kraus = app.add_subcommand("kraus", "print the Kraus operators of a heralding circuit");
  kraus->add_option("--circuit", circuit, "ralph_lund | qubit_amplifier | modified_amplifier");
  kraus->add_option("--t", t, "transmissivity")->check(CLI::Range(0.0, 1.0));
  kraus->add_flag("--text", text, "print the circuit description instead");

  int n_max = 4;
  auto* klm_cmd = app.add_subcommand("klm", "success probability and fidelity of KLM teleportation");
  klm_cmd->add_option("--n-max", n_max, "largest ancilla size (at most 6)")->check(CLI::Range(1, 6));

  SharedFlags sweep_flags, opt_flags;
  auto* sweep_cmd = app.add_subcommand("sweep", "optimized key rate over a distance grid, as CSV");
  add_shared(sweep_cmd, sweep_flags);

  double distance = 0.0;
  auto* opt_cmd = app.add_subcommand("optimize", "optimize (p, p', t) at one distance");
  add_shared(opt_cmd, opt_flags);
  opt_cmd->add_option("--distance", distance, "distance in km");

  auto* self = app.add_subcommand("selftest", "run oracle cross-checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*kraus) return run_kraus(circuit, t, text);
    if (*klm_cmd) {
      std::cout << sweep::format_klm(sweep::report_klm(n_max));
      return 0;
    }
    if (*sweep_cmd) {
      const auto cfg = build_config(sweep_flags);
      sweep::write_csv(cfg, sweep::sweep(cfg), std::cout);
      return 0;
    }
    if (*opt_cmd) {
      auto cfg = build_config(opt_flags);
      sweep::write_csv(cfg, {sweep::optimize_point(cfg, distance)}, std::cout);
      return 0;
    }
    if (*self) return run_selftest();
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
