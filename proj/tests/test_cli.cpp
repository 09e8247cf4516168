#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "qherald/config.hpp"
#include "qherald/sweep.hpp"

using namespace qherald;
using sweep::SweepConfig;

namespace {

std::vector<double> split_row(const std::string& row) {
  std::vector<double> v;
  std::stringstream ss(row);
  std::string cell;
  while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
  return v;
}

SweepConfig small_config() {
  SweepConfig c;
  c.framework = diqkd::Framework::detector_independent;
  c.eta_cd = 0.8;
  c.grid_p = c.grid_p_prime = c.grid_t = 3;
  c.refine_evals = 20;
  c.dist_min = 0;
  c.dist_max = 20;
  c.dist_step = 10;
  return c;
}

}  // namespace

TEST(Config, ParsesKeyValueLines) {
  SweepConfig c;
  config::apply_text(c, "# comment\nframework = unrestricted\n amplifier=original  # trailing\n\neta_cd = 0.93\ngrid_t = 7\n");
  EXPECT_EQ(c.framework, diqkd::Framework::unrestricted);
  EXPECT_EQ(c.amplifier, diqkd::Amplifier::original);
  EXPECT_DOUBLE_EQ(c.combined_efficiency(), 0.93);
  EXPECT_EQ(c.grid_t, 7);
}

TEST(Config, UnknownKeysFailWithLineNumber) {
  SweepConfig c;
  try {
    config::apply_text(c, "eta_d = 0.9\ncolour = blue\n", "run.cfg");
    FAIL() << "expected an exception";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg:2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("colour"), std::string::npos);
  }
}

TEST(Config, MalformedValuesFail) {
  SweepConfig c;
  EXPECT_THROW(config::set_option(c, "eta_d", "high"), std::invalid_argument);
  EXPECT_THROW(config::set_option(c, "grid_p", "2.5"), std::invalid_argument);
  EXPECT_THROW(config::apply_text(c, "eta_d 0.9\n"), std::invalid_argument);
  EXPECT_THROW(config::apply_file(c, "/nonexistent/qherald.cfg"), std::invalid_argument);
}

TEST(Config, TextRoundTrip) {
  auto c = small_config();
  SweepConfig d;
  config::apply_text(d, config::to_text(c));
  EXPECT_EQ(config::to_text(d), config::to_text(c));
  EXPECT_EQ(config::known_keys().size(), 23u);
}

TEST(Sweep, DefaultsCombineEfficienciesAndAttenuate) {
  SweepConfig c;
  EXPECT_NEAR(c.combined_efficiency(), 0.855, 1e-15);
  EXPECT_NEAR(c.channel_transmission(50.0), 0.1, 1e-15);
  EXPECT_DOUBLE_EQ(c.repetition_rate, 10e9);
  EXPECT_EQ(c.distances().size(), 11u);
}

TEST(Sweep, ValidateRejectsBadRanges) {
  auto bad = [](auto mutate) {
    SweepConfig c;
    mutate(c);
    EXPECT_THROW(sweep::validate(c), std::invalid_argument);
  };
  bad([](SweepConfig& c) { c.p_max = 0.02; });
  bad([](SweepConfig& c) { c.t_max = 1.0; });
  bad([](SweepConfig& c) { c.dist_step = 0.0; });
  bad([](SweepConfig& c) { c.grid_p = 0; });
  bad([](SweepConfig& c) { c.eta_cd = 1.2; });
}

TEST(Sweep, CsvHeaderOrder) {
  EXPECT_EQ(sweep::csv_header(),
            "distance_km,eta_t,p,p_prime,t,herald_prob,mu_cc,mu_c,mu_minus_c,S,S_cc,Q_cc,Q_minus_c,"
            "K_approx,K_lower,rate_per_second");
}

TEST(Sweep, RowsRecomputeTheirRate) {
  const auto cfg = small_config();
  const auto rows = sweep::sweep(cfg);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_DOUBLE_EQ(rows[i].distance_km, 10.0 * i);
    const auto v = split_row(sweep::csv_row(rows[i]));
    ASSERT_EQ(v.size(), 16u);
    EXPECT_NEAR(v[15], v[13] * v[5] * cfg.repetition_rate, 1e-12 * std::max(1.0, v[15]));
    EXPECT_LE(v[14], v[13]);
  }
}

TEST(Sweep, ParallelSweepMatchesSerial) {
  auto cfg = small_config();
  cfg.threads = 1;
  std::ostringstream a, b;
  sweep::write_csv(a, sweep::sweep(cfg));
  cfg.threads = 3;
  sweep::write_csv(b, sweep::sweep(cfg));
  EXPECT_EQ(a.str(), b.str());
}

TEST(Sweep, OptimizerBeatsFixedInteriorPoints) {
  SweepConfig cfg;
  cfg.framework = diqkd::Framework::detector_independent;
  const auto best = sweep::optimize_point(cfg, 10.0);
  const double best_value = sweep::objective(best.evaluation);
  for (double p : {1e-4, 1e-3, 5e-3})
    for (double t : {0.2, 0.5, 0.8}) {
      const auto fixed = sweep::evaluate_point(cfg, 10.0, p, p, t);
      EXPECT_GE(best_value, sweep::objective(fixed.evaluation) - 1e-12);
    }
}

TEST(Sweep, TotalLossGivesNoKey) {
  auto cfg = small_config();
  cfg.atten_db_per_km = 400.0;
  const auto r = sweep::optimize_point(cfg, 1000.0);
  EXPECT_LE(r.evaluation.report.K_approx * r.evaluation.tallies.herald_prob, 1e-300);
  EXPECT_EQ(r.evaluation.report.rate_per_second, 0.0);
}

TEST(Sweep, WriteFailureNamesTheFile) {
  auto cfg = small_config();
  cfg.out = "/nonexistent-dir/out.csv";
  std::ostringstream unused;
  try {
    sweep::write_csv(cfg, {}, unused);
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/out.csv"), std::string::npos);
  }
}

TEST(Klm, ReportTable) {
  const auto rows = sweep::report_klm(6);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_NEAR(rows[0].teleport_success, 0.5, 1e-12);
  EXPECT_NEAR(rows[2].qnd_success, 0.75, 1e-12);
  for (const auto& r : rows) {
    EXPECT_NEAR(r.teleport_fidelity, 1.0, 1e-10);
    EXPECT_NEAR(r.qnd_fidelity, 1.0, 1e-10);
  }
  EXPECT_THROW(sweep::report_klm(7), std::invalid_argument);
}
