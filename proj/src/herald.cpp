#include "qherald/herald.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace qherald::herald {

using fock::BranchEnsemble;
using fock::FockState;
using optics::Matrix;
using optics::ModeTransform;

namespace {

void check_open_unit(double t) {
  if (!(t > 0.0 && t < 1.0))
    throw std::invalid_argument(fmt::format("transmissivity {} outside (0, 1)", t));
}

void compositions(int photons, std::size_t slots, std::vector<int>& cur,
                  std::vector<std::vector<int>>& out) {
  if (cur.size() + 1 == slots) {
    cur.push_back(photons);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int k = photons; k >= 0; --k) {
    cur.push_back(k);
    compositions(photons - k, slots, cur, out);
    cur.pop_back();
  }
}

double binomial_pmf(int n, int k, double eta) {
  if (k > n) return 0.0;
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c * std::pow(eta, k) * std::pow(1.0 - eta, n - k);
}

std::vector<std::size_t> element_modes(const Element& e) {
  if (const auto* u = std::get_if<ModeTransform>(&e)) return u->modes;
  return {std::get<optics::LossSpec>(e).mode};
}

CircuitDescription dual_rail_amplifier(double t, bool modified) {
  check_open_unit(t);
  CircuitDescription c;
  c.name = modified ? "modified_amplifier" : "qubit_amplifier";
  c.transmissivity = t;
  c.mode_count = 6;
  c.input_modes = {0, 1};
  c.preparation = {0, 0, 1, 1, 0, 0};
  const auto bs = optics::beamsplitter(t);
  const auto half = optics::beamsplitter(0.5);
  c.elements.emplace_back(bs.on({2, 4}));
  c.elements.emplace_back(bs.on({3, 5}));
  if (modified) c.elements.emplace_back(optics::symmetric_beamsplitter().on({4, 5}));
  c.elements.emplace_back(half.on({0, 4}));
  c.elements.emplace_back(half.on({1, 5}));
  if (modified) {
    auto b2 = optics::symmetric_beamsplitter();
    b2.matrix = b2.matrix.conjugate().eval();
    b2.kind = "symmetric_conjugate";
    c.elements.emplace_back(b2.on({2, 3}));
  }
  c.herald = {{{0, 4}, 1}, {{1, 5}, 1}};
  c.output_modes = {2, 3};
  validate(c);
  return c;
}

}  // namespace

std::vector<std::size_t> CircuitDescription::detector_modes() const {
  std::vector<std::size_t> m;
  for (const auto& g : herald) m.insert(m.end(), g.modes.begin(), g.modes.end());
  return m;
}

std::vector<DetectionPattern> CircuitDescription::accepted_patterns() const {
  std::vector<std::vector<int>> combos{{}};
  for (const auto& g : herald) {
    std::vector<std::vector<int>> parts;
    std::vector<int> cur;
    compositions(g.photons, g.modes.size(), cur, parts);
    std::vector<std::vector<int>> next;
    for (const auto& prefix : combos)
      for (const auto& p : parts) {
        auto v = prefix;
        v.insert(v.end(), p.begin(), p.end());
        next.push_back(std::move(v));
      }
    combos = std::move(next);
  }
  std::vector<DetectionPattern> out;
  const auto modes = detector_modes();
  for (auto& c : combos) out.push_back({modes, std::move(c)});
  return out;
}

void validate(const CircuitDescription& c) {
  if (c.mode_count == 0) throw std::invalid_argument("circuit has no modes");
  if (c.preparation.size() != c.mode_count)
    throw std::invalid_argument("preparation length differs from mode count");
  std::vector<int> role(c.mode_count, 0);
  auto check = [&](std::size_t m, const char* what) {
    if (m >= c.mode_count)
      throw std::invalid_argument(fmt::format("{} mode {} out of range", what, m));
  };
  for (auto m : c.input_modes) {
    check(m, "input");
    if (c.preparation[m] != 0) throw std::invalid_argument("input mode carries an ancilla photon");
  }
  for (const auto& e : c.elements) {
    for (auto m : element_modes(e)) check(m, "element");
    if (const auto* u = std::get_if<ModeTransform>(&e)) {
      if (u->dimension() != u->modes.size())
        throw std::invalid_argument("element matrix does not match its modes");
      if (!optics::is_unitary(u->matrix)) throw std::invalid_argument("element is not unitary");
    } else {
      const double eta = std::get<optics::LossSpec>(e).eta;
      if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("loss outside [0, 1]");
    }
  }
  for (const auto& g : c.herald) {
    if (g.photons < 0) throw std::invalid_argument("negative herald photon number");
    for (auto m : g.modes) {
      check(m, "detector");
      if (role[m]++) throw std::invalid_argument(fmt::format("mode {} detected twice", m));
    }
  }
  for (auto m : c.output_modes) {
    check(m, "output");
    if (role[m]) throw std::invalid_argument(fmt::format("output mode {} is also detected", m));
  }
}

CircuitDescription ralph_lund(double t) {
  check_open_unit(t);
  CircuitDescription c;
  c.name = "ralph_lund";
  c.transmissivity = t;
  c.mode_count = 3;
  c.input_modes = {0};
  c.preparation = {0, 1, 0};
  c.elements.emplace_back(optics::beamsplitter(t).on({1, 2}));
  c.elements.emplace_back(optics::beamsplitter(0.5).on({0, 2}));
  c.herald = {{{0, 2}, 1}};
  c.output_modes = {1};
  validate(c);
  return c;
}

CircuitDescription qubit_amplifier(double t) { return dual_rail_amplifier(t, false); }
CircuitDescription modified_amplifier(double t) { return dual_rail_amplifier(t, true); }

CircuitDescription circuit_by_name(const std::string& name, double t) {
  if (name == "ralph_lund") return ralph_lund(t);
  if (name == "qubit_amplifier" || name == "original") return qubit_amplifier(t);
  if (name == "modified_amplifier" || name == "modified") return modified_amplifier(t);
  throw std::invalid_argument(fmt::format("unknown circuit '{}'", name));
}

CircuitDescription embed(const CircuitDescription& c, std::size_t offset, std::size_t total_modes) {
  if (offset + c.mode_count > total_modes)
    throw std::invalid_argument("embedded circuit does not fit");
  CircuitDescription e = c;
  e.mode_count = total_modes;
  e.preparation.assign(total_modes, 0);
  for (std::size_t m = 0; m < c.mode_count; ++m) e.preparation[m + offset] = c.preparation[m];
  auto shift = [offset](std::vector<std::size_t>& v) {
    for (auto& m : v) m += offset;
  };
  shift(e.input_modes);
  shift(e.output_modes);
  for (auto& g : e.herald) shift(g.modes);
  for (auto& el : e.elements) {
    if (auto* u = std::get_if<ModeTransform>(&el))
      shift(u->modes);
    else
      std::get<optics::LossSpec>(el).mode += offset;
  }
  return e;
}

std::pair<CircuitDescription, std::vector<ModeTransform>> defer_output_stage(
    const CircuitDescription& c) {
  CircuitDescription front = c;
  std::vector<ModeTransform> tail;
  while (!front.elements.empty()) {
    const auto* u = std::get_if<ModeTransform>(&front.elements.back());
    if (!u) break;
    const bool on_outputs = std::all_of(u->modes.begin(), u->modes.end(), [&](std::size_t m) {
      return std::find(c.output_modes.begin(), c.output_modes.end(), m) != c.output_modes.end();
    });
    if (!on_outputs) break;
    tail.insert(tail.begin(), *u);
    front.elements.pop_back();
  }
  return {front, tail};
}

FockState prepare(const CircuitDescription& c, const FockState& input) {
  if (input.mode_count() != c.input_modes.size())
    throw std::invalid_argument(fmt::format("circuit takes {} input modes, state has {}",
                                            c.input_modes.size(), input.mode_count()));
  fock::StateBuilder b(c.mode_count, input.photon_cap());
  for (const auto& [occ, amp] : input.terms()) {
    OccupationVector full;
    full.reserve(c.mode_count);
    for (int p : c.preparation) full.push_back(static_cast<std::uint8_t>(p));
    for (std::size_t i = 0; i < c.input_modes.size(); ++i) full[c.input_modes[i]] = occ[i];
    b.add(std::move(full), amp);
  }
  return std::move(b).finish().state;
}

BranchEnsemble run(const CircuitDescription& c, const BranchEnsemble& prepared) {
  if (prepared.mode_count() != c.mode_count)
    throw std::invalid_argument("ensemble does not match circuit modes");
  BranchEnsemble e = prepared;
  for (const auto& el : c.elements) {
    if (const auto* u = std::get_if<ModeTransform>(&el))
      e = fock::ensemble_map(e, [u](const FockState& s) { return optics::apply(*u, s); });
    else
      e = optics::loss(std::get<optics::LossSpec>(el), e);
  }
  return e;
}

HeraldOutcome condition(const BranchEnsemble& e, const DetectionPattern& p) {
  return condition(e, std::span<const DetectionPattern>(&p, 1));
}

HeraldOutcome condition(const BranchEnsemble& e, std::span<const DetectionPattern> accepted) {
  if (accepted.empty()) throw std::invalid_argument("no accepted detection pattern");
  const auto& modes = accepted.front().detector_modes;
  for (const auto& p : accepted) {
    if (p.detector_modes != modes)
      throw std::invalid_argument("accepted patterns must share detector modes");
    if (p.counts.size() != modes.size())
      throw std::invalid_argument("pattern counts do not match detector modes");
    for (int c : p.counts)
      if (c < 0) throw std::invalid_argument("negative detector count");
  }
  for (auto m : modes)
    if (m >= e.mode_count()) throw std::out_of_range(fmt::format("detector mode {} out of range", m));
  std::vector<fock::Branch> out;
  double prob = 0.0;
  for (const auto& br : e.branches()) {
    for (const auto& p : accepted) {
      auto st = fock::project_modes(br.state, modes, p.counts);
      if (st.empty()) continue;
      prob += br.weight * st.norm_sq();
      out.push_back({br.weight, std::move(st)});
    }
  }
  return {BranchEnsemble(e.mode_count() - modes.size(), std::move(out), e.truncation_weight()),
          prob};
}

HeraldOutcome herald(const CircuitDescription& c, const FockState& input) {
  const auto patterns = c.accepted_patterns();
  return condition(run(c, BranchEnsemble::pure(prepare(c, input))), patterns);
}

std::map<std::vector<int>, double> outcome_distribution(const BranchEnsemble& e,
                                                        std::span<const std::size_t> modes) {
  std::map<std::vector<int>, double> dist;
  for (const auto& br : e.branches()) {
    for (const auto& [occ, amp] : br.state.terms()) {
      std::vector<int> key;
      key.reserve(modes.size());
      for (auto m : modes) key.push_back(occ.at(m));
      dist[key] += br.weight * std::norm(amp);
    }
  }
  return dist;
}

std::vector<PatternBranch> condition_lossy(const BranchEnsemble& e,
                                           std::span<const DetectionPattern> accepted,
                                           double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("detector efficiency outside [0, 1]");
  if (accepted.empty()) throw std::invalid_argument("no accepted detection pattern");
  const auto& modes = accepted.front().detector_modes;
  std::vector<PatternBranch> out;
  for (const auto& br : e.branches()) {
    for (auto& [actual, rest] : fock::partition_by_modes(br.state, modes)) {
      for (std::size_t p = 0; p < accepted.size(); ++p) {
        double f = 1.0;
        for (std::size_t i = 0; i < modes.size() && f > 0.0; ++i)
          f *= binomial_pmf(actual[i], accepted[p].counts[i], eta);
        if (f <= 0.0) continue;
        out.push_back({p, br.weight, rest.scaled(std::sqrt(f))});
      }
    }
  }
  return out;
}

double KrausOperator::max_singular_value() const {
  if (matrix.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(matrix);
  return svd.singularValues()(0);
}

std::vector<KrausOperator> extract_kraus(const CircuitDescription& c,
                                         const std::vector<OccupationVector>& basis_in,
                                         std::vector<OccupationVector> basis_out) {
  for (const auto& el : c.elements)
    if (std::holds_alternative<optics::LossSpec>(el))
      throw std::invalid_argument("a lossy circuit has no single Kraus operator per pattern");
  std::vector<std::size_t> survivors;
  const auto det = c.detector_modes();
  for (std::size_t m = 0; m < c.mode_count; ++m)
    if (std::find(det.begin(), det.end(), m) == det.end()) survivors.push_back(m);
  if (survivors != c.output_modes)
    throw std::invalid_argument("output modes must be exactly the undetected modes, in order");

  const auto patterns = c.accepted_patterns();
  std::vector<std::vector<FockState>> columns(patterns.size());
  for (const auto& in : basis_in) {
    if (in.size() != c.input_modes.size())
      throw std::invalid_argument("basis vector length differs from input mode count");
    fock::StateBuilder b(c.input_modes.size(), std::nullopt);
    b.add(in, 1.0);
    const FockState s = std::move(b).finish().state;
    const auto evolved = run(c, BranchEnsemble::pure(prepare(c, s)));
    for (std::size_t p = 0; p < patterns.size(); ++p) {
      auto out = condition(evolved, patterns[p]);
      columns[p].push_back(out.conditional.empty() ? FockState(c.output_modes.size())
                                                   : out.conditional.branches().front().state);
    }
  }
  if (basis_out.empty()) {
    std::set<OccupationVector> seen;
    for (const auto& cols : columns)
      for (const auto& s : cols)
        for (const auto& [occ, amp] : s.terms()) seen.insert(occ);
    basis_out.assign(seen.begin(), seen.end());
  }
  std::vector<KrausOperator> ops;
  for (std::size_t p = 0; p < patterns.size(); ++p) {
    KrausOperator k{basis_in, basis_out,
                    Matrix::Zero(static_cast<Eigen::Index>(basis_out.size()),
                                 static_cast<Eigen::Index>(basis_in.size())),
                    patterns[p]};
    for (std::size_t j = 0; j < basis_in.size(); ++j)
      for (std::size_t i = 0; i < basis_out.size(); ++i)
        k.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            columns[p][j].amplitude(basis_out[i]);
    ops.push_back(std::move(k));
  }
  return ops;
}

FockState closed_form(const CircuitDescription& c, const FockState& input) {
  const double t = c.transmissivity;
  const double st = std::sqrt(t), sr = std::sqrt(1.0 - t);
  fock::StateBuilder b(input.mode_count(), input.photon_cap());
  for (const auto& [occ, amp] : input.terms()) {
    for (auto n : occ)
      if (n > 1) throw std::domain_error("closed form is defined for at most one photon per mode");
    if (c.name == "ralph_lund" || c.name == "qubit_amplifier") {
      double f = 1.0;
      for (auto n : occ) f *= n ? st : sr;
      b.add(occ, amp * f);
    } else if (c.name == "modified_amplifier") {
      const int n = fock::total_photons(occ);
      if (n == 1) {
        b.add(occ, amp * st * sr);
      } else if (n == 2) {
        const double f = t / std::numbers::sqrt2;
        b.add(fock::occupation({2, 0}), amp * f);
        b.add(fock::occupation({0, 2}), amp * f);
      }
    } else {
      throw std::domain_error(fmt::format("no closed form for circuit '{}'", c.name));
    }
  }
  return std::move(b).finish().state;
}

KrausOperator reference_kraus(const CircuitDescription& c,
                              const std::vector<OccupationVector>& basis_in,
                              const std::vector<OccupationVector>& basis_out) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(c.accepted_patterns().size()));
  KrausOperator k{basis_in, basis_out,
                  Matrix::Zero(static_cast<Eigen::Index>(basis_out.size()),
                               static_cast<Eigen::Index>(basis_in.size())),
                  {}};
  for (std::size_t j = 0; j < basis_in.size(); ++j) {
    fock::StateBuilder b(basis_in[j].size(), std::nullopt);
    b.add(basis_in[j], 1.0);
    const auto out = closed_form(c, std::move(b).finish().state);
    for (std::size_t i = 0; i < basis_out.size(); ++i)
      k.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          scale * out.amplitude(basis_out[i]);
  }
  return k;
}

KrausOperator apply_feedforward(const KrausOperator& k, const FeedForward& f) {
  KrausOperator r = k;
  for (std::size_t i = 0; i < k.basis_out.size(); ++i) {
    Amplitude g = f.global;
    for (std::size_t m = 0; m < k.basis_out[i].size(); ++m)
      g *= std::pow(f.mode_phases.at(m), static_cast<int>(k.basis_out[i][m]));
    r.matrix.row(static_cast<Eigen::Index>(i)) *= g;
  }
  return r;
}

ModeTransform feedforward_transform(const FeedForward& f) {
  std::vector<double> phis;
  for (auto p : f.mode_phases) phis.push_back(std::arg(p));
  auto t = optics::phase_shifts(phis);
  t.kind = "feedforward";
  return t;
}

double max_abs_difference(const KrausOperator& a, const KrausOperator& b) {
  if (a.matrix.rows() != b.matrix.rows() || a.matrix.cols() != b.matrix.cols())
    throw std::invalid_argument("Kraus operators have different shapes");
  if (a.matrix.size() == 0) return 0.0;
  return (a.matrix - b.matrix).cwiseAbs().maxCoeff();
}

std::optional<FeedForward> fit_feedforward(const KrausOperator& measured,
                                           const KrausOperator& reference, double tol) {
  if (measured.basis_out != reference.basis_out || measured.basis_in != reference.basis_in)
    throw std::invalid_argument("Kraus operators are expressed in different bases");
  const std::size_t modes = measured.basis_out.empty() ? 0 : measured.basis_out.front().size();
  const double floor = 1e-9;

  // Target phase per output vector, from the largest reference entry in its row.
  std::vector<std::size_t> rows;
  std::vector<double> target;
  for (std::size_t i = 0; i < measured.basis_out.size(); ++i) {
    const auto ri = static_cast<Eigen::Index>(i);
    Eigen::Index j;
    const double best = reference.matrix.row(ri).cwiseAbs().maxCoeff(&j);
    if (best <= floor) continue;
    if (std::abs(measured.matrix(ri, j)) <= floor) return std::nullopt;
    rows.push_back(i);
    target.push_back(std::arg(reference.matrix(ri, j) / measured.matrix(ri, j)));
  }

  const auto n_eq = static_cast<Eigen::Index>(rows.size());
  const auto n_var = static_cast<Eigen::Index>(modes + 1);
  Eigen::MatrixXd a(n_eq, n_var);
  for (Eigen::Index r = 0; r < n_eq; ++r) {
    a(r, 0) = 1.0;
    for (std::size_t m = 0; m < modes; ++m)
      a(r, static_cast<Eigen::Index>(m + 1)) = measured.basis_out[rows[static_cast<std::size_t>(r)]][m];
  }
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> solver(a);

  auto build = [&](const Eigen::VectorXd& x) {
    FeedForward f;
    f.global = std::polar(1.0, x(0));
    for (std::size_t m = 0; m < modes; ++m)
      f.mode_phases.push_back(std::polar(1.0, x(static_cast<Eigen::Index>(m + 1))));
    return f;
  };

  // Phases are only known modulo 2π; try small winding numbers on every
  // equation but the first (the global phase absorbs that one).
  constexpr int kWind = 2;
  std::optional<FeedForward> best;
  double best_residual = std::numeric_limits<double>::infinity();
  std::vector<int> k(rows.size(), -kWind);
  if (!k.empty()) k[0] = 0;
  while (true) {
    Eigen::VectorXd b(n_eq);
    for (Eigen::Index r = 0; r < n_eq; ++r)
      b(r) = target[static_cast<std::size_t>(r)] + 2.0 * std::numbers::pi * k[static_cast<std::size_t>(r)];
    const FeedForward f = n_eq > 0 ? build(solver.solve(b)) : build(Eigen::VectorXd::Zero(n_var));
    const double res = max_abs_difference(apply_feedforward(measured, f), reference);
    if (res < best_residual) {
      best_residual = res;
      best = f;
    }
    if (best_residual <= tol * 1e-2) break;
    std::size_t pos = 1;
    while (pos < k.size() && k[pos] == kWind) k[pos++] = -kWind;
    if (pos >= k.size()) break;
    ++k[pos];
  }
  if (best_residual > tol) return std::nullopt;
  return best;
}

QubitFractionBound qubit_fraction_bound(double c00, double c01, double c10, double c11) {
  for (double c : {c00, c01, c10, c11})
    if (!(c >= 0.0)) throw std::invalid_argument("coefficients must be non-negative");
  if (c00 == 0.0 && c01 == 0.0 && c10 == 0.0 && c11 == 0.0)
    throw std::invalid_argument("all coefficients are zero");
  const double single = c10 * c10 + c01 * c01;
  if (c11 == 0.0) return {1.0, single > 0.0 ? 1.0 : 0.0, true};
  const double t_opt = c00 / (c00 + c11);
  return {t_opt, single / (2.0 * c11 * c00 + single), false};
}

std::string to_text(const CircuitDescription& c) {
  std::string s;
  auto list = [](const std::vector<std::size_t>& v) {
    std::string r;
    for (auto m : v) r += fmt::format(" {}", m);
    return r;
  };
  s += fmt::format("circuit {}\n", c.name);
  s += fmt::format("transmissivity {:.17g}\n", c.transmissivity);
  s += fmt::format("modes {}\n", c.mode_count);
  s += fmt::format("inputs{}\n", list(c.input_modes));
  s += "prepare";
  for (int p : c.preparation) s += fmt::format(" {}", p);
  s += "\n";
  for (const auto& el : c.elements) {
    if (const auto* u = std::get_if<ModeTransform>(&el)) {
      s += fmt::format("unitary{} kind {} params", list(u->modes), u->kind);
      for (double p : u->params) s += fmt::format(" {:.17g}", p);
      s += " matrix";
      for (Eigen::Index r = 0; r < u->matrix.rows(); ++r)
        for (Eigen::Index col = 0; col < u->matrix.cols(); ++col)
          s += fmt::format(" {:.17g} {:.17g}", u->matrix(r, col).real(), u->matrix(r, col).imag());
      s += "\n";
    } else {
      const auto& l = std::get<optics::LossSpec>(el);
      s += fmt::format("loss {} eta {:.17g}\n", l.mode, l.eta);
    }
  }
  for (const auto& g : c.herald) s += fmt::format("herald{} photons {}\n", list(g.modes), g.photons);
  s += fmt::format("output{}\n", list(c.output_modes));
  return s;
}

CircuitDescription parse_circuit(const std::string& text) {
  CircuitDescription c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& why) {
    throw std::invalid_argument(fmt::format("circuit line {}: {}", lineno, why));
  };
  auto to_size = [&](const std::string& tok) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(tok, &pos);
    } catch (const std::exception&) {
      fail(fmt::format("expected a mode index, got '{}'", tok));
    }
    if (pos != tok.size()) fail(fmt::format("expected a mode index, got '{}'", tok));
    return static_cast<std::size_t>(v);
  };
  auto to_double = [&](const std::string& tok) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      fail(fmt::format("expected a number, got '{}'", tok));
    }
    if (pos != tok.size()) fail(fmt::format("expected a number, got '{}'", tok));
    return v;
  };
  bool have_modes = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string w; ls >> w;) tok.push_back(w);
    if (tok.empty() || tok[0][0] == '#') continue;
    const auto& key = tok[0];
    if (key == "circuit") {
      if (tok.size() != 2) fail("circuit takes one name");
      c.name = tok[1];
    } else if (key == "transmissivity") {
      if (tok.size() != 2) fail("transmissivity takes one value");
      c.transmissivity = to_double(tok[1]);
    } else if (key == "modes") {
      if (tok.size() != 2) fail("modes takes one count");
      c.mode_count = to_size(tok[1]);
      have_modes = true;
    } else if (key == "inputs") {
      for (std::size_t i = 1; i < tok.size(); ++i) c.input_modes.push_back(to_size(tok[i]));
    } else if (key == "prepare") {
      for (std::size_t i = 1; i < tok.size(); ++i)
        c.preparation.push_back(static_cast<int>(to_size(tok[i])));
    } else if (key == "unitary") {
      std::size_t i = 1;
      ModeTransform u;
      while (i < tok.size() && tok[i] != "kind") u.modes.push_back(to_size(tok[i++]));
      if (i + 2 >= tok.size() || tok[i + 2] != "params") fail("expected 'kind <name> params'");
      u.kind = tok[i + 1];
      i += 3;
      while (i < tok.size() && tok[i] != "matrix") u.params.push_back(to_double(tok[i++]));
      if (i == tok.size()) fail("missing matrix");
      ++i;
      const auto d = static_cast<Eigen::Index>(u.modes.size());
      if (tok.size() - i != static_cast<std::size_t>(2 * d * d))
        fail(fmt::format("expected {} matrix numbers", 2 * d * d));
      u.matrix.resize(d, d);
      for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index col = 0; col < d; ++col) {
          const double re = to_double(tok[i++]);
          const double im = to_double(tok[i++]);
          u.matrix(r, col) = Amplitude{re, im};
        }
      c.elements.emplace_back(std::move(u));
    } else if (key == "loss") {
      if (tok.size() != 4 || tok[2] != "eta") fail("expected 'loss <mode> eta <value>'");
      c.elements.emplace_back(optics::LossSpec{to_double(tok[3]), to_size(tok[1])});
    } else if (key == "herald") {
      HeraldGroup g;
      std::size_t i = 1;
      while (i < tok.size() && tok[i] != "photons") g.modes.push_back(to_size(tok[i++]));
      if (i + 2 != tok.size()) fail("expected 'herald <modes> photons <n>'");
      g.photons = static_cast<int>(to_size(tok[i + 1]));
      c.herald.push_back(std::move(g));
    } else if (key == "output") {
      for (std::size_t i = 1; i < tok.size(); ++i) c.output_modes.push_back(to_size(tok[i]));
    } else {
      fail(fmt::format("unknown keyword '{}'", key));
    }
  }
  if (!have_modes) throw std::invalid_argument("circuit text has no 'modes' line");
  validate(c);
  return c;
}

}  // namespace qherald::herald
