#include "qherald/config.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace qherald::config {

using sweep::SweepConfig;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end || v.empty())
    throw std::invalid_argument(fmt::format("{}: '{}' is not a number", key, v));
  return x;
}

int to_int(const std::string& key, const std::string& v) {
  int x = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || ptr != end || v.empty())
    throw std::invalid_argument(fmt::format("{}: '{}' is not an integer", key, v));
  return x;
}

using Setter = std::function<void(SweepConfig&, const std::string&, const std::string&)>;

Setter real(double SweepConfig::*field) {
  return [field](SweepConfig& c, const std::string& k, const std::string& v) { c.*field = to_double(k, v); };
}

Setter integer(int SweepConfig::*field) {
  return [field](SweepConfig& c, const std::string& k, const std::string& v) { c.*field = to_int(k, v); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> m = {
      {"framework", [](SweepConfig& c, const std::string&, const std::string& v) {
         c.framework = diqkd::parse_framework(v);
       }},
      {"amplifier", [](SweepConfig& c, const std::string&, const std::string& v) {
         c.amplifier = diqkd::parse_amplifier(v);
       }},
      {"eta_d", real(&SweepConfig::eta_d)},
      {"eta_c", real(&SweepConfig::eta_c)},
      {"eta_cd", [](SweepConfig& c, const std::string& k, const std::string& v) {
         c.eta_cd = to_double(k, v);
       }},
      {"atten_db_per_km", real(&SweepConfig::atten_db_per_km)},
      {"dist_min", real(&SweepConfig::dist_min)},
      {"dist_max", real(&SweepConfig::dist_max)},
      {"dist_step", real(&SweepConfig::dist_step)},
      {"out", [](SweepConfig& c, const std::string&, const std::string& v) { c.out = v; }},
      {"p_min", real(&SweepConfig::p_min)},
      {"p_max", real(&SweepConfig::p_max)},
      {"p_prime_min", real(&SweepConfig::p_prime_min)},
      {"p_prime_max", real(&SweepConfig::p_prime_max)},
      {"t_min", real(&SweepConfig::t_min)},
      {"t_max", real(&SweepConfig::t_max)},
      {"grid_p", integer(&SweepConfig::grid_p)},
      {"grid_p_prime", integer(&SweepConfig::grid_p_prime)},
      {"grid_t", integer(&SweepConfig::grid_t)},
      {"refine_evals", integer(&SweepConfig::refine_evals)},
      {"repetition_rate", real(&SweepConfig::repetition_rate)},
      {"photon_cap", integer(&SweepConfig::photon_cap)},
      {"threads", integer(&SweepConfig::threads)},
  };
  return m;
}

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

void set_option(SweepConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw std::invalid_argument(fmt::format("unknown key '{}'", key));
  it->second(cfg, key, value);
}

void apply_text(SweepConfig& cfg, const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    try {
      if (eq == std::string::npos) throw std::invalid_argument("expected key = value");
      set_option(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(fmt::format("{}:{}: {}", source, number, e.what()));
    }
  }
}

void apply_file(SweepConfig& cfg, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument(fmt::format("cannot open {}: {}", path, std::strerror(errno)));
  std::ostringstream ss;
  ss << f.rdbuf();
  apply_text(cfg, ss.str(), path);
}

std::string to_text(const SweepConfig& c) {
  std::string s;
  auto line = [&](const char* k, const std::string& v) { s += fmt::format("{} = {}\n", k, v); };
  auto num = [](double x) { return fmt::format("{:.17g}", x); };
  line("framework", diqkd::to_string(c.framework));
  line("amplifier", diqkd::to_string(c.amplifier));
  line("eta_d", num(c.eta_d));
  line("eta_c", num(c.eta_c));
  if (c.eta_cd) line("eta_cd", num(*c.eta_cd));
  line("atten_db_per_km", num(c.atten_db_per_km));
  line("dist_min", num(c.dist_min));
  line("dist_max", num(c.dist_max));
  line("dist_step", num(c.dist_step));
  if (!c.out.empty()) line("out", c.out);
  line("p_min", num(c.p_min));
  line("p_max", num(c.p_max));
  line("p_prime_min", num(c.p_prime_min));
  line("p_prime_max", num(c.p_prime_max));
  line("t_min", num(c.t_min));
  line("t_max", num(c.t_max));
  line("grid_p", std::to_string(c.grid_p));
  line("grid_p_prime", std::to_string(c.grid_p_prime));
  line("grid_t", std::to_string(c.grid_t));
  line("refine_evals", std::to_string(c.refine_evals));
  line("repetition_rate", num(c.repetition_rate));
  line("photon_cap", std::to_string(c.photon_cap));
  line("threads", std::to_string(c.threads));
  return s;
}

}  // namespace qherald::config
