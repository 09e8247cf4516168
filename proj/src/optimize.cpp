#include "qherald/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

namespace qherald::optimize {

namespace {

struct Objective {
  const std::function<double(const std::vector<double>&)>* f;
  const Box* box;
  int evaluations = 0;
  MinimizeResult best;
};

double trampoline(const gsl_vector* v, void* params) {
  auto* o = static_cast<Objective*>(params);
  std::vector<double> x(v->size);
  for (std::size_t i = 0; i < v->size; ++i) x[i] = gsl_vector_get(v, i);
  x = clamp_to(x, *o->box);
  const double y = (*o->f)(x);
  ++o->evaluations;
  if (y < o->best.value) {
    o->best.value = y;
    o->best.x = x;
  }
  return std::isfinite(y) ? y : std::numeric_limits<double>::max();
}

struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};

}  // namespace

std::vector<double> clamp_to(const std::vector<double>& x, const Box& box) {
  std::vector<double> c = x;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = std::clamp(c[i], box.lower.at(i), box.upper.at(i));
  return c;
}

MinimizeResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> start, std::vector<double> step, const Box& box,
                           int max_evaluations, double size_tol) {
  const std::size_t n = start.size();
  if (n == 0 || step.size() != n || box.lower.size() != n || box.upper.size() != n)
    throw std::invalid_argument("nelder_mead: dimension mismatch");
  gsl_set_error_handler_off();

  Objective obj{&f, &box, 0, {}};
  obj.best.value = std::numeric_limits<double>::infinity();
  start = clamp_to(start, box);

  std::unique_ptr<gsl_vector, VectorDeleter> x(gsl_vector_alloc(n));
  std::unique_ptr<gsl_vector, VectorDeleter> ss(gsl_vector_alloc(n));
  for (std::size_t i = 0; i < n; ++i) {
    gsl_vector_set(x.get(), i, start[i]);
    gsl_vector_set(ss.get(), i, step[i]);
  }
  gsl_multimin_function fn{&trampoline, n, &obj};
  std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> m(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n));
  if (gsl_multimin_fminimizer_set(m.get(), &fn, x.get(), ss.get()) != GSL_SUCCESS)
    throw std::runtime_error("nelder_mead: could not initialize the simplex");

  while (obj.evaluations < max_evaluations) {
    if (gsl_multimin_fminimizer_iterate(m.get()) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m.get()), size_tol) == GSL_SUCCESS) break;
  }
  obj.best.evaluations = obj.evaluations;
  return obj.best;
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw std::invalid_argument("grid needs at least one point");
  if (n == 1) return {lo};
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return v;
}

std::vector<double> logspace(double lo, double hi, int n) {
  if (!(lo > 0.0 && hi > 0.0)) throw std::invalid_argument("log grid bounds must be positive");
  auto v = linspace(std::log10(lo), std::log10(hi), n);
  for (auto& x : v) x = std::pow(10.0, x);
  return v;
}

}  // namespace qherald::optimize
