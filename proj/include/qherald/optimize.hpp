#pragma once

#include <functional>
#include <vector>

namespace qherald::optimize {

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;
};

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
};

/// Nelder-Mead simplex minimization (GSL nmsimplex2). Points outside the box
/// are clamped onto it before evaluation. Stops after `max_evaluations`
/// function calls or when the simplex size drops below `size_tol`.
MinimizeResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> start, std::vector<double> step, const Box& box,
                           int max_evaluations, double size_tol = 1e-6);

std::vector<double> clamp_to(const std::vector<double>& x, const Box& box);

std::vector<double> linspace(double lo, double hi, int n);
std::vector<double> logspace(double lo, double hi, int n);

}  // namespace qherald::optimize
