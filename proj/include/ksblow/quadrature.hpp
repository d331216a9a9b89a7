#pragma once

#include <functional>

namespace ksblow::quad {

struct Tolerance {
  double rel = 1e-10;
  double abs = 1e-30;
  int max_depth = 60;
};

/// Adaptive Simpson with interval bisection. Throws QuadratureError carrying
/// the offending subinterval when max_depth is exhausted.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        Tolerance tol = {});

/// Integral over [a, b], 0 < a, computed in the variable y = ln(x). Suited to
/// positive integrands spanning many decades.
double adaptive_simpson_log(const std::function<double(double)>& f, double a, double b,
                            Tolerance tol = {});

}  // namespace ksblow::quad
