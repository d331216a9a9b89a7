#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace ksblow {

/// Thomas algorithm for lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i].
/// lower[0] and upper[n-1] are ignored.
inline std::vector<double> solve_tridiagonal(std::span<const double> lower,
                                             std::span<const double> diag,
                                             std::span<const double> upper,
                                             std::span<const double> rhs) {
  const std::size_t n = diag.size();
  std::vector<double> c(n);
  std::vector<double> x(n);
  double denom = diag[0];
  if (denom == 0.0) throw std::runtime_error("tridiagonal: zero pivot");
  c[0] = (n > 1 ? upper[0] : 0.0) / denom;
  x[0] = rhs[0] / denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag[i] - lower[i] * c[i - 1];
    if (denom == 0.0) throw std::runtime_error("tridiagonal: zero pivot");
    c[i] = (i + 1 < n ? upper[i] : 0.0) / denom;
    x[i] = (rhs[i] - lower[i] * x[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
  return x;
}

}  // namespace ksblow
