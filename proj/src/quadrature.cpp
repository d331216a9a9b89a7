#include "ksblow/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "ksblow/errors.hpp"

namespace ksblow::quad {
namespace {

struct Simpson {
  const std::function<double(double)>& f;
  Tolerance tol;

  double recurse(double a, double fa, double m, double fm, double b, double fb, double whole,
                 double eps, int depth) const {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (!std::isfinite(delta)) {
      std::ostringstream os;
      os << "quadrature: non-finite integrand on [" << a << ", " << b << "]";
      throw QuadratureError(a, b, os.str());
    }
    if (std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
    if (depth <= 0) {
      std::ostringstream os;
      os << "quadrature: no convergence on [" << a << ", " << b << "]";
      throw QuadratureError(a, b, os.str());
    }
    return recurse(a, fa, lm, flm, m, fm, left, 0.5 * eps, depth - 1) +
           recurse(m, fm, rm, frm, b, fb, right, 0.5 * eps, depth - 1);
  }
};

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        Tolerance tol) {
  if (a == b) return 0.0;
  if (b < a) return -adaptive_simpson(f, b, a, tol);
  // Seed with a coarse composite pass so the error target scales with the integral.
  constexpr int kSeed = 16;
  const double h = (b - a) / kSeed;
  double coarse = 0.0;
  std::vector<double> fx(2 * kSeed + 1);
  for (int i = 0; i <= 2 * kSeed; ++i) {
    fx[i] = f(a + 0.5 * h * i);
    if (!std::isfinite(fx[i])) {
      const int k = std::min(i / 2, kSeed - 1);
      const double x0 = a + h * k;
      const double x1 = (k + 1 == kSeed) ? b : x0 + h;
      std::ostringstream os;
      os << "quadrature: non-finite integrand on [" << x0 << ", " << x1 << "]";
      throw QuadratureError(x0, x1, os.str());
    }
  }
  for (int i = 0; i < kSeed; ++i)
    coarse += h / 6.0 * (fx[2 * i] + 4.0 * fx[2 * i + 1] + fx[2 * i + 2]);
  const double eps_total = std::max(tol.rel * std::abs(coarse), tol.abs);

  Simpson s{f, tol};
  double total = 0.0;
  for (int i = 0; i < kSeed; ++i) {
    const double x0 = a + h * i;
    const double x1 = (i + 1 == kSeed) ? b : x0 + h;
    const double whole = h / 6.0 * (fx[2 * i] + 4.0 * fx[2 * i + 1] + fx[2 * i + 2]);
    total += s.recurse(x0, fx[2 * i], 0.5 * (x0 + x1), fx[2 * i + 1], x1, fx[2 * i + 2], whole,
                       eps_total / kSeed, tol.max_depth);
  }
  return total;
}

double adaptive_simpson_log(const std::function<double(double)>& f, double a, double b,
                            Tolerance tol) {
  if (a == b) return 0.0;
  if (!(a > 0.0 && b > 0.0)) throw DomainError("adaptive_simpson_log: limits must be positive");
  auto g = [&f](double y) {
    const double x = std::exp(y);
    return f(x) * x;
  };
  return adaptive_simpson(g, std::log(a), std::log(b), tol);
}

}  // namespace ksblow::quad
