#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ksblow/grid.hpp"

using namespace ksblow;
using std::numbers::pi;

TEST_CASE("mesh geometry") {
  const auto m = make_mesh(1.0, 7);
  CHECK(m->dr() == doctest::Approx(1.0 / 7));
  CHECK(m->center(0) == doctest::Approx(0.5 / 7));
  double total = 0.0;
  for (double w : m->volumes()) total += w;
  CHECK(total == doctest::Approx(pi).epsilon(1e-15));
  CHECK(m->volume(3) == doctest::Approx(pi * (16.0 - 9.0) / 49.0).epsilon(1e-15));
  CHECK(m->face_weight(2) == doctest::Approx(2 * pi * (2.0 / 7) / 7));
  CHECK_THROWS(RadialMesh(0.0, 4));
  CHECK_THROWS(RadialMesh(1.0, 0));
}

TEST_CASE("integration of simple fields") {
  const auto m = make_mesh(1.0, 64);
  CHECK(integrate(RadialField(m, 3.0)) == doctest::Approx(3.0 * pi).epsilon(1e-15));
  const auto m2 = make_mesh(1.0, 2);
  RadialField ind(m2, std::vector<double>{1.0, 0.0});
  CHECK(integrate(ind) == doctest::Approx(pi / 4).epsilon(1e-15));
}

TEST_CASE("integrate is linear") {
  const auto m = make_mesh(2.0, 100);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  RadialField f(m), g(m), h(m);
  for (int i = 0; i < 100; ++i) {
    f[i] = d(rng);
    g[i] = d(rng);
    h[i] = 2.5 * f[i] - 0.75 * g[i];
  }
  CHECK(integrate(h) == doctest::Approx(2.5 * integrate(f) - 0.75 * integrate(g)).epsilon(1e-13));
}

TEST_CASE("face gradients") {
  const auto m = make_mesh(1.0, 16);
  for (double g : grad_faces(RadialField(m, 4.2))) CHECK(g == 0.0);
  RadialField sq(m), lin(m);
  for (int i = 0; i < 16; ++i) {
    sq[i] = m->center(i) * m->center(i);
    lin[i] = 3.0 * i - 1.0;
  }
  const auto gs = grad_faces(sq);
  const auto gl = grad_faces(lin);
  REQUIRE(gs.size() == 17u);
  CHECK(gs.front() == 0.0);
  CHECK(gs.back() == 0.0);
  for (int k = 1; k < 16; ++k) {
    CHECK(gs[k] == doctest::Approx(2.0 * m->face(k)).epsilon(1e-13));
    CHECK(gl[k] == doctest::Approx(3.0 / m->dr()).epsilon(1e-13));
  }
  RadialField bump(m, 1.0);
  bump[5] = 1.0 + 1e-12;
  bool nonzero = false;
  for (double g : grad_faces(bump)) nonzero |= g != 0.0;
  CHECK(nonzero);
}

TEST_CASE("norms") {
  const auto m = make_mesh(1.0, 32);
  const Norms n = norms(RadialField(m, -2.0));
  CHECK(n.l1 == doctest::Approx(2.0 * pi));
  CHECK(n.l2 == doctest::Approx(2.0 * std::sqrt(pi)));
  CHECK(n.linf == 2.0);
  const Norms z = norms(RadialField(m));
  CHECK(z.l1 == 0.0);
  CHECK(z.l2 == 0.0);
  CHECK(z.linf == 0.0);
  RadialField sq(m);
  for (int i = 0; i < 32; ++i) sq[i] = m->center(i) * m->center(i);
  double ge = 0.0;
  for (int k = 1; k < 32; ++k) ge += m->face_weight(k) * 4.0 * m->face(k) * m->face(k);
  CHECK(gradient_energy(sq) == doctest::Approx(ge).epsilon(1e-13));
  CHECK(w12_norm(sq) == doctest::Approx(std::sqrt(norms(sq).l2 * norms(sq).l2 + ge)).epsilon(1e-14));
}

TEST_CASE("midpoint quadrature converges at second order") {
  // int_{B_1} (1+r^2)^-2 = pi/2.
  auto err = [](int N) {
    const auto m = make_mesh(1.0, N);
    RadialField f(m);
    for (int i = 0; i < N; ++i) {
      const double r = m->center(i);
      f[i] = 1.0 / ((1 + r * r) * (1 + r * r));
    }
    return std::abs(integrate(f) - pi / 2);
  };
  double prev = err(16);
  for (int N = 32; N <= 512; N *= 2) {
    const double e = err(N);
    CHECK(std::log2(prev / e) >= 1.9);
    prev = e;
  }
}

TEST_CASE("laplacian summation by parts") {
  const auto m = make_mesh(1.5, 40);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  RadialField f(m), g(m);
  for (int i = 0; i < 40; ++i) {
    f[i] = d(rng);
    g[i] = d(rng);
  }
  const auto lf = laplacian(f);
  const auto gf = grad_faces(f);
  const auto gg = grad_faces(g);
  double lhs = 0.0, rhs = 0.0, total = 0.0;
  for (int i = 0; i < 40; ++i) {
    lhs += m->volume(i) * lf[i] * g[i];
    total += m->volume(i) * lf[i];
  }
  for (int k = 0; k <= 40; ++k) rhs -= m->face_weight(k) * gf[k] * gg[k];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  CHECK(std::abs(total) < 1e-11);
}

TEST_CASE("mesh mismatch is rejected") {
  RadialField a(make_mesh(1.0, 8)), b(make_mesh(1.0, 16));
  CHECK_THROWS(require_same_mesh(a, b));
  CHECK_THROWS(inner(a, b));
}
