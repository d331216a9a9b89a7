#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ksblow/initdata.hpp"
#include "ksblow/solver.hpp"

using namespace ksblow;
using std::numbers::e;
using std::numbers::pi;

namespace {

RadialState smooth_state(const MeshPtr& m) {
  RadialState s{RadialField(m), RadialField(m)};
  for (int i = 0; i < m->N(); ++i) {
    const double r = m->center(i) / m->R();
    s.u[i] = 2.0 + std::cos(pi * r);
    s.v[i] = 1.5 + 0.5 * std::cos(2 * pi * r);
  }
  return s;
}

std::vector<NonlinearityModel> catalog() {
  return {NonlinearityModel::semilinear(), NonlinearityModel::power_diffusion(-1.0),
          NonlinearityModel::remark_family(3.0, 0.5)};
}

// Applies a v - b Delta_h v with the same stencil as the grid module.
std::vector<double> helmholtz_apply(const RadialField& v, double a, double b) {
  const auto lap = laplacian(v);
  std::vector<double> out(v.size());
  for (int i = 0; i < v.size(); ++i) out[i] = a * v[i] - b * lap[i];
  return out;
}

double l2_diff(const RadialField& a, const RadialField& b) {
  RadialField d(a.mesh);
  for (int i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return norms(d).l2;
}

}  // namespace

TEST_CASE("fluxes vanish for homogeneous data") {
  const auto m = make_mesh(1.0, 32);
  const RadialState s = homogeneous(2.5, m);
  for (const auto& model : catalog())
    for (auto face : {ChemotaxisFace::Upwind, ChemotaxisFace::Hybrid})
      for (double F : flux_u(s, model, face)) CHECK(F == 0.0);
}

TEST_CASE("flux formula and chemotactic sign") {
  const auto m = make_mesh(1.0, 20);
  const auto model = NonlinearityModel::power_diffusion(-1.0);
  RadialState s{RadialField(m, 1.0), RadialField(m)};
  for (int i = 0; i < 20; ++i) {
    s.u[i] = 1.0 + 0.1 * i;
    s.v[i] = 0.5 * i;  // increasing outward
  }
  const auto F = flux_u(s, model, ChemotaxisFace::Upwind);
  REQUIRE(F.size() == 21u);
  CHECK(F.front() == 0.0);
  CHECK(F.back() == 0.0);
  const double dr = m->dr();
  for (int k = 1; k < 20; ++k) {
    const double rf = m->face(k);
    const double phi_bar = 0.5 * (model.phi(s.u[k - 1]) + model.phi(s.u[k]));
    const double diff = rf * phi_bar * (s.u[k] - s.u[k - 1]) / dr;
    const double adv = rf * model.psi(s.u[k - 1]) * (s.v[k] - s.v[k - 1]) / dr;
    CHECK(F[k] == doctest::Approx(diff - adv).epsilon(1e-13));
    CHECK(adv > 0.0);
  }
}

TEST_CASE("homogeneous state is a fixed point for every model") {
  const auto m = make_mesh(1.0, 32);
  SolverConfig cfg;
  for (const auto& model : catalog()) {
    RadialState s = homogeneous(e, m);
    s.dt = propose_dt(s, model, cfg);
    for (int k = 0; k < 50; ++k) {
      auto r = step(s, model, cfg);
      REQUIRE(r.status == StepStatus::Accepted);
      s = r.state;
    }
    for (int i = 0; i < 32; ++i) {
      CHECK(std::abs(s.u[i] - e) <= 1e-12);
      CHECK(std::abs(s.v[i] - e) <= 1e-12);
    }
  }
}

TEST_CASE("decay of v without cells") {
  // Coarse mesh so that dt_max, not the diffusive bound, sets the step.
  const auto m = make_mesh(1.0, 4);
  const auto model = NonlinearityModel::semilinear();
  const double c = 2.0;
  auto err_at = [&](double dt, VScheme scheme) {
    SolverConfig cfg;
    cfg.allow_degenerate = true;
    cfg.v_scheme = scheme;
    cfg.cfl_safety = 0.9;
    cfg.dt_max = dt;
    cfg.t_end = 1.0;
    const RadialState s0{RadialField(m, 0.0), RadialField(m, c)};
    const auto res = run(s0, model, cfg);
    CHECK(res.final_state.t == doctest::Approx(1.0).epsilon(1e-12));
    double err = 0.0;
    for (double v : res.final_state.v.values) err = std::max(err, std::abs(v - c / e));
    return err;
  };
  CHECK(err_at(1e-4, VScheme::Implicit) < 1e-4 * c);
  for (auto scheme : {VScheme::Implicit, VScheme::Explicit}) {
    const double e1 = err_at(1e-2, scheme);
    const double e2 = err_at(5e-3, scheme);
    CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.05));
  }
}

TEST_CASE("mass is conserved to round-off") {
  const auto m = make_mesh(1.0, 128);
  SolverConfig cfg;
  for (const auto& model : catalog()) {
    RadialState s = smooth_state(m);
    const double m0 = integrate(s.u);
    s.dt = propose_dt(s, model, cfg);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      auto r = step(s, model, cfg);
      REQUIRE(r.status == StepStatus::Accepted);
      s = r.state;
      s.dt = propose_dt(s, model, cfg);
      worst = std::max(worst, std::abs(integrate(s.u) - m0) / m0);
      CHECK(min_value(s.u.values) >= -1e-12 * max_value(s.u.values));
    }
    INFO(model.spec());
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("propose_dt diffusive bound") {
  const auto model = NonlinearityModel::semilinear();
  SolverConfig cfg;
  cfg.cfl_safety = 0.4;
  cfg.dt_max = 1.0;
  const RadialState s = homogeneous(1.0, make_mesh(1.0, 100));
  CHECK(propose_dt(s, model, cfg) == doctest::Approx(2e-5).epsilon(1e-12));
  cfg.dt_max = 1e-6;
  CHECK(propose_dt(s, model, cfg) == doctest::Approx(1e-6));
  cfg.dt_max = 1.0;
  const auto coarse = smooth_state(make_mesh(1.0, 50));
  const auto fine = smooth_state(make_mesh(1.0, 100));
  for (const auto& mdl : catalog())
    CHECK(propose_dt(fine, mdl, cfg) <= 0.25 * propose_dt(coarse, mdl, cfg) * (1 + 1e-12) * 1.1);
}

TEST_CASE("stationary v solve") {
  const auto m = make_mesh(1.0, 200);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> d(0.1, 5.0);
  RadialField u(m);
  for (int i = 0; i < 200; ++i) u[i] = d(rng);
  const auto v = solve_stationary_v(u);
  const auto lhs = helmholtz_apply(v, 1.0, 1.0);
  RadialField res(m);
  for (int i = 0; i < 200; ++i) res[i] = lhs[i] - u[i];
  CHECK(norms(res).l2 < 1e-10 * norms(u).l2);
  CHECK(integrate(v) == doctest::Approx(integrate(u)).epsilon(1e-13));

  const auto c = solve_stationary_v(RadialField(m, 3.0));
  for (double x : c.values) CHECK(x == doctest::Approx(3.0).epsilon(1e-13));

  InitialDataSpec spec;
  spec.eta = 0.1;
  const RadialState s = build(spec, m);
  const auto ve = solve_stationary_v(s.u);
  CHECK(ve[0] > ve[199]);
  CHECK(ve[199] > 0.0);
  CHECK(integrate(ve) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("implicit v relaxes monotonically toward the stationary solve") {
  const auto m = make_mesh(1.0, 64);
  const RadialState s = smooth_state(m);
  const auto target = solve_stationary_v(s.u);
  for (double dt : {1e-3, 0.1, 10.0, 1e4}) {
    RadialField v = s.v;
    double prev = l2_diff(v, target);
    for (int k = 0; k < 20; ++k) {
      v = advance_v(v, s.u, dt, VScheme::Implicit);
      const double d = l2_diff(v, target);
      // Monotone down to the round-off floor of the solve.
      CHECK(d <= prev * (1 + 1e-12) + 1e-13 * norms(target).l2);
      prev = d;
    }
  }
}

TEST_CASE("clip-warn counts conservation violations") {
  const auto m = make_mesh(1.0, 64);
  const auto model = NonlinearityModel::semilinear();
  RadialState s{RadialField(m, 1e-6), RadialField(m, 1.0)};
  for (int i = 30; i < 34; ++i) s.u[i] = 10.0;
  SolverConfig cfg;
  cfg.positivity_mode = PositivityMode::ClipWarn;
  s.dt = 20.0 * propose_dt(s, model, cfg);
  const auto clipped = step(s, model, cfg);
  CHECK(clipped.status == StepStatus::Accepted);
  CHECK(clipped.clipped_cells > 0);
  CHECK(clipped.mass_defect > 0.0);
  for (double u : clipped.state.u.values) CHECK(u >= 0.0);

  cfg.positivity_mode = PositivityMode::RejectAndHalve;
  const auto halved = step(s, model, cfg);
  CHECK(halved.rejections > 0);
  CHECK(halved.state.dt < s.dt);
  CHECK(integrate(halved.state.u) == doctest::Approx(integrate(s.u)).epsilon(1e-13));

  cfg.positivity_mode = PositivityMode::ClipWarn;
  cfg.t_end = 0.01;
  const RunResult r = run(s, model, cfg);
  CHECK(r.stats.conservation_violations == 0);
  CHECK(r.stats.max_mass_drift < 1e-12);
}

TEST_CASE("verdicts of the trajectory monitor") {
  auto feed = [](auto linf_of_t) {
    TrajectoryMonitor mon(10.0, 1e-14, 1e8);
    for (int k = 0; k <= 1000; ++k) mon.observe(0.01 * k, 0.01, linf_of_t(0.01 * k));
    return mon.verdict();
  };
  CHECK(feed([](double) { return 4.0; }).label == VerdictLabel::BoundedCandidate);
  CHECK(feed([](double t) { return 1.0 + t; }).label == VerdictLabel::InfiniteTimeBlowupCandidate);
  CHECK(feed([](double t) { return 10.0 + std::sin(3 * t) * 5; }).label == VerdictLabel::Inconclusive);
  TrajectoryMonitor mon(10.0, 1e-14, 1e8);
  mon.observe(0.0, 0.1, 1.0);
  mon.trigger(0.5, true, false, "threshold");
  const auto v = mon.verdict();
  CHECK(v.label == VerdictLabel::FiniteTimeBlowup);
  REQUIRE(v.T_star);
  CHECK(*v.T_star == 0.5);
}

TEST_CASE("refinement confirmation") {
  const auto model = NonlinearityModel::semilinear();
  const MeshPtr base = make_mesh(1.0, 32);

  SUBCASE("homogeneous data never triggers") {
    SolverConfig cfg;
    cfg.t_end = 0.2;
    auto run_at = [&](int N) { return run(homogeneous(e, make_mesh(1.0, N)), model, cfg); };
    const auto v = confirm_blowup(run_at, 32, 2);
    CHECK(v.label != VerdictLabel::FiniteTimeBlowup);
    REQUIRE(v.refinement);
    CHECK_FALSE(v.refinement->confirmed);
  }

  SUBCASE("a plateau that crosses the threshold only on one mesh") {
    // Mild data relaxes to a plateau; the resolved initial peak crosses the
    // threshold on the coarse mesh only.
    InitialDataSpec spec;
    spec.m = 1.0;
    spec.eta = 0.1;
    const double peak32 = norms(build(spec, make_mesh(1.0, 32)).u).linf;
    const double peak64 = norms(build(spec, make_mesh(1.0, 64)).u).linf;
    REQUIRE(peak64 > peak32);
    SolverConfig cfg;
    cfg.t_end = 0.5;
    cfg.u_blowup_threshold = 0.5 * (peak32 + peak64);
    // Finer mesh: higher peak, triggers; coarser: never reaches it.
    auto run_at = [&](int N) { return run(build(spec, make_mesh(1.0, N)), model, cfg); };
    const auto v = confirm_blowup(run_at, 32, 2);
    CHECK(v.label == VerdictLabel::Inconclusive);
    REQUIRE(v.refinement);
    CHECK_FALSE(v.refinement->confirmed);
  }

  SUBCASE("consistent triggers are confirmed") {
    auto fake = [](int N) {
      RunResult r;
      r.verdict.label = VerdictLabel::FiniteTimeBlowup;
      r.verdict.T_star = 1.0 + 1.0 / N;
      return r;
    };
    const auto v = confirm_blowup(fake, 32, 3);
    CHECK(v.label == VerdictLabel::FiniteTimeBlowup);
    REQUIRE(v.T_star_interval);
    CHECK(v.T_star_interval->first == doctest::Approx(1.0 + 1.0 / 128));
    CHECK(v.T_star_interval->second == doctest::Approx(1.0 + 1.0 / 32));
    auto drifting = [](int N) {
      RunResult r;
      r.verdict.label = VerdictLabel::FiniteTimeBlowup;
      r.verdict.T_star = N == 128 ? 1.1 : 1.0 + 1.0 / N;
      return r;
    };
    CHECK(confirm_blowup(drifting, 32, 3).label == VerdictLabel::Inconclusive);
  }
}

TEST_CASE("solver config validation") {
  SolverConfig cfg;
  cfg.cfl_safety = 1.5;
  CHECK_THROWS(cfg.validate());
  SolverConfig c2;
  c2.dt_min = 1.0;
  c2.dt_max = 0.1;
  CHECK_THROWS(c2.validate());
  const auto m = make_mesh(1.0, 8);
  RadialState s{RadialField(m, 0.0), RadialField(m, 1.0)};
  CHECK_THROWS(run(s, NonlinearityModel::semilinear(), SolverConfig{}));
}
