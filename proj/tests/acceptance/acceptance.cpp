// Acceptance gate. `acceptance` runs every criterion; `acceptance 3 6` runs a
// subset. One line per criterion; the exit status is nonzero on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ksblow/config.hpp"
#include "ksblow/diagnostics.hpp"
#include "ksblow/initdata.hpp"
#include "ksblow/nonlinearity.hpp"
#include "ksblow/scenario.hpp"
#include "ksblow/solver.hpp"

using namespace ksblow;
using std::numbers::e;
using std::numbers::pi;

namespace {

const std::string kScenarios = KSBLOW_SCENARIO_DIR;

struct Result {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::vector<NonlinearityModel> catalog() {
  return {NonlinearityModel::semilinear(), NonlinearityModel::power_diffusion(-1.0),
          NonlinearityModel::remark_family(3.0, 0.5)};
}

SimulationConfig scenario(const std::string& name) {
  return simulation_config_from_text(read_text_file(kScenarios + "/" + name));
}

std::vector<double> logspace(double a, double b, int n) {
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k) out[k] = a * std::pow(b / a, double(k) / (n - 1));
  return out;
}

// Sampled states for the D identity, collected from the conservation runs.
struct Sample {
  RadialState state;
  NonlinearityModel model;
};
std::vector<Sample> g_samples;

// |f|^2 + |g|^2 with stencils written out here, independent of the library.
double f2_plus_g2(const RadialState& s, const NonlinearityModel& model) {
  const int N = s.u.size();
  const double dr = s.mesh().R() / N;
  double sum = 0.0;
  for (int i = 0; i < N; ++i) {
    const double w = pi * dr * dr * (2.0 * i + 1.0);
    const double out = i + 1 < N ? (i + 1) * dr * (s.v[i + 1] - s.v[i]) / dr : 0.0;
    const double in = i > 0 ? i * dr * (s.v[i] - s.v[i - 1]) / dr : 0.0;
    const double lap = 2.0 * pi * (out - in) / w;
    const double f = -lap + s.v[i] - s.u[i];
    sum += w * f * f;
  }
  for (int k = 1; k < N; ++k) {
    const double ub = 0.5 * (s.u[k - 1] + s.u[k]);
    const double root = std::sqrt(ub * model.beta(ub));
    const double g = model.phi(ub) / root * (s.u[k] - s.u[k - 1]) / dr - root * (s.v[k] - s.v[k - 1]) / dr;
    sum += 2.0 * pi * k * dr * dr * g * g;
  }
  return sum;
}

Result conservation() {
  Result r;
  const auto mesh = make_mesh(1.0, 256);
  InitialDataSpec spec;
  spec.m = 1.0;
  spec.eta = 0.1;
  for (const auto& model : catalog()) {
    const auto t0 = std::chrono::steady_clock::now();
    SolverConfig cfg;
    cfg.t_end = 1e6;
    cfg.max_steps = 10000;
    RunOptions opts;
    opts.record_every = 100;
    int taken = 0;
    opts.on_record = [&](const DiagnosticsRecord&, const RadialState& s) {
      if (taken++ % 3 == 0 && g_samples.size() < 100) g_samples.push_back({s, model});
    };
    const RadialState s0 = build(spec, mesh);
    const auto res = run(s0, model, cfg, opts);
    const double mu0 = integrate(s0.u);
    const double bound = std::max(mu0, integrate(s0.v)) * (1 + 1e-6);
    double drift = 0.0;
    bool v_ok = true;
    for (const auto& rec : res.records) {
      drift = std::max(drift, std::abs(rec.mass_u - mu0) / mu0);
      v_ok = v_ok && rec.mass_v <= bound;
    }
    drift = std::max(drift, res.stats.max_mass_drift);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.detail << " " << model.spec() << ": steps=" << res.stats.steps << " drift=" << drift << " " << secs << "s;";
    r.require(res.stats.steps == 10000, model.spec() + " 1e4 steps");
    r.require(drift < 1e-12, model.spec() + " mass drift");
    r.require(v_ok, model.spec() + " mass_v bound");
    r.require(secs < 60.0, model.spec() + " runtime");
  }
  return r;
}

Result steady_state() {
  Result r;
  const auto mesh = make_mesh(1.0, 256);
  double worst_dev = 0.0, worst_D = 0.0, worst_F = 0.0;
  for (const auto& model : catalog()) {
    SolverConfig cfg;
    RadialState s = homogeneous(e, mesh);
    const double F0 = liapunov_F(s, model);
    s.dt = propose_dt(s, model, cfg);
    for (int k = 0; k < 10000; ++k) {
      auto st = step(s, model, cfg);
      if (st.status != StepStatus::Accepted) {
        r.require(false, "step rejected");
        break;
      }
      s = std::move(st.state);
      if (k % 500 == 0 || k == 9999) {
        worst_D = std::max(worst_D, dissipation_D(s, model));
        worst_F = std::max(worst_F, std::abs(liapunov_F(s, model) - F0) / std::abs(F0));
      }
    }
    for (int i = 0; i < s.u.size(); ++i)
      worst_dev = std::max({worst_dev, std::abs(s.u[i] - e), std::abs(s.v[i] - e)});
  }
  r.detail << " max|state-e|=" << worst_dev << " max D=" << worst_D << " max rel dF=" << worst_F;
  r.require(worst_dev <= 1e-12, "state drift");
  r.require(worst_D < 1e-20, "D");
  r.require(worst_F <= 1e-12, "F constant");
  return r;
}

Result liapunov() {
  Result r;
  const auto t0 = std::chrono::steady_clock::now();
  const auto model = NonlinearityModel::semilinear();
  const auto mesh = make_mesh(1.0, 64);
  RadialState s0{RadialField(mesh), RadialField(mesh)};
  for (int i = 0; i < 64; ++i) {
    s0.u[i] = 2.0 + std::cos(pi * mesh->center(i));
    s0.v[i] = s0.u[i];
  }
  auto residual = [&](double cfl) {
    SolverConfig cfg;
    cfg.cfl_safety = cfl;
    cfg.dt_max = 1.0;
    cfg.t_end = 0.2;
    RunOptions opts;
    opts.record_every = 1;
    const auto res = run(s0, model, cfg, opts);
    return check_liapunov_identity(res.records);
  };
  const auto a = residual(0.8);
  const auto b = residual(0.4);
  const double ratio = a.mean_residual / b.mean_residual;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.detail << " mean residual " << a.mean_residual << " -> " << b.mean_residual << " ratio=" << ratio
           << " F increases=" << a.monotonicity_violations + b.monotonicity_violations << " " << secs << "s";
  r.require(a.monotonicity_violations == 0 && b.monotonicity_violations == 0, "F non-increasing");
  r.require(ratio >= 1.5, "residual ratio");
  r.require(secs < 120.0, "runtime");
  return r;
}

Result d_identity() {
  Result r;
  if (g_samples.size() < 100) conservation();
  double worst = 0.0;
  for (const auto& smp : g_samples) {
    const double D = dissipation_D(smp.state, smp.model);
    worst = std::max(worst, std::abs(D - f2_plus_g2(smp.state, smp.model)) / D);
  }
  r.detail << " states=" << g_samples.size() << " max rel err=" << worst;
  r.require(g_samples.size() >= 100, "100 states");
  r.require(worst < 1e-10, "identity");
  return r;
}

Result condition_fixtures() {
  Result r;
  const auto t0 = std::chrono::steady_clock::now();
  const ConditionParams p;
  const auto sl = check_conditions(NonlinearityModel::semilinear(), p);
  const auto* h1 = sl.find(cond::H1);
  const bool witness = h1 && h1->status == ConditionStatus::Fail && h1->witness_s &&
                       NonlinearityModel::semilinear().H(*h1->witness_s) > p.b * *h1->witness_s / std::log(*h1->witness_s);
  r.require(witness, "semilinear H1 witness");

  const auto pd = check_conditions(NonlinearityModel::power_diffusion(-1.0), p);
  r.require(pd.passes(cond::G1) && pd.passes(cond::H1) && pd.passes(cond::psi), "power_diffusion G1/H1/psi");

  const auto rf = check_conditions(NonlinearityModel::remark_family(3.0, 0.5), p);
  const auto* bal = rf.find(cond::balance);
  r.require(rf.passes(cond::G1) && rf.passes(cond::H1), "remark G1/H1");
  r.require(bal && bal->status == ConditionStatus::Pass && bal->exponent && *bal->exponent == 3.0 &&
                bal->fitted_coefficient && std::abs(*bal->fitted_coefficient - 1.0) < 1e-12,
            "remark balance exponent 3, D1 = 1");
  r.require(rf.passes(cond::phibeta), "remark phibeta");
  r.require(rf.status(cond::psi) == ConditionStatus::Fail && rf.find(cond::psi)->witness_s, "remark psi fails");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.detail << " semilinear H1 witness s=" << (h1 && h1->witness_s ? *h1->witness_s : NAN)
           << "; regimes " << to_string(classify_regime(sl)) << ", " << to_string(classify_regime(pd)) << ", "
           << to_string(classify_regime(rf)) << "; " << secs << "s";
  r.require(secs < 10.0, "runtime");
  return r;
}

Result finite_blowup() {
  Result r;
  for (const char* file : {"finite_blowup_m1.cfg", "finite_blowup_m05.cfg"}) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = scenario(file);
    const auto model = cfg.model.build();
    const auto data = prepare_initial_data(cfg, model, make_mesh(cfg.R, cfg.N));
    r.require(data.search.has_value(), std::string(file) + " eta from the search");
    r.require(data.F_target_used && *data.F_target_used <= -100.0, std::string(file) + " F_target <= -100");
    std::vector<RatioReport> t36;
    auto run_at = [&](int N) {
      const auto mesh = make_mesh(cfg.R, N);
      const auto d = prepare_initial_data(cfg, model, mesh, data.eta);
      RunOptions opts;
      opts.record_every = cfg.diagnostics.every;
      auto res = run(d.state, model, cfg.solver, opts);
      t36.push_back(check_theorem36(res.records, std::max(integrate(d.state.u), integrate(d.state.v))));
      return res;
    };
    const auto v = confirm_blowup(run_at, 256, 2, 0.2);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& ts = v.refinement->T_stars;
    r.detail << " m=" << cfg.initial_data.spec.m << ": eta=" << data.eta << " F0=" << data.membership.F0
             << " T*(256)=" << (ts[0] ? *ts[0] : NAN) << " T*(512)=" << (ts[1] ? *ts[1] : NAN)
             << " sup ratio36=" << t36[0].sup_ratio << "," << t36[1].sup_ratio << " " << secs << "s;";
    r.require(data.membership.F0 <= -100.0, "F0 <= -100");
    r.require(v.label == VerdictLabel::FiniteTimeBlowup && v.refinement->confirmed,
              std::string(file) + " confirmed blowup (" + v.refinement->detail + ")");
    for (const auto& t : t36)
      r.require(t.bounded && std::isfinite(t.sup_ratio), std::string(file) + " ratio36 bounded");
    r.require(secs < 600.0, "runtime");
  }
  return r;
}

Result infinite_candidate() {
  Result r;
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = scenario("infinite_candidate.cfg");
  const auto out = simulate(cfg);
  const auto& v = out.verdict;
  bool increasing = v.window_linf.size() == 6;
  for (std::size_t k = 1; k < v.window_linf.size(); ++k) increasing = increasing && v.window_linf[k] > v.window_linf[k - 1];
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.detail.precision(10);
  r.detail << " verdict=" << to_string(v.label) << " linf at window ends";
  for (double x : v.window_linf) r.detail << " " << x;
  r.detail.precision(6);
  r.detail << " min dt=" << v.min_dt_seen << " t_end=" << cfg.solver.t_end << " " << secs << "s";
  r.require(cfg.solver.t_end == 100.0 && cfg.initial_data.spec.m == 1.0, "scenario setup");
  r.require(v.label == VerdictLabel::InfiniteTimeBlowupCandidate, "label");
  r.require(increasing, "growth over the last 5 windows");
  r.require(v.min_dt_seen > 10.0 * cfg.solver.dt_min, "dt above 10 dt_min");
  r.require(!v.trigger_threshold && v.max_linf_u < cfg.solver.u_blowup_threshold, "no threshold crossing");
  r.require(secs < 600.0, "runtime");
  return r;
}

Result bounded_contrast() {
  Result r;
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = scenario("bounded_semilinear.cfg");
  const auto out = simulate(cfg);
  const auto& v = out.verdict;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.detail << " verdict=" << to_string(v.label) << " final variation=" << v.final_variation
           << " linf(t_end)=" << out.base.records.back().linf_u << " " << secs << "s";
  r.require(std::abs(cfg.initial_data.spec.m - 4 * pi) < 1e-12 && cfg.solver.t_end == 50.0, "scenario setup");
  r.require(v.label == VerdictLabel::BoundedCandidate, "label");
  r.require(v.final_variation < 0.05, "variation");
  r.require(secs < 300.0, "runtime");
  return r;
}

Result gh_oracles() {
  Result r;
  double worst_G = 0.0, worst_H = 0.0, worst_rf = 0.0;
  for (const auto& m : catalog()) {
    for (double s : logspace(m.s0(), 1e6, 100)) {
      const double g = m.G(s), gq = m.G_quadrature(s);
      worst_G = std::max(worst_G, s == m.s0() ? std::abs(g - gq) : std::abs(g - gq) / std::abs(gq));
      worst_H = std::max(worst_H, std::abs(m.H(s) - m.H_quadrature(s)) / m.H_quadrature(s));
    }
  }
  for (double g1 : {2.1, 3.0, 5.0, 10.0}) {
    const auto m = NonlinearityModel::remark_family(g1, 0.5);
    for (double s : logspace(1e-6, 1e6, 100)) {
      const double exact = 2.0 * s / (std::sqrt(1.0 + s) + 1.0);  // 2(sqrt(1+s) - 1) without cancellation
      worst_rf = std::max({worst_rf, std::abs(m.H(s) - exact) / exact, std::abs(m.H_quadrature(s) - exact) / exact});
    }
    const double h3 = m.H(3.0);
    worst_rf = std::max(worst_rf, std::abs(h3 - 2.0) / 2.0);
  }
  r.detail << " max rel G=" << worst_G << " H=" << worst_H << " remark H=" << worst_rf;
  r.require(worst_G < 1e-8, "G");
  r.require(worst_H < 1e-8, "H");
  r.require(worst_rf < 1e-10, "remark H");
  return r;
}

// int_{y0}^inf dy / (y^(9/8) - 1): substitute z = y^(-1/8) and expand the
// geometric series, giving 8 sum_k Z^(9k+1) / (9k+1) with Z = y0^(-1/8).
double divergence_series(double y0) {
  const double Z = std::pow(y0, -1.0 / 8.0);
  double sum = 0.0, term = Z;
  for (int k = 0; k < 100000; ++k) {
    const double add = term / (9.0 * k + 1.0);
    sum += add;
    if (add < 1e-18 * sum) break;
    term *= std::pow(Z, 9.0);
  }
  return 8.0 * sum;
}

Result extrapolator() {
  Result r;
  const double y0 = 10.0;
  const double T = divergence_series(y0);
  auto rhs = [](double y) { return std::pow(y, 9.0 / 8.0) - 1.0; };
  std::vector<DiagnosticsRecord> recs;
  double y = y0, t = 0.0;
  const double h = 1e-4;
  for (int k = 0; t < 0.6 * T; ++k) {
    if (k % 20 == 0) {
      DiagnosticsRecord rec;
      rec.t = t;
      rec.F = -y;
      recs.push_back(rec);
    }
    const double k1 = rhs(y), k2 = rhs(y + 0.5 * h * k1), k3 = rhs(y + 0.5 * h * k2), k4 = rhs(y + h * k3);
    y += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
    t += h;
  }
  const auto est = estimate_blowup_time(recs);
  const double rel = std::abs(est.t_blowup - T) / T;
  r.detail << " records=" << recs.size() << " fitted c=" << est.rate_c << " T_extrap=" << est.t_blowup
           << " T_exact=" << T << " rel err=" << rel;
  r.require(est.ok, "estimate produced");
  r.require(rel < 0.01, "within 1%");
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Result()>>> criteria = {
      {"conservation", conservation},
      {"steady state", steady_state},
      {"Liapunov identity", liapunov},
      {"D identity", d_identity},
      {"condition fixtures", condition_fixtures},
      {"finite-time blowup", finite_blowup},
      {"infinite-time blowup candidate", infinite_candidate},
      {"bounded contrast", bounded_contrast},
      {"G/H oracles", gh_oracles},
      {"blowup-time extrapolator", extrapolator},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Result res;
    try {
      res = criteria[k].second();
    } catch (const std::exception& ex) {
      res.pass = false;
      res.detail << " [exception: " << ex.what() << "]";
    }
    failures += !res.pass;
    std::printf("criterion %d (%s): %s%s\n", id, criteria[k].first, res.pass ? "PASS" : "FAIL",
                res.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
