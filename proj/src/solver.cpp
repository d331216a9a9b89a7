#include "ksblow/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "ksblow/errors.hpp"
#include "ksblow/tridiagonal.hpp"

namespace ksblow {
namespace {

constexpr double kPositivityTol = 1e-12;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Off-diagonal couplings of Delta_h: (Delta_h v)_i = up_i (v_{i+1}-v_i) - lo_i (v_i - v_{i-1}).
struct LaplacianCoefficients {
  std::vector<double> lo;
  std::vector<double> up;
};

LaplacianCoefficients laplacian_coefficients(const RadialMesh& m) {
  const int N = m.N();
  const double dr2 = m.dr() * m.dr();
  LaplacianCoefficients c{std::vector<double>(N, 0.0), std::vector<double>(N, 0.0)};
  for (int i = 0; i < N; ++i) {
    if (i > 0) c.lo[i] = m.face_weight(i) / (dr2 * m.volume(i));
    if (i + 1 < N) c.up[i] = m.face_weight(i + 1) / (dr2 * m.volume(i));
  }
  return c;
}

RadialField solve_shifted_impl(const RadialField& rhs, double mass_coeff, double lap_coeff) {
  const auto& m = *rhs.mesh;
  const int N = m.N();
  const auto c = laplacian_coefficients(m);
  std::vector<double> lower(N), diag(N), upper(N);
  for (int i = 0; i < N; ++i) {
    lower[i] = -lap_coeff * c.lo[i];
    upper[i] = -lap_coeff * c.up[i];
    diag[i] = mass_coeff + lap_coeff * (c.lo[i] + c.up[i]);
  }
  RadialField v(rhs.mesh, solve_tridiagonal(lower, diag, upper, rhs.values));
  // Weighted row sums of Delta_h vanish, so sum w v = sum w rhs / mass_coeff
  // exactly; the constant mode is the worst-conditioned one when lap_coeff /
  // dr^2 is large, so restore it explicitly.
  const double area = std::numbers::pi * m.R() * m.R();
  const double shift = (integrate(rhs) / mass_coeff - integrate(v)) / area;
  for (double& x : v.values) x += shift;
  return v;
}

double safe(double u) { return u > 0.0 ? u : 0.0; }

std::vector<double> advance_u(const RadialState& s, const NonlinearityModel& model, double dt,
                              ChemotaxisFace face) {
  const auto F = flux_u(s, model, face);
  const auto w = s.mesh().volumes();
  std::vector<double> u = s.u.values;
  for (int i = 0; i < s.u.size(); ++i) u[i] += dt * kTwoPi * (F[i + 1] - F[i]) / w[i];
  return u;
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

RadialField solve_helmholtz(const RadialField& rhs, double mass_coeff, double lap_coeff) {
  return solve_shifted_impl(rhs, mass_coeff, lap_coeff);
}

std::string to_string(VScheme s) { return s == VScheme::Implicit ? "implicit" : "explicit"; }
std::string to_string(PositivityMode m) {
  return m == PositivityMode::RejectAndHalve ? "reject-and-halve" : "clip-warn";
}
std::string to_string(ChemotaxisFace f) { return f == ChemotaxisFace::Upwind ? "upwind" : "hybrid"; }

void SolverConfig::validate() const {
  std::vector<std::string> issues;
  if (!(cfl_safety > 0.0 && cfl_safety < 1.0)) issues.push_back("solver.cfl_safety: must lie in (0,1)");
  if (!(dt_min > 0.0)) issues.push_back("solver.dt_min: must be positive");
  if (!(dt_max > dt_min)) issues.push_back("solver.dt_max: must exceed dt_min");
  if (!(u_blowup_threshold > 0.0)) issues.push_back("solver.u_blowup_threshold: must be positive");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) issues.push_back("solver.t_end: must be positive and finite");
  if (max_steps < 0) issues.push_back("solver.max_steps: must be >= 0");
  if (!issues.empty()) throw ConfigError(issues);
}

nlohmann::json SolverConfig::to_json() const {
  return {{"cfl_safety", cfl_safety},
          {"dt_min", dt_min},
          {"dt_max", dt_max},
          {"u_blowup_threshold", u_blowup_threshold},
          {"t_end", t_end},
          {"v_scheme", to_string(v_scheme)},
          {"positivity_mode", to_string(positivity_mode)},
          {"chemotaxis_face", to_string(chemotaxis_face)},
          {"energy_guard", energy_guard},
          {"allow_degenerate", allow_degenerate},
          {"max_steps", max_steps}};
}

std::vector<double> flux_u(const RadialState& s, const NonlinearityModel& model, ChemotaxisFace face) {
  const int N = s.u.size();
  const auto& m = s.mesh();
  const double inv = 1.0 / m.dr();
  const auto& u = s.u.values;
  const auto& v = s.v.values;
  std::vector<double> phi(N);
  for (int i = 0; i < N; ++i) phi[i] = model.phi(safe(u[i]));
  std::vector<double> F(N + 1, 0.0);
  for (int k = 1; k < N; ++k) {
    const double ul = safe(u[k - 1]);
    const double ur = safe(u[k]);
    const double du = (u[k] - u[k - 1]) * inv;
    const double dv = (v[k] - v[k - 1]) * inv;
    const double phi_f = 0.5 * (phi[k - 1] + phi[k]);
    // Drift runs up the gradient of v, so the donor cell is the inner one when v_r >= 0.
    double psi_f = model.psi(dv >= 0.0 ? ul : ur);
    if (face == ChemotaxisFace::Hybrid && dv != 0.0) {
      const double um = 0.5 * (ul + ur);
      const double peclet = std::abs(model.beta(um) * dv) * m.dr() / phi_f;
      if (peclet <= 2.0) psi_f = model.psi(um);
    }
    F[k] = m.face(k) * (phi_f * du - psi_f * dv);
  }
  return F;
}

double propose_dt(const RadialState& s, const NonlinearityModel& model, const SolverConfig& cfg) {
  const int N = s.u.size();
  const double dr = s.mesh().dr();
  const auto& u = s.u.values;
  const auto& v = s.v.values;
  double phi_max = 0.0;
  std::vector<double> beta(N);
  for (int i = 0; i < N; ++i) {
    phi_max = std::max(phi_max, model.phi(safe(u[i])));
    beta[i] = model.beta(safe(u[i]));
  }
  double drift = 0.0;
  for (int k = 1; k < N; ++k) {
    const double dv = std::abs(v[k] - v[k - 1]) / dr;
    drift = std::max(drift, dv * std::max(beta[k - 1], beta[k]));
  }
  const double inf = std::numeric_limits<double>::infinity();
  double bound = dr * dr / (2.0 * phi_max);
  // The inner cell sees its outer face with weight r_f / r_i <= 2.
  if (drift > 0.0) bound = std::min(bound, dr / (2.0 * drift));
  if (cfg.v_scheme == VScheme::Explicit) bound = std::min(bound, 1.0 / (2.0 / (dr * dr) + 1.0));
  const double dt = cfg.cfl_safety * bound;
  return std::min(std::isfinite(dt) ? dt : inf, cfg.dt_max);
}

RadialField advance_v(const RadialField& v, const RadialField& u, double dt, VScheme scheme) {
  require_same_mesh(v, u);
  if (scheme == VScheme::Implicit) {
    // Increment form: (1 + dt - dt Delta)(v_new - v) = dt (Delta v - v + u).
    // A stationary v then gives an exactly zero increment.
    const auto lap = laplacian(v);
    RadialField rhs(v.mesh);
    for (int i = 0; i < v.size(); ++i) rhs.values[i] = dt * (lap[i] - v.values[i] + u.values[i]);
    RadialField out = solve_helmholtz(rhs, 1.0 + dt, dt);
    for (int i = 0; i < v.size(); ++i) out.values[i] += v.values[i];
    return out;
  }
  const auto lap = laplacian(v);
  RadialField out(v.mesh);
  for (int i = 0; i < v.size(); ++i)
    out.values[i] = v.values[i] + dt * (lap[i] - v.values[i] + u.values[i]);
  return out;
}

RadialField solve_stationary_v(const RadialField& u) {
  if (!u.all_finite()) throw DomainError("solve_stationary_v: non-finite density");
  return solve_helmholtz(u, 1.0, 1.0);
}

StepResult step(const RadialState& s, const NonlinearityModel& model, const SolverConfig& cfg) {
  StepResult res;
  double dt = s.dt;
  if (!(dt > 0.0)) throw DomainError("step: dt must be positive");
  const double F_old = cfg.energy_guard ? liapunov_F(s, model) : 0.0;
  for (;;) {
    if (res.rejections + res.energy_rejections > 0 && dt < cfg.dt_min) {
      res.state = s;
      res.status = StepStatus::DtCollapse;
      res.message = "dt fell below dt_min after rejections";
      return res;
    }
    std::vector<double> u = advance_u(s, model, dt, cfg.chemotaxis_face);
    if (!all_finite(u)) {
      const auto it = std::find_if(u.begin(), u.end(), [](double x) { return !std::isfinite(x); });
      std::ostringstream os;
      os << "non-finite u at r = " << s.mesh().center(static_cast<int>(it - u.begin()));
      res.state = s;
      res.status = StepStatus::NonFinite;
      res.message = os.str();
      return res;
    }
    const double umax = *std::max_element(u.begin(), u.end());
    const double umin = *std::min_element(u.begin(), u.end());
    int clipped = 0;
    double defect = 0.0;
    if (umin < -kPositivityTol * std::abs(umax)) {
      if (cfg.positivity_mode == PositivityMode::RejectAndHalve) {
        ++res.rejections;
        dt *= 0.5;
        continue;
      }
      const auto w = s.mesh().volumes();
      for (int i = 0; i < s.u.size(); ++i)
        if (u[i] < 0.0) {
          defect += -u[i] * w[i];
          u[i] = 0.0;
          ++clipped;
        }
    }
    RadialField u_new(s.u.mesh, std::move(u));
    RadialField v_new = advance_v(s.v, u_new, dt, cfg.v_scheme);
    const double vmax = max_value(v_new.values);
    if (!v_new.all_finite()) {
      res.state = s;
      res.status = StepStatus::NonFinite;
      res.message = "non-finite v";
      return res;
    }
    if (min_value(v_new.values) < -kPositivityTol * std::abs(vmax)) {
      if (cfg.positivity_mode == PositivityMode::RejectAndHalve) {
        ++res.rejections;
        dt *= 0.5;
        continue;
      }
      for (double& x : v_new.values) x = std::max(x, 0.0);
    }
    RadialState next{std::move(u_new), std::move(v_new), s.t + dt, dt, s.step_count + 1};
    if (cfg.energy_guard) {
      const double F_new = liapunov_F(next, model);
      if (F_new > F_old + 1e-9 * (1.0 + std::abs(F_old))) {
        ++res.energy_rejections;
        dt *= 0.5;
        continue;
      }
    }
    res.state = std::move(next);
    res.clipped_cells = clipped;
    res.mass_defect = defect;
    return res;
  }
}

std::string to_string(VerdictLabel l) {
  switch (l) {
    case VerdictLabel::FiniteTimeBlowup: return "FiniteTimeBlowup";
    case VerdictLabel::InfiniteTimeBlowupCandidate: return "InfiniteTimeBlowupCandidate";
    case VerdictLabel::BoundedCandidate: return "BoundedCandidate";
    case VerdictLabel::Inconclusive: return "Inconclusive";
  }
  return "?";
}

std::optional<VerdictLabel> verdict_from_string(const std::string& s) {
  for (auto l : {VerdictLabel::FiniteTimeBlowup, VerdictLabel::InfiniteTimeBlowupCandidate,
                 VerdictLabel::BoundedCandidate, VerdictLabel::Inconclusive})
    if (to_string(l) == s) return l;
  return std::nullopt;
}

nlohmann::json RunVerdict::to_json() const {
  nlohmann::json j;
  j["label"] = to_string(label);
  j["T_star"] = T_star ? nlohmann::json(*T_star) : nlohmann::json(nullptr);
  j["T_star_interval"] = T_star_interval
                             ? nlohmann::json::array({T_star_interval->first, T_star_interval->second})
                             : nlohmann::json(nullptr);
  j["max_linf_u"] = max_linf_u;
  j["reason"] = reason;
  j["trigger_threshold"] = trigger_threshold;
  j["trigger_dt_collapse"] = trigger_dt_collapse;
  j["window_linf"] = window_linf;
  j["final_variation"] = final_variation;
  j["min_dt_seen"] = min_dt_seen;
  if (refinement) {
    nlohmann::json r;
    r["cells"] = refinement->cells;
    nlohmann::json ts = nlohmann::json::array();
    for (const auto& t : refinement->T_stars) ts.push_back(t ? nlohmann::json(*t) : nlohmann::json(nullptr));
    r["T_stars"] = ts;
    r["confirmed"] = refinement->confirmed;
    r["detail"] = refinement->detail;
    j["refinement"] = r;
  } else {
    j["refinement"] = nullptr;
  }
  return j;
}

TrajectoryMonitor::TrajectoryMonitor(double t_end, double dt_min, double threshold)
    : t_end_(t_end), dt_min_(dt_min), threshold_(threshold) {
  for (int k = 0; k <= kWindows; ++k)
    boundaries_.push_back(t_end * (1.0 - kGrowthSpan + kGrowthSpan * k / kWindows));
  at_boundary_.assign(boundaries_.size(), std::nullopt);
}

void TrajectoryMonitor::observe(double t, double dt, double linf) {
  t_last_ = t;
  max_linf_ = std::max(max_linf_, linf);
  if (std::isfinite(dt) && dt > 0.0) min_dt_ = std::min(min_dt_, dt);
  const double slack = 1e-12 * t_end_;
  for (std::size_t k = 0; k < boundaries_.size(); ++k)
    if (!at_boundary_[k] && t >= boundaries_[k] - slack) at_boundary_[k] = linf;
  if (t >= t_end_ * (1.0 - kBoundedSpan) - slack) {
    tail_min_ = std::min(tail_min_, linf);
    tail_max_ = std::max(tail_max_, linf);
  }
}

void TrajectoryMonitor::trigger(double t, bool threshold, bool dt_collapse, std::string reason) {
  if (triggered_) return;
  triggered_ = true;
  by_threshold_ = threshold;
  by_dt_ = dt_collapse;
  t_trigger_ = t;
  reason_ = std::move(reason);
}

void TrajectoryMonitor::fail(double t, std::string reason) {
  failed_ = true;
  t_last_ = t;
  reason_ = std::move(reason);
}

RunVerdict TrajectoryMonitor::verdict() const {
  RunVerdict v;
  v.max_linf_u = max_linf_;
  v.min_dt_seen = std::isfinite(min_dt_) ? min_dt_ : 0.0;
  for (const auto& b : at_boundary_)
    if (b) v.window_linf.push_back(*b);
  v.final_variation = tail_max_ > 0.0 ? (tail_max_ - tail_min_) / tail_max_ : 0.0;
  v.trigger_threshold = by_threshold_;
  v.trigger_dt_collapse = by_dt_;
  if (failed_) {
    v.label = VerdictLabel::Inconclusive;
    v.reason = "blowup suspected: " + reason_;
    return v;
  }
  if (triggered_) {
    v.label = VerdictLabel::FiniteTimeBlowup;
    v.T_star = t_trigger_;
    v.reason = reason_;
    return v;
  }
  if (t_last_ < t_end_ * (1.0 - 1e-9)) {
    v.label = VerdictLabel::Inconclusive;
    v.reason = "horizon not reached";
    return v;
  }
  bool growing = v.window_linf.size() == boundaries_.size();
  for (std::size_t k = 0; growing && k + 1 < v.window_linf.size(); ++k)
    growing = v.window_linf[k + 1] > v.window_linf[k] * (1.0 + kStrictIncrease);
  if (growing && v.min_dt_seen > 10.0 * dt_min_) {
    v.label = VerdictLabel::InfiniteTimeBlowupCandidate;
    v.reason = "linf increased across each of the last 5 windows";
    return v;
  }
  if (v.final_variation < kBoundedTol) {
    v.label = VerdictLabel::BoundedCandidate;
    v.reason = "linf varied by less than 5% over the last 20% of the run";
    return v;
  }
  v.label = VerdictLabel::Inconclusive;
  v.reason = "neither growth nor saturation criterion met";
  return v;
}

nlohmann::json RunStats::to_json() const {
  return {{"steps", steps},
          {"rejections", rejections},
          {"energy_rejections", energy_rejections},
          {"clip_events", clip_events},
          {"conservation_violations", conservation_violations},
          {"min_dt", min_dt},
          {"initial_mass_u", initial_mass_u},
          {"initial_mass_v", initial_mass_v},
          {"max_mass_drift", max_mass_drift}};
}

RunResult run(const RadialState& initial, const NonlinearityModel& model, const SolverConfig& cfg,
              const RunOptions& opts) {
  cfg.validate();
  const double umin = min_value(initial.u.values);
  const double vmin = min_value(initial.v.values);
  if (cfg.allow_degenerate ? (umin < 0.0 || vmin < 0.0) : (umin <= 0.0 || vmin <= 0.0))
    throw DomainError("run: initial data must be positive");

  RunResult out;
  TrajectoryMonitor monitor(cfg.t_end, cfg.dt_min, cfg.u_blowup_threshold);
  RadialState state = initial;
  out.stats.initial_mass_u = integrate(state.u);
  out.stats.initial_mass_v = integrate(state.v);
  out.stats.min_dt = std::numeric_limits<double>::infinity();
  const double m0 = out.stats.initial_mass_u;

  auto record = [&](const RadialState& s) {
    DiagnosticsRecord r = make_record(s, model);
    if (!out.records.empty()) {
      const auto& prev = out.records.back();
      if (r.t > prev.t) r.dFdt_residual = std::abs((r.F - prev.F) / (r.t - prev.t) + 0.5 * (r.D + prev.D));
    }
    out.records.push_back(r);
    if (opts.on_record) opts.on_record(r, s);
  };

  std::vector<double> snaps = opts.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  std::size_t next_snap = 0;
  auto emit_snapshots = [&](const RadialState& s) {
    while (next_snap < snaps.size() && snaps[next_snap] <= s.t * (1.0 + 1e-12)) {
      if (opts.on_snapshot) opts.on_snapshot(s);
      ++next_snap;
    }
  };

  record(state);
  emit_snapshots(state);
  double linf = norms(state.u).linf;
  monitor.observe(state.t, std::numeric_limits<double>::quiet_NaN(), linf);
  if (linf > cfg.u_blowup_threshold) monitor.trigger(state.t, true, false, "initial linf above threshold");

  double next_record_t = opts.record_dt > 0.0 ? state.t + opts.record_dt : 0.0;
  bool stop = linf > cfg.u_blowup_threshold;
  while (!stop && state.t < cfg.t_end * (1.0 - 1e-14)) {
    if (cfg.max_steps > 0 && out.stats.steps >= cfg.max_steps) break;
    const double dt_prop = propose_dt(state, model, cfg);
    out.stats.min_dt = std::min(out.stats.min_dt, dt_prop);
    if (dt_prop < cfg.dt_min) {
      monitor.trigger(state.t, false, true, "stable dt below dt_min");
      break;
    }
    state.dt = std::min(dt_prop, cfg.t_end - state.t);
    StepResult res = step(state, model, cfg);
    out.stats.rejections += res.rejections;
    out.stats.energy_rejections += res.energy_rejections;
    if (res.status == StepStatus::DtCollapse) {
      monitor.trigger(state.t, false, true, res.message);
      break;
    }
    if (res.status == StepStatus::NonFinite) {
      monitor.fail(state.t, res.message);
      break;
    }
    if (res.clipped_cells > 0) {
      ++out.stats.clip_events;
      if (res.mass_defect > 0.0) ++out.stats.conservation_violations;
    }
    state = std::move(res.state);
    ++out.stats.steps;
    const double mass = integrate(state.u);
    out.stats.max_mass_drift = std::max(out.stats.max_mass_drift, std::abs(mass - m0) / m0);
    linf = norms(state.u).linf;
    monitor.observe(state.t, dt_prop, linf);
    const bool crossed = linf > cfg.u_blowup_threshold;
    if (crossed) monitor.trigger(state.t, true, false, "linf crossed u_blowup_threshold");
    bool due = opts.record_every > 0 && out.stats.steps % opts.record_every == 0;
    if (opts.record_dt > 0.0 && state.t >= next_record_t) {
      due = true;
      while (next_record_t <= state.t) next_record_t += opts.record_dt;
    }
    if (due || crossed) record(state);
    emit_snapshots(state);
    stop = crossed;
  }
  if (out.records.back().t != state.t) record(state);
  if (!std::isfinite(out.stats.min_dt)) out.stats.min_dt = 0.0;
  out.verdict = monitor.verdict();
  if (cfg.max_steps > 0 && out.stats.steps >= cfg.max_steps &&
      out.verdict.label == VerdictLabel::Inconclusive)
    out.verdict.reason = "max_steps reached before t_end";
  out.final_state = std::move(state);
  return out;
}

RunVerdict confirm_blowup(const std::function<RunResult(int)>& run_at, int base_cells, int refinements,
                          double rel_tol) {
  if (refinements < 2) throw DomainError("confirm_blowup: needs at least two meshes");
  RefinementInfo info;
  RunVerdict base;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  bool all = true;
  for (int j = 0; j < refinements; ++j) {
    const int N = base_cells << j;
    RunResult r = run_at(N);
    if (j == 0) base = r.verdict;
    info.cells.push_back(N);
    if (r.verdict.label == VerdictLabel::FiniteTimeBlowup && r.verdict.T_star) {
      info.T_stars.push_back(*r.verdict.T_star);
      lo = std::min(lo, *r.verdict.T_star);
      hi = std::max(hi, *r.verdict.T_star);
    } else {
      info.T_stars.push_back(std::nullopt);
      all = false;
    }
  }
  RunVerdict v = base;
  if (!all) {
    info.detail = "a refinement did not trigger";
  } else {
    bool shrinking = true;
    for (std::size_t j = 2; j < info.T_stars.size(); ++j)
      shrinking = shrinking && std::abs(*info.T_stars[j] - *info.T_stars[j - 1]) <=
                                   std::abs(*info.T_stars[j - 1] - *info.T_stars[j - 2]);
    const double spread = (hi - lo) / hi;
    info.confirmed = shrinking && spread <= rel_tol;
    std::ostringstream os;
    os << "relative T* spread " << spread << (shrinking ? "" : ", differences not shrinking");
    info.detail = os.str();
    v.T_star_interval = std::make_pair(lo, hi);
  }
  if (!info.confirmed) {
    v.label = VerdictLabel::Inconclusive;
    v.reason = "refinement disagreement: " + info.detail;
  }
  v.refinement = info;
  return v;
}

}  // namespace ksblow
