#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ksblow/diagnostics.hpp"
#include "ksblow/nonlinearity.hpp"
#include "ksblow/state.hpp"

namespace ksblow {

enum class VScheme { Explicit, Implicit };
enum class PositivityMode { RejectAndHalve, ClipWarn };
/// Face value of psi in the chemotactic flux. Upwind always takes the cell
/// the drift comes from; Hybrid uses the face mean when the cell Peclet
/// number |beta v_r| dr / phi is at most 2 and upwinds otherwise.
enum class ChemotaxisFace { Upwind, Hybrid };

std::string to_string(VScheme s);
std::string to_string(PositivityMode m);
std::string to_string(ChemotaxisFace f);

struct SolverConfig {
  double cfl_safety = 0.4;
  double dt_min = 1e-14;
  double dt_max = 1e-2;
  double u_blowup_threshold = 1e8;
  double t_end = 1.0;
  VScheme v_scheme = VScheme::Implicit;
  PositivityMode positivity_mode = PositivityMode::RejectAndHalve;
  ChemotaxisFace chemotaxis_face = ChemotaxisFace::Hybrid;
  /// Reject steps that raise F by more than 1e-9 (1 + |F|).
  bool energy_guard = false;
  /// Test mode: u may vanish identically.
  bool allow_degenerate = false;
  /// Hard cap on accepted steps; 0 means none.
  long max_steps = 0;

  void validate() const;
  nlohmann::json to_json() const;
};

/// Face fluxes r_f [phi_f u_r - psi_f v_r], N+1 entries, zero at both ends.
std::vector<double> flux_u(const RadialState& s, const NonlinearityModel& model,
                           ChemotaxisFace face = ChemotaxisFace::Upwind);

/// Stable step for the explicit u update (and explicit v, if selected).
double propose_dt(const RadialState& s, const NonlinearityModel& model, const SolverConfig& cfg);

/// Backward-Euler (implicit) or forward-Euler step of v_t = Delta v - v + u
/// with u frozen.
RadialField advance_v(const RadialField& v, const RadialField& u, double dt, VScheme scheme);

/// Solves a v - b Delta_h v = rhs with zero-flux boundaries (a, b > 0). The
/// constant mode is restored exactly: sum w v = sum w rhs / a.
RadialField solve_helmholtz(const RadialField& rhs, double mass_coeff, double lap_coeff);

/// Solves -Delta_h v + v = u with zero-flux boundaries.
RadialField solve_stationary_v(const RadialField& u);

enum class StepStatus { Accepted, DtCollapse, NonFinite };

struct StepResult {
  RadialState state;
  StepStatus status = StepStatus::Accepted;
  int rejections = 0;
  int energy_rejections = 0;
  int clipped_cells = 0;
  double mass_defect = 0.0;  // |mass change| caused by clipping
  std::string message;
};

/// One accepted step of size at most state.dt: u explicitly first, then v
/// with the updated u. Positivity failures halve dt and retry; falling below
/// dt_min reports DtCollapse.
StepResult step(const RadialState& s, const NonlinearityModel& model, const SolverConfig& cfg);

enum class VerdictLabel { FiniteTimeBlowup, InfiniteTimeBlowupCandidate, BoundedCandidate, Inconclusive };
std::string to_string(VerdictLabel l);
std::optional<VerdictLabel> verdict_from_string(const std::string& s);

struct RefinementInfo {
  std::vector<int> cells;
  std::vector<std::optional<double>> T_stars;
  bool confirmed = false;
  std::string detail;
};

struct RunVerdict {
  VerdictLabel label = VerdictLabel::Inconclusive;
  std::optional<double> T_star;
  std::optional<std::pair<double, double>> T_star_interval;
  double max_linf_u = 0.0;
  std::string reason;
  bool trigger_threshold = false;
  bool trigger_dt_collapse = false;
  /// linf at t_end (0.5, 0.6, ..., 1.0): boundaries of the growth windows.
  std::vector<double> window_linf;
  double final_variation = 0.0;  // (max-min)/max of linf over the last 20%
  double min_dt_seen = 0.0;
  std::optional<RefinementInfo> refinement;

  nlohmann::json to_json() const;
};

/// Consumes (t, dt, linf) observations and produces the trajectory verdict.
/// Shared by the live run and by classification of stored series.
class TrajectoryMonitor {
 public:
  TrajectoryMonitor(double t_end, double dt_min, double threshold);

  void observe(double t, double dt, double linf);
  void trigger(double t, bool threshold, bool dt_collapse, std::string reason);
  void fail(double t, std::string reason);
  RunVerdict verdict() const;

  static constexpr int kWindows = 5;
  static constexpr double kGrowthSpan = 0.5;   // windows cover the last half
  static constexpr double kBoundedSpan = 0.2;  // variation measured on the last 20%
  static constexpr double kBoundedTol = 0.05;
  static constexpr double kStrictIncrease = 1e-9;

 private:
  double t_end_;
  double dt_min_;
  double threshold_;
  double t_last_ = 0.0;
  double max_linf_ = 0.0;
  double min_dt_ = std::numeric_limits<double>::infinity();
  std::vector<double> boundaries_;
  std::vector<std::optional<double>> at_boundary_;
  double tail_min_ = std::numeric_limits<double>::infinity();
  double tail_max_ = 0.0;
  bool triggered_ = false;
  bool failed_ = false;
  bool by_threshold_ = false;
  bool by_dt_ = false;
  double t_trigger_ = 0.0;
  std::string reason_;
};

struct RunOptions {
  /// Record diagnostics every k accepted steps (0 disables step cadence).
  long record_every = 0;
  /// Record diagnostics every Delta t of simulated time (0 disables).
  double record_dt = 0.0;
  std::vector<double> snapshot_times;
  std::function<void(const DiagnosticsRecord&, const RadialState&)> on_record;
  std::function<void(const RadialState&)> on_snapshot;
};

struct RunStats {
  long steps = 0;
  long rejections = 0;
  long energy_rejections = 0;
  long clip_events = 0;
  long conservation_violations = 0;
  double min_dt = 0.0;
  double initial_mass_u = 0.0;
  double initial_mass_v = 0.0;
  double max_mass_drift = 0.0;  // relative
  nlohmann::json to_json() const;
};

struct RunResult {
  std::vector<DiagnosticsRecord> records;
  RunVerdict verdict;
  RunStats stats;
  RadialState final_state;
};

RunResult run(const RadialState& initial, const NonlinearityModel& model, const SolverConfig& cfg,
              const RunOptions& opts = {});

/// Reruns a finite-time blowup scenario at N, 2N, ... and confirms the
/// trigger when every refinement fires with T* values within rel_tol of each
/// other and, with three or more meshes, successive differences shrink.
RunVerdict confirm_blowup(const std::function<RunResult(int)>& run_at, int base_cells,
                          int refinements = 2, double rel_tol = 0.2);

}  // namespace ksblow
