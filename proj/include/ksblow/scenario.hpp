#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ksblow/config.hpp"
#include "ksblow/initdata.hpp"
#include "ksblow/solver.hpp"

namespace ksblow {

struct PreparedData {
  RadialState state;
  double eta = 0.0;
  std::optional<EtaSearchResult> search;
  std::optional<double> F_target_used;
  MembershipReport membership;
  nlohmann::json to_json() const;
};

/// Initial data of a config on `mesh`. With `eta_override` the eta search is
/// skipped (used to rebuild the same data on refined meshes).
PreparedData prepare_initial_data(const SimulationConfig& cfg, const NonlinearityModel& model,
                                  const MeshPtr& mesh, std::optional<double> eta_override = std::nullopt);

struct SimulationOutcome {
  SimulationConfig config;
  PreparedData data;
  RunResult base;
  RunVerdict verdict;  // after refinement confirmation
  std::vector<RadialState> snapshots;
  nlohmann::json summary;
};

/// Runs a config end to end. `refinements` overrides refinement.levels.
SimulationOutcome simulate(const SimulationConfig& cfg, std::optional<int> refinements = std::nullopt);

/// Writes series-<hash>.csv, summary-<hash>.json and snapshot-<hash>-<k>.csv
/// into `dir`; returns the paths written.
std::vector<std::string> write_outputs(const SimulationOutcome& out, const std::string& dir);

void write_series_csv(const std::string& path, const std::vector<DiagnosticsRecord>& records);
void write_profile_csv(const std::string& path, const RadialState& s);

/// Verdict of a stored series (columns t, dt, linf_u): the same monitor as a
/// live run, with threshold crossings as the only trigger.
RunVerdict classify_series(const std::vector<DiagnosticsRecord>& records, double t_end, double dt_min,
                           double threshold);
std::vector<DiagnosticsRecord> read_series_csv(const std::string& path);

/// 0 bounded, 3 finite-time, 4 infinite-time candidate, 5 inconclusive.
int verdict_exit_code(VerdictLabel label);

struct SweepRow {
  std::size_t cell = 0;
  std::vector<double> values;
  std::string verdict;
  std::optional<double> T_star;
  std::optional<std::pair<double, double>> T_interval;
  double max_linf_u = 0.0;
  double sup_ratio36 = 0.0;
  double fitted_constant36 = 0.0;
  std::optional<double> T_extrapolated;
  std::string config_hash;
  std::string message;
};

std::vector<SweepRow> run_sweep(const SweepSpec& spec, int jobs, std::optional<int> refinements = std::nullopt,
                                const std::string& cell_summary_dir = "");
void write_sweep_csv(const std::string& path, const SweepSpec& spec, const std::vector<SweepRow>& rows);

}  // namespace ksblow
