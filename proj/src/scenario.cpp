#include "ksblow/scenario.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "ksblow/diagnostics.hpp"
#include "ksblow/errors.hpp"

namespace ksblow {
namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

RunResult run_config(const SimulationConfig& cfg, const NonlinearityModel& model, const RadialState& s0,
                     std::vector<RadialState>* snapshots) {
  RunOptions o;
  o.record_every = cfg.diagnostics.every;
  o.record_dt = cfg.diagnostics.dt;
  if (o.record_every == 0 && o.record_dt == 0.0) o.record_dt = cfg.solver.t_end / 1000.0;
  if (snapshots) {
    o.snapshot_times = cfg.diagnostics.snapshots;
    o.on_snapshot = [snapshots](const RadialState& s) { snapshots->push_back(s); };
  }
  return run(s0, model, cfg.solver, o);
}

}  // namespace

nlohmann::json PreparedData::to_json() const {
  nlohmann::json j;
  j["eta"] = eta;
  j["search"] = search ? search->to_json() : nlohmann::json(nullptr);
  j["F_target_used"] = opt(F_target_used);
  j["membership"] = membership.to_json();
  j["linf_u0"] = norms(state.u).linf;
  j["mass_v0"] = integrate(state.v);
  return j;
}

PreparedData prepare_initial_data(const SimulationConfig& cfg, const NonlinearityModel& model,
                                  const MeshPtr& mesh, std::optional<double> eta_override) {
  const auto& id = cfg.initial_data;
  PreparedData d;
  if (id.kind == DataKind::Homogeneous) {
    const double c = id.c >= 0.0 ? id.c : id.spec.m / (std::numbers::pi * cfg.R * cfg.R);
    d.state = homogeneous(c, mesh);
  } else {
    InitialDataSpec spec = id.spec;
    if (eta_override) {
      spec.eta = *eta_override;
    } else if (id.F_target) {
      double target = *id.F_target;
      if (id.F_offset > 0.0) target = std::min(target, homogeneous_F(spec.m, mesh, model) - id.F_offset);
      d.F_target_used = target;
      d.search = find_eta_for_F(spec, mesh, model, target);
      spec.eta = d.search->eta;
    }
    d.eta = spec.eta;
    d.state = build(spec, mesh);
  }
  d.membership = membership(d.state, model, id.K_user, id.A_cap);
  return d;
}

SimulationOutcome simulate(const SimulationConfig& cfg, std::optional<int> refinements) {
  cfg.validate();
  SimulationOutcome out;
  out.config = cfg;
  const NonlinearityModel model = cfg.model.build();
  const auto mesh = make_mesh(cfg.R, cfg.N);
  out.data = prepare_initial_data(cfg, model, mesh);
  out.base = run_config(cfg, model, out.data.state, &out.snapshots);
  out.verdict = out.base.verdict;
  const int levels = refinements.value_or(cfg.refinement.levels);
  if (out.verdict.label == VerdictLabel::FiniteTimeBlowup) {
    if (levels >= 2) {
      auto run_at = [&](int N) {
        if (N == cfg.N) return out.base;
        SimulationConfig fine = cfg;
        fine.N = N;
        const auto fmesh = make_mesh(cfg.R, N);
        const auto data = prepare_initial_data(fine, model, fmesh,
                                               cfg.initial_data.kind == DataKind::Concentrated
                                                   ? std::optional<double>(out.data.eta)
                                                   : std::nullopt);
        return run_config(fine, model, data.state, nullptr);
      };
      out.verdict = confirm_blowup(run_at, cfg.N, levels, cfg.refinement.rel_tol);
    } else {
      out.verdict.label = VerdictLabel::Inconclusive;
      out.verdict.reason = "trigger fired but refinement confirmation was disabled: " + out.verdict.reason;
      RefinementInfo info;
      info.cells = {cfg.N};
      info.T_stars = {out.base.verdict.T_star};
      info.detail = "not requested";
      out.verdict.refinement = info;
    }
  }

  const auto& recs = out.base.records;
  auto& s = out.summary;
  s["config_hash"] = cfg.hash();
  s["config"] = cfg.to_json();
  s["config_text"] = cfg.to_text();
  s["model"] = model.to_json();
  const auto report = check_conditions(model);
  s["conditions"] = report.to_json();
  s["regime"] = to_string(classify_regime(report));
  s["initial_data"] = out.data.to_json();
  s["verdict"] = out.verdict.to_json();
  s["stats"] = out.base.stats.to_json();
  s["liapunov"] = check_liapunov_identity(recs).to_json();
  const double M = std::max(out.base.stats.initial_mass_u, out.base.stats.initial_mass_v);
  s["theorem36"] = check_theorem36(recs, M).to_json();
  s["blowup_time_estimate"] = estimate_blowup_time(recs).to_json();
  s["v_decay"] = v_decay_along(recs, out.data.state).to_json();
  s["records"] = recs.size();
  return out;
}

void write_series_csv(const std::string& path, const std::vector<DiagnosticsRecord>& records) {
  auto f = open_out(path);
  f << kSeriesHeader << "\n";
  for (const auto& r : records) f << to_csv_row(r) << "\n";
}

void write_profile_csv(const std::string& path, const RadialState& s) {
  auto f = open_out(path);
  f << "r,u,v\n";
  char buf[96];
  for (int i = 0; i < s.u.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", s.mesh().center(i), s.u[i], s.v[i]);
    f << buf;
  }
}

std::vector<std::string> write_outputs(const SimulationOutcome& out, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::string h = out.config.hash();
  std::vector<std::string> paths;
  const std::string series = dir + "/series-" + h + ".csv";
  write_series_csv(series, out.base.records);
  paths.push_back(series);
  nlohmann::json snaps = nlohmann::json::array();
  for (std::size_t k = 0; k < out.snapshots.size(); ++k) {
    const std::string p = dir + "/snapshot-" + h + "-" + std::to_string(k) + ".csv";
    write_profile_csv(p, out.snapshots[k]);
    snaps.push_back({{"file", std::filesystem::path(p).filename().string()}, {"t", out.snapshots[k].t}});
    paths.push_back(p);
  }
  nlohmann::json summary = out.summary;
  summary["files"] = {{"series", std::filesystem::path(series).filename().string()}, {"snapshots", snaps}};
  const std::string sp = dir + "/summary-" + h + ".json";
  open_out(sp) << summary.dump(2) << "\n";
  paths.push_back(sp);
  return paths;
}

std::vector<DiagnosticsRecord> read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read series '" + path + "'"});
  std::string line;
  if (!std::getline(in, line)) throw ConfigError({path + ": empty file"});
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  auto col = [&](const std::string& name) {
    const auto it = std::find(cols.begin(), cols.end(), name);
    if (it == cols.end()) throw ConfigError({path + ": missing column '" + name + "'"});
    return static_cast<std::size_t>(it - cols.begin());
  };
  const std::size_t it = col("t"), idt = col("dt"), il = col("linf_u");
  std::vector<DiagnosticsRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) {
      char* end = nullptr;
      const double x = std::strtod(c.c_str(), &end);
      if (end == c.c_str()) throw ConfigError({path + ":" + std::to_string(lineno) + ": bad number '" + c + "'"});
      v.push_back(x);
    }
    if (v.size() != cols.size()) throw ConfigError({path + ":" + std::to_string(lineno) + ": wrong column count"});
    DiagnosticsRecord r;
    r.t = v[it];
    r.dt = v[idt];
    r.linf_u = v[il];
    auto set = [&](const char* name, double& field) {
      const auto p = std::find(cols.begin(), cols.end(), name);
      if (p != cols.end()) field = v[p - cols.begin()];
    };
    set("mass_u", r.mass_u);
    set("mass_v", r.mass_v);
    set("F", r.F);
    set("D", r.D);
    set("norm_f", r.norm_f);
    set("norm_g", r.norm_g);
    set("ratio36", r.ratio36);
    set("Bhat", r.Bhat);
    out.push_back(r);
  }
  return out;
}

RunVerdict classify_series(const std::vector<DiagnosticsRecord>& records, double t_end, double dt_min,
                           double threshold) {
  if (records.empty()) throw DomainError("classify: empty series");
  if (!(t_end > 0.0)) t_end = records.back().t;
  TrajectoryMonitor mon(t_end, dt_min, threshold);
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    // The last step is usually shortened to land on t_end.
    const double dt = k == 0 || k + 1 == records.size() ? std::numeric_limits<double>::quiet_NaN() : r.dt;
    mon.observe(r.t, dt, r.linf_u);
    if (r.linf_u > threshold) {
      mon.trigger(r.t, true, false, "linf crossed u_blowup_threshold");
      break;
    }
  }
  return mon.verdict();
}

int verdict_exit_code(VerdictLabel label) {
  switch (label) {
    case VerdictLabel::BoundedCandidate: return 0;
    case VerdictLabel::FiniteTimeBlowup: return 3;
    case VerdictLabel::InfiniteTimeBlowupCandidate: return 4;
    case VerdictLabel::Inconclusive: return 5;
  }
  return 5;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, int jobs, std::optional<int> refinements,
                                const std::string& cell_summary_dir) {
  const std::size_t n = spec.cell_count();
  std::vector<SweepRow> rows(n);
  std::atomic<std::size_t> next{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      SweepRow row;
      row.cell = k;
      row.values = spec.cell_values(k);
      const SimulationConfig cfg = spec.cell_config(k);
      row.config_hash = cfg.hash();
      try {
        const auto out = simulate(cfg, refinements);
        row.verdict = to_string(out.verdict.label);
        row.T_star = out.verdict.T_star;
        row.T_interval = out.verdict.T_star_interval;
        row.max_linf_u = out.verdict.max_linf_u;
        row.sup_ratio36 = out.summary["theorem36"]["sup_ratio36"].get<double>();
        row.fitted_constant36 = out.summary["theorem36"]["fitted_constant"].get<double>();
        const auto& est = out.summary["blowup_time_estimate"];
        if (est["ok"].get<bool>()) row.T_extrapolated = est["t_blowup"].get<double>();
        row.message = out.verdict.reason;
        if (!cell_summary_dir.empty()) {
          std::lock_guard<std::mutex> lock(io);
          std::filesystem::create_directories(cell_summary_dir);
          open_out(cell_summary_dir + "/summary-" + row.config_hash + ".json") << out.summary.dump(2) << "\n";
        }
      } catch (const std::exception& e) {
        row.verdict = "Error";
        row.message = e.what();
      }
      rows[k] = std::move(row);
    }
  };
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

void write_sweep_csv(const std::string& path, const SweepSpec& spec, const std::vector<SweepRow>& rows) {
  auto f = open_out(path);
  f << "cell";
  for (const auto& a : spec.axes) f << "," << a.first;
  f << ",verdict,T_star,T_lo,T_hi,max_linf_u,sup_ratio36,fitted_constant36,T_extrapolated,config_hash,message\n";
  auto num = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : rows) {
    f << r.cell;
    for (double v : r.values) f << "," << format_double(v);
    std::string msg = r.message;
    for (char& c : msg)
      if (c == ',' || c == '\n' || c == '"') c = ';';
    f << "," << r.verdict << "," << num(r.T_star) << ","
      << num(r.T_interval ? std::optional<double>(r.T_interval->first) : std::nullopt) << ","
      << num(r.T_interval ? std::optional<double>(r.T_interval->second) : std::nullopt) << ","
      << format_double(r.max_linf_u) << "," << format_double(r.sup_ratio36) << ","
      << format_double(r.fitted_constant36) << "," << num(r.T_extrapolated) << "," << r.config_hash << ","
      << msg << "\n";
  }
}

}  // namespace ksblow
