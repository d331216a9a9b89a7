#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ksblow/config.hpp"
#include "ksblow/errors.hpp"
#include "ksblow/nonlinearity.hpp"
#include "ksblow/scenario.hpp"

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitSoftware = 70;

std::string output_dir(const std::string& flag, const std::string& from_config) {
  if (!flag.empty()) return flag;
  if (!from_config.empty()) return from_config;
  if (const char* env = std::getenv("KSBLOW_OUT"); env && *env) return env;
  return ".";
}

int check_model(const std::string& family, std::optional<double> q, std::optional<double> g1,
                std::optional<double> g2, double s0, bool sampled) {
  using namespace ksblow;
  NonlinearityModel model = NonlinearityModel::semilinear(s0);
  if (family == "semilinear") {
    if (q || g1 || g2) throw ConfigError({"semilinear takes no exponents"});
  } else if (family == "power_diffusion") {
    if (!q) throw ConfigError({"power_diffusion needs --q"});
    model = NonlinearityModel::power_diffusion(*q, s0);
  } else if (family == "remark_family") {
    if (!g1 || !g2) throw ConfigError({"remark_family needs --gamma1 and --gamma2"});
    model = NonlinearityModel::remark_family(*g1, *g2, s0);
  } else {
    model = NonlinearityModel::from_spec(family);
  }
  const ConditionReport report = sampled ? check_conditions_sampled(model) : check_conditions(model);
  const RegimeLabel regime = classify_regime(report);
  nlohmann::json j{{"model", model.to_json()}, {"conditions", report.to_json()}, {"regime", to_string(regime)}};
  std::cout << j.dump(2) << "\n";
  bool unknown = false;
  bool failed = false;
  for (const auto& e : report.entries) {
    if (e.condition == cond::phi_decreasing) continue;
    unknown = unknown || e.status == ConditionStatus::Unknown;
    failed = failed || e.status == ConditionStatus::Fail;
  }
  return unknown ? 2 : failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radial Keller-Segel blowup explorer"};
  app.require_subcommand(1);

  std::string family;
  std::optional<double> q, gamma1, gamma2;
  double s0 = std::numbers::e;
  bool sampled = false;
  auto* cm = app.add_subcommand("check-model", "Check the structural conditions of a nonlinearity");
  cm->add_option("family", family, "semilinear | power_diffusion | remark_family | spec string")->required();
  cm->add_option("--q", q, "power_diffusion exponent");
  cm->add_option("--gamma1", gamma1, "remark_family gamma1");
  cm->add_option("--gamma2", gamma2, "remark_family gamma2");
  cm->add_option("--s0", s0, "lower integration limit of G");
  cm->add_flag("--sampled", sampled, "decide by sampling instead of exponent rules");

  std::string config, out, series;
  int refinements = -1;
  int jobs = 0;
  std::optional<double> t_end, dt_min, threshold;

  auto* mk = app.add_subcommand("make-initial-data", "Build initial data and its membership report");
  mk->add_option("--config", config, "config file")->required();
  mk->add_option("--out", out, "output directory");

  auto* sim = app.add_subcommand("simulate", "Run one scenario");
  sim->add_option("--config", config, "config file")->required();
  sim->add_option("--out", out, "output directory");
  sim->add_option("--refinements", refinements, "meshes used to confirm a blowup trigger")->check(CLI::Range(1, 6));

  auto* cl = app.add_subcommand("classify", "Verdict of a stored time series");
  cl->add_option("series", series, "series CSV")->required();
  cl->add_option("--config", config, "config that produced the series");
  cl->add_option("--t-end", t_end, "horizon (default: config or last t)");
  cl->add_option("--dt-min", dt_min, "dt_min of the run");
  cl->add_option("--threshold", threshold, "u_blowup_threshold of the run");

  auto* sw = app.add_subcommand("sweep", "Run a parameter sweep");
  sw->add_option("--config", config, "sweep file")->required();
  sw->add_option("--out", out, "output directory");
  sw->add_option("--jobs", jobs, "worker threads (default: sweep.jobs)")->check(CLI::PositiveNumber);
  sw->add_option("--refinements", refinements, "meshes used to confirm a blowup trigger")->check(CLI::Range(1, 6));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  using namespace ksblow;
  const std::optional<int> refine = refinements > 0 ? std::optional<int>(refinements) : std::nullopt;
  try {
    if (*cm) return check_model(family, q, gamma1, gamma2, s0, sampled);

    if (*mk) {
      const auto cfg = simulation_config_from_text(read_text_file(config));
      const auto model = cfg.model.build();
      const auto data = prepare_initial_data(cfg, model, make_mesh(cfg.R, cfg.N));
      const std::string dir = output_dir(out, cfg.output_dir);
      std::filesystem::create_directories(dir);
      const std::string base = dir + "/initial-" + cfg.hash();
      write_profile_csv(base + ".csv", data.state);
      nlohmann::json j{{"config_hash", cfg.hash()}, {"config", cfg.to_json()}, {"initial_data", data.to_json()}};
      std::ofstream(base + ".json") << j.dump(2) << "\n";
      std::cout << j["initial_data"].dump(2) << "\n" << base << ".csv\n";
      return 0;
    }

    if (*sim) {
      const auto cfg = simulation_config_from_text(read_text_file(config));
      const auto outcome = simulate(cfg, refine);
      for (const auto& p : write_outputs(outcome, output_dir(out, cfg.output_dir))) std::cout << p << "\n";
      const auto& v = outcome.verdict;
      std::cout << "verdict " << to_string(v.label);
      if (v.T_star) std::cout << " T* " << format_double(*v.T_star);
      std::cout << " (" << v.reason << ")\n";
      return verdict_exit_code(v.label);
    }

    if (*cl) {
      SolverConfig sc;
      if (!config.empty()) sc = simulation_config_from_text(read_text_file(config)).solver;
      const auto records = read_series_csv(series);
      const double te = t_end ? *t_end : (config.empty() ? 0.0 : sc.t_end);
      const auto v = classify_series(records, te, dt_min.value_or(sc.dt_min), threshold.value_or(sc.u_blowup_threshold));
      std::cout << v.to_json().dump(2) << "\n";
      return verdict_exit_code(v.label);
    }

    if (*sw) {
      const auto spec = sweep_spec_from_text(read_text_file(config));
      const std::string dir = output_dir(out, spec.base.output_dir);
      std::filesystem::create_directories(dir);
      const auto rows = run_sweep(spec, jobs > 0 ? jobs : spec.jobs, refine, dir + "/cells-" + spec.hash());
      const std::string path = dir + "/phase-" + spec.hash() + ".csv";
      write_sweep_csv(path, spec, rows);
      std::cout << path << "\n";
      int errors = 0;
      for (const auto& r : rows) errors += r.verdict == "Error";
      if (errors) std::cerr << errors << " of " << rows.size() << " cells failed\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    for (const auto& i : e.issues()) std::cerr << "error: " << i << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSoftware;
  }
  return kExitUsage;
}
