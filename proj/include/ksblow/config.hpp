#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ksblow/initdata.hpp"
#include "ksblow/nonlinearity.hpp"
#include "ksblow/solver.hpp"

namespace ksblow {

/// Raw contents of a brace-block config file:
///
///   # comment
///   mesh { R = 1  N = 256 }
///   diagnostics { snapshots = 0.1, 0.5 }
///
/// Values are bare words, numbers or quoted strings; commas make lists.
struct ConfigDocument {
  struct Entry {
    std::vector<std::string> values;
    int line = 0;
  };
  using Block = std::map<std::string, Entry>;
  std::map<std::string, Block> blocks;
  std::vector<std::string> block_order;

  static ConfigDocument parse(const std::string& text);
};

struct ModelConfig {
  std::string family = "semilinear";
  double q = -1.0;
  double gamma1 = 3.0;
  double gamma2 = 0.5;
  double s0 = std::numbers::e;

  NonlinearityModel build() const;
};

enum class DataKind { Concentrated, Homogeneous };

struct InitialDataConfig {
  DataKind kind = DataKind::Concentrated;
  InitialDataSpec spec;
  /// Value of u = v for homogeneous data; negative means m / (pi R^2).
  double c = -1.0;
  /// When set, eta is searched: target min(F_target, F_hom - F_offset).
  std::optional<double> F_target;
  double F_offset = 0.0;
  double K_user = 1.0;
  std::optional<double> A_cap;
};

struct DiagnosticsConfig {
  long every = 0;
  double dt = 0.0;
  std::vector<double> snapshots;
};

struct RefinementConfig {
  int levels = 2;
  double rel_tol = 0.2;
};

struct SimulationConfig {
  double R = 1.0;
  int N = 256;
  ModelConfig model;
  SolverConfig solver;
  InitialDataConfig initial_data;
  DiagnosticsConfig diagnostics;
  RefinementConfig refinement;
  std::string output_dir;

  /// Canonical text form; parse(to_text()) reproduces the config exactly.
  std::string to_text() const;
  nlohmann::json to_json() const;
  /// FNV-1a over the canonical text without the output block, 16 hex digits.
  std::string hash() const;
  void validate() const;
};

/// Axes are applied in the fixed order q, gamma1, gamma2, m, eta; the last
/// axis varies fastest.
struct SweepSpec {
  SimulationConfig base;
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  int jobs = 1;

  static constexpr const char* kAxisNames[] = {"q", "gamma1", "gamma2", "m", "eta"};

  std::size_t cell_count() const;
  /// Axis values of cell k.
  std::vector<double> cell_values(std::size_t k) const;
  SimulationConfig cell_config(std::size_t k) const;
  std::string to_text() const;
  std::string hash() const;
};

/// Builds and validates; throws ConfigError listing every bad field path.
SimulationConfig simulation_config_from_text(const std::string& text);
/// `validate = false` leaves validation to the caller (sweep cells override
/// fields of the template).
SimulationConfig simulation_config_from_document(const ConfigDocument& doc,
                                                 const std::vector<std::string>& extra_blocks = {},
                                                 bool validate = true);
SweepSpec sweep_spec_from_text(const std::string& text);

std::string read_text_file(const std::string& path);
std::string format_double(double x);
std::string fnv1a_hex(const std::string& text);

}  // namespace ksblow
