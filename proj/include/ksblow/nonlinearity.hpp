#pragma once

#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ksblow {

enum class ModelKind { Semilinear, PowerDiffusion, RemarkFamily, Custom };

std::string to_string(ModelKind kind);

/// Diffusion phi and sensitivity psi(s) = s * beta(s) of the cell equation.
///
/// The three catalog families are pure powers of (1 + s):
///   phi(s) = (1+s)^e_phi,  beta(s) = (1+s)^e_beta,
/// so phi/psi = (1+s)^p / s with p = e_phi - e_beta. G and H then have
/// closed forms (series for non-integer p) and every structural condition
/// reduces to exponent arithmetic. Custom models carry callables and fall back
/// on adaptive quadrature and sampling.
class NonlinearityModel {
 public:
  using Fn = std::function<double(double)>;

  static NonlinearityModel semilinear(double s0 = std::numbers::e);
  static NonlinearityModel power_diffusion(double q, double s0 = std::numbers::e);
  static NonlinearityModel remark_family(double gamma1, double gamma2,
                                         double s0 = std::numbers::e);
  static NonlinearityModel custom(std::string label, Fn phi, Fn beta,
                                  double s0 = std::numbers::e);

  /// Parses `semilinear`, `power_diffusion(q=-1)`, `remark_family(gamma1=3, gamma2=0.5)`.
  static NonlinearityModel from_spec(const std::string& spec);

  ModelKind kind() const { return kind_; }
  bool is_catalog() const { return kind_ != ModelKind::Custom; }
  double s0() const { return s0_; }
  double q() const { return q_; }
  double gamma1() const { return gamma1_; }
  double gamma2() const { return gamma2_; }
  /// Exponents of phi and beta as powers of (1+s); catalog families only.
  double exponent_phi() const { return e_phi_; }
  double exponent_beta() const { return e_beta_; }
  /// Catalog exponents (l1, l2) of the (phibeta) bounds.
  double l1() const { return e_phi_; }
  double l2() const { return e_beta_; }

  double phi(double s) const;
  double beta(double s) const;
  double psi(double s) const { return s * beta(s); }
  /// phi/psi with the 1/s factor split off: phi(s) / beta(s).
  double phi_over_beta(double s) const;

  /// G(s) = int_{s0}^s int_{s0}^sigma phi/psi, closed form for catalog models.
  double G(double s) const;
  /// G'(s) = int_{s0}^s phi/psi.
  double dG(double s) const;
  /// H(s) = int_0^s sigma phi/psi = int_0^s phi/beta.
  double H(double s) const;

  /// Quadrature route, available for every kind.
  double G_quadrature(double s) const;
  double H_quadrature(double s) const;

  std::string spec() const;
  nlohmann::json to_json() const;

 private:
  NonlinearityModel() = default;
  void precompute();
  double antiderivative(double s) const;  // of (1+s)^p / s
  double power_antiderivative(double s) const;  // of (1+s)^p

  ModelKind kind_ = ModelKind::Semilinear;
  std::string label_;
  double s0_ = std::numbers::e;
  double q_ = 0.0;
  double gamma1_ = 0.0;
  double gamma2_ = 0.0;
  double e_phi_ = 0.0;
  double e_beta_ = 0.0;
  double p_ = 0.0;
  Fn custom_phi_;
  Fn custom_beta_;
  // Branch-matching constants of the (1+s)^p/s antiderivative.
  double I_split_x_ = 0.0;
  double I_split_tau_ = 0.0;
  double I_s0_ = 0.0;
  double E_s0_ = 0.0;
};

// ---------------------------------------------------------------------------
// Structural conditions

struct ConditionParams {
  double a = 1.0;
  double mu = 0.5;
  double b = 1.0;
  double c0 = 1.0;
  double C_raz = 1.0;
  double D1 = 1.0;
  double C1 = 1.0;
  double C2 = 1.0;
  /// (balance) needs a decay exponent strictly above the dimension.
  double dimension = 2.0;
  double s_max_check = 1e12;
  int n_samples = 2048;

  void validate(double s0) const;
};

enum class ConditionStatus { Pass, Fail, Unknown };
std::string to_string(ConditionStatus s);

struct ConditionEntry {
  std::string condition;
  ConditionStatus status = ConditionStatus::Unknown;
  std::optional<double> witness_s;
  std::optional<double> fitted_coefficient;
  /// Auxiliary fitted exponent: mu for G1, gamma1 for balance, l1 for phibeta.
  std::optional<double> exponent;
  std::optional<double> exponent2;
  std::string note;

  nlohmann::json to_json() const;
};

struct ConditionReport {
  std::vector<ConditionEntry> entries;
  std::string note;

  const ConditionEntry* find(const std::string& name) const;
  ConditionStatus status(const std::string& name) const;
  bool passes(const std::string& name) const { return status(name) == ConditionStatus::Pass; }
  nlohmann::json to_json() const;
};

/// Condition names used in reports.
namespace cond {
inline constexpr const char* G1 = "G1";
inline constexpr const char* H1 = "H1";
inline constexpr const char* psi = "psi";
inline constexpr const char* raz = "raz";
inline constexpr const char* balance = "balance";
inline constexpr const char* phibeta = "phibeta";
inline constexpr const char* phi_decreasing = "phi_decreasing";
}  // namespace cond

/// Exact exponent arithmetic for catalog families; sampling plus a last-decade
/// slope fit for Custom models.
ConditionReport check_conditions(const NonlinearityModel& model, const ConditionParams& params = {});

/// Sampling-only decision, whatever the model kind; used to cross-check the
/// exponent rules.
ConditionReport check_conditions_sampled(const NonlinearityModel& model,
                                         const ConditionParams& params = {});

/// Decides (raz) and, when it holds, verifies (G1) and (H1) on samples
/// independently of the exponent rules.
ConditionReport check_raz_implies_GH(const NonlinearityModel& model,
                                     const ConditionParams& params = {});

enum class RegimeLabel {
  FiniteTimeBlowupRegime,
  InfiniteTimeBlowupRegime,
  GlobalExistenceRegime,
  Unknown
};
std::string to_string(RegimeLabel r);

RegimeLabel classify_regime(const ConditionReport& report, int dimension = 2);

}  // namespace ksblow
