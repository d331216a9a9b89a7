#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ksblow/nonlinearity.hpp"
#include "ksblow/state.hpp"

namespace ksblow {

/// Exponent of D in the lower bound of F used by the blowup argument.
inline constexpr double kTheta = 8.0 / 9.0;

struct DiagnosticsRecord {
  double t = 0.0;
  double dt = 0.0;
  double mass_u = 0.0;
  double mass_v = 0.0;
  double linf_u = 0.0;
  double F = 0.0;
  double D = 0.0;
  double norm_f = 0.0;
  double norm_g = 0.0;
  double ratio36 = 0.0;
  double Bhat = 0.0;
  double A_W12 = 0.0;
  /// |dF/dt + D| against the previous record; NaN for the first one.
  double dFdt_residual = std::numeric_limits<double>::quiet_NaN();
};

/// Fixed CSV header of the per-run time series.
inline constexpr const char* kSeriesHeader = "t,dt,mass_u,mass_v,linf_u,F,D,norm_f,norm_g,ratio36,Bhat";

std::string to_csv_row(const DiagnosticsRecord& r);

/// f = -Delta v + v - u on cells.
RadialField compute_f(const RadialState& s);
/// g = (phi/sqrt(psi)) u_r - sqrt(psi) v_r on the N+1 faces, u at faces by
/// arithmetic mean. Boundary faces carry 0.
std::vector<double> compute_g(const RadialState& s, const NonlinearityModel& model);

double liapunov_F(const RadialState& s, const NonlinearityModel& model);
/// int v_t^2 + int psi |phi/psi grad u - grad v|^2 with v_t taken from the
/// right-hand side of the v equation.
double dissipation_D(const RadialState& s, const NonlinearityModel& model);

/// max_i v_i r_i^2.
double check_v_decay(const RadialField& v);

DiagnosticsRecord make_record(const RadialState& s, const NonlinearityModel& model);

/// ratio36 = (-F) / (D^theta + 1).
double energy_dissipation_ratio(double F, double D, double theta = kTheta);

struct LiapunovReport {
  std::vector<double> residuals;  // |dF/dt + D_mid| per interval
  double max_residual = 0.0;
  double mean_residual = 0.0;
  double max_relative = 0.0;
  double mean_relative = 0.0;
  /// Intervals where F grew by more than 1e-9 (1 + |F|).
  int monotonicity_violations = 0;
  nlohmann::json to_json() const;
};

LiapunovReport check_liapunov_identity(const std::vector<DiagnosticsRecord>& records);

struct RatioReport {
  std::vector<double> ratios;
  double sup_ratio = 0.0;
  double median_ratio = 0.0;
  /// sup_k (-F_k) / ((1 + M^2 + B_k^(4/3)) (D_k^theta + 1)), a fitted surrogate
  /// for the existential constant.
  double fitted_constant = 0.0;
  bool bounded = true;
  nlohmann::json to_json() const;
};

/// `mass_bound` is M, the bound on int v.
RatioReport check_theorem36(const std::vector<DiagnosticsRecord>& records, double mass_bound);

struct BlowupTimeEstimate {
  bool ok = false;
  std::string reason;
  double t_blowup = std::numeric_limits<double>::quiet_NaN();
  double rate_c = std::numeric_limits<double>::quiet_NaN();
  double t_last = std::numeric_limits<double>::quiet_NaN();
  std::size_t window = 0;
  nlohmann::json to_json() const;
};

/// Time for y' = c (y^(1/theta) - 1) to diverge from y.
double ode_divergence_time(double y, double c, double theta = kTheta);

/// Fits the rate c on the last 25% of records (at least 20) and integrates
/// the comparison ODE from the last -F to divergence.
BlowupTimeEstimate estimate_blowup_time(const std::vector<DiagnosticsRecord>& records,
                                        double theta = kTheta);

struct VDecayReport {
  double sup_Bhat = 0.0;
  double data_norm = 0.0;  // |u0|_1 + |v0|_1 + |grad v0|_2
  double ratio = 0.0;
  nlohmann::json to_json() const;
};

VDecayReport v_decay_along(const std::vector<DiagnosticsRecord>& records, const RadialState& initial);

}  // namespace ksblow
