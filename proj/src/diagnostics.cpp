#include "ksblow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "ksblow/errors.hpp"
#include "ksblow/quadrature.hpp"

namespace ksblow {
namespace {

double face_mean(const RadialField& u, int k) {
  return std::max(0.5 * (u.values[k - 1] + u.values[k]), 0.0);
}

}  // namespace

std::string to_csv_row(const DiagnosticsRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                r.t, r.dt, r.mass_u, r.mass_v, r.linf_u, r.F, r.D, r.norm_f, r.norm_g, r.ratio36,
                r.Bhat);
  return buf;
}

RadialField compute_f(const RadialState& s) {
  const auto lap = laplacian(s.v);
  RadialField f(s.u.mesh);
  for (int i = 0; i < f.size(); ++i) f.values[i] = -lap[i] + s.v.values[i] - s.u.values[i];
  return f;
}

std::vector<double> compute_g(const RadialState& s, const NonlinearityModel& model) {
  const int N = s.u.size();
  const auto gu = grad_faces(s.u);
  const auto gv = grad_faces(s.v);
  std::vector<double> g(N + 1, 0.0);
  for (int k = 1; k < N; ++k) {
    const double uf = face_mean(s.u, k);
    const double psi = model.psi(uf);
    if (psi > 0.0) {
      const double root = std::sqrt(psi);
      g[k] = model.phi(uf) / root * gu[k] - root * gv[k];
    } else if (gu[k] != 0.0) {
      throw DomainError("g: psi(u) = 0 at a face with nonzero u gradient");
    }
  }
  return g;
}

double liapunov_F(const RadialState& s, const NonlinearityModel& model) {
  const auto w = s.mesh().volumes();
  double quad = 0.0;
  double coupling = 0.0;
  double entropy = 0.0;
  for (int i = 0; i < s.u.size(); ++i) {
    const double u = s.u.values[i];
    const double v = s.v.values[i];
    quad += w[i] * v * v;
    coupling += w[i] * u * v;
    entropy += w[i] * model.G(std::max(u, 0.0));
  }
  return 0.5 * gradient_energy(s.v) + 0.5 * quad - coupling + entropy;
}

double dissipation_D(const RadialState& s, const NonlinearityModel& model) {
  const int N = s.u.size();
  const auto& mesh = s.mesh();
  const auto w = mesh.volumes();
  const auto wf = mesh.face_weights();
  const auto lap = laplacian(s.v);
  double vt2 = 0.0;
  for (int i = 0; i < N; ++i) {
    const double vt = lap[i] - s.v.values[i] + s.u.values[i];
    vt2 += w[i] * vt * vt;
  }
  const auto gu = grad_faces(s.u);
  const auto gv = grad_faces(s.v);
  double cross = 0.0;
  for (int k = 1; k < N; ++k) {
    const double uf = face_mean(s.u, k);
    const double psi = model.psi(uf);
    if (psi > 0.0) {
      const double d = model.phi(uf) / psi * gu[k] - gv[k];
      cross += wf[k] * psi * d * d;
    } else if (gu[k] != 0.0) {
      throw DomainError("D: psi(u) = 0 at a face with nonzero u gradient");
    }
  }
  return vt2 + cross;
}

double check_v_decay(const RadialField& v) {
  const auto& m = *v.mesh;
  double b = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    const double r = m.center(i);
    b = std::max(b, v.values[i] * r * r);
  }
  return b;
}

double energy_dissipation_ratio(double F, double D, double theta) {
  return -F / (std::pow(std::max(D, 0.0), theta) + 1.0);
}

DiagnosticsRecord make_record(const RadialState& s, const NonlinearityModel& model) {
  DiagnosticsRecord r;
  r.t = s.t;
  r.dt = s.dt;
  r.mass_u = integrate(s.u);
  r.mass_v = integrate(s.v);
  r.linf_u = norms(s.u).linf;
  r.F = liapunov_F(s, model);
  r.D = dissipation_D(s, model);
  const RadialField f = compute_f(s);
  r.norm_f = norms(f).l2;
  const auto g = compute_g(s, model);
  const auto wf = s.mesh().face_weights();
  double g2 = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) g2 += wf[k] * g[k] * g[k];
  r.norm_g = std::sqrt(g2);
  r.ratio36 = energy_dissipation_ratio(r.F, r.D);
  r.Bhat = check_v_decay(s.v);
  r.A_W12 = w12_norm(s.v);
  return r;
}

nlohmann::json LiapunovReport::to_json() const {
  return {{"intervals", residuals.size()},
          {"max_residual", max_residual},
          {"mean_residual", mean_residual},
          {"max_relative", max_relative},
          {"mean_relative", mean_relative},
          {"monotonicity_violations", monotonicity_violations}};
}

LiapunovReport check_liapunov_identity(const std::vector<DiagnosticsRecord>& records) {
  LiapunovReport rep;
  double sum = 0.0;
  double sum_rel = 0.0;
  for (std::size_t k = 0; k + 1 < records.size(); ++k) {
    const auto& a = records[k];
    const auto& b = records[k + 1];
    const double dt = b.t - a.t;
    if (!(dt > 0.0)) continue;
    const double slope = (b.F - a.F) / dt;
    const double d_mid = 0.5 * (a.D + b.D);
    const double res = std::abs(slope + d_mid);
    const double scale = std::max({std::abs(slope), d_mid, 1e-300});
    rep.residuals.push_back(res);
    sum += res;
    sum_rel += res / scale;
    rep.max_residual = std::max(rep.max_residual, res);
    rep.max_relative = std::max(rep.max_relative, res / scale);
    if (b.F > a.F + 1e-9 * (1.0 + std::abs(a.F))) ++rep.monotonicity_violations;
  }
  if (!rep.residuals.empty()) {
    rep.mean_residual = sum / rep.residuals.size();
    rep.mean_relative = sum_rel / rep.residuals.size();
  }
  return rep;
}

nlohmann::json RatioReport::to_json() const {
  return {{"sup_ratio36", sup_ratio},
          {"median_ratio36", median_ratio},
          {"fitted_constant", fitted_constant},
          {"bounded", bounded},
          {"records", ratios.size()}};
}

RatioReport check_theorem36(const std::vector<DiagnosticsRecord>& records, double mass_bound) {
  RatioReport rep;
  if (records.empty()) return rep;
  rep.sup_ratio = -std::numeric_limits<double>::infinity();
  const double M2 = mass_bound * mass_bound;
  for (const auto& r : records) {
    const double ratio = energy_dissipation_ratio(r.F, r.D);
    rep.ratios.push_back(ratio);
    if (!std::isfinite(ratio)) rep.bounded = false;
    rep.sup_ratio = std::max(rep.sup_ratio, ratio);
    const double scale = (1.0 + M2 + std::pow(r.Bhat, 4.0 / 3.0)) * (std::pow(std::max(r.D, 0.0), kTheta) + 1.0);
    rep.fitted_constant = std::max(rep.fitted_constant, -r.F / scale);
  }
  std::vector<double> sorted = rep.ratios;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  rep.median_ratio = sorted[sorted.size() / 2];
  const double ref = std::max(std::abs(rep.median_ratio), 1e-300);
  for (std::size_t k = 0; k < records.size(); ++k)
    if (std::isfinite(records[k].D) && rep.ratios[k] > 1e6 * ref) rep.bounded = false;
  return rep;
}

double ode_divergence_time(double y, double c, double theta) {
  if (!(y > 1.0)) throw DomainError("ode_divergence_time: needs y > 1");
  if (!(c > 0.0)) throw DomainError("ode_divergence_time: needs c > 0");
  // With z = y^(1-a), a = 1/theta:
  //   int_y^inf dy'/(y'^a - 1) = 1/(a-1) int_0^{y^(1-a)} dz / (1 - z^(a/(a-1))).
  const double a = 1.0 / theta;
  const double k = a / (a - 1.0);
  const double Z = std::pow(y, 1.0 - a);
  auto f = [k](double z) { return 1.0 / (1.0 - std::pow(z, k)); };
  return quad::adaptive_simpson(f, 0.0, Z, {1e-12, 1e-30, 60}) / (c * (a - 1.0));
}

nlohmann::json BlowupTimeEstimate::to_json() const {
  nlohmann::json j{{"ok", ok}, {"reason", reason}, {"window", window}};
  j["t_blowup"] = ok ? nlohmann::json(t_blowup) : nlohmann::json(nullptr);
  j["rate_c"] = ok ? nlohmann::json(rate_c) : nlohmann::json(nullptr);
  j["t_last"] = std::isfinite(t_last) ? nlohmann::json(t_last) : nlohmann::json(nullptr);
  return j;
}

BlowupTimeEstimate estimate_blowup_time(const std::vector<DiagnosticsRecord>& records, double theta) {
  BlowupTimeEstimate est;
  const std::size_t n = records.size();
  if (n < 20) {
    est.reason = "need at least 20 records";
    return est;
  }
  const std::size_t w = std::min(n, std::max<std::size_t>(20, (n + 3) / 4));
  est.window = w;
  const std::size_t first = n - w;
  const double a = 1.0 / theta;
  est.t_last = records.back().t;
  if (!(-records[first].F > 1.0)) {
    est.reason = "-F <= 1 at the start of the fitting window";
    return est;
  }
  double c = std::numeric_limits<double>::infinity();
  for (std::size_t k = first; k + 1 < n; ++k) {
    const double y0 = -records[k].F;
    const double y1 = -records[k + 1].F;
    const double dt = records[k + 1].t - records[k].t;
    if (!(y1 > y0) || !(dt > 0.0)) {
      est.reason = "-F not increasing over the fitting window";
      return est;
    }
    const double drive = 0.5 * ((std::pow(y0, a) - 1.0) + (std::pow(y1, a) - 1.0));
    c = std::min(c, (y1 - y0) / dt / drive);
  }
  est.rate_c = c;
  est.t_blowup = est.t_last + ode_divergence_time(-records.back().F, c, theta);
  est.ok = true;
  est.reason = "ok";
  return est;
}

nlohmann::json VDecayReport::to_json() const {
  return {{"sup_Bhat", sup_Bhat}, {"data_norm", data_norm}, {"ratio", ratio}};
}

VDecayReport v_decay_along(const std::vector<DiagnosticsRecord>& records, const RadialState& initial) {
  VDecayReport rep;
  for (const auto& r : records) rep.sup_Bhat = std::max(rep.sup_Bhat, r.Bhat);
  rep.data_norm = norms(initial.u).l1 + norms(initial.v).l1 + std::sqrt(gradient_energy(initial.v));
  rep.ratio = rep.data_norm > 0.0 ? rep.sup_Bhat / rep.data_norm : 0.0;
  return rep;
}

}  // namespace ksblow
