#include "ksblow/initdata.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "ksblow/diagnostics.hpp"
#include "ksblow/errors.hpp"
#include "ksblow/solver.hpp"

namespace ksblow {
namespace {

double profile_value(Profile p, double x) {
  if (p == Profile::Gaussian) return std::exp(-x * x);
  const double d = 1.0 + x * x;
  return 1.0 / (d * d);
}

}  // namespace

std::string to_string(Profile p) { return p == Profile::Rational4 ? "rational4" : "gaussian"; }
std::string to_string(VMode m) { return m == VMode::Elliptic ? "elliptic" : "copy"; }

std::optional<Profile> profile_from_string(const std::string& s) {
  if (s == "rational4") return Profile::Rational4;
  if (s == "gaussian") return Profile::Gaussian;
  return std::nullopt;
}

std::optional<VMode> vmode_from_string(const std::string& s) {
  if (s == "elliptic") return VMode::Elliptic;
  if (s == "copy") return VMode::Copy;
  return std::nullopt;
}

double InitialDataSpec::resolved_floor(double R) const {
  return floor >= 0.0 ? floor : 1e-8 * m / (std::numbers::pi * R * R);
}

nlohmann::json InitialDataSpec::to_json() const {
  return {{"m", m}, {"eta", eta}, {"profile", to_string(profile)}, {"floor", floor}, {"v_mode", to_string(v_mode)}};
}

double min_resolvable_eta(const RadialMesh& mesh) { return 2.0 * mesh.dr() * (1.0 + 1e-12); }

RadialState build(const InitialDataSpec& spec, const MeshPtr& mesh) {
  if (!(spec.m > 0.0) || !std::isfinite(spec.m)) throw DomainError("initial_data.m: must be positive");
  if (!(spec.eta > 0.0) || !(spec.eta < mesh->R())) throw DomainError("initial_data.eta: must lie in (0, R)");
  if (spec.eta < min_resolvable_eta(*mesh)) {
    std::ostringstream os;
    os << "initial_data.eta = " << spec.eta << " is not resolved by dr = " << mesh->dr()
       << "; need eta > 2 dr, refine the mesh";
    throw ResolutionError(min_resolvable_eta(*mesh), std::numeric_limits<double>::quiet_NaN(), os.str());
  }
  const double area = std::numbers::pi * mesh->R() * mesh->R();
  const double fl = spec.resolved_floor(mesh->R());
  const double bump_mass = spec.m - fl * area;
  if (!(bump_mass > 0.0)) throw DomainError("initial_data.floor: floor carries the whole mass");

  RadialField p(mesh);
  for (int i = 0; i < mesh->N(); ++i) p[i] = profile_value(spec.profile, mesh->center(i) / spec.eta);
  const double Z = integrate(p);
  RadialField u(mesh);
  for (int i = 0; i < mesh->N(); ++i) u[i] = fl + bump_mass * p[i] / Z;

  RadialField v = spec.v_mode == VMode::Elliptic ? solve_stationary_v(u) : solve_helmholtz(u, 1.0, spec.eta * spec.eta);
  return RadialState{std::move(u), std::move(v), 0.0, 0.0, 0};
}

RadialState homogeneous(double c, const MeshPtr& mesh) {
  return RadialState{RadialField(mesh, c), RadialField(mesh, c), 0.0, 0.0, 0};
}

double homogeneous_F(double m, const MeshPtr& mesh, const NonlinearityModel& model) {
  const double c = m / (std::numbers::pi * mesh->R() * mesh->R());
  return liapunov_F(homogeneous(c, mesh), model);
}

nlohmann::json MembershipReport::to_json() const {
  return {{"m_actual", m_actual}, {"A_actual", A_actual}, {"A_used", A_used},
          {"F0", F0},             {"K_user", K_user},     {"is_member", is_member}};
}

MembershipReport membership(const RadialState& s0, const NonlinearityModel& model, double K_user,
                            std::optional<double> A_cap) {
  MembershipReport r;
  r.m_actual = integrate(s0.u);
  r.A_actual = w12_norm(s0.v);
  r.A_used = A_cap ? *A_cap : r.A_actual;
  r.F0 = liapunov_F(s0, model);
  r.K_user = K_user;
  r.is_member = r.A_actual <= r.A_used && r.F0 <= -K_user * (1.0 + r.A_used * r.A_used);
  return r;
}

nlohmann::json EtaSearchResult::to_json() const {
  return {{"eta", eta}, {"F", F}, {"evaluations", evaluations}};
}

EtaSearchResult find_eta_for_F(const InitialDataSpec& tmpl, const MeshPtr& mesh,
                               const NonlinearityModel& model, double F_target) {
  const double F_hom = homogeneous_F(tmpl.m, mesh, model);
  if (!(F_target < F_hom)) {
    std::ostringstream os;
    os << "F_target = " << F_target << " is not below the homogeneous value " << F_hom;
    throw DomainError(os.str());
  }
  EtaSearchResult res;
  auto F_at = [&](double eta) {
    InitialDataSpec s = tmpl;
    s.eta = eta;
    ++res.evaluations;
    return liapunov_F(build(s, mesh), model);
  };
  const double eta_min = min_resolvable_eta(*mesh);
  const double eta_max = 0.5 * mesh->R();
  double hi = std::min(tmpl.eta > 0.0 ? tmpl.eta : eta_max, eta_max);
  hi = std::max(hi, eta_min);
  double F_hi = F_at(hi);
  double lo = hi;
  double F_lo = F_hi;
  if (F_hi <= F_target) {
    // Already concentrated enough: widen until the target is lost.
    while (true) {
      const double next = std::min(2.0 * hi, eta_max);
      if (next <= hi) return {hi, F_hi, res.evaluations};
      const double F_next = F_at(next);
      if (F_next > F_target) {
        lo = hi;
        F_lo = F_hi;
        hi = next;
        F_hi = F_next;
        break;
      }
      hi = next;
      F_hi = F_next;
    }
  } else {
    while (true) {
      if (lo <= eta_min) {
        std::ostringstream os;
        os << "F_target = " << F_target << " not reached at the smallest resolvable eta = " << lo
           << " (F = " << F_lo << "); refine the mesh";
        throw ResolutionError(lo, F_lo, os.str());
      }
      const double next = std::max(0.5 * lo, eta_min);
      const double F_next = F_at(next);
      hi = lo;
      F_hi = F_lo;
      lo = next;
      F_lo = F_next;
      if (F_lo <= F_target) break;
    }
  }
  while (hi / lo > 1.0 + 1e-6) {
    const double mid = std::sqrt(lo * hi);
    const double F_mid = F_at(mid);
    if (F_mid <= F_target) {
      lo = mid;
      F_lo = F_mid;
    } else {
      hi = mid;
    }
  }
  res.eta = lo;
  res.F = F_lo;
  return res;
}

}  // namespace ksblow
