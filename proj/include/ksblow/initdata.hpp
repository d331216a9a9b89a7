#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "ksblow/nonlinearity.hpp"
#include "ksblow/state.hpp"

namespace ksblow {

enum class Profile { Rational4, Gaussian };
/// Elliptic: v solves -Delta_h v + v = u. Copy: v = u smoothed by one solve of
/// (I - eta^2 Delta_h) v = u.
enum class VMode { Elliptic, Copy };

std::string to_string(Profile p);
std::string to_string(VMode m);
std::optional<Profile> profile_from_string(const std::string& s);
std::optional<VMode> vmode_from_string(const std::string& s);

/// Concentrated radial data u = floor + (m - floor |B_R|) P(r/eta) / Z, with
/// P(x) = (1 + x^2)^-2 (rational4) or exp(-x^2) (gaussian) and Z the mesh
/// quadrature of P, so that the discrete mass is m.
struct InitialDataSpec {
  double m = 1.0;
  double eta = 0.1;
  Profile profile = Profile::Rational4;
  /// Additive positivity floor; negative selects 1e-8 m / (pi R^2).
  double floor = -1.0;
  VMode v_mode = VMode::Elliptic;

  double resolved_floor(double R) const;
  nlohmann::json to_json() const;
};

/// Smallest eta accepted by build on this mesh.
double min_resolvable_eta(const RadialMesh& mesh);

RadialState build(const InitialDataSpec& spec, const MeshPtr& mesh);

/// u = v = c.
RadialState homogeneous(double c, const MeshPtr& mesh);

/// F of the homogeneous state with mass m on the mesh.
double homogeneous_F(double m, const MeshPtr& mesh, const NonlinearityModel& model);

struct MembershipReport {
  double m_actual = 0.0;
  double A_actual = 0.0;  // |v0|_{W^{1,2}}
  double A_used = 0.0;    // the cap A, or A_actual if none was given
  double F0 = 0.0;
  double K_user = 1.0;
  /// A_actual <= A_used and F0 <= -K_user (1 + A_used^2).
  bool is_member = false;
  nlohmann::json to_json() const;
};

MembershipReport membership(const RadialState& s0, const NonlinearityModel& model, double K_user = 1.0,
                            std::optional<double> A_cap = std::nullopt);

struct EtaSearchResult {
  double eta = 0.0;
  double F = 0.0;
  int evaluations = 0;
  nlohmann::json to_json() const;
};

/// Largest eta (to relative 1e-6) with F(u_eta, v_eta) <= F_target, by
/// geometric halving from min(template eta, R/2) followed by log-bisection.
/// Throws DomainError if F_target is not below the homogeneous F and
/// ResolutionError if the mesh runs out before the target is reached.
EtaSearchResult find_eta_for_F(const InitialDataSpec& tmpl, const MeshPtr& mesh,
                               const NonlinearityModel& model, double F_target);

}  // namespace ksblow
