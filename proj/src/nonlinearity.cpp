#include "ksblow/nonlinearity.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "ksblow/errors.hpp"
#include "ksblow/quadrature.hpp"

namespace ksblow {
namespace {

// Below this argument the antiderivative of (1+s)^p/s is expanded in s,
// above it in x = 1/(1+s).
constexpr double kSplit = 0.5;

// -sum_k x^(k-p)/(k-p); the k == p term (integer p >= 0) is -ln x.
double x_series(double p, double s) {
  const double x = 1.0 / (1.0 + s);
  const double lx = -std::log1p(s);
  double sum = 0.0;
  double first = 0.0;
  for (int k = 0; k < 4000; ++k) {
    const double e = k - p;
    const double term = (e == 0.0) ? lx : std::exp(e * lx) / e;
    sum += term;
    if (k == 0) first = std::abs(term);
    if (e > 1.0 && std::abs(term) <= 1e-18 * std::max(std::abs(sum), first)) break;
  }
  (void)x;
  return -sum;
}

// ln s + sum_{k>=1} binom(p,k) s^k / k, for 0 < s < 1.
double tau_series(double p, double s) {
  double sum = 0.0;
  double binom = 1.0;
  double sk = 1.0;
  const double ls = std::log(s);
  for (int k = 1; k < 4000; ++k) {
    binom *= (p - k + 1) / k;
    sk *= s;
    const double term = binom * sk / k;
    sum += term;
    if (binom == 0.0) break;
    if (k > std::abs(p) + 2 && std::abs(term) <= 1e-18 * (std::abs(ls) + std::abs(sum))) break;
  }
  return ls + sum;
}

double check_positive_finite(double value, double s, const char* what) {
  if (!std::isfinite(value) || value <= 0.0) {
    std::ostringstream os;
    os << what << "(" << s << ") = " << value << " is not finite and positive";
    throw EvaluationError(s, os.str());
  }
  return value;
}

std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(0, 1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Semilinear: return "semilinear";
    case ModelKind::PowerDiffusion: return "power_diffusion";
    case ModelKind::RemarkFamily: return "remark_family";
    case ModelKind::Custom: return "custom";
  }
  return "?";
}

NonlinearityModel NonlinearityModel::semilinear(double s0) {
  NonlinearityModel m;
  m.kind_ = ModelKind::Semilinear;
  m.s0_ = s0;
  m.precompute();
  return m;
}

NonlinearityModel NonlinearityModel::power_diffusion(double q, double s0) {
  if (!std::isfinite(q)) throw DomainError("power_diffusion: q must be finite");
  NonlinearityModel m;
  m.kind_ = ModelKind::PowerDiffusion;
  m.s0_ = s0;
  m.q_ = q;
  m.e_phi_ = q;
  m.precompute();
  return m;
}

NonlinearityModel NonlinearityModel::remark_family(double gamma1, double gamma2, double s0) {
  if (!std::isfinite(gamma1) || !std::isfinite(gamma2))
    throw DomainError("remark_family: exponents must be finite");
  NonlinearityModel m;
  m.kind_ = ModelKind::RemarkFamily;
  m.s0_ = s0;
  m.gamma1_ = gamma1;
  m.gamma2_ = gamma2;
  m.e_phi_ = -gamma1 - 2.0 * gamma2;
  m.e_beta_ = -gamma1 - gamma2;
  m.precompute();
  return m;
}

NonlinearityModel NonlinearityModel::custom(std::string label, Fn phi, Fn beta, double s0) {
  if (!phi || !beta) throw DomainError("custom model requires phi and beta");
  NonlinearityModel m;
  m.kind_ = ModelKind::Custom;
  m.label_ = std::move(label);
  m.s0_ = s0;
  m.custom_phi_ = std::move(phi);
  m.custom_beta_ = std::move(beta);
  m.precompute();
  return m;
}

NonlinearityModel NonlinearityModel::from_spec(const std::string& raw) {
  const std::string spec = trim(raw);
  const auto open = spec.find('(');
  const std::string name = trim(spec.substr(0, open));
  std::map<std::string, double> args;
  if (open != std::string::npos) {
    const auto close = spec.rfind(')');
    if (close == std::string::npos || close < open)
      throw DomainError("model spec '" + spec + "': missing ')'");
    std::stringstream body(spec.substr(open + 1, close - open - 1));
    std::string item;
    while (std::getline(body, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos)
        throw DomainError("model spec '" + spec + "': expected key=value, got '" + item + "'");
      const std::string key = trim(item.substr(0, eq));
      const std::string val = trim(item.substr(eq + 1));
      std::size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(val, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != val.size() || val.empty())
        throw DomainError("model spec '" + spec + "': malformed number '" + val + "'");
      args[key] = x;
    }
  }
  auto take = [&](const char* key) -> double {
    auto it = args.find(key);
    if (it == args.end()) throw DomainError("model spec '" + spec + "': missing " + key);
    const double v = it->second;
    args.erase(it);
    return v;
  };
  double s0 = std::numbers::e;
  if (auto it = args.find("s0"); it != args.end()) {
    s0 = it->second;
    args.erase(it);
  }
  NonlinearityModel m = [&] {
    if (name == "semilinear") return semilinear(s0);
    if (name == "power_diffusion") return power_diffusion(take("q"), s0);
    if (name == "remark_family") {
      const double g1 = take("gamma1");
      return remark_family(g1, take("gamma2"), s0);
    }
    throw DomainError("unknown model '" + name + "'");
  }();
  if (!args.empty()) throw DomainError("model spec '" + spec + "': unknown key " + args.begin()->first);
  return m;
}

void NonlinearityModel::precompute() {
  if (!(s0_ > 1.0) || !std::isfinite(s0_)) throw DomainError("s0 must be finite and > 1");
  p_ = e_phi_ - e_beta_;
  if (kind_ == ModelKind::Custom) {
    check_positive_finite(custom_beta_(0.0), 0.0, "beta");
    check_positive_finite(custom_phi_(0.0), 0.0, "phi");
    return;
  }
  if (p_ != 0.0 && p_ != -1.0) {
    I_split_x_ = x_series(p_, kSplit);
    I_split_tau_ = tau_series(p_, kSplit);
  }
  I_s0_ = antiderivative(s0_);
  E_s0_ = power_antiderivative(s0_);
}

double NonlinearityModel::phi(double s) const {
  if (kind_ == ModelKind::Custom) return check_positive_finite(custom_phi_(s), s, "phi");
  return e_phi_ == 0.0 ? 1.0 : std::exp(e_phi_ * std::log1p(s));
}

double NonlinearityModel::beta(double s) const {
  if (kind_ == ModelKind::Custom) return check_positive_finite(custom_beta_(s), s, "beta");
  return e_beta_ == 0.0 ? 1.0 : std::exp(e_beta_ * std::log1p(s));
}

double NonlinearityModel::phi_over_beta(double s) const {
  if (kind_ == ModelKind::Custom) return phi(s) / beta(s);
  return p_ == 0.0 ? 1.0 : std::exp(p_ * std::log1p(s));
}

double NonlinearityModel::antiderivative(double s) const {
  if (p_ == 0.0) return std::log(s);
  if (p_ == -1.0) return std::log(s) - std::log1p(s);
  if (s >= kSplit) return x_series(p_, s);
  return I_split_x_ + (tau_series(p_, s) - I_split_tau_);
}

double NonlinearityModel::power_antiderivative(double s) const {
  if (p_ == -1.0) return std::log1p(s);
  return std::exp((p_ + 1.0) * std::log1p(s)) / (p_ + 1.0);
}

double NonlinearityModel::G(double s) const {
  if (!(s >= 0.0)) throw DomainError("G: argument must be >= 0");
  if (kind_ == ModelKind::Custom) return G_quadrature(s);
  if (s == s0_) return 0.0;
  // G(s) = s (I(s) - I(s0)) - (E(s) - E(s0)), I' = (1+s)^p/s, E' = (1+s)^p.
  const double head = (s == 0.0) ? 0.0 : s * (antiderivative(s) - I_s0_);
  const double value = head - (power_antiderivative(s) - E_s0_);
  return std::max(value, 0.0);
}

double NonlinearityModel::dG(double s) const {
  if (!(s > 0.0)) throw DomainError("dG: argument must be > 0");
  if (kind_ == ModelKind::Custom) {
    auto h = [this](double t) { return phi(t) / psi(t); };
    return quad::adaptive_simpson_log(h, s0_, s);
  }
  return antiderivative(s) - I_s0_;
}

double NonlinearityModel::H(double s) const {
  if (!(s >= 0.0)) throw DomainError("H: argument must be >= 0");
  if (kind_ == ModelKind::Custom) return H_quadrature(s);
  if (p_ == 0.0) return s;
  if (p_ == -1.0) return std::log1p(s);
  return std::expm1((p_ + 1.0) * std::log1p(s)) / (p_ + 1.0);
}

double NonlinearityModel::G_quadrature(double s) const {
  if (!(s >= 0.0)) throw DomainError("G: argument must be >= 0");
  if (s == s0_) return 0.0;
  // Cauchy's formula for the repeated integral: G(s) = int_{s0}^s (s - t) phi/psi dt.
  if (s == 0.0) {
    auto f = [this](double t) { return phi_over_beta(t); };
    return quad::adaptive_simpson(f, 0.0, s0_);
  }
  auto f = [this, s](double t) { return std::abs(s - t) * phi(t) / psi(t); };
  return quad::adaptive_simpson_log(f, std::min(s, s0_), std::max(s, s0_));
}

double NonlinearityModel::H_quadrature(double s) const {
  if (!(s >= 0.0)) throw DomainError("H: argument must be >= 0");
  auto f = [this](double t) { return phi(t) / beta(t); };
  if (s <= 1.0) return quad::adaptive_simpson(f, 0.0, s);
  return quad::adaptive_simpson(f, 0.0, 1.0) + quad::adaptive_simpson_log(f, 1.0, s);
}

std::string NonlinearityModel::spec() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case ModelKind::Semilinear: os << "semilinear"; break;
    case ModelKind::PowerDiffusion: os << "power_diffusion(q=" << q_ << ")"; break;
    case ModelKind::RemarkFamily:
      os << "remark_family(gamma1=" << gamma1_ << ", gamma2=" << gamma2_ << ")";
      break;
    case ModelKind::Custom: os << "custom(" << label_ << ")"; break;
  }
  return os.str();
}

nlohmann::json NonlinearityModel::to_json() const {
  nlohmann::json j;
  j["name"] = to_string(kind_);
  j["s0"] = s0_;
  switch (kind_) {
    case ModelKind::PowerDiffusion: j["q"] = q_; break;
    case ModelKind::RemarkFamily:
      j["gamma1"] = gamma1_;
      j["gamma2"] = gamma2_;
      break;
    case ModelKind::Custom: j["label"] = label_; break;
    default: break;
  }
  if (is_catalog()) {
    j["exponent_phi"] = e_phi_;
    j["exponent_beta"] = e_beta_;
  }
  return j;
}

}  // namespace ksblow
