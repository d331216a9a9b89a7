#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ksblow/errors.hpp"
#include "ksblow/nonlinearity.hpp"

namespace ksblow {
namespace {

constexpr double kSlopeBand = 0.05;
constexpr double kFlatVariation = 0.01;

std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> s(n);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < n; ++i) s[i] = std::exp(a + (b - a) * i / (n - 1));
  s.front() = lo;
  s.back() = hi;
  return s;
}

struct Samples {
  std::vector<double> all;    // s = 0 plus log-spaced points up to s_max
  std::vector<double> upper;  // log-spaced points in [s0, s_max]
  std::vector<double> decade; // last decade [s_max/10, s_max]
};

Samples make_samples(double s0, const ConditionParams& p) {
  Samples out;
  out.all.push_back(0.0);
  for (double s : logspace(1e-8, p.s_max_check, p.n_samples)) out.all.push_back(s);
  out.upper = logspace(s0, p.s_max_check, p.n_samples);
  out.decade = logspace(p.s_max_check / 10.0, p.s_max_check, std::max(16, p.n_samples / 16));
  return out;
}

// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

double finite_or_throw(double v, double s, const char* what) {
  if (!std::isfinite(v)) throw EvaluationError(s, std::string(what) + " evaluated to a non-finite value");
  return v;
}

struct SlopeVerdict {
  ConditionStatus status;
  double slope;
};

// Decides boundedness of ratio(s) from its log-slope in x(s) on the last decade.
template <class Ratio, class Abscissa>
SlopeVerdict slope_decision(const std::vector<double>& decade, Ratio ratio, Abscissa abscissa,
                            double critical, bool flat_is_pass) {
  std::vector<double> xs;
  std::vector<double> ys;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double s : decade) {
    const double r = finite_or_throw(ratio(s), s, "condition ratio");
    if (!(r > 0.0)) throw EvaluationError(s, "condition ratio is not positive");
    xs.push_back(abscissa(s));
    ys.push_back(std::log(r));
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  const double slope = fit_slope(xs, ys);
  if (slope > critical + kSlopeBand) return {ConditionStatus::Fail, slope};
  if (slope < critical - kSlopeBand) return {ConditionStatus::Pass, slope};
  if (flat_is_pass && (hi - lo) / hi < kFlatVariation) return {ConditionStatus::Pass, slope};
  return {ConditionStatus::Unknown, slope};
}

// First s (samples first, then decade-wise past s_max) at which the
// predicate reports a violation.
template <class Violated>
std::optional<double> find_witness(const std::vector<double>& samples, Violated violated) {
  for (double s : samples)
    if (violated(s)) return s;
  double s = samples.back();
  for (int k = 0; k < 280; ++k) {
    s *= 10.0;
    if (!std::isfinite(s)) break;
    bool hit = false;
    try {
      hit = violated(s);
    } catch (const Error&) {
      break;
    }
    if (hit) return s;
  }
  return std::nullopt;
}

template <class Ratio>
double sup_over(const std::vector<double>& samples, Ratio ratio) {
  double best = 0.0;
  for (double s : samples) best = std::max(best, finite_or_throw(ratio(s), s, "ratio"));
  return best;
}

template <class Ratio>
double inf_over(const std::vector<double>& samples, Ratio ratio) {
  double best = std::numeric_limits<double>::infinity();
  for (double s : samples) best = std::min(best, finite_or_throw(ratio(s), s, "ratio"));
  return best;
}

std::vector<double> strictly_above(const std::vector<double>& v, double s0) {
  std::vector<double> out;
  for (double s : v)
    if (s > s0) out.push_back(s);
  return out;
}

// Shared evaluation of one report. `exact` selects exponent arithmetic for
// catalog models; otherwise every verdict comes from sampling.
ConditionReport evaluate(const NonlinearityModel& m, const ConditionParams& prm, bool exact) {
  prm.validate(m.s0());
  const Samples smp = make_samples(m.s0(), prm);
  const std::vector<double> above = strictly_above(smp.upper, m.s0());
  const double dim = prm.dimension;
  const double p = m.exponent_phi() - m.exponent_beta();
  ConditionReport rep;

  auto fill = [&](ConditionEntry& e, auto violated, auto fitted) {
    if (e.status == ConditionStatus::Fail) {
      e.witness_s = find_witness(smp.upper, violated);
      if (!e.witness_s) {
        // The user coefficient is too generous to be beaten by sampled s:
        // beat instead the coefficient fitted on all but the last decade.
        e.note = "witness against the coefficient fitted below s_max/10";
        e.witness_s = fitted();
      }
    } else if (e.status == ConditionStatus::Pass && !e.fitted_coefficient) {
      e.fitted_coefficient = fitted();
    }
    rep.entries.push_back(e);
  };

  // (G1)  G(s) <= a s (ln s)^mu, s >= s0, some mu in (0,1).
  {
    ConditionEntry e;
    e.condition = cond::G1;
    double alpha = 0.0;
    if (exact && m.is_catalog()) {
      e.status = p < 0.0 ? ConditionStatus::Pass : ConditionStatus::Fail;
    } else {
      const auto v = slope_decision(
          smp.decade, [&](double s) { return m.G(s) / s; },
          [](double s) { return std::log(std::log(s)); }, 1.0, false);
      e.status = v.status;
      alpha = v.slope;
    }
    auto violated = [&](double s) { return m.G(s) > prm.a * s * std::pow(std::log(s), prm.mu); };
    auto fitted = [&]() -> double {
      if (e.status == ConditionStatus::Fail) {
        const std::vector<double> lower = strictly_above(
            logspace(m.s0(), prm.s_max_check / 10.0, prm.n_samples), m.s0());
        const double a_low = sup_over(lower, [&](double s) {
          return m.G(s) / (s * std::pow(std::log(s), prm.mu));
        });
        for (double s : smp.decade)
          if (m.G(s) > a_low * s * std::pow(std::log(s), prm.mu)) return s;
        return smp.decade.back();
      }
      double best = std::numeric_limits<double>::infinity();
      double best_mu = 0.9;
      for (int k = 1; k <= 9; ++k) {
        const double mu = 0.1 * k;
        if (mu < alpha) continue;
        const double a = sup_over(above, [&](double s) {
          return m.G(s) / (s * std::pow(std::log(s), mu));
        });
        if (a < best) {
          best = a;
          best_mu = mu;
        }
      }
      e.exponent = best_mu;
      return best;
    };
    fill(e, violated, fitted);
  }

  // (H1)  H(s) <= b s / ln s, s >= s0.
  {
    ConditionEntry e;
    e.condition = cond::H1;
    if (exact && m.is_catalog()) {
      e.status = p < 0.0 ? ConditionStatus::Pass : ConditionStatus::Fail;
    } else {
      e.status = slope_decision(
                     smp.decade, [&](double s) { return m.H(s) * std::log(s) / s; },
                     [](double s) { return std::log(s); }, 0.0, true)
                     .status;
    }
    auto ratio = [&](double s) { return m.H(s) * std::log(s) / s; };
    auto violated = [&](double s) { return ratio(s) > prm.b; };
    auto fitted = [&]() -> double {
      if (e.status == ConditionStatus::Fail) {
        const double b_low =
            sup_over(logspace(m.s0(), prm.s_max_check / 10.0, prm.n_samples), ratio);
        for (double s : smp.decade)
          if (ratio(s) > b_low) return s;
        return smp.decade.back();
      }
      return sup_over(smp.upper, ratio);
    };
    fill(e, violated, fitted);
  }

  // (psi)  psi(s) >= c0 s for s >= 0, i.e. beta >= c0.
  {
    ConditionEntry e;
    e.condition = cond::psi;
    if (exact && m.is_catalog()) {
      e.status = m.exponent_beta() >= 0.0 ? ConditionStatus::Pass : ConditionStatus::Fail;
    } else {
      e.status = slope_decision(
                     smp.decade, [&](double s) { return 1.0 / m.beta(s); },
                     [](double s) { return std::log(s); }, 0.0, true)
                     .status;
    }
    auto violated = [&](double s) { return m.beta(s) < prm.c0; };
    auto fitted = [&]() -> double {
      if (e.status == ConditionStatus::Fail) {
        const double c_low = inf_over(logspace(1e-8, prm.s_max_check / 10.0, prm.n_samples),
                                      [&](double s) { return m.beta(s); });
        for (double s : smp.decade)
          if (m.beta(s) < c_low) return s;
        return smp.decade.back();
      }
      return inf_over(smp.all, [&](double s) { return m.beta(s); });
    };
    fill(e, violated, fitted);
  }

  // (raz)  psi/phi >= C s ln s for s > s0.
  {
    ConditionEntry e;
    e.condition = cond::raz;
    auto ratio = [&](double s) { return m.beta(s) / (m.phi(s) * std::log(s)); };
    if (exact && m.is_catalog()) {
      e.status = p < 0.0 ? ConditionStatus::Pass : ConditionStatus::Fail;
    } else {
      e.status = slope_decision(
                     smp.decade, [&](double s) { return 1.0 / ratio(s); },
                     [](double s) { return std::log(s); }, 0.0, true)
                     .status;
    }
    auto violated = [&](double s) { return s > m.s0() && ratio(s) < prm.C_raz; };
    auto fitted = [&]() -> double {
      if (e.status == ConditionStatus::Fail) {
        const double c_low = inf_over(
            strictly_above(logspace(m.s0(), prm.s_max_check / 10.0, prm.n_samples), m.s0()), ratio);
        for (double s : smp.decade)
          if (ratio(s) < c_low) return s;
        return smp.decade.back();
      }
      return inf_over(above, ratio);
    };
    fill(e, violated, fitted);
  }

  // (balance)  beta^2/phi <= D1 (1+s)^(-gamma1), some gamma1 > n, s >= 0.
  {
    ConditionEntry e;
    e.condition = cond::balance;
    auto decay = [&](double s) { return m.beta(s) * m.beta(s) / m.phi(s); };
    double gamma1 = 0.0;
    if (exact && m.is_catalog()) {
      gamma1 = -(2.0 * m.exponent_beta() - m.exponent_phi());
      e.status = gamma1 > dim ? ConditionStatus::Pass : ConditionStatus::Fail;
    } else {
      const auto v = slope_decision(
          smp.decade, [&](double s) { return decay(s) * std::pow(1.0 + s, dim); },
          [](double s) { return std::log1p(s); }, 0.0, false);
      e.status = v.status;
      gamma1 = dim - v.slope;
    }
    e.exponent = gamma1;
    auto violated = [&](double s) { return decay(s) > prm.D1 * std::pow(1.0 + s, -dim); };
    auto fitted = [&]() -> double {
      if (e.status == ConditionStatus::Fail) {
        const double d_low =
            sup_over(logspace(1e-8, prm.s_max_check / 10.0, prm.n_samples),
                     [&](double s) { return decay(s) * std::pow(1.0 + s, dim); });
        for (double s : smp.decade)
          if (decay(s) * std::pow(1.0 + s, dim) > d_low) return s;
        return smp.decade.back();
      }
      return sup_over(smp.all, [&](double s) { return decay(s) * std::pow(1.0 + s, gamma1); });
    };
    fill(e, violated, fitted);
  }

  // (phibeta)  phi >= C1 (1+s)^l1 and beta <= C2 (1+s)^l2.
  {
    ConditionEntry e;
    e.condition = cond::phibeta;
    double l1 = m.l1();
    double l2 = m.l2();
    if (!(exact && m.is_catalog())) {
      std::vector<double> xs;
      std::vector<double> yp;
      std::vector<double> yb;
      for (double s : smp.decade) {
        xs.push_back(std::log1p(s));
        yp.push_back(std::log(m.phi(s)));
        yb.push_back(std::log(m.beta(s)));
      }
      l1 = fit_slope(xs, yp);
      l2 = fit_slope(xs, yb);
    }
    const double C1 = inf_over(smp.all, [&](double s) { return m.phi(s) / std::pow(1.0 + s, l1); });
    const double C2 = sup_over(smp.all, [&](double s) { return m.beta(s) / std::pow(1.0 + s, l2); });
    e.status = (C1 > 0.0 && std::isfinite(C2)) ? ConditionStatus::Pass : ConditionStatus::Fail;
    e.exponent = l1;
    e.exponent2 = l2;
    e.fitted_coefficient = C1;
    e.note = "C2 = " + std::to_string(C2);
    auto violated = [&](double s) { return m.phi(s) < prm.C1 * std::pow(1.0 + s, l1); };
    fill(e, violated, [&]() -> double { return smp.all.back(); });
  }

  // phi non-increasing on samples (assumed alongside the q < 0 power bound).
  {
    ConditionEntry e;
    e.condition = cond::phi_decreasing;
    double worst = 0.0;
    std::optional<double> witness;
    for (std::size_t i = 1; i < smp.all.size(); ++i) {
      const double r = m.phi(smp.all[i]) / m.phi(smp.all[i - 1]);
      worst = std::max(worst, r);
      if (r > 1.0 + 1e-14 && !witness) witness = smp.all[i];
    }
    e.status = witness ? ConditionStatus::Fail : ConditionStatus::Pass;
    if (witness)
      e.witness_s = witness;
    else
      e.fitted_coefficient = worst;
    e.note = "max phi(s_{k+1})/phi(s_k) on samples";
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

}  // namespace

void ConditionParams::validate(double s0) const {
  const double coeffs[] = {a, b, c0, C_raz, D1, C1, C2};
  for (double c : coeffs)
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("condition coefficients must be positive");
  if (!(mu > 0.0 && mu < 1.0)) throw DomainError("mu must lie in (0,1)");
  if (!(s_max_check > s0)) throw DomainError("s_max_check must exceed s0");
  if (n_samples < 32) throw DomainError("n_samples must be >= 32");
}

std::string to_string(ConditionStatus s) {
  switch (s) {
    case ConditionStatus::Pass: return "pass";
    case ConditionStatus::Fail: return "fail";
    case ConditionStatus::Unknown: return "unknown";
  }
  return "?";
}

nlohmann::json ConditionEntry::to_json() const {
  nlohmann::json j;
  j["condition"] = condition;
  j["status"] = to_string(status);
  j["witness_s"] = witness_s ? nlohmann::json(*witness_s) : nlohmann::json(nullptr);
  j["fitted_coefficient"] =
      fitted_coefficient ? nlohmann::json(*fitted_coefficient) : nlohmann::json(nullptr);
  if (exponent) j["exponent"] = *exponent;
  if (exponent2) j["exponent2"] = *exponent2;
  if (!note.empty()) j["note"] = note;
  return j;
}

const ConditionEntry* ConditionReport::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.condition == name) return &e;
  return nullptr;
}

ConditionStatus ConditionReport::status(const std::string& name) const {
  const auto* e = find(name);
  return e ? e->status : ConditionStatus::Unknown;
}

nlohmann::json ConditionReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : entries) arr.push_back(e.to_json());
  return arr;
}

ConditionReport check_conditions(const NonlinearityModel& model, const ConditionParams& params) {
  return evaluate(model, params, true);
}

ConditionReport check_conditions_sampled(const NonlinearityModel& model,
                                         const ConditionParams& params) {
  return evaluate(model, params, false);
}

ConditionReport check_raz_implies_GH(const NonlinearityModel& model, const ConditionParams& params) {
  const ConditionReport decided = check_conditions(model, params);
  ConditionReport out;
  out.entries.push_back(*decided.find(cond::raz));
  if (!decided.passes(cond::raz)) {
    out.note = "raz fails";
    return out;
  }
  const ConditionReport sampled = check_conditions_sampled(model, params);
  for (const char* name : {cond::G1, cond::H1}) out.entries.push_back(*sampled.find(name));
  const bool ok = sampled.passes(cond::G1) && sampled.passes(cond::H1);
  out.note = ok ? "raz holds; G1 and H1 verified on samples"
                : "counterexample: raz holds but G1/H1 not verified on samples";
  return out;
}

std::string to_string(RegimeLabel r) {
  switch (r) {
    case RegimeLabel::FiniteTimeBlowupRegime: return "FiniteTimeBlowupRegime";
    case RegimeLabel::InfiniteTimeBlowupRegime: return "InfiniteTimeBlowupRegime";
    case RegimeLabel::GlobalExistenceRegime: return "GlobalExistenceRegime";
    case RegimeLabel::Unknown: return "Unknown";
  }
  return "?";
}

RegimeLabel classify_regime(const ConditionReport& r, int dimension) {
  const bool g1 = r.passes(cond::G1);
  const bool h1 = r.passes(cond::H1);
  const bool psi = r.passes(cond::psi);
  const bool psi_fails = r.status(cond::psi) == ConditionStatus::Fail;
  const bool bal = r.passes(cond::balance);
  const bool pb = r.passes(cond::phibeta);
  if (g1 && h1 && psi) return RegimeLabel::FiniteTimeBlowupRegime;
  if (dimension == 2 && bal && pb && g1 && h1 && psi_fails)
    return RegimeLabel::InfiniteTimeBlowupRegime;
  if (bal && pb) return RegimeLabel::GlobalExistenceRegime;
  return RegimeLabel::Unknown;
}

}  // namespace ksblow
