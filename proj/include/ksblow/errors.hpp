#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ksblow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adaptive quadrature failed to reach tolerance on [a, b].
class QuadratureError : public Error {
 public:
  QuadratureError(double a, double b, const std::string& what)
      : Error(what), a_(a), b_(b) {}
  double a() const { return a_; }
  double b() const { return b_; }

 private:
  double a_;
  double b_;
};

/// A user-supplied nonlinearity returned a non-finite or non-positive value.
class EvaluationError : public Error {
 public:
  EvaluationError(double s, const std::string& what) : Error(what), s_(s) {}
  double s() const { return s_; }

 private:
  double s_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// The requested concentration cannot be represented on the mesh.
class ResolutionError : public Error {
 public:
  ResolutionError(double smallest_eta, double F_at_smallest, const std::string& what)
      : Error(what), smallest_eta_(smallest_eta), F_at_smallest_(F_at_smallest) {}
  double smallest_eta() const { return smallest_eta_; }
  double F_at_smallest() const { return F_at_smallest_; }

 private:
  double smallest_eta_;
  double F_at_smallest_;
};

/// Validation failures, one message per offending field path.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : Error(join(issues)), issues_(std::move(issues)) {}
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid configuration:";
    for (const auto& s : v) out += "\n  " + s;
    return out;
  }
  std::vector<std::string> issues_;
};

}  // namespace ksblow
