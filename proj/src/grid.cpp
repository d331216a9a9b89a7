#include "ksblow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ksblow/errors.hpp"

namespace ksblow {

RadialMesh::RadialMesh(double R, int N) : R_(R), N_(N) {
  if (!(R > 0.0) || !std::isfinite(R)) throw DomainError("mesh: R must be positive");
  if (N < 2) throw DomainError("mesh: N must be >= 2");
  dr_ = R / N;
  volumes_.resize(N);
  face_weights_.resize(N + 1);
  const double pi = std::numbers::pi;
  for (int i = 0; i < N; ++i) {
    // (i+1)^2 - i^2 = 2i+1, so the annulus areas telescope to pi R^2 exactly
    // up to the rounding of dr^2.
    volumes_[i] = pi * (2.0 * i + 1.0) * dr_ * dr_;
  }
  for (int k = 0; k <= N; ++k) face_weights_[k] = 2.0 * pi * face(k) * dr_;
}

RadialField::RadialField(MeshPtr m, std::vector<double> v) : mesh(std::move(m)), values(std::move(v)) {
  if (static_cast<int>(values.size()) != mesh->N())
    throw DomainError("field length does not match mesh");
}

bool RadialField::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

void require_same_mesh(const RadialField& a, const RadialField& b) {
  if (!a.mesh || !b.mesh || !a.mesh->same_as(*b.mesh))
    throw DomainError("fields live on different meshes");
}

double integrate(const RadialField& f) {
  const auto w = f.mesh->volumes();
  double s = 0.0;
  for (int i = 0; i < f.size(); ++i) s += w[i] * f.values[i];
  return s;
}

double inner(const RadialField& f, const RadialField& g) {
  require_same_mesh(f, g);
  const auto w = f.mesh->volumes();
  double s = 0.0;
  for (int i = 0; i < f.size(); ++i) s += w[i] * f.values[i] * g.values[i];
  return s;
}

std::vector<double> grad_faces(const RadialField& f) {
  const int N = f.size();
  const double inv = 1.0 / f.mesh->dr();
  std::vector<double> g(N + 1, 0.0);
  for (int k = 1; k < N; ++k) g[k] = (f.values[k] - f.values[k - 1]) * inv;
  return g;
}

Norms norms(const RadialField& f) {
  const auto w = f.mesh->volumes();
  Norms n;
  double sq = 0.0;
  for (int i = 0; i < f.size(); ++i) {
    const double a = std::abs(f.values[i]);
    n.l1 += w[i] * a;
    sq += w[i] * a * a;
    n.linf = std::max(n.linf, a);
  }
  n.l2 = std::sqrt(sq);
  return n;
}

double gradient_energy(const RadialField& f) {
  const auto g = grad_faces(f);
  const auto wf = f.mesh->face_weights();
  double s = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) s += wf[k] * g[k] * g[k];
  return s;
}

double w12_norm(const RadialField& f) {
  const double l2 = norms(f).l2;
  return std::sqrt(l2 * l2 + gradient_energy(f));
}

std::vector<double> laplacian(const RadialField& f) {
  const int N = f.size();
  const auto& m = *f.mesh;
  const auto w = m.volumes();
  const auto wf = m.face_weights();
  const double inv = 1.0 / m.dr();
  std::vector<double> out(N);
  // (1/w_i) [w~_{i+1} g_{i+1} - w~_i g_i] / dr with zero end fluxes.
  for (int i = 0; i < N; ++i) {
    const double right = (i + 1 < N) ? wf[i + 1] * (f.values[i + 1] - f.values[i]) * inv : 0.0;
    const double left = (i > 0) ? wf[i] * (f.values[i] - f.values[i - 1]) * inv : 0.0;
    out[i] = (right - left) * inv / w[i];
  }
  return out;
}

double max_value(std::span<const double> v) { return *std::max_element(v.begin(), v.end()); }
double min_value(std::span<const double> v) { return *std::min_element(v.begin(), v.end()); }

}  // namespace ksblow
