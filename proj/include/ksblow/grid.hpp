#pragma once

#include <memory>
#include <span>
#include <vector>

namespace ksblow {

/// Uniform cell-centred mesh on (0, R) for radial fields in the disk B_R.
///
/// Cell i covers the annulus [i dr, (i+1) dr]; face k sits at radius k dr,
/// k = 0..N (face 0 is the origin, face N the outer boundary). There is no
/// node at r = 0.
class RadialMesh {
 public:
  RadialMesh(double R, int N);

  double R() const { return R_; }
  int N() const { return N_; }
  double dr() const { return dr_; }
  double center(int i) const { return (i + 0.5) * dr_; }
  double face(int k) const { return k * dr_; }
  /// Annulus area pi (r_{i+1/2}^2 - r_{i-1/2}^2).
  double volume(int i) const { return volumes_[i]; }
  /// 2 pi r_f dr; weights face-centred quantities such as |grad v|^2.
  double face_weight(int k) const { return face_weights_[k]; }
  std::span<const double> volumes() const { return volumes_; }
  std::span<const double> face_weights() const { return face_weights_; }

  bool same_as(const RadialMesh& other) const { return R_ == other.R_ && N_ == other.N_; }

 private:
  double R_;
  int N_;
  double dr_;
  std::vector<double> volumes_;
  std::vector<double> face_weights_;
};

using MeshPtr = std::shared_ptr<const RadialMesh>;

inline MeshPtr make_mesh(double R, int N) { return std::make_shared<const RadialMesh>(R, N); }

/// Cell averages on a mesh.
struct RadialField {
  MeshPtr mesh;
  std::vector<double> values;

  RadialField() = default;
  explicit RadialField(MeshPtr m, double fill = 0.0)
      : mesh(std::move(m)), values(mesh->N(), fill) {}
  RadialField(MeshPtr m, std::vector<double> v);

  int size() const { return static_cast<int>(values.size()); }
  double operator[](int i) const { return values[i]; }
  double& operator[](int i) { return values[i]; }
  bool all_finite() const;
};

struct Norms {
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
};

/// Sum of w_i values_i.
double integrate(const RadialField& f);
/// Weighted inner product sum w_i f_i g_i.
double inner(const RadialField& f, const RadialField& g);
/// N+1 face values: (f_{i+1} - f_i)/dr inside, 0 at r = 0 and r = R.
std::vector<double> grad_faces(const RadialField& f);
Norms norms(const RadialField& f);
/// Discrete Dirichlet energy sum_faces w~_k g_k^2.
double gradient_energy(const RadialField& f);
/// (l2^2 + gradient_energy)^(1/2).
double w12_norm(const RadialField& f);
/// Conservative five-point radial Laplacian with zero boundary fluxes.
std::vector<double> laplacian(const RadialField& f);

double max_value(std::span<const double> v);
double min_value(std::span<const double> v);

void require_same_mesh(const RadialField& a, const RadialField& b);

}  // namespace ksblow
