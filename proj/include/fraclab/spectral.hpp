#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fraclab/manifold.hpp"

namespace fraclab {

// Full eigendecomposition of the Laplacian in the mass inner product. In
// closed mode there are n modes; in Dirichlet mode one mode per interior
// vertex, and eigenvector rows at boundary vertices are identically zero so
// every vector here lives in ambient coordinates.
//
// Deterministic orientation: each eigenvector is scaled so its first
// significant entry (first |phi_i| > 1e-8 * max|phi|) is positive, and within
// a numerically degenerate cluster columns are ordered by the index of that
// entry. Repeated runs on the same manifold are bitwise identical.
struct SpectralDecomposition {
  Vec eigenvalues;   // ascending
  Mat eigenvectors;  // n x K, mass-orthonormal columns
  Vec mass;          // vertex masses, kept so calculus needs no manifold
  bool dirichlet = false;
  double residual = 0.0;  // max_k ||L phi_k - lambda_k phi_k||_m
  std::string label;

  int dim() const { return static_cast<int>(eigenvectors.rows()); }
  int modes() const { return static_cast<int>(eigenvalues.size()); }

  double coeff(const Vec& f, int k) const;  // (f, phi_k)_m
  Vec coeffs(const Vec& f) const;
  Vec dot_mass(const Vec& f) const { return mass.asDiagonal() * f; }

  // Eigenvalues below this are treated as the kernel of the operator.
  double zero_threshold() const;
};

// Contiguous run of numerically equal eigenvalues.
struct EigenGroup {
  int first = 0;
  int count = 0;
  double value = 0.0;  // mean of the run
};

SpectralDecomposition decompose(const DiscreteManifold& m);

// sum_k fn(lambda_k) (f,phi_k)_m phi_k. If fn(lambda_k) is not finite the
// mode is skipped when |(f,phi_k)_m| <= 1e-10 ||f||_m and rejected otherwise.
Vec apply_function(const SpectralDecomposition& d, const std::function<double(double)>& fn,
                   const Vec& f);

// Partition into clusters: adjacent eigenvalues are merged when their gap is
// <= tol * max(1, lambda). Throws (listing the offenders) when chained merges
// produce a cluster wider than the tolerance, since then no grouping at this
// tolerance is meaningful.
std::vector<EigenGroup> group_eigenvalues(const SpectralDecomposition& d, double tol);

// Spectral projector kernel on a region: K(x,y) = sum_{k in grp} phi_k(x) phi_k(y),
// x, y in o. Basis-independent within the group, symmetric, PSD.
Mat projector_kernel(const SpectralDecomposition& d, const EigenGroup& grp, const Region& o);

// CSV export: index, eigenvalue, group_id, multiplicity.
void write_spectrum_csv(const std::string& path, const SpectralDecomposition& d, double group_tol);

// Heat samples restricted to a fixed vertex set, with the mode coefficients
// of the source precomputed. eval(t) equals (e^{-tL} f) at those vertices;
// quadrature loops lean on this instead of resynthesizing full vectors.
class HeatSampler {
 public:
  HeatSampler(const SpectralDecomposition& d, const std::vector<int>& verts, const Vec& f);

  Vec eval(double t) const;              // length |verts|
  const Vec& coefficients() const { return c_; }
  double source_norm() const { return norm_f_; }

 private:
  Vec lambda_;
  Vec c_;
  Mat rows_;  // |verts| x K eigenvector slice
  double norm_f_ = 0.0;
};

}  // namespace fraclab
