#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fraclab/manifold.hpp"
#include "fraclab/spectral.hpp"

namespace fraclab {

// Heat measurements on a uniform time grid: for each source, the solution
// values at every observation vertex and every sample time. This is the only
// input the recovery stage sees; it carries the observation masses and the
// restricted sources along so recovery never touches the manifold.
struct HeatTraceSet {
  double t0 = 0.0, dt = 0.0;
  int steps = 0;
  std::vector<int> obs_vertices;
  Vec obs_mass;                 // masses at those vertices
  std::vector<Mat> values;      // per source: |obs| x steps
  Mat sources_on_obs;           // |obs| x n_sources, chi_obs f for each source
  bool sources_within_obs = false;
  std::vector<double> times() const;
  int n_sources() const { return static_cast<int>(values.size()); }
};

// Samples e^{-tL} f on the grid t0 + j dt, j = 0..steps-1 for every column
// of the source basis.
HeatTraceSet sample_traces(const SpectralDecomposition& d, const Mat& source_basis,
                           const Region& obs, double t0, double dt, int steps);

void write_traces_csv(const std::string& path, const HeatTraceSet& traces);

// Matrix-pencil estimate of the decay rates in the traces. All channels
// (source x observation vertex) are aggregated with deterministic positive
// weights drawn from the seed, a Hankel matrix is formed and truncated to
// rank r, and the shifted pencil's eigenvalues z give rates -log(z)/dt.
// Preconditions: 2r <= steps - 1. A singular-value collapse below 1e-13 of
// the top value means the data does not support r modes and throws, quoting
// the profile. Rates beyond exp(-35) damping over the observed window are
// discarded as unresolvable.
struct PencilResult {
  std::vector<double> lambda;       // ascending
  std::vector<double> singular_values;
  std::vector<double> rejected;     // rates dropped by the damping cut
};
PencilResult pencil_eigenvalues(const HeatTraceSet& traces, int r, std::uint64_t seed);

// Least-squares amplitude extraction at fixed rates: fit each trace channel
// to sum_k a_k e^{-lambda_k t}, then assemble per-rate kernels
// K_k(x,y) on the observation set from a_k(source, x) = (K_k M f_source)(x).
// The Vandermonde system is refused above condition 1e10.
struct RecoveredMode {
  double lambda = 0.0;
  int multiplicity = 0;
  Mat kernel;            // |obs| x |obs|, symmetric PSD (up to tolerance)
  double fit_residual = 0.0;
};
std::vector<RecoveredMode> recover_projectors(const HeatTraceSet& traces,
                                              const std::vector<double>& lambda);

// Rank factor K = F F^T with F = U sqrt(S) on the kept eigenpairs.
Mat kernel_factor(const Mat& kernel, double rel_cut = 1e-6);

// Best orthogonal alignment X = argmin ||F1 - F2 X||_F via the SVD of
// F2^T F1; returns X and the aligned distance ||F1 - F2 X||_F.
struct Alignment {
  Mat rotation;
  double distance = 0.0;
};
Alignment align_procrustes(const Mat& f1, const Mat& f2);

// Greedy matching of two recovered spectra within tol * max(1, lambda).
// kernel_dist is the Frobenius gap after Procrustes alignment of the kernel
// factors (the kernels act on the same observation set).
struct SpectrumMatch {
  double lambda_1 = 0.0, lambda_2 = 0.0;
  bool matched = false;
  bool mult_ok = false;
  double kernel_dist = 0.0;
};
std::vector<SpectrumMatch> compare_spectra(const std::vector<RecoveredMode>& a,
                                           const std::vector<RecoveredMode>& b, double tol);
void write_recovered_csv(const std::string& path, const std::vector<RecoveredMode>& modes);
void write_verdicts_csv(const std::string& path, const std::vector<SpectrumMatch>& rows);

}  // namespace fraclab
