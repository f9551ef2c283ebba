#pragma once

#include <string>
#include <vector>

#include "fraclab/fractional.hpp"
#include "fraclab/pair.hpp"

namespace fraclab {

// Families of admissible sources supported on a region, stored as full-length
// column vectors.
//   D0:      coordinate basis of the region, one column per vertex.
//   Dtilde0: columns L e_v for v one layer inside the region; each column is
//            mean-zero and still supported in the region.
//   Nell:    sources in the region orthogonal (in the mass pairing, through
//            the patch map for the second manifold) to the first l+1
//            eigenfunctions of both manifolds.
enum class SourceKind { D0, Dtilde0, Nell };

struct SourceSpace {
  SourceKind kind = SourceKind::D0;
  Region region;
  Mat basis;  // n x dim, full-length columns
  int dim() const { return static_cast<int>(basis.cols()); }
};

SourceSpace build_source_space(const DiscreteManifold& m, const Region& region, SourceKind kind);

// The Nell family for a pair; region must sit inside the shared patch. ell+1
// eigenfunctions of each manifold contribute one constraint vector each;
// near-parallel constraints collapse (threshold 1e-8 on singular values), and
// an empty result throws.
SourceSpace build_source_space_nell(const ManifoldPair& pair, const Region& region, int ell);

// T_ell f = prod_{k=0..ell} (A_1 - lambda_k(1)) (A_2 - lambda_k(2)) f, applied
// in manifold-1 coordinates: inside the patch both stencils agree, so each
// factor is one stiffness application and a shift. Requires support margin
// 2(ell+1) inside the patch. The result is orthogonal to the annihilated
// eigenfunctions of both manifolds.
Vec apply_T_ell(const ManifoldPair& pair, int ell, const Vec& f);

// chi_region L^{-alpha} f, the measurement map of one manifold.
Vec source_to_solution(const SpectralDecomposition& d, const FracParams& p, const Region& region,
                       const Vec& f);

// Per-basis-column comparison of the two measurement maps of a pair over the
// observation set. rel_discrepancy = ||S1 f - S2 f||_m(obs) / ||f||_m.
struct S2sRow {
  int basis_id = 0;
  double norm_f = 0.0, norm_s1 = 0.0, norm_s2 = 0.0, rel_discrepancy = 0.0;
};
std::vector<S2sRow> compare_s2s(const ManifoldPair& pair, const SourceSpace& space,
                                const FracParams& p);
void write_s2s_csv(const std::string& path, const std::vector<S2sRow>& rows);

// One step of the factor-peeling chain. With h the current vector and
// (j, lambda) the factor being removed, the integral route
//   chi_O e^{-tA_j} h_next = e^{-t lambda} [ chi_O h_next
//       - \int_0^t e^{s lambda} chi_O e^{-sA_j} h ds ]
// must agree with direct evaluation, and the restricted heat flows of the two
// manifolds must agree before and after the step.
struct PeelStep {
  int index = 0;          // position in the factor list
  int manifold = 1;       // which A the factor shifts by
  double lambda = 0.0;    // the shift
  double pre_equal = 0.0;   // max_t rel. heat difference before peeling
  double quad_route = 0.0;  // worst rel. gap integral-vs-direct, both manifolds
  double post_equal = 0.0;  // same after peeling
  bool pass = false;
};
std::vector<PeelStep> peel_chain(const ManifoldPair& pair, int ell, const Vec& f,
                                 const std::vector<double>& t_check, double tol);

}  // namespace fraclab
