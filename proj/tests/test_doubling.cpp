#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fraclab/fractional.hpp"
#include "fraclab/manifold.hpp"
#include "fraclab/spectral.hpp"

using namespace fraclab;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Dirichlet rates of a unit-spacing path with n interior vertices.
std::vector<double> path_rates(int n) {
  std::vector<double> lam(n);
  for (int k = 1; k <= n; ++k) {
    const double s = std::sin(k * kPi / (2.0 * (n + 1)));
    lam[k - 1] = 4.0 * s * s;
  }
  return lam;
}

// Rates of a unit-spacing cycle on n vertices, sorted ascending.
std::vector<double> cycle_rates(int n) {
  std::vector<double> lam(n);
  for (int j = 0; j < n; ++j) {
    const double s = std::sin(j * kPi / n);
    lam[j] = 4.0 * s * s;
  }
  std::sort(lam.begin(), lam.end());
  return lam;
}

}  // namespace

TEST_SUITE("doubling") {

TEST_CASE("path rates match the closed form") {
  const SpectralDecomposition d = decompose(build_path_dirichlet(6));
  const std::vector<double> truth = path_rates(6);
  REQUIRE(d.modes() == 6);
  for (int k = 0; k < 6; ++k) {
    CHECK(std::abs(d.eigenvalues[k] - truth[k]) <= 1e-10);
  }
}

TEST_CASE("path rates appear in the spectrum of the double") {
  // Odd extensions of the Dirichlet modes vanish at the seam, so the seam
  // weights drop out and every path rate survives doubling exactly. The even
  // sector feels the doubled seam mass, so the full spectra need not agree
  // and only containment is asserted.
  const DoubleManifold dbl = double_manifold(build_path_dirichlet(6));
  REQUIRE(dbl.doubled.n() == 14);
  REQUIRE(dbl.doubled.closed());

  const SpectralDecomposition d = decompose(dbl.doubled);
  REQUIRE(d.modes() == 14);
  const std::vector<double> cyc = cycle_rates(14);
  for (double lam : path_rates(6)) {
    double gap_dbl = 1e300;
    for (int j = 0; j < d.modes(); ++j) {
      gap_dbl = std::min(gap_dbl, std::abs(lam - d.eigenvalues[j]));
    }
    CHECK(gap_dbl <= 1e-10);

    double gap_cyc = 1e300;
    for (double mu : cyc) gap_cyc = std::min(gap_cyc, std::abs(lam - mu));
    CHECK(gap_cyc <= 1e-10);
  }
}

TEST_CASE("odd extensions of path modes are modes of the double") {
  const DiscreteManifold m = build_path_dirichlet(6);
  const DoubleManifold dbl = double_manifold(m);
  const SpectralDecomposition dp = decompose(m);
  const SpectralDecomposition dd = decompose(dbl.doubled);

  for (int k = 0; k < dp.modes(); ++k) {
    const double lam = dp.eigenvalues[k];
    const Vec psi = dbl.odd_extension(dp.eigenvectors.col(k));
    const Vec resid = dbl.doubled.apply_stiffness(psi) - lam * psi;
    CHECK(norm_m(dbl.doubled, resid) <= 1e-10 * norm_m(dbl.doubled, psi));

    double gap = 1e300;
    for (int j = 0; j < dd.modes(); ++j) gap = std::min(gap, std::abs(lam - dd.eigenvalues[j]));
    CHECK(gap <= 1e-10);
  }
}

TEST_CASE("odd extensions carry no mean component") {
  const DiscreteManifold m = build_path_dirichlet(6);
  const DoubleManifold dbl = double_manifold(m);
  Vec f = Vec::Zero(m.n());
  f[2] = 1.0;
  f[3] = 2.0;
  f[4] = -1.0;
  const Vec big = dbl.odd_extension(f);
  CHECK(std::abs(dbl.doubled.mass.dot(big)) <= 1e-14 * norm_m(dbl.doubled, big));
}

TEST_CASE("inverse fractional powers commute with odd doubling") {
  const DiscreteManifold m = build_path_dirichlet(6);
  const DoubleManifold dbl = double_manifold(m);
  const SpectralDecomposition dp = decompose(m);
  const SpectralDecomposition dd = decompose(dbl.doubled);

  Vec f = Vec::Zero(m.n());
  f[2] = 1.0;
  f[3] = 2.0;
  f[4] = -1.0;

  for (double alpha : {0.25, 0.5, 0.75}) {
    FracParams p;
    p.alpha = alpha;
    p.tolerance = 1e-10;
    const Vec lhs = frac_inverse_spectral(dp, p, f);
    const Vec rhs = dbl.restrict_plus(frac_inverse_spectral(dd, p, dbl.odd_extension(f)));
    REQUIRE(rhs.size() == lhs.size());
    CHECK(norm_m(m, Vec(lhs - rhs)) <= 1e-9 * norm_m(m, lhs));
  }
}

TEST_CASE("an even extension breaks the identity") {
  const DiscreteManifold m = build_path_dirichlet(6);
  const DoubleManifold dbl = double_manifold(m);
  const SpectralDecomposition dp = decompose(m);
  const SpectralDecomposition dd = decompose(dbl.doubled);

  Vec f = Vec::Zero(m.n());
  f[2] = 1.0;
  f[3] = 2.0;
  f[4] = -1.0;

  // Copy f with the same sign on both sides, then remove the mean so the
  // inverse power is defined. The result no longer restricts to the
  // Dirichlet solution.
  Vec even = dbl.odd_extension(f);
  for (int v = 0; v < m.n(); ++v) {
    if (m.is_boundary(v)) continue;
    even[dbl.embed_minus[v]] = f[v];
  }
  const double mean = dbl.doubled.mass.dot(even) / dbl.doubled.mass.sum();
  even.array() -= mean;

  FracParams p;
  p.alpha = 0.5;
  p.tolerance = 1e-10;
  const Vec lhs = frac_inverse_spectral(dp, p, f);
  const Vec rhs = dbl.restrict_plus(frac_inverse_spectral(dd, p, even));
  CHECK(norm_m(m, Vec(lhs - rhs)) >= 1e-2 * norm_m(m, lhs));
}

}  // TEST_SUITE
