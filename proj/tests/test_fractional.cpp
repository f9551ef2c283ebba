#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "fraclab/fractional.hpp"
#include "fraclab/manifold.hpp"
#include "fraclab/pair.hpp"
#include "fraclab/quadrature.hpp"
#include "fraclab/rng.hpp"
#include "fraclab/spectral.hpp"

using namespace fraclab;

namespace {

int gid(int nx, int ix, int iy) { return iy * nx + ix; }

std::vector<int> block(int nx, int ix0, int ix1, int iy0, int iy1) {
  std::vector<int> out;
  for (int iy = iy0; iy <= iy1; ++iy) {
    for (int ix = ix0; ix <= ix1; ++ix) out.push_back(gid(nx, ix, iy));
  }
  return out;
}

Vec random_mean_zero(const DiscreteManifold& m, std::uint64_t seed) {
  Rng rng(seed);
  Vec f(m.n());
  for (int i = 0; i < m.n(); ++i) f[i] = rng.normal();
  f.array() -= m.mass.dot(f) / m.mass.sum();
  return f;
}

// The canonical non-isometric pair used across these tests: two tori of equal
// spacing and different extent, identified on a patch with the same vertex
// ids, observed on an interior block.
ManifoldPair canonical_pair() {
  const DiscreteManifold m1 = build_flat_torus(10, 10, 1.0, 1.0);
  const DiscreteManifold m2 = build_flat_torus(10, 14, 1.0, 1.0);
  const std::vector<int> patch = block(10, 0, 8, 0, 8);
  return ManifoldPair::make(m1, m2, patch, patch, block(10, 3, 5, 3, 5));
}

ManifoldPair self_pair() {
  const DiscreteManifold m1 = build_flat_torus(10, 10, 1.0, 1.0);
  const std::vector<int> patch = block(10, 0, 8, 0, 8);
  return ManifoldPair::make(m1, m1, patch, patch, block(10, 3, 5, 3, 5));
}

// Mean-zero source supported three rings inside the patch.
Vec deep_source(const DiscreteManifold& m1) {
  Vec g = Vec::Zero(m1.n());
  g[gid(10, 4, 4)] = 1.0;
  return m1.apply_stiffness(g);
}

}  // namespace

TEST_SUITE("quadrature") {

TEST_CASE("trapezoid refinement converges on a decaying integrand") {
  const VecFn g = [](double s) {
    Vec v(1);
    v[0] = std::exp(-s * s);
    return v;
  };
  // int_{-6}^{6} e^{-s^2} ds = sqrt(pi) to machine accuracy at this width.
  const QuadResult q = trapezoid_refine(g, -6.0, 6.0, 1.0, 1e-12);
  CHECK(q.converged);
  CHECK(std::abs(q.value[0] - std::sqrt(3.14159265358979323846)) <= 1e-12);
  REQUIRE(q.levels.size() >= 2);
  CHECK(q.levels[1].h == doctest::Approx(q.levels[0].h / 2).epsilon(1e-15));
  CHECK(q.levels.back().delta <= 1e-12);
}

TEST_CASE("relative-test refinement scales with the integrand") {
  const VecFn g = [](double s) {
    Vec v(1);
    v[0] = 1e12 * std::exp(-s * s);
    return v;
  };
  const QuadResult q = trapezoid_refine_rel(g, -6.0, 6.0, 1.0, 1e-10, 0.0);
  CHECK(q.converged);
  CHECK(std::abs(q.value[0] / 1e12 - std::sqrt(3.14159265358979323846)) <= 1e-9);
}

TEST_CASE("romberg nails smooth polynomials") {
  const VecFn g = [](double s) {
    Vec v(1);
    v[0] = s * s * s;
    return v;
  };
  const QuadResult q = romberg_refine(g, 0.0, 1.0, 1e-13);
  CHECK(q.converged);
  CHECK(std::abs(q.value[0] - 0.25) <= 1e-13);
}

TEST_CASE("gauss-legendre rule integrates high-degree polynomials exactly") {
  const GaussRule& rule = gauss_legendre_24();
  REQUIRE(rule.x.size() == 24);
  double sum = 0.0;
  for (size_t i = 0; i < rule.x.size(); ++i) sum += rule.w[i] * std::pow(rule.x[i], 11.0);
  CHECK(std::abs(sum - 1.0 / 12.0) <= 1e-14);  // int_0^1 x^11 dx
}

}  // TEST_SUITE

TEST_SUITE("fractional") {

TEST_CASE("heat flow basics") {
  const DiscreteManifold m = build_cycle(8);
  const SpectralDecomposition d = decompose(m);
  const Vec f = random_mean_zero(m, 1);
  CHECK((heat_apply(d, 0.0, f) - f).cwiseAbs().maxCoeff() <= 1e-12);

  const Vec phi = d.eigenvectors.col(3);
  const double lam = d.eigenvalues[3];
  CHECK(norm_m(m, heat_apply(d, 0.7, phi) - std::exp(-0.7 * lam) * phi) <= 1e-12);

  CHECK_THROWS_AS(heat_apply(d, -0.1, f), std::invalid_argument);
}

TEST_CASE("spectral inverse power inverts eigenvalues and composes") {
  const DiscreteManifold m = build_cycle(8);
  const SpectralDecomposition d = decompose(m);
  FracParams p;
  p.alpha = 0.5;

  const Vec phi = d.eigenvectors.col(5);
  const double lam = d.eigenvalues[5];
  CHECK(norm_m(m, frac_inverse_spectral(d, p, phi) - std::pow(lam, -0.5) * phi) <= 1e-12);

  const Vec f = random_mean_zero(m, 2);
  for (double a : {0.25, 0.5, 0.75}) {
    FracParams pa;
    pa.alpha = a;
    const Vec round = frac_power(d, pa, frac_inverse_spectral(d, pa, f));
    CHECK(norm_m(m, round - f) <= 1e-9 * norm_m(m, f));
  }

  // The constant direction cannot be inverted on a closed manifold.
  CHECK_THROWS_AS(frac_inverse_spectral(d, p, Vec::Ones(8)), std::invalid_argument);
}

TEST_CASE("scalar subordination integral reproduces the gamma identity") {
  // For a single mode at lambda = 1, (1/Gamma(1/2)) int t^{-1/2} e^{-t} dt = 1.
  const VecFn heat = [](double t) {
    Vec v(1);
    v[0] = std::exp(-t);
    return v;
  };
  FracParams p;
  p.alpha = 0.5;
  p.tolerance = 1e-10;
  const Vec u = frac_inverse_quadrature(heat, p, 1.0, 1.0);
  CHECK(std::abs(u[0] - 1.0) <= 1e-8);
}

TEST_CASE("quadrature route matches the spectral route") {
  const DiscreteManifold m6 = build_cycle(6);
  const SpectralDecomposition d6 = decompose(m6);
  FracParams p;
  p.alpha = 0.5;
  p.tolerance = 1e-9;
  // lambda_1 = 1 makes the fractional inverse the identity on that mode.
  const Vec phi1 = d6.eigenvectors.col(1);
  CHECK(norm_m(m6, frac_inverse_quadrature(d6, p, phi1) - phi1) <= 1e-8);

  const DiscreteManifold m = build_flat_torus(8, 8, 1.0, 1.0);
  const SpectralDecomposition d = decompose(m);
  for (double a : {0.25, 0.75}) {
    FracParams pa;
    pa.alpha = a;
    pa.tolerance = 1e-9;
    const Vec f = random_mean_zero(m, 17 + static_cast<int>(100 * a));
    std::vector<QuadLevel> diag;
    const Vec uq = frac_inverse_quadrature(d, pa, f, &diag);
    const Vec us = frac_inverse_spectral(d, pa, f);
    CHECK(norm_m(m, uq - us) <= 1e-8 * norm_m(m, us));
    CHECK(diag.size() >= 2);  // refinement history is reported
  }
}

TEST_CASE("quadrature rejects kernel components and degenerate windows") {
  const DiscreteManifold m = build_cycle(6);
  const SpectralDecomposition d = decompose(m);
  FracParams p;
  CHECK_THROWS_AS(frac_inverse_quadrature(d, p, Vec::Ones(6)), std::invalid_argument);

  const VecFn heat = [](double t) {
    Vec v(1);
    v[0] = std::exp(-t);
    return v;
  };
  CHECK_THROWS_AS(frac_inverse_quadrature(heat, p, 0.0, 1.0), std::invalid_argument);
  FracParams bad;
  bad.alpha = 1.5;
  CHECK_THROWS_AS(frac_inverse_quadrature(heat, bad, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("fractional power tends to the operator as alpha tends to one") {
  const DiscreteManifold m = build_cycle(6);
  const SpectralDecomposition d = decompose(m);
  FracParams p;
  p.alpha = 0.999;
  const Vec f = random_mean_zero(m, 3);
  const Vec a = frac_power(d, p, f);
  const Vec b = m.apply_stiffness(f);
  CHECK(norm_m(m, a - b) <= 0.01 * norm_m(m, b));

  const Vec phi = d.eigenvectors.col(4);
  FracParams ph;
  ph.alpha = 0.3;
  CHECK(norm_m(m, frac_power(d, ph, phi) - std::pow(d.eigenvalues[4], 0.3) * phi) <= 1e-12);
}

TEST_CASE("heat decay fit finds positive exponents that grow with distance") {
  const DiscreteManifold m = build_flat_torus(12, 12, 1.0, 1.0);
  const SpectralDecomposition d = decompose(m);
  Vec f = Vec::Zero(m.n());
  f[gid(12, 0, 0)] = 1.0;

  std::vector<double> ts;
  for (int i = 0; i < 16; ++i) ts.push_back(0.05 * std::pow(20.0, i / 15.0));
  const WdgFit near = wdg_fit(d, Region::make(m, {gid(12, 3, 0)}), f, ts);
  const WdgFit far = wdg_fit(d, Region::make(m, {gid(12, 6, 0)}), f, ts);
  CHECK(near.mu > 0.0);
  CHECK(far.mu > near.mu);
  CHECK(near.n_used >= 8);

  // Overlapping source and observation leave nothing to fit.
  const Region at_source = Region::make(m, {gid(12, 0, 0)});
  CHECK_THROWS_AS(wdg_fit(d, at_source, f, ts), std::invalid_argument);
}

TEST_CASE("derivative identity: exact zero on the self pair") {
  const ManifoldPair same = self_pair();
  const Vec f = deep_source(same.m1);
  for (int k : {1, 2, 3}) {
    FracParams p;
    p.alpha = 0.5;
    p.tolerance = 1e-7;
    const Lemma1Result r = lemma1_moment(same, f, k, p);
    CHECK(r.rel_err <= 1e-12);
    CHECK(r.lhs_norm <= 1e-14);
  }
}

TEST_CASE("derivative identity: both routes agree on the true pair") {
  const ManifoldPair pair = canonical_pair();
  const Vec f = deep_source(pair.m1);
  for (int k : {1, 2}) {
    FracParams p;
    p.alpha = 0.5;
    p.tolerance = 1e-7;
    const Lemma1Result r = lemma1_moment(pair, f, k, p);
    CHECK(r.lhs_norm > 1e-9);  // the pair is genuinely different
    CHECK(r.rel_err <= 1e-5);
  }
}

TEST_CASE("difference moments vanish for the relabeled pair and scale linearly") {
  const DiscreteManifold m1 = build_flat_torus(10, 10, 1.0, 1.0);
  Rng rng(21);
  const std::vector<int> perm = rng.permutation(m1.n());
  const DiscreteManifold m2 = relabel_vertices(m1, perm);
  const std::vector<int> patch = block(10, 0, 8, 0, 8);
  std::vector<int> image;
  for (int v : patch) image.push_back(perm[v]);
  const ManifoldPair iso = ManifoldPair::make(m1, m2, patch, image, block(10, 3, 5, 3, 5));

  FracParams p;
  p.alpha = 0.5;
  p.tolerance = 1e-9;
  const Vec f = deep_source(m1);
  const MomentResult zero = prop1_moments(iso, f, 4, p);
  for (double mn : zero.moment_norm) CHECK(mn <= 1e-9);

  const ManifoldPair pair = canonical_pair();
  const MomentResult one = prop1_moments(pair, f, 2, p);
  const MomentResult twice = prop1_moments(pair, 2.0 * f, 2, p);
  REQUIRE(one.moment_norm.size() == 3);
  CHECK(one.moment_norm[0] > 1e-8);  // visible difference
  for (size_t k = 0; k < one.moment_norm.size(); ++k) {
    // The input is normalized internally, so the reported norms agree.
    CHECK(std::abs(twice.moment_norm[k] - one.moment_norm[k]) <=
          1e-8 + 1e-6 * one.moment_norm[k]);
  }
}

}  // TEST_SUITE
