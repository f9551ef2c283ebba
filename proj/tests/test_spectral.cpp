#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "fraclab/manifold.hpp"
#include "fraclab/rng.hpp"
#include "fraclab/spectral.hpp"

using namespace fraclab;

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec random_vec(int n, std::uint64_t seed) {
  Rng rng(seed);
  Vec f(n);
  for (int i = 0; i < n; ++i) f[i] = rng.normal();
  return f;
}

std::vector<double> sorted_torus_spectrum(int nx, int ny, double hx, double hy) {
  std::vector<double> lam;
  for (int j = 0; j < nx; ++j) {
    for (int k = 0; k < ny; ++k) {
      const double sx = std::sin(kPi * j / nx);
      const double sy = std::sin(kPi * k / ny);
      lam.push_back(4.0 * sx * sx / (hx * hx) + 4.0 * sy * sy / (hy * hy));
    }
  }
  std::sort(lam.begin(), lam.end());
  return lam;
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("cycle spectra match the closed form 2 - 2cos(2 pi k / n)") {
  const SpectralDecomposition d6 = decompose(build_cycle(6));
  const double want6[6] = {0.0, 1.0, 1.0, 3.0, 3.0, 4.0};
  for (int k = 0; k < 6; ++k) CHECK(std::abs(d6.eigenvalues[k] - want6[k]) <= 1e-10);

  const SpectralDecomposition d3 = decompose(build_cycle(3));
  const double want3[3] = {0.0, 3.0, 3.0};
  for (int k = 0; k < 3; ++k) CHECK(std::abs(d3.eigenvalues[k] - want3[k]) <= 1e-10);
}

TEST_CASE("flat torus spectrum matches the stencil symbol") {
  const SpectralDecomposition d = decompose(build_flat_torus(8, 8, 1.0, 1.0));
  const auto want = sorted_torus_spectrum(8, 8, 1.0, 1.0);
  REQUIRE(d.modes() == 64);
  for (int k = 0; k < 64; ++k) CHECK(std::abs(d.eigenvalues[k] - want[k]) <= 1e-10);

  // Anisotropic spacings scale the two symbol halves independently.
  const SpectralDecomposition da = decompose(build_flat_torus(6, 4, 0.5, 2.0));
  const auto wanta = sorted_torus_spectrum(6, 4, 0.5, 2.0);
  for (int k = 0; k < da.modes(); ++k) CHECK(std::abs(da.eigenvalues[k] - wanta[k]) <= 1e-9);
}

TEST_CASE("first torus eigenvalue has multiplicity four") {
  const SpectralDecomposition d = decompose(build_flat_torus(8, 8, 1.0, 1.0));
  const auto groups = group_eigenvalues(d, 1e-9);
  REQUIRE(groups.size() >= 2);
  CHECK(groups[0].value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(groups[0].count == 1);
  CHECK(groups[1].count == 4);  // modes (+-1, 0) and (0, +-1)
}

TEST_CASE("dirichlet path spectra match the closed form 4 sin^2(k pi / (2(n+1)))") {
  const SpectralDecomposition d3 = decompose(build_path_dirichlet(3));
  REQUIRE(d3.modes() == 3);
  const double s2 = std::sqrt(2.0);
  CHECK(std::abs(d3.eigenvalues[0] - (2.0 - s2)) <= 1e-10);
  CHECK(std::abs(d3.eigenvalues[1] - 2.0) <= 1e-10);
  CHECK(std::abs(d3.eigenvalues[2] - (2.0 + s2)) <= 1e-10);

  const SpectralDecomposition d2 = decompose(build_path_dirichlet(2));
  CHECK(std::abs(d2.eigenvalues[0] - 1.0) <= 1e-10);
  CHECK(std::abs(d2.eigenvalues[1] - 3.0) <= 1e-10);
  CHECK(d2.eigenvalues[0] > 0.0);  // no kernel with Dirichlet data
}

TEST_CASE("closed manifolds have a constant kernel mode") {
  const SpectralDecomposition d = decompose(build_flat_torus(5, 7, 1.0, 1.0));
  CHECK(std::abs(d.eigenvalues[0]) <= 1e-12);
  const Vec phi0 = d.eigenvectors.col(0);
  CHECK((phi0.array() - phi0[0]).abs().maxCoeff() <= 1e-12 * std::abs(phi0[0]));
}

TEST_CASE("eigenvectors are mass-orthonormal with small residual") {
  const DiscreteManifold m = build_flat_torus(6, 6, 0.5, 1.0);
  const SpectralDecomposition d = decompose(m);
  const Mat gram = d.eigenvectors.transpose() * m.mass.asDiagonal() * d.eigenvectors;
  CHECK((gram - Mat::Identity(d.modes(), d.modes())).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(d.residual <= 1e-9 * d.eigenvalues[d.modes() - 1]);

  // Every column solves the eigenproblem.
  for (int k = 0; k < d.modes(); k += 7) {
    const Vec r = m.apply_stiffness(d.eigenvectors.col(k)) -
                  d.eigenvalues[k] * d.eigenvectors.col(k);
    CHECK(norm_m(m, r) <= 1e-9 * std::max(1.0, d.eigenvalues[k]));
  }
}

TEST_CASE("decomposition is deterministic, bit for bit") {
  const DiscreteManifold m = build_flat_torus(6, 5, 1.0, 1.0);
  const SpectralDecomposition a = decompose(m);
  const SpectralDecomposition b = decompose(m);
  CHECK((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.eigenvectors - b.eigenvectors).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("functional calculus basics") {
  const DiscreteManifold m = build_cycle(9);
  const SpectralDecomposition d = decompose(m);
  const Vec f = random_vec(9, 2);

  // Identity function reproduces the input (completeness).
  const Vec same = apply_function(d, [](double) { return 1.0; }, f);
  CHECK((same - f).cwiseAbs().maxCoeff() <= 1e-12 * f.cwiseAbs().maxCoeff());

  // lambda on an eigenvector scales it.
  const Vec phi = d.eigenvectors.col(4);
  const Vec lphi = apply_function(d, [](double lam) { return lam; }, phi);
  CHECK(norm_m(m, lphi - d.eigenvalues[4] * phi) <= 1e-10);

  // Undefined values are tolerated only on unused modes.
  Vec mean_zero = f;
  mean_zero.array() -= dot_m(m, f, Vec::Ones(9)) / m.mass.sum();
  const auto inv = [](double lam) { return lam > 1e-12 ? 1.0 / lam : 1.0 / 0.0; };
  CHECK_NOTHROW(apply_function(d, inv, mean_zero));
  CHECK_THROWS_AS(apply_function(d, inv, Vec::Ones(9)), std::invalid_argument);
}

TEST_CASE("calculus is a homomorphism and self-adjoint") {
  const DiscreteManifold m = build_flat_torus(5, 5, 1.0, 1.0);
  const SpectralDecomposition d = decompose(m);
  const Vec f = random_vec(m.n(), 3), g = random_vec(m.n(), 4);

  Rng rng(6);
  double c[4];
  for (double& x : c) x = rng.uniform(-1.0, 1.0);
  const auto p = [&c](double x) { return c[0] + c[1] * x; };
  const auto q = [&c](double x) { return c[2] + c[3] * x * x; };
  const auto pq = [&](double x) { return p(x) * q(x); };
  const Vec lhs = apply_function(d, pq, f);
  const Vec rhs = apply_function(d, p, apply_function(d, q, f));
  CHECK(norm_m(m, lhs - rhs) <= 1e-9 * norm_m(m, f));

  const auto e = [](double lam) { return std::exp(-0.7 * lam); };
  CHECK(std::abs(dot_m(m, apply_function(d, e, f), g) - dot_m(m, f, apply_function(d, e, g))) <=
        1e-10 * norm_m(m, f) * norm_m(m, g));
}

TEST_CASE("heat flow is a contraction with the semigroup law") {
  const DiscreteManifold m = build_flat_torus(6, 6, 1.0, 1.0);
  const SpectralDecomposition d = decompose(m);
  const Vec f = random_vec(m.n(), 9);
  const auto heat = [&](double t, const Vec& x) {
    return apply_function(d, [t](double lam) { return std::exp(-t * lam); }, x);
  };

  double prev = norm_m(m, f);
  for (double t : {0.01, 0.1, 1.0, 10.0}) {
    const double now = norm_m(m, heat(t, f));
    CHECK(now <= prev * (1.0 + 1e-12));
    prev = now;
  }
  const Vec two_step = heat(0.4, heat(0.6, f));
  CHECK(norm_m(m, two_step - heat(1.0, f)) <= 1e-10 * norm_m(m, f));
}

TEST_CASE("eigenvalue grouping partitions the spectrum") {
  const SpectralDecomposition d = decompose(build_cycle(6));
  const auto groups = group_eigenvalues(d, 1e-6);
  REQUIRE(groups.size() == 4);
  const int want_count[4] = {1, 2, 2, 1};
  const double want_value[4] = {0.0, 1.0, 3.0, 4.0};
  int covered = 0;
  for (int i = 0; i < 4; ++i) {
    CHECK(groups[i].count == want_count[i]);
    CHECK(std::abs(groups[i].value - want_value[i]) <= 1e-10);
    CHECK(groups[i].first == covered);
    covered += groups[i].count;
  }
  CHECK(covered == 6);

  // A tolerance wider than every gap leaves no meaningful clustering.
  CHECK_THROWS_AS(group_eigenvalues(d, 2.0), std::runtime_error);
}

TEST_CASE("projector kernel matches the closed-form cycle projector") {
  const DiscreteManifold m = build_cycle(6);
  const SpectralDecomposition d = decompose(m);
  const auto groups = group_eigenvalues(d, 1e-6);
  const Region o = Region::make(m, {1, 2, 3});
  const Mat k = projector_kernel(d, groups[1], o);  // the lambda = 1 pair

  // K(x,y) = (2/n) cos(2 pi (x-y)/n) for the first nonzero group on a unit
  // cycle; basis-independent, so any eigensolver rotation gives the same K.
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const double want = (2.0 / 6.0) * std::cos(2.0 * kPi * (a - b) / 6.0);
      CHECK(std::abs(k(a, b) - want) <= 1e-10);
    }
  }
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
  // Rank cannot exceed the multiplicity.
  const Eigen::JacobiSVD<Mat> svd(k);
  CHECK(svd.singularValues()[2] <= 1e-12 * svd.singularValues()[0]);
}

TEST_CASE("projector kernels over all groups resolve the identity") {
  const DiscreteManifold m = build_cycle(8);
  const SpectralDecomposition d = decompose(m);
  const auto groups = group_eigenvalues(d, 1e-9);
  const Region o = Region::make(m, {2, 3, 4});
  Mat total = Mat::Zero(3, 3);
  for (const auto& g : groups) total += projector_kernel(d, g, o);
  // Completeness: sum of projectors is the mass-inverse on the diagonal.
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const double want = (a == b) ? 1.0 / m.mass[o.vertices[a]] : 0.0;
      CHECK(std::abs(total(a, b) - want) <= 1e-10);
    }
  }
}

TEST_CASE("heat sampler agrees with direct synthesis") {
  const DiscreteManifold m = build_flat_torus(5, 4, 1.0, 1.0);
  const SpectralDecomposition d = decompose(m);
  const Vec f = random_vec(m.n(), 12);
  const std::vector<int> verts = {0, 7, 13};
  const HeatSampler hs(d, verts, f);
  for (double t : {0.0, 0.3, 2.0}) {
    const Vec full = apply_function(d, [t](double lam) { return std::exp(-t * lam); }, f);
    const Vec s = hs.eval(t);
    for (size_t i = 0; i < verts.size(); ++i) {
      CHECK(std::abs(s[static_cast<int>(i)] - full[verts[i]]) <= 1e-12);
    }
  }
  CHECK(hs.source_norm() == doctest::Approx(norm_m(m, f)).epsilon(1e-12));
}

TEST_CASE("spectrum export carries the documented columns") {
  const SpectralDecomposition d = decompose(build_cycle(6));
  const std::string path = "spectrum_export_test.csv";
  write_spectrum_csv(path, d, 1e-6);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "index,eigenvalue,group_id,multiplicity");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) ++rows;
  }
  in.close();
  std::remove(path.c_str());
  CHECK(rows == 6);
}

}  // TEST_SUITE
