#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "fraclab/fractional.hpp"
#include "fraclab/manifold.hpp"
#include "fraclab/rng.hpp"
#include "fraclab/spectral.hpp"
#include "fraclab/wave.hpp"

using namespace fraclab;

namespace {

Vec random_vec(int n, std::uint64_t seed) {
  Rng rng(seed);
  Vec f(n);
  for (int i = 0; i < n; ++i) f[i] = rng.normal();
  return f;
}

}  // namespace

TEST_SUITE("wave") {

TEST_CASE("bump profile is compactly supported and resolved") {
  const TimeProfile p = TimeProfile::bump(0.2, 0.8, 1.5, 0.01);
  CHECK(p.eval(0.2) == 0.0);
  CHECK(p.eval(0.8) == 0.0);
  CHECK(p.eval(1.5) == 0.0);
  CHECK(p.eval(0.5) > 0.0);
  CHECK(p.eval(0.5) <= 1.5);
  CHECK(p.t_end() == doctest::Approx(0.8));

  const TimeProfile tab = TimeProfile::table({0.0, 0.1, 0.2}, {0.0, 1.0, 0.0});
  CHECK(tab.eval(0.05) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(tab.eval(0.3) == 0.0);
  CHECK_THROWS_AS(TimeProfile::table({0.0, 0.2, 0.25}, {0.0, 1.0, 0.0}),
                  std::invalid_argument);  // non-uniform grid
}

TEST_CASE("wave kernel handles the zero mode by its limit") {
  const DiscreteManifold m = build_cycle(8);
  const SpectralDecomposition d = decompose(m);
  const Vec f = random_vec(8, 1);

  CHECK(wave_kernel_apply(d, 0.0, f).cwiseAbs().maxCoeff() <= 1e-14);

  // sin(t sqrt(lambda))/sqrt(lambda) on an eigenvector, lambda > 0.
  const int k = 3;
  const double lam = d.eigenvalues[k];
  const Vec phi = d.eigenvectors.col(k);
  const double t = 1.3;
  CHECK(norm_m(m, wave_kernel_apply(d, t, phi) -
                      (std::sin(t * std::sqrt(lam)) / std::sqrt(lam)) * phi) <= 1e-12);

  // The constant mode moves linearly in t.
  const Vec phi0 = d.eigenvectors.col(0);
  CHECK(norm_m(m, wave_kernel_apply(d, t, phi0) - t * phi0) <= 1e-12);
}

TEST_CASE("driven wave: zero source, linearity, profile resolution guard") {
  const DiscreteManifold m = build_cycle(6);
  const SpectralDecomposition d = decompose(m);
  const Vec v = random_vec(6, 2);

  const TimeProfile silent = TimeProfile::bump(0.1, 0.9, 0.0, 0.01);
  CHECK(duhamel_solve(d, silent, v, 2.0).cwiseAbs().maxCoeff() <= 1e-14);

  const TimeProfile prof = TimeProfile::bump(0.1, 0.9, 1.0, 0.01);
  const Vec u1 = duhamel_solve(d, prof, v, 2.0);
  const Vec u3 = duhamel_solve(d, prof, 3.0 * v, 2.0);
  CHECK(norm_m(m, u3 - 3.0 * u1) <= 1e-10 * norm_m(m, u1));

  // A grid step that cannot resolve the fastest mode is refused.
  const TimeProfile coarse = TimeProfile::bump(0.1, 0.9, 1.0, 0.5);
  CHECK_THROWS_AS(duhamel_solve(d, coarse, v, 2.0), std::invalid_argument);
}

TEST_CASE("single mode agrees with the classical oscillator") {
  // On the lambda = 1 eigenmode the system is u'' + u = a(t); the spectral
  // route must match the time stepper to its convergence floor.
  const DiscreteManifold m = build_cycle(6);
  const SpectralDecomposition d = decompose(m);
  const Vec phi = d.eigenvectors.col(1);
  REQUIRE(std::abs(d.eigenvalues[1] - 1.0) <= 1e-10);

  const TimeProfile prof = TimeProfile::bump(0.1, 0.9, 1.0, 0.005);
  const Vec spectral = duhamel_solve(d, prof, phi, 2.0);
  const OdeResult ode = ode_oracle(m, prof, phi, 2.0, 0.002);
  CHECK(norm_m(m, spectral - ode.u) <= 1e-6 * norm_m(m, spectral));
}

TEST_CASE("time stepper self-converges at fourth order") {
  const DiscreteManifold m = build_cycle(6);
  const SpectralDecomposition d = decompose(m);
  const Vec v = random_vec(6, 5);
  // A wide bump keeps the edge layers gentle, so the step error sits in the
  // clean fourth-order regime at these dt instead of being dominated by the
  // profile's high derivatives.
  const TimeProfile prof = TimeProfile::bump(0.1, 1.9, 1.0, 0.002);
  const Vec truth = duhamel_solve(d, prof, v, 2.0);

  const double e1 = norm_m(m, ode_oracle(m, prof, v, 2.0, 0.01).u - truth);
  const double e2 = norm_m(m, ode_oracle(m, prof, v, 2.0, 0.005).u - truth);
  CHECK(e1 / e2 >= 8.0);
  CHECK(e1 / e2 <= 32.0);
}

TEST_CASE("energy is conserved once the source switches off") {
  const DiscreteManifold m = build_cycle(8);
  const Vec v = random_vec(8, 6);
  const TimeProfile prof = TimeProfile::bump(0.1, 0.6, 1.0, 0.002);
  const OdeResult ode = ode_oracle(m, prof, v, 3.0, 0.002);

  double e_ref = -1.0;
  double worst = 0.0;
  for (size_t i = 0; i < ode.sample_times.size(); ++i) {
    if (ode.sample_times[i] < 0.7) continue;
    if (e_ref < 0.0) e_ref = ode.energies[i];
    worst = std::max(worst, std::abs(ode.energies[i] - e_ref));
  }
  REQUIRE(e_ref > 0.0);
  CHECK(worst <= 1e-6 * e_ref);
}

TEST_CASE("lambda_max_bound dominates the spectrum") {
  for (int n : {5, 9}) {
    const DiscreteManifold m = build_cycle(n);
    const SpectralDecomposition d = decompose(m);
    CHECK(lambda_max_bound(m) >= d.eigenvalues[d.modes() - 1]);
  }
}

TEST_CASE("heat synthesized from wave samples: scalar identities") {
  CHECK(std::abs(transmute_scalar(1.0, 1.0) - 0.36787944117144233) <= 1e-8);
  CHECK(std::abs(transmute_scalar(0.0, 0.7) - 1.0) <= 1e-9);  // zero-mode limit
  for (double t : {0.1, 2.0}) {
    for (double lam : {0.26794919243112270, 3.0, 4.0}) {
      CHECK(std::abs(transmute_scalar(lam, t) - std::exp(-lam * t)) <= 1e-7);
    }
  }
}

TEST_CASE("heat synthesized from wave samples: operator route") {
  const DiscreteManifold m = build_cycle(12);
  const SpectralDecomposition d = decompose(m);
  const Vec f = random_vec(12, 7);

  const Vec via_wave = transmute_heat(d, 0.5, f);
  const Vec direct = heat_apply(d, 0.5, f);
  CHECK(norm_m(m, via_wave - direct) <= 1e-6 * norm_m(m, f));

  // The constant component passes through unchanged (zero-mode limit).
  const Vec ones = Vec::Ones(12);
  CHECK(norm_m(m, transmute_heat(d, 0.8, ones) - ones) <= 1e-7 * norm_m(m, ones));
}

}  // TEST_SUITE
