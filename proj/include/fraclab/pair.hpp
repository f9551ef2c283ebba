#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fraclab/manifold.hpp"
#include "fraclab/spectral.hpp"

namespace fraclab {

// Two manifolds sharing an isometric patch, observed on a common subregion of
// that patch. Everything downstream (heat differences, factor operators,
// transported sources) works in manifold-1 coordinates: a vector on m1
// supported inside the patch is moved to m2 with iso.transport, and data
// observed on obs2 comes back in obs (patch-1) vertex order.
struct ManifoldPair {
  DiscreteManifold m1, m2;
  PatchIsometry iso;
  Region obs;                  // subset of iso.patch1
  std::vector<int> obs2;       // image vertices, aligned with obs.vertices
  SpectralDecomposition d1, d2;

  static ManifoldPair make(DiscreteManifold a, DiscreteManifold b, const std::vector<int>& patch1,
                           const std::vector<int>& patch2, const std::vector<int>& obs_vertices);

  // chi_obs e^{-tA_1} f  minus  chi_obs e^{-tA_2} transport(f), in obs order.
  // Samplers are built once per source; see heat_difference for a one-off.
  struct DiffSampler {
    HeatSampler h1, h2;
    Vec eval(double t) const { return h1.eval(t) - h2.eval(t); }
  };
  DiffSampler diff_sampler(const Vec& f_on_m1) const;
  Vec heat_difference(double t, const Vec& f_on_m1) const;

  // Mass-weighted norm over the observation set (patch masses agree, so this
  // is the same number on either manifold).
  double obs_norm(const Vec& values_on_obs) const;

  // Smallest positive eigenvalue across both manifolds; truncation bounds for
  // large-time tails key off this.
  double lambda_min_positive() const;
};

}  // namespace fraclab
