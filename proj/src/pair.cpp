#include "fraclab/pair.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace fraclab {

namespace {
[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument("pair: " + what); }
}  // namespace

ManifoldPair ManifoldPair::make(DiscreteManifold a, DiscreteManifold b,
                                const std::vector<int>& patch1, const std::vector<int>& patch2,
                                const std::vector<int>& obs_vertices) {
  if (patch1.size() != patch2.size()) fail("patch lists differ in length");
  ManifoldPair p;
  p.m1 = std::move(a);
  p.m2 = std::move(b);
  // Region::make sorts its vertices; keep the image list parallel.
  std::vector<int> order(patch1.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int x, int y) { return patch1[x] < patch1[y]; });
  std::vector<int> image(patch1.size());
  for (size_t i = 0; i < order.size(); ++i) image[i] = patch2[order[i]];
  p.iso = PatchIsometry::make(p.m1, p.m2, Region::make(p.m1, patch1), image);
  p.obs = Region::make(p.m1, obs_vertices);
  // Region::make sorted the vertices; build the image list in that order so
  // obs2[i] always faces obs.vertices[i].
  p.obs2.reserve(p.obs.vertices.size());
  for (int v : p.obs.vertices) {
    if (!p.iso.patch1.contains(v)) fail("observation vertex outside the shared patch");
    p.obs2.push_back(p.iso.map(v));
  }
  p.d1 = decompose(p.m1);
  p.d2 = decompose(p.m2);
  return p;
}

ManifoldPair::DiffSampler ManifoldPair::diff_sampler(const Vec& f_on_m1) const {
  return DiffSampler{HeatSampler(d1, obs.vertices, f_on_m1),
                     HeatSampler(d2, obs2, iso.transport(f_on_m1))};
}

Vec ManifoldPair::heat_difference(double t, const Vec& f_on_m1) const {
  return diff_sampler(f_on_m1).eval(t);
}

double ManifoldPair::obs_norm(const Vec& values_on_obs) const {
  if (values_on_obs.size() != static_cast<Eigen::Index>(obs.vertices.size())) {
    fail("observation vector has wrong length");
  }
  double acc = 0.0;
  for (int i = 0; i < values_on_obs.size(); ++i) {
    acc += m1.mass[obs.vertices[i]] * values_on_obs[i] * values_on_obs[i];
  }
  return std::sqrt(acc);
}

double ManifoldPair::lambda_min_positive() const {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto* d : {&d1, &d2}) {
    const double thr = d->zero_threshold();
    for (int k = 0; k < d->modes(); ++k) {
      if (d->eigenvalues[k] > thr) {
        lo = std::min(lo, d->eigenvalues[k]);
        break;
      }
    }
  }
  if (!std::isfinite(lo)) fail("no positive eigenvalues");
  return lo;
}

}  // namespace fraclab
