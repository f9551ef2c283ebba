#include "fraclab/sources.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fraclab/csv.hpp"
#include "fraclab/quadrature.hpp"

namespace fraclab {

namespace {
[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument("sources: " + what); }
}  // namespace

SourceSpace build_source_space(const DiscreteManifold& m, const Region& region, SourceKind kind) {
  SourceSpace sp;
  sp.kind = kind;
  sp.region = region;
  if (kind == SourceKind::D0) {
    sp.basis = Mat::Zero(m.n(), static_cast<int>(region.vertices.size()));
    for (size_t i = 0; i < region.vertices.size(); ++i) {
      sp.basis(region.vertices[i], static_cast<int>(i)) = 1.0;
    }
    return sp;
  }
  if (kind != SourceKind::Dtilde0) fail("the Nell family needs the pair overload");

  const std::vector<int> inner = region.shrink(1);
  if (inner.empty()) fail("region has no vertices one layer inside; cannot build stiffness columns");
  sp.basis = Mat::Zero(m.n(), static_cast<int>(inner.size()));
  for (size_t i = 0; i < inner.size(); ++i) {
    Vec e = Vec::Zero(m.n());
    e[inner[i]] = 1.0;
    sp.basis.col(static_cast<int>(i)) = m.apply_stiffness(e);
  }
  // The columns must form a genuine basis; normalize and check conditioning.
  Mat norm = sp.basis;
  for (int j = 0; j < norm.cols(); ++j) norm.col(j) /= norm.col(j).norm();
  Eigen::JacobiSVD<Mat> svd(norm);
  if (svd.singularValues()[svd.singularValues().size() - 1] <= 1e-8) {
    fail("stiffness columns are numerically dependent on this region");
  }
  return sp;
}

SourceSpace build_source_space_nell(const ManifoldPair& pair, const Region& region, int ell) {
  if (ell < 0) fail("ell must be >= 0");
  for (int v : region.vertices) {
    if (!pair.iso.patch1.contains(v)) fail("Nell region must lie inside the shared patch");
  }
  const int no = static_cast<int>(region.vertices.size());
  const int q = 2 * (ell + 1);
  if (ell + 1 > pair.d1.modes() || ell + 1 > pair.d2.modes()) fail("ell exceeds available modes");

  Mat cons(no, q);
  for (int k = 0; k <= ell; ++k) {
    for (int i = 0; i < no; ++i) {
      const int v = region.vertices[i];
      const double mv = pair.m1.mass[v];
      cons(i, 2 * k) = mv * pair.d1.eigenvectors(v, k);
      cons(i, 2 * k + 1) = mv * pair.d2.eigenvectors(pair.iso.map(v), k);
    }
  }
  Eigen::JacobiSVD<Mat> svd(cons, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  const double top = sv.size() > 0 ? sv[0] : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv[i] > 1e-8 * std::max(top, 1e-300)) ++rank;
  }
  const int dim = no - rank;
  if (dim <= 0) {
    std::ostringstream os;
    os << "no sources on this region are orthogonal to the first " << ell + 1
       << " eigenfunctions of both manifolds (" << rank << " independent constraints, "
       << no << " degrees of freedom)";
    throw std::runtime_error("sources: " + os.str());
  }

  SourceSpace sp;
  sp.kind = SourceKind::Nell;
  sp.region = region;
  sp.basis = Mat::Zero(pair.m1.n(), dim);
  for (int j = 0; j < dim; ++j) {
    for (int i = 0; i < no; ++i) sp.basis(region.vertices[i], j) = svd.matrixU()(i, rank + j);
  }
  return sp;
}

Vec apply_T_ell(const ManifoldPair& pair, int ell, const Vec& f) {
  if (ell < 0) fail("ell must be >= 0");
  const int need = 2 * (ell + 1);
  if (pair.iso.patch1.margin < need) {
    std::ostringstream os;
    os << "patch margin " << pair.iso.patch1.margin << " is below the " << need
       << " layers the factor product consumes";
    fail(os.str());
  }
  const std::vector<int> deep = pair.iso.patch1.shrink(need);
  for (int v = 0; v < pair.m1.n(); ++v) {
    if (f[v] != 0.0 && !std::binary_search(deep.begin(), deep.end(), v)) {
      fail("source must be supported " + std::to_string(need) + " layers inside the patch");
    }
  }
  Vec h = f;
  for (int k = 0; k <= ell; ++k) {
    for (double lam : {pair.d1.eigenvalues[k], pair.d2.eigenvalues[k]}) {
      h = pair.m1.apply_stiffness(h) - lam * h;
    }
  }
  return h;
}

Vec source_to_solution(const SpectralDecomposition& d, const FracParams& p, const Region& region,
                       const Vec& f) {
  const Vec u = frac_inverse_spectral(d, p, f);
  Vec out(static_cast<Eigen::Index>(region.vertices.size()));
  for (size_t i = 0; i < region.vertices.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = u[region.vertices[i]];
  }
  return out;
}

std::vector<S2sRow> compare_s2s(const ManifoldPair& pair, const SourceSpace& space,
                                const FracParams& p) {
  std::vector<int> o2;
  o2.reserve(space.region.vertices.size());
  for (int v : space.region.vertices) {
    if (!pair.iso.patch1.contains(v)) fail("source region must lie inside the shared patch");
    o2.push_back(pair.iso.map(v));
  }
  const int no = static_cast<int>(space.region.vertices.size());
  Vec mw(no);
  for (int i = 0; i < no; ++i) mw[i] = pair.m1.mass[space.region.vertices[i]];

  std::vector<S2sRow> rows;
  for (int j = 0; j < space.dim(); ++j) {
    const Vec f = space.basis.col(j);
    const Vec u1 = frac_inverse_spectral(pair.d1, p, f);
    const Vec u2 = frac_inverse_spectral(pair.d2, p, pair.iso.transport(f));
    Vec s1(no), s2(no);
    for (int i = 0; i < no; ++i) {
      s1[i] = u1[space.region.vertices[i]];
      s2[i] = u2[o2[i]];
    }
    S2sRow r;
    r.basis_id = j;
    r.norm_f = norm_m(pair.m1, f);
    r.norm_s1 = std::sqrt(s1.dot(mw.asDiagonal() * s1));
    r.norm_s2 = std::sqrt(s2.dot(mw.asDiagonal() * s2));
    const Vec diff = s1 - s2;
    r.rel_discrepancy = std::sqrt(diff.dot(mw.asDiagonal() * diff)) / std::max(r.norm_f, 1e-300);
    rows.push_back(r);
  }
  return rows;
}

void write_s2s_csv(const std::string& path, const std::vector<S2sRow>& rows) {
  CsvWriter csv(path, {"basis_id", "norm_f", "norm_S1f", "norm_S2f", "rel_discrepancy"});
  for (const auto& r : rows) {
    csv.row({std::to_string(r.basis_id), fmt_g17(r.norm_f), fmt_g17(r.norm_s1),
             fmt_g17(r.norm_s2), fmt_g17(r.rel_discrepancy)});
  }
}

std::vector<PeelStep> peel_chain(const ManifoldPair& pair, int ell, const Vec& f,
                                 const std::vector<double>& t_check, double tol) {
  if (t_check.empty()) fail("need at least one check time");
  const int nf = 2 * (ell + 1);

  // Factor list, outermost first: (A_1 - lambda_0(1)) is peeled first.
  std::vector<std::pair<int, double>> factors;
  for (int k = 0; k <= ell; ++k) {
    factors.emplace_back(1, pair.d1.eigenvalues[k]);
    factors.emplace_back(2, pair.d2.eigenvalues[k]);
  }

  // Build the chain inside out so h[m] = (A - lambda_m) h[m+1] holds exactly
  // as computed, not just up to reordering.
  std::vector<Vec> h(nf + 1);
  h[nf] = f;
  for (int m = nf - 1; m >= 0; --m) {
    h[m] = pair.m1.apply_stiffness(h[m + 1]) - factors[m].second * h[m + 1];
  }
  // Support grows one layer per factor; apply_T_ell's margin rule covers it.
  {
    const std::vector<int> deep = pair.iso.patch1.shrink(nf);
    for (int v = 0; v < pair.m1.n(); ++v) {
      if (f[v] != 0.0 && !std::binary_search(deep.begin(), deep.end(), v)) {
        fail("source must be supported " + std::to_string(nf) + " layers inside the patch");
      }
    }
  }

  std::vector<HeatSampler> s1, s2;
  std::vector<double> hnorm(nf + 1);
  s1.reserve(nf + 1);
  s2.reserve(nf + 1);
  for (int m = 0; m <= nf; ++m) {
    s1.emplace_back(pair.d1, pair.obs.vertices, h[m]);
    s2.emplace_back(pair.d2, pair.obs2, pair.iso.transport(h[m]));
    hnorm[m] = norm_m(pair.m1, h[m]);
  }
  const auto rel_diff = [&](int m) {
    double worst = 0.0;
    for (double t : t_check) {
      worst = std::max(worst, pair.obs_norm(s1[m].eval(t) - s2[m].eval(t)));
    }
    return worst / std::max(hnorm[m], 1e-300);
  };
  const auto restrict1 = [&](const Vec& u) {
    Vec out(static_cast<Eigen::Index>(pair.obs.vertices.size()));
    for (size_t i = 0; i < pair.obs.vertices.size(); ++i) {
      out[static_cast<Eigen::Index>(i)] = u[pair.obs.vertices[i]];
    }
    return out;
  };

  std::vector<PeelStep> steps;
  for (int m = 0; m < nf; ++m) {
    PeelStep st;
    st.index = m;
    st.manifold = factors[m].first;
    st.lambda = factors[m].second;
    st.pre_equal = rel_diff(m);

    const double lam = factors[m].second;
    const Vec next1 = restrict1(h[m + 1]);
    const Vec next2 = next1;  // transported restriction agrees on the patch
    double worst = 0.0;
    for (double t : t_check) {
      for (int side = 0; side < 2; ++side) {
        const HeatSampler& cur = (side == 0) ? s1[m] : s2[m];
        const HeatSampler& nxt = (side == 0) ? s1[m + 1] : s2[m + 1];
        const auto g = [&](double s) -> Vec { return std::exp(s * lam) * cur.eval(s); };
        QuadResult q = romberg_refine(g, 0.0, t, 1e-12 * std::max(hnorm[m], 1.0));
        const Vec route =
            std::exp(-t * lam) * (((side == 0) ? next1 : next2) - q.value);
        const Vec direct = nxt.eval(t);
        worst = std::max(worst, pair.obs_norm(route - direct));
      }
    }
    st.quad_route = worst / std::max(hnorm[m + 1], 1e-300);
    st.post_equal = rel_diff(m + 1);
    st.pass = st.pre_equal <= tol && st.quad_route <= tol && st.post_equal <= tol;
    steps.push_back(st);
  }
  return steps;
}

}  // namespace fraclab
