#include "fraclab/spectral.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fraclab/csv.hpp"

namespace fraclab {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument("spectral: " + what); }

// Index of the first entry whose magnitude clears 1e-8 of the peak.
int first_significant(const Vec& v) {
  const double cut = 1e-8 * v.cwiseAbs().maxCoeff();
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > cut) return i;
  }
  return 0;
}

}  // namespace

double SpectralDecomposition::coeff(const Vec& f, int k) const {
  if (k < 0 || k >= modes()) fail("mode index out of range");
  return eigenvectors.col(k).dot(mass.asDiagonal() * f);
}

Vec SpectralDecomposition::coeffs(const Vec& f) const {
  if (f.size() != dim()) fail("vector length does not match decomposition");
  return eigenvectors.transpose() * (mass.asDiagonal() * f);
}

double SpectralDecomposition::zero_threshold() const {
  const double top = modes() > 0 ? eigenvalues[modes() - 1] : 0.0;
  return 1e-10 * std::max(1.0, top);
}

SpectralDecomposition decompose(const DiscreteManifold& m) {
  const int n = m.n();
  std::vector<int> active;  // rows/cols entering the dense problem
  if (m.closed()) {
    active.resize(n);
    std::iota(active.begin(), active.end(), 0);
  } else {
    active = m.interior();
  }
  const int na = static_cast<int>(active.size());
  std::vector<int> pos(n, -1);
  for (int i = 0; i < na; ++i) pos[active[i]] = i;

  // Stiffness restricted to active vertices, symmetrized in the mass metric:
  // B = M^{-1/2} K M^{-1/2} with K = diag(strength) - W.
  Vec isq(na);
  for (int i = 0; i < na; ++i) isq[i] = 1.0 / std::sqrt(m.mass[active[i]]);
  Mat b = Mat::Zero(na, na);
  for (int i = 0; i < na; ++i) {
    const int v = active[i];
    double diag = 0.0;
    for (SpMat::InnerIterator it(m.weights, v); it; ++it) {
      diag += it.value();
      const int j = pos[static_cast<int>(it.row())];
      if (j >= 0) b(i, j) -= it.value() * isq[i] * isq[j];
    }
    b(i, i) += diag * isq[i] * isq[i];
  }
  b = ((b + b.transpose()) * 0.5).eval();

  Eigen::SelfAdjointEigenSolver<Mat> es(b);
  if (es.info() != Eigen::Success) fail("eigensolver failed on " + m.label);

  SpectralDecomposition d;
  d.dirichlet = !m.closed();
  d.label = m.label;
  d.mass = m.mass;
  d.eigenvalues = es.eigenvalues();
  d.eigenvectors = Mat::Zero(n, na);
  for (int k = 0; k < na; ++k) {
    for (int i = 0; i < na; ++i) d.eigenvectors(active[i], k) = es.eigenvectors()(i, k) * isq[i];
  }

  // Canonical orientation, then a canonical column order inside each
  // numerically degenerate run so ties never depend on solver internals.
  for (int k = 0; k < na; ++k) {
    Vec col = d.eigenvectors.col(k);
    if (col[first_significant(col)] < 0.0) d.eigenvectors.col(k) = -col;
  }
  const double top = std::max(1.0, std::abs(d.eigenvalues[na - 1]));
  int k = 0;
  while (k < na) {
    int e = k + 1;
    while (e < na && d.eigenvalues[e] - d.eigenvalues[e - 1] <= 1e-12 * top) ++e;
    if (e - k > 1) {
      std::vector<int> order(e - k);
      std::iota(order.begin(), order.end(), k);
      std::stable_sort(order.begin(), order.end(), [&](int a, int bcol) {
        return first_significant(d.eigenvectors.col(a)) < first_significant(d.eigenvectors.col(bcol));
      });
      Mat block(n, e - k);
      for (int j = 0; j < e - k; ++j) block.col(j) = d.eigenvectors.col(order[j]);
      d.eigenvectors.middleCols(k, e - k) = block;
    }
    k = e;
  }

  double worst = 0.0;
  for (int j = 0; j < na; ++j) {
    const Vec phi = d.eigenvectors.col(j);
    const Vec r = m.apply_stiffness(phi) - d.eigenvalues[j] * phi;
    worst = std::max(worst, norm_m(m, r));
  }
  d.residual = worst;
  return d;
}

Vec apply_function(const SpectralDecomposition& d, const std::function<double(double)>& fn,
                   const Vec& f) {
  const Vec c = d.coeffs(f);
  const double scale = std::sqrt(f.dot(d.mass.asDiagonal() * f));
  Vec out = Vec::Zero(d.dim());
  for (int k = 0; k < d.modes(); ++k) {
    const double v = fn(d.eigenvalues[k]);
    if (!std::isfinite(v)) {
      if (std::abs(c[k]) <= 1e-10 * scale) continue;  // no weight on the singular mode
      std::ostringstream os;
      os << "function is singular at eigenvalue " << d.eigenvalues[k]
         << " but the input has coefficient " << c[k] << " there";
      fail(os.str());
    }
    out += (v * c[k]) * d.eigenvectors.col(k);
  }
  return out;
}

std::vector<EigenGroup> group_eigenvalues(const SpectralDecomposition& d, double tol) {
  if (!(tol > 0.0)) fail("grouping tolerance must be positive");
  const int nk = d.modes();
  std::vector<EigenGroup> groups;
  int k = 0;
  while (k < nk) {
    int e = k + 1;
    while (e < nk &&
           d.eigenvalues[e] - d.eigenvalues[e - 1] <= tol * std::max(1.0, d.eigenvalues[e - 1])) {
      ++e;
    }
    const double lo = d.eigenvalues[k];
    const double hi = d.eigenvalues[e - 1];
    if (hi - lo > tol * std::max(1.0, lo)) {
      std::ostringstream os;
      os << "grouping is ambiguous at tolerance " << tol << ": eigenvalues " << lo << " .. " << hi
         << " (indices " << k << " .. " << e - 1 << ") chain together but span " << hi - lo;
      throw std::runtime_error("spectral: " + os.str());
    }
    EigenGroup g;
    g.first = k;
    g.count = e - k;
    g.value = d.eigenvalues.segment(k, e - k).mean();
    groups.push_back(g);
    k = e;
  }
  return groups;
}

Mat projector_kernel(const SpectralDecomposition& d, const EigenGroup& grp, const Region& o) {
  if (grp.first < 0 || grp.count <= 0 || grp.first + grp.count > d.modes()) fail("bad group");
  const int p = static_cast<int>(o.vertices.size());
  Mat block(p, grp.count);
  for (int i = 0; i < p; ++i) block.row(i) = d.eigenvectors.row(o.vertices[i]).segment(grp.first, grp.count);
  return block * block.transpose();
}

void write_spectrum_csv(const std::string& path, const SpectralDecomposition& d, double group_tol) {
  const auto groups = group_eigenvalues(d, group_tol);
  CsvWriter csv(path, {"index", "eigenvalue", "group_id", "multiplicity"});
  for (int g = 0; g < static_cast<int>(groups.size()); ++g) {
    for (int j = 0; j < groups[g].count; ++j) {
      const int k = groups[g].first + j;
      csv.row({std::to_string(k), fmt_g17(d.eigenvalues[k]), std::to_string(g),
               std::to_string(groups[g].count)});
    }
  }
}

HeatSampler::HeatSampler(const SpectralDecomposition& d, const std::vector<int>& verts, const Vec& f)
    : lambda_(d.eigenvalues), c_(d.coeffs(f)) {
  rows_.resize(static_cast<int>(verts.size()), d.modes());
  for (int i = 0; i < static_cast<int>(verts.size()); ++i) {
    if (verts[i] < 0 || verts[i] >= d.dim()) fail("sampler vertex out of range");
    rows_.row(i) = d.eigenvectors.row(verts[i]);
  }
  norm_f_ = std::sqrt(f.dot(d.mass.asDiagonal() * f));
}

Vec HeatSampler::eval(double t) const {
  if (!(t >= 0.0)) fail("heat sampler needs t >= 0");
  return rows_ * (lambda_.array() * -t).exp().matrix().cwiseProduct(c_);
}

}  // namespace fraclab
