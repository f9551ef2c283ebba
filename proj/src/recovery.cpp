#include "fraclab/recovery.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "fraclab/csv.hpp"
#include "fraclab/rng.hpp"

namespace fraclab {

namespace {
[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument("recovery: " + what); }
}  // namespace

std::vector<double> HeatTraceSet::times() const {
  std::vector<double> ts(steps);
  for (int j = 0; j < steps; ++j) ts[j] = t0 + j * dt;
  return ts;
}

HeatTraceSet sample_traces(const SpectralDecomposition& d, const Mat& source_basis,
                           const Region& obs, double t0, double dt, int steps) {
  if (!(t0 >= 0.0) || !(dt > 0.0) || steps < 2) fail("need t0 >= 0, dt > 0, steps >= 2");
  if (source_basis.rows() != d.dim()) fail("source basis length mismatch");
  const int no = static_cast<int>(obs.vertices.size());

  HeatTraceSet tr;
  tr.t0 = t0;
  tr.dt = dt;
  tr.steps = steps;
  tr.obs_vertices = obs.vertices;
  tr.obs_mass.resize(no);
  for (int i = 0; i < no; ++i) tr.obs_mass[i] = d.mass[obs.vertices[i]];
  tr.sources_on_obs.resize(no, source_basis.cols());
  tr.sources_within_obs = true;
  for (int s = 0; s < source_basis.cols(); ++s) {
    for (int i = 0; i < no; ++i) tr.sources_on_obs(i, s) = source_basis(obs.vertices[i], s);
    double outside = 0.0, total = source_basis.col(s).cwiseAbs().sum();
    Vec masked = source_basis.col(s);
    for (int i = 0; i < no; ++i) masked[obs.vertices[i]] = 0.0;
    outside = masked.cwiseAbs().sum();
    if (outside > 1e-14 * std::max(total, 1.0)) tr.sources_within_obs = false;
  }
  for (int s = 0; s < source_basis.cols(); ++s) {
    HeatSampler sampler(d, obs.vertices, source_basis.col(s));
    Mat block(no, steps);
    for (int j = 0; j < steps; ++j) block.col(j) = sampler.eval(t0 + j * dt);
    tr.values.push_back(block);
  }
  return tr;
}

void write_traces_csv(const std::string& path, const HeatTraceSet& tr) {
  CsvWriter csv(path, {"t", "source_id", "obs_vertex", "value"});
  for (int j = 0; j < tr.steps; ++j) {
    const double t = tr.t0 + j * tr.dt;
    for (int s = 0; s < tr.n_sources(); ++s) {
      for (size_t i = 0; i < tr.obs_vertices.size(); ++i) {
        csv.row({fmt_g17(t), std::to_string(s), std::to_string(tr.obs_vertices[i]),
                 fmt_g17(tr.values[s](static_cast<int>(i), j))});
      }
    }
  }
}

PencilResult pencil_eigenvalues(const HeatTraceSet& tr, int r, std::uint64_t seed) {
  if (r < 1) fail("need r >= 1");
  const int n = tr.steps;
  if (2 * r > n - 1) {
    std::ostringstream os;
    os << "model order " << r << " needs at least " << 2 * r + 1 << " samples, got " << n;
    fail(os.str());
  }

  // One aggregated channel with positive deterministic weights; positivity
  // keeps slow smooth modes from cancelling across channels.
  Rng rng(seed);
  Vec y = Vec::Zero(n);
  for (int s = 0; s < tr.n_sources(); ++s) {
    for (int i = 0; i < static_cast<int>(tr.obs_vertices.size()); ++i) {
      const double w = rng.uniform(0.5, 1.5);
      y += w * tr.values[s].row(i).transpose();
    }
  }

  const int w = std::max(r + 1, (n + 1) / 2);
  const int rows = n + 1 - w;
  Mat hank(rows, w);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < w; ++j) hank(i, j) = y[i + j];
  }
  Eigen::JacobiSVD<Mat> svd(hank, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();

  PencilResult res;
  for (int i = 0; i < sv.size(); ++i) res.singular_values.push_back(sv[i]);
  if (sv[r - 1] < 1e-13 * sv[0]) {
    std::ostringstream os;
    os << "data does not support " << r << " modes; singular values:";
    for (int i = 0; i < std::min<int>(r + 2, sv.size()); ++i) os << " " << sv[i];
    throw std::runtime_error("recovery: " + os.str());
  }

  const Mat vr = svd.matrixV().leftCols(r);
  const Mat v0 = vr.topRows(w - 1);
  const Mat v1 = vr.bottomRows(w - 1);
  const Mat pencil = v0.completeOrthogonalDecomposition().solve(v1);
  Eigen::EigenSolver<Mat> es(pencil);
  if (es.info() != Eigen::Success) throw std::runtime_error("recovery: pencil eigensolver failed");

  const double t_win = (n - 1) * tr.dt;
  for (int i = 0; i < r; ++i) {
    const std::complex<double> z = es.eigenvalues()[i];
    if (std::abs(z.imag()) > 1e-7 * std::max(1.0, std::abs(z))) continue;
    const double zr = z.real();
    if (!(zr > 0.0)) continue;
    const double lam = -std::log(std::min(zr, 1.0)) / tr.dt;
    if (lam * t_win > 35.0) {
      res.rejected.push_back(lam);  // decayed below noise within the window
      continue;
    }
    res.lambda.push_back(lam);
  }
  std::sort(res.lambda.begin(), res.lambda.end());
  return res;
}

std::vector<RecoveredMode> recover_projectors(const HeatTraceSet& tr,
                                              const std::vector<double>& lambda) {
  const int nk = static_cast<int>(lambda.size());
  if (nk < 1) fail("need at least one rate");
  if (!tr.sources_within_obs) {
    fail("projector recovery needs every source supported inside the observation set");
  }
  const int n = tr.steps;
  const int no = static_cast<int>(tr.obs_vertices.size());
  const int ns = tr.n_sources();

  Mat vand(n, nk);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < nk; ++k) vand(j, k) = std::exp(-lambda[k] * (tr.t0 + j * tr.dt));
  }
  Eigen::JacobiSVD<Mat> vsvd(vand, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double cond =
      vsvd.singularValues()[0] / std::max(vsvd.singularValues()[nk - 1], 1e-300);
  if (cond > 1e10) {
    std::ostringstream os;
    os << "amplitude system is too ill conditioned (cond " << cond
       << "); rates too close or window too short";
    throw std::runtime_error("recovery: " + os.str());
  }

  Mat b(n, ns * no);
  for (int s = 0; s < ns; ++s) {
    for (int i = 0; i < no; ++i) b.col(s * no + i) = tr.values[s].row(i).transpose();
  }
  const Mat coef = vsvd.solve(b);  // nk x (ns*no)
  const double fit_res = (vand * coef - b).norm() / std::max(b.norm(), 1e-300);

  // a_k(v, s) = (K_k M f_s)(v) and the sources live on the observation set,
  // so K_k = A_k (M_O F)^+.
  const Mat g = tr.obs_mass.asDiagonal() * tr.sources_on_obs;  // no x ns
  Eigen::JacobiSVD<Mat> gsvd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vec inv = gsvd.singularValues();
  for (int i = 0; i < inv.size(); ++i) {
    inv[i] = inv[i] > 1e-12 * gsvd.singularValues()[0] ? 1.0 / inv[i] : 0.0;
  }
  const Mat gpinv = gsvd.matrixV() * inv.asDiagonal() * gsvd.matrixU().transpose();  // ns x no

  std::vector<RecoveredMode> modes;
  for (int k = 0; k < nk; ++k) {
    Mat a(no, ns);
    for (int s = 0; s < ns; ++s) {
      for (int i = 0; i < no; ++i) a(i, s) = coef(k, s * no + i);
    }
    Mat kern = a * gpinv;
    kern = ((kern + kern.transpose()) * 0.5).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(kern);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    int mult = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
      if (es.eigenvalues()[i] > 1e-6 * std::max(top, 1e-300)) ++mult;
    }
    RecoveredMode m;
    m.lambda = lambda[k];
    m.multiplicity = mult;
    m.kernel = kern;
    m.fit_residual = fit_res;
    modes.push_back(m);
  }
  return modes;
}

Mat kernel_factor(const Mat& kernel, double rel_cut) {
  if (kernel.rows() != kernel.cols()) fail("kernel must be square");
  Eigen::SelfAdjointEigenSolver<Mat> es(((kernel + kernel.transpose()) * 0.5).eval());
  const double top = es.eigenvalues().maxCoeff();
  std::vector<int> keep;
  for (int i = es.eigenvalues().size() - 1; i >= 0; --i) {
    if (es.eigenvalues()[i] > rel_cut * std::max(top, 1e-300)) keep.push_back(i);
  }
  Mat f(kernel.rows(), static_cast<int>(keep.size()));
  for (size_t j = 0; j < keep.size(); ++j) {
    f.col(static_cast<int>(j)) = es.eigenvectors().col(keep[j]) * std::sqrt(es.eigenvalues()[keep[j]]);
  }
  return f;
}

Alignment align_procrustes(const Mat& f1, const Mat& f2) {
  if (f1.rows() != f2.rows() || f1.cols() != f2.cols()) fail("factor shapes differ");
  Alignment al;
  if (f1.cols() == 0) {
    al.rotation = Mat::Zero(0, 0);
    al.distance = 0.0;
    return al;
  }
  Eigen::JacobiSVD<Mat> svd(f2.transpose() * f1, Eigen::ComputeFullU | Eigen::ComputeFullV);
  al.rotation = svd.matrixU() * svd.matrixV().transpose();
  al.distance = (f1 - f2 * al.rotation).norm();
  return al;
}

std::vector<SpectrumMatch> compare_spectra(const std::vector<RecoveredMode>& a,
                                           const std::vector<RecoveredMode>& b, double tol) {
  if (!(tol > 0.0)) fail("tolerance must be positive");
  std::vector<SpectrumMatch> rows;
  size_t i = 0, j = 0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  while (i < a.size() || j < b.size()) {
    SpectrumMatch r;
    if (i < a.size() && j < b.size() &&
        std::abs(a[i].lambda - b[j].lambda) <= tol * std::max(1.0, std::min(a[i].lambda, b[j].lambda))) {
      r.lambda_1 = a[i].lambda;
      r.lambda_2 = b[j].lambda;
      r.matched = true;
      r.mult_ok = a[i].multiplicity == b[j].multiplicity;
      r.kernel_dist = (a[i].kernel.rows() == b[j].kernel.rows())
                          ? (a[i].kernel - b[j].kernel).norm()
                          : nan;
      ++i;
      ++j;
    } else if (j >= b.size() || (i < a.size() && a[i].lambda < b[j].lambda)) {
      r.lambda_1 = a[i].lambda;
      r.lambda_2 = nan;
      ++i;
    } else {
      r.lambda_1 = nan;
      r.lambda_2 = b[j].lambda;
      ++j;
    }
    rows.push_back(r);
  }
  return rows;
}

void write_recovered_csv(const std::string& path, const std::vector<RecoveredMode>& modes) {
  CsvWriter csv(path, {"lambda_hat", "multiplicity", "kernel_frobenius_norm", "residual"});
  for (const auto& m : modes) {
    csv.row({fmt_g17(m.lambda), std::to_string(m.multiplicity), fmt_g17(m.kernel.norm()),
             fmt_g17(m.fit_residual)});
  }
}

void write_verdicts_csv(const std::string& path, const std::vector<SpectrumMatch>& rows) {
  CsvWriter csv(path, {"lambda_1", "lambda_2", "matched", "mult_ok", "kernel_dist"});
  for (const auto& r : rows) {
    csv.row({fmt_g17(r.lambda_1), fmt_g17(r.lambda_2), r.matched ? "1" : "0",
             r.mult_ok ? "1" : "0", fmt_g17(r.kernel_dist)});
  }
}

}  // namespace fraclab
