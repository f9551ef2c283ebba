#include "fraclab/fractional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fraclab {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument("fractional: " + what);
}

void check_alpha(const FracParams& p) {
  if (!(p.alpha > 0.0 && p.alpha < 1.0)) fail("alpha must lie in (0,1)");
  if (!(p.tolerance > 0.0)) fail("tolerance must be positive");
}

double smallest_positive(const SpectralDecomposition& d) {
  const double thr = d.zero_threshold();
  for (int k = 0; k < d.modes(); ++k) {
    if (d.eigenvalues[k] > thr) return d.eigenvalues[k];
  }
  fail("operator has no positive eigenvalues on " + d.label);
}

// Verifies the input carries no weight on the kernel modes (those cannot be
// inverted) and returns the input's mass norm.
double check_no_kernel_component(const SpectralDecomposition& d, const Vec& f) {
  const double thr = d.zero_threshold();
  const double scale = std::sqrt(f.dot(d.mass.asDiagonal() * f));
  for (int k = 0; k < d.modes() && d.eigenvalues[k] <= thr; ++k) {
    const double c = d.coeff(f, k);
    if (std::abs(c) > 1e-10 * scale) {
      std::ostringstream os;
      os << "input has kernel component " << c << " (norm " << scale
         << "); the inverse power is undefined for it";
      fail(os.str());
    }
  }
  return scale;
}

}  // namespace

Vec heat_apply(const SpectralDecomposition& d, double t, const Vec& f) {
  if (!(t >= 0.0)) fail("heat flow needs t >= 0");
  return apply_function(d, [t](double lam) { return std::exp(-lam * t); }, f);
}

Vec frac_inverse_spectral(const SpectralDecomposition& d, const FracParams& p, const Vec& f) {
  check_alpha(p);
  check_no_kernel_component(d, f);
  const double thr = d.zero_threshold();
  const double a = p.alpha;
  return apply_function(
      d,
      [thr, a](double lam) {
        return lam <= thr ? std::numeric_limits<double>::quiet_NaN() : std::pow(lam, -a);
      },
      f);
}

Vec frac_inverse_quadrature(const VecFn& heat, const FracParams& p, double lambda_min,
                            double norm_f, std::vector<QuadLevel>* diag) {
  check_alpha(p);
  if (!(lambda_min > 0.0)) fail("quadrature needs a positive smallest-eigenvalue estimate");
  if (!(norm_f >= 0.0)) fail("quadrature needs a nonnegative input norm");
  const double a = p.alpha;
  const double gamma_a = std::tgamma(a);

  double s_lo = p.s_min, s_hi = p.s_max;
  if (!(s_hi > s_lo)) {
    // Head cut: the skipped mass is at most t_min^alpha/(alpha Gamma(alpha))
    // relative to ||f||. Tail cut: dominated by e^{-lambda_min t}.
    const double t_min = std::pow(p.tolerance * a * gamma_a / 16.0, 1.0 / a);
    const double t_max = (std::log(16.0 / p.tolerance) + 5.0) / lambda_min;
    s_lo = std::log(t_min);
    s_hi = std::log(t_max);
  }

  const auto g = [&](double s) -> Vec { return std::exp(a * s) * heat(std::exp(s)); };

  // The heat flow is only a black box here, so there is no spectral floor for
  // the result norm; refine until the level delta drops below tolerance/4 of
  // the running estimate itself (with a tiny absolute floor for zero input).
  const double floor = std::max(1e-30 * norm_f, 1e-300);
  QuadResult q = trapezoid_refine_rel(g, s_lo, s_hi, 0.5, 0.25 * p.tolerance, floor);
  if (diag) *diag = q.levels;
  if (!q.converged) {
    std::ostringstream os;
    os << "quadrature did not reach tolerance " << p.tolerance << ": last step h = "
       << q.levels.back().h << ", achieved delta = "
       << q.levels.back().delta / std::max(q.levels.back().estimate_norm, floor)
       << " (relative)";
    throw std::runtime_error("fractional: " + os.str());
  }
  return q.value / gamma_a;
}

Vec frac_inverse_quadrature(const SpectralDecomposition& d, const FracParams& p, const Vec& f,
                            std::vector<QuadLevel>* diag) {
  check_alpha(p);
  const double norm_f = check_no_kernel_component(d, f);
  const double lam_min = smallest_positive(d);

  // Kernel modes hold a constant profile under the heat flow; with their
  // (tolerance-small) coefficients removed the integrand decays at both ends
  // of the log-time window.
  const double thr = d.zero_threshold();
  Vec c = d.coeffs(f);
  for (int k = 0; k < d.modes() && d.eigenvalues[k] <= thr; ++k) c[k] = 0.0;

  const auto heat = [&d, c](double t) -> Vec {
    const Vec scaled = (d.eigenvalues.array() * -t).exp().matrix().cwiseProduct(c);
    return d.eigenvectors * scaled;
  };
  return frac_inverse_quadrature(heat, p, lam_min, norm_f, diag);
}

Vec frac_power(const SpectralDecomposition& d, const FracParams& p, const Vec& f) {
  check_alpha(p);
  const double thr = d.zero_threshold();
  const double a = p.alpha;
  return apply_function(
      d, [thr, a](double lam) { return lam <= thr ? 0.0 : std::pow(lam, a); }, f);
}

WdgFit wdg_fit_samples(const std::vector<double>& t_grid, const std::vector<double>& y) {
  if (t_grid.size() != y.size()) fail("decay fit: grids differ in length");
  std::vector<double> xs, zs;
  double t_lo = 0.0, t_hi = 0.0;
  for (size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 0.0)) fail("decay fit: times must be positive");
    if (i > 0 && t_grid[i] <= t_grid[i - 1]) fail("decay fit: times must be increasing");
    if (y[i] < 1e-12) continue;  // below the trust floor
    if (xs.empty()) t_lo = t_grid[i];
    t_hi = t_grid[i];
    xs.push_back(1.0 / t_grid[i]);
    zs.push_back(std::log(y[i]));
  }
  const int n = static_cast<int>(xs.size());
  if (n < 8) {
    std::ostringstream os;
    os << "decay fit: only " << n << " samples above the 1e-12 floor, need at least 8";
    throw std::runtime_error("fractional: " + os.str());
  }

  // Least squares for z = b - mu x.
  double sx = 0.0, sz = 0.0, sxx = 0.0, sxz = 0.0;
  for (int i = 0; i < n; ++i) {
    sx += xs[i];
    sz += zs[i];
    sxx += xs[i] * xs[i];
    sxz += xs[i] * zs[i];
  }
  const double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-30) fail("decay fit: degenerate time grid");
  const double slope = (n * sxz - sx * sz) / det;
  const double b = (sz - slope * sx) / n;

  WdgFit fit;
  fit.mu = -slope;
  fit.c = std::exp(b);
  double ss = 0.0, zmin = zs[0], zmax = zs[0];
  for (int i = 0; i < n; ++i) {
    const double r = zs[i] - (b + slope * xs[i]);
    ss += r * r;
    zmin = std::min(zmin, zs[i]);
    zmax = std::max(zmax, zs[i]);
  }
  fit.rms_residual = std::sqrt(ss / n);
  fit.log_range = zmax - zmin;
  fit.n_used = n;
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;
  return fit;
}

WdgFit wdg_fit(const SpectralDecomposition& d, const Region& obs, const Vec& f,
               const std::vector<double>& t_grid) {
  if (f.size() != d.dim()) fail("decay fit: source length mismatch");
  for (int v : obs.vertices) {
    if (f[v] != 0.0) fail("decay fit: source overlaps the observation region at vertex " +
                          std::to_string(v));
  }
  for (double t : t_grid) {
    if (!(t > 0.0 && t <= 1.0)) fail("decay fit: times must lie in (0,1]");
  }
  HeatSampler sampler(d, obs.vertices, f);
  Vec mw(static_cast<Eigen::Index>(obs.vertices.size()));
  for (size_t i = 0; i < obs.vertices.size(); ++i) mw[static_cast<Eigen::Index>(i)] = d.mass[obs.vertices[i]];
  std::vector<double> y;
  y.reserve(t_grid.size());
  for (double t : t_grid) {
    const Vec u = sampler.eval(t);
    y.push_back(std::sqrt(u.dot(mw.asDiagonal() * u)));
  }
  return wdg_fit_samples(t_grid, y);
}

Lemma1Result lemma1_moment(const ManifoldPair& pair, const Vec& f, int k, const FracParams& p,
                           double delta_split) {
  check_alpha(p);
  if (k < 1) fail("derivative order k must be >= 1");
  if (!(delta_split > 0.0)) fail("split point must be positive");
  if (f.size() != pair.m1.n()) fail("source length mismatch");

  // Support must sit k layers inside the patch so A^k f transports exactly.
  if (pair.iso.patch1.margin < k) {
    std::ostringstream os;
    os << "patch margin " << pair.iso.patch1.margin << " cannot host k = " << k
       << " stencil applications";
    fail(os.str());
  }
  const std::vector<int> deep = pair.iso.patch1.shrink(k);
  for (int v = 0; v < pair.m1.n(); ++v) {
    if (f[v] != 0.0 && !std::binary_search(deep.begin(), deep.end(), v)) {
      fail("source must be supported " + std::to_string(k) + " layers inside the patch");
    }
  }

  Vec g1 = f;
  for (int j = 0; j < k; ++j) g1 = pair.m1.apply_stiffness(g1);
  const Vec f2 = pair.iso.transport(f);
  const Vec g2 = pair.iso.transport(g1);

  Lemma1Result res;
  {
    const Vec u1 = frac_inverse_spectral(pair.d1, p, g1);
    const Vec u2 = frac_inverse_spectral(pair.d2, p, g2);
    res.lhs.resize(static_cast<Eigen::Index>(pair.obs.vertices.size()));
    for (size_t i = 0; i < pair.obs.vertices.size(); ++i) {
      res.lhs[static_cast<Eigen::Index>(i)] = u1[pair.obs.vertices[i]] - u2[pair.obs2[i]];
    }
  }
  res.lhs_norm = pair.obs_norm(res.lhs);
  const double norm_f = norm_m(pair.m1, f);
  const double tol_abs = p.tolerance * std::max(res.lhs_norm, 1e-30 * std::max(norm_f, 1.0));

  const double a = p.alpha;
  double coef = 1.0;
  for (int j = 0; j < k; ++j) coef *= (a - 1.0 - j);
  coef /= std::tgamma(a);
  const double quad_tol = tol_abs / (4.0 * std::max(1.0, std::abs(coef)));

  // Tail t >= delta_split: the raw difference is well above cancellation
  // noise there and t^{alpha-1-k} is bounded.
  const auto diff = pair.diff_sampler(f);
  const double t_max = (std::log(1.0 / p.tolerance) + 5.0) / pair.lambda_min_positive();
  res.s_lo = std::log(delta_split);
  res.s_hi = std::log(t_max);
  const auto g_tail = [&](double s) -> Vec {
    return std::exp((a - k) * s) * diff.eval(std::exp(s));
  };
  QuadResult tail = romberg_refine(g_tail, res.s_lo, res.s_hi, quad_tol);

  // Head t <= delta_split through the remainder form: going below the split,
  // phi(t) = ((-t)^k/(k-1)!) \int_0^1 (1-s)^{k-1} psi(st) ds keeps full
  // relative accuracy where the direct difference is pure rounding noise.
  HeatSampler hk1(pair.d1, pair.obs.vertices, g1);
  HeatSampler hk2(pair.d2, pair.obs2, g2);
  const GaussRule& gl = gauss_legendre_24();
  double kfact = 1.0;
  for (int j = 2; j <= k; ++j) kfact *= j;
  const double km1fact = kfact / k;
  // psi(0) vanishes exactly (A^k f transports), so |psi(u)| <= u * ||A psi'||
  // and the remainder integrand decays one power faster than t^alpha; that
  // fixes the lower cut.
  const double big_g2 = 4.0 * norm_m(pair.m1, pair.m1.apply_stiffness(g1));
  const double t_head_min = std::pow(
      quad_tol * (1.0 + a) * km1fact / (2.0 * std::max(big_g2, 1e-300)), 1.0 / (1.0 + a));
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  const double head_scale = sign / km1fact;
  const auto g_head = [&](double s) -> Vec {
    const double t = std::exp(s);
    Vec inner = Vec::Zero(static_cast<Eigen::Index>(pair.obs.vertices.size()));
    for (size_t q = 0; q < gl.x.size(); ++q) {
      const double u = gl.x[q] * t;
      inner += (gl.w[q] * std::pow(1.0 - gl.x[q], k - 1)) * (hk1.eval(u) - hk2.eval(u));
    }
    return (head_scale * std::exp(a * s)) * inner;
  };
  const double split_s = res.s_lo;
  QuadResult head = romberg_refine(g_head, std::log(t_head_min), split_s, quad_tol);
  res.s_lo = std::log(t_head_min);

  res.rhs = coef * (head.value + tail.value);
  res.head_norm = std::abs(coef) * pair.obs_norm(head.value);
  res.tail_norm = std::abs(coef) * pair.obs_norm(tail.value);
  res.rhs_norm = pair.obs_norm(res.rhs);
  res.diff_norm = pair.obs_norm(res.lhs - res.rhs);
  res.rel_err = res.diff_norm / std::max(res.lhs_norm, 1e-30 * std::max(norm_f, 1.0));
  return res;
}

MomentResult prop1_moments(const ManifoldPair& pair, const Vec& f, int k_max, const FracParams& p) {
  check_alpha(p);
  if (k_max < 0) fail("k_max must be >= 0");
  const double norm_f = norm_m(pair.m1, f);
  if (!(norm_f > 0.0)) fail("source is zero");
  const Vec fn = f / norm_f;
  const auto diff = pair.diff_sampler(fn);
  const int no = static_cast<int>(pair.obs.vertices.size());

  MomentResult res;
  const double a = p.alpha;
  const double tol_eff = p.tolerance / 8.0;

  // Probe the measured difference decay toward t -> 0; its fitted rate (much
  // steeper than either manifold alone when the patch geometries agree)
  // certifies the upper truncation in s = 1/t.
  std::vector<double> t_probe, y_probe;
  for (int i = 0; i < 60; ++i) {
    const double t = 0.05 * std::pow(2.0 / 0.05, i / 59.0);
    t_probe.push_back(t);
    y_probe.push_back(pair.obs_norm(diff.eval(t)));
  }
  int above_floor = 0;
  for (double y : y_probe) {
    if (y >= 1e-12) ++above_floor;
  }
  double s_hi_lin;
  if (above_floor < 8) {
    // Nothing measurable above the floor anywhere on the probe window: the
    // integrand is at the rounding floor and the truncated moment is bounded
    // by floor * s_hi^{k+1-alpha}/(k+1-alpha). s_hi = 2 keeps that below
    // 1.5e-10 for every k <= 10, so the flagged result is certified small.
    res.difference_below_floor = true;
    res.mu_used = 0.0;
    s_hi_lin = 2.0;
  } else {
    const WdgFit fit = wdg_fit_samples(t_probe, y_probe);
    if (!(fit.mu > 0.0)) {
      throw std::runtime_error("fractional: measured pair difference does not decay toward t=0");
    }
    res.mu_used = fit.mu;
    // Solve mu s - (k_max+1) log s = log(C/tol) by fixed point.
    const double rhs = std::log(std::max(fit.c, 1.0) / tol_eff);
    double s = std::max(2.0, rhs / fit.mu);
    for (int it = 0; it < 60; ++it) {
      s = (rhs + (k_max + 1) * std::log(std::max(s, 1.0))) / fit.mu;
      s = std::max(s, 1.0);
    }
    s_hi_lin = std::max(2.0, s);
  }

  const double t_large = (std::log(1.0 / p.tolerance) + 5.0) / pair.lambda_min_positive();
  res.s_lo = -std::log(t_large);
  res.s_hi = std::log(s_hi_lin);
  if (!(res.s_hi > res.s_lo)) res.s_hi = res.s_lo + 1.0;

  // All moments share the heat samples: stack k = 0..k_max blocks.
  const auto g = [&](double sigma) -> Vec {
    const Vec dvec = diff.eval(std::exp(-sigma));
    Vec out((k_max + 1) * no);
    for (int k = 0; k <= k_max; ++k) {
      out.segment(k * no, no) = std::exp((k + 1 - a) * sigma) * dvec;
    }
    return out;
  };
  QuadResult q = trapezoid_refine(g, res.s_lo, res.s_hi, 0.25, tol_eff / 4.0);
  if (!q.converged) {
    std::ostringstream os;
    os << "fractional: moment quadrature did not converge (delta " << q.levels.back().delta
       << ", k_max " << k_max << ", fitted decay " << res.mu_used
       << "); high orders amplify the rounding floor of the measured difference, so reduce"
          " k_max or loosen the tolerance";
    throw std::runtime_error(os.str());
  }
  res.moment_norm.resize(k_max + 1);
  for (int k = 0; k <= k_max; ++k) {
    res.moment_norm[k] = pair.obs_norm(q.value.segment(k * no, no));
  }
  return res;
}

}  // namespace fraclab
