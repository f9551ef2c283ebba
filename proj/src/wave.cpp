#include "fraclab/wave.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "fraclab/quadrature.hpp"

namespace fraclab {

namespace {
[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument("wave: " + what); }
}  // namespace

TimeProfile TimeProfile::bump(double t_on, double t_off, double amplitude, double grid_dt) {
  if (!(t_off > t_on) || !(t_on >= 0.0)) fail("bump needs 0 <= t_on < t_off");
  if (!(grid_dt > 0.0)) fail("bump needs a positive grid step");
  TimeProfile p;
  p.kind = Kind::Bump;
  p.t_on = t_on;
  p.t_off = t_off;
  p.amplitude = amplitude;
  p.grid_dt = grid_dt;
  return p;
}

TimeProfile TimeProfile::table(const std::vector<double>& times, const std::vector<double>& values) {
  if (times.size() != values.size() || times.size() < 2) fail("table needs matching grids, >= 2 points");
  const double dt = times[1] - times[0];
  if (!(dt > 0.0) || times[0] != 0.0) fail("table grid must start at 0 and increase");
  for (size_t i = 1; i < times.size(); ++i) {
    if (std::abs(times[i] - times[i - 1] - dt) > 1e-12 * std::max(1.0, dt)) {
      fail("table grid must be uniform");
    }
  }
  TimeProfile p;
  p.kind = Kind::Table;
  p.times = times;
  p.values = values;
  p.grid_dt = dt;
  p.t_on = 0.0;
  p.t_off = times.back();
  return p;
}

double TimeProfile::eval(double t) const {
  if (kind == Kind::Bump) {
    if (t <= t_on || t >= t_off) return 0.0;
    const double x = 2.0 * (t - t_on) / (t_off - t_on) - 1.0;  // (-1,1)
    return amplitude * std::exp(-1.0 / (1.0 - x * x));
  }
  if (t <= 0.0) return values.front();
  if (t >= times.back()) return values.back();
  const double pos = t / grid_dt;
  const size_t i = std::min(static_cast<size_t>(pos), times.size() - 2);
  const double w = pos - static_cast<double>(i);
  return values[i] * (1.0 - w) + values[i + 1] * w;
}

double TimeProfile::t_end() const { return t_off; }

double wave_kernel_scalar(double lambda, double t) {
  if (lambda < 0.0) {
    // Numerically zero eigenvalues can round slightly negative.
    if (lambda > -1e-10) lambda = 0.0;
    else fail("negative eigenvalue in wave kernel");
  }
  const double r = std::sqrt(lambda);
  const double x = t * r;
  if (x < 1e-8) return t * (1.0 - x * x / 6.0);
  return std::sin(x) / r;
}

Vec wave_kernel_apply(const SpectralDecomposition& d, double t, const Vec& f) {
  return apply_function(d, [t](double lam) { return wave_kernel_scalar(lam, t); }, f);
}

double lambda_max_bound(const DiscreteManifold& m) {
  double bound = 0.0;
  for (int v = 0; v < m.n(); ++v) {
    double strength = 0.0;
    for (SpMat::InnerIterator it(m.weights, v); it; ++it) strength += it.value();
    bound = std::max(bound, 2.0 * strength / m.mass[v]);
  }
  return bound;
}

Vec duhamel_solve(const SpectralDecomposition& d, const TimeProfile& profile, const Vec& v,
                  double t, double quad_tol) {
  if (!(t >= 0.0)) fail("duhamel needs t >= 0");
  const double lam_max = d.eigenvalues[d.modes() - 1];
  if (profile.grid_dt * std::sqrt(std::max(lam_max, 0.0)) > 0.2) {
    std::ostringstream os;
    os << "profile grid step " << profile.grid_dt << " cannot resolve the fastest mode (need <= "
       << 0.2 / std::sqrt(lam_max) << ")";
    fail(os.str());
  }
  const Vec c = d.coeffs(v);
  const double b = std::min(t, profile.t_end());
  if (!(b > 0.0)) return Vec::Zero(d.dim());

  const auto g = [&](double s) -> Vec {
    const double amp = profile.eval(s);
    Vec out(d.modes());
    for (int k = 0; k < d.modes(); ++k) {
      out[k] = amp * wave_kernel_scalar(d.eigenvalues[k], t - s);
    }
    return out;
  };
  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  QuadResult q = romberg_refine(g, 0.0, b, quad_tol * scale, 14, 16);
  if (!q.converged) {
    throw std::runtime_error("wave: duhamel quadrature did not converge, delta = " +
                             std::to_string(q.levels.back().delta));
  }
  return d.eigenvectors * q.value.cwiseProduct(c);
}

OdeResult ode_oracle(const DiscreteManifold& m, const TimeProfile& profile, const Vec& v,
                     double t_eval, double dt) {
  if (!(t_eval > 0.0) || !(dt > 0.0)) fail("ode oracle needs positive t_eval and dt");
  const double bound = lambda_max_bound(m);
  if (dt > 0.1 / std::sqrt(std::max(bound, 1e-30))) {
    std::ostringstream os;
    os << "step " << dt << " too large for stability: need dt <= " << 0.1 / std::sqrt(bound)
       << " (top eigenvalue bound " << bound << ")";
    fail(os.str());
  }
  const int steps = std::max(1, static_cast<int>(std::ceil(t_eval / dt)));
  const double h = t_eval / steps;

  OdeResult r;
  r.dt = h;
  r.steps = steps;
  Vec u = Vec::Zero(m.n()), w = Vec::Zero(m.n());
  const auto acc = [&](double time, const Vec& uu) -> Vec {
    return profile.eval(time) * v - m.apply_stiffness(uu);
  };
  const auto energy = [&](const Vec& uu, const Vec& ww) {
    return 0.5 * dot_m(m, ww, ww) + 0.5 * dot_m(m, m.apply_stiffness(uu), uu);
  };
  const int sample_every = std::max(1, steps / 200);
  r.sample_times.push_back(0.0);
  r.energies.push_back(0.0);
  for (int i = 0; i < steps; ++i) {
    const double t0 = i * h;
    const Vec k1u = w, k1w = acc(t0, u);
    const Vec k2u = w + 0.5 * h * k1w, k2w = acc(t0 + 0.5 * h, u + 0.5 * h * k1u);
    const Vec k3u = w + 0.5 * h * k2w, k3w = acc(t0 + 0.5 * h, u + 0.5 * h * k2u);
    const Vec k4u = w + h * k3w, k4w = acc(t0 + h, u + h * k3u);
    u += (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    w += (h / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    if ((i + 1) % sample_every == 0 || i + 1 == steps) {
      const double e = energy(u, w);
      r.sample_times.push_back((i + 1) * h);
      r.energies.push_back(e);
      if (!std::isfinite(e) || e > 1e12) {
        throw std::runtime_error("wave: time stepper went unstable at t = " +
                                 std::to_string((i + 1) * h));
      }
    }
  }
  r.u = u;
  r.du = w;
  return r;
}

double transmute_scalar(double lambda, double t, double quad_tol) {
  if (!(t > 0.0)) fail("transmutation needs t > 0");
  if (lambda < 0.0 && lambda > -1e-10) lambda = 0.0;
  if (lambda < 0.0) fail("negative eigenvalue in transmutation");
  // Gaussian tail cut at e^{-sigma_max^2/(4t)} ~ 1e-18, oscillation resolved
  // with ~20 points per period before refinement starts.
  const double sigma_max = 2.0 * std::sqrt(t * 41.5);
  const double r = std::sqrt(lambda);
  int n = 64;
  while (n * 2.0 * std::numbers::pi < 20.0 * sigma_max * std::max(r, 1e-30) && n < (1 << 20)) {
    n *= 2;
  }

  const auto integrand = [&](double s) {
    return std::exp(-s * s / (4.0 * t)) * 2.0 * s * wave_kernel_scalar(lambda, s);
  };
  // Composite Simpson with halving.
  const auto simpson = [&](int panels) {
    const double h = sigma_max / panels;
    double acc = integrand(0.0) + integrand(sigma_max);
    for (int i = 1; i < panels; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * integrand(i * h);
    return acc * h / 3.0;
  };
  double prev = simpson(n);
  for (int lv = 0; lv < 14; ++lv) {
    n *= 2;
    const double cur = simpson(n);
    if (std::abs(cur - prev) <= quad_tol * std::max(1.0, std::abs(cur))) {
      prev = cur;
      break;
    }
    prev = cur;
  }
  return prev * std::pow(t, -1.5) / (4.0 * std::sqrt(std::numbers::pi));
}

Vec transmute_heat(const SpectralDecomposition& d, double t, const Vec& f, double quad_tol) {
  const Vec c = d.coeffs(f);
  Vec w(d.modes());
  for (int k = 0; k < d.modes(); ++k) w[k] = transmute_scalar(d.eigenvalues[k], t, quad_tol);
  return d.eigenvectors * w.cwiseProduct(c);
}

}  // namespace fraclab
