#pragma once

#include <string>
#include <vector>

#include "fraclab/manifold.hpp"
#include "fraclab/spectral.hpp"

namespace fraclab {

// Time-dependent source amplitude. The analytic bump is C^infinity with
// compact support [t_on, t_off]; tabulated profiles interpolate linearly.
struct TimeProfile {
  enum class Kind { Bump, Table };
  Kind kind = Kind::Bump;
  double t_on = 0.0, t_off = 1.0, amplitude = 1.0;
  std::vector<double> times, values;  // Table only, uniform grid
  double grid_dt = 0.0;               // sampling step the profile resolves

  static TimeProfile bump(double t_on, double t_off, double amplitude, double grid_dt);
  static TimeProfile table(const std::vector<double>& times, const std::vector<double>& values);

  double eval(double t) const;
  double t_end() const;
};

// sin(t sqrt(lambda))/sqrt(lambda), continued by t at lambda = 0.
double wave_kernel_scalar(double lambda, double t);

// Kernel of the wave group applied spectrally.
Vec wave_kernel_apply(const SpectralDecomposition& d, double t, const Vec& f);

// Solution at time t of u'' + L u = a(t) v, u(0) = u'(0) = 0, through the
// per-mode Duhamel integral \int_0^t a(s) sin((t-s) sqrt(lambda))/sqrt(lambda) ds
// evaluated by Romberg quadrature to quad_tol. The profile grid must resolve
// the fastest mode (grid_dt * sqrt(lambda_max) small) or this throws.
Vec duhamel_solve(const SpectralDecomposition& d, const TimeProfile& profile, const Vec& v,
                  double t, double quad_tol = 1e-12);

// Time stepper on the stiffness action only; shares nothing with the
// spectral route. Classic fourth-order Runge-Kutta on (u, u').
struct OdeResult {
  Vec u, du;
  std::vector<double> sample_times;
  std::vector<double> energies;  // 0.5 ||u'||_m^2 + 0.5 (Lu, u)_m at samples
  double dt = 0.0;
  int steps = 0;
};
OdeResult ode_oracle(const DiscreteManifold& m, const TimeProfile& profile, const Vec& v,
                     double t_eval, double dt);

// Upper bound on the top eigenvalue from the stencil alone.
double lambda_max_bound(const DiscreteManifold& m);

// Heat flow synthesized from wave kernel samples:
//   e^{-tL} = (t^{-3/2}/(4 sqrt(pi))) \int_0^inf e^{-sigma^2/(4t)} 2 sigma
//             sin(sigma sqrt(L))/sqrt(L) dsigma,
// each mode evaluated by oscillation-resolving Simpson quadrature to quad_tol.
double transmute_scalar(double lambda, double t, double quad_tol = 1e-10);
Vec transmute_heat(const SpectralDecomposition& d, double t, const Vec& f,
                   double quad_tol = 1e-10);

}  // namespace fraclab
