#pragma once

#include <functional>
#include <vector>

#include "fraclab/manifold.hpp"

namespace fraclab {

using VecFn = std::function<Vec(double)>;

// One refinement level of a uniform-grid rule.
struct QuadLevel {
  double h = 0.0;
  double estimate_norm = 0.0;
  double delta = 0.0;  // change from the previous level, sup norm
};

struct QuadResult {
  Vec value;
  std::vector<QuadLevel> levels;
  bool converged = false;
};

// Uniform trapezoid on [a,b], halving the step (and reusing samples) until
// two successive estimates differ by at most tol in sup norm. Suited to
// integrands that decay at both endpoints, where the trapezoid rule converges
// much faster than its generic order.
QuadResult trapezoid_refine(const VecFn& g, double a, double b, double h0, double tol,
                            int max_levels = 16);

// Same loop with the convergence test taken relative to the running estimate:
// stop once delta <= max(rel_tol * ||estimate||, abs_floor).
QuadResult trapezoid_refine_rel(const VecFn& g, double a, double b, double h0, double rel_tol,
                                double abs_floor, int max_levels = 16);

// Romberg extrapolation of the trapezoid table, for smooth integrands with
// non-negligible endpoint values. Same convergence contract as above.
QuadResult romberg_refine(const VecFn& g, double a, double b, double tol, int max_levels = 14,
                          int panels0 = 8);

// Fixed-order Gauss-Legendre nodes/weights on [0,1].
struct GaussRule {
  std::vector<double> x, w;
};
const GaussRule& gauss_legendre_24();

}  // namespace fraclab
