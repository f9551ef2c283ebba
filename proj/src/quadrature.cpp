#include "fraclab/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace fraclab {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument("quadrature: " + what);
}

// Shared refinement loop; `done(delta, estimate_norm)` decides convergence.
QuadResult trapezoid_core(const VecFn& g, double a, double b, double h0, int max_levels,
                          const std::function<bool(double, double)>& done) {
  if (!(b > a) || !(h0 > 0.0)) fail("bad trapezoid parameters");
  int n = std::max(2, static_cast<int>(std::ceil((b - a) / h0)));
  double h = (b - a) / n;
  Vec sum = 0.5 * (g(a) + g(b));
  for (int i = 1; i < n; ++i) sum += g(a + i * h);
  Vec est = h * sum;

  QuadResult r;
  r.levels.push_back({h, est.cwiseAbs().maxCoeff(), 0.0});
  for (int lv = 1; lv < max_levels; ++lv) {
    // New midpoints only; the previous sum is reused.
    Vec odd = Vec::Zero(est.size());
    for (int i = 0; i < n; ++i) odd += g(a + (i + 0.5) * h);
    n *= 2;
    h *= 0.5;
    sum += odd;
    Vec next = h * sum;
    const double delta = (next - est).cwiseAbs().maxCoeff();
    est = next;
    r.levels.push_back({h, est.cwiseAbs().maxCoeff(), delta});
    if (done(delta, r.levels.back().estimate_norm)) {
      r.value = est;
      r.converged = true;
      return r;
    }
  }
  r.value = est;
  return r;
}

}  // namespace

QuadResult trapezoid_refine(const VecFn& g, double a, double b, double h0, double tol,
                            int max_levels) {
  if (!(tol > 0.0)) fail("bad trapezoid tolerance");
  return trapezoid_core(g, a, b, h0, max_levels,
                        [tol](double delta, double) { return delta <= tol; });
}

QuadResult trapezoid_refine_rel(const VecFn& g, double a, double b, double h0, double rel_tol,
                                double abs_floor, int max_levels) {
  if (!(rel_tol > 0.0) || !(abs_floor >= 0.0)) fail("bad trapezoid tolerance");
  return trapezoid_core(g, a, b, h0, max_levels, [rel_tol, abs_floor](double delta, double nrm) {
    return delta <= std::max(rel_tol * nrm, abs_floor);
  });
}

QuadResult romberg_refine(const VecFn& g, double a, double b, double tol, int max_levels,
                          int panels0) {
  if (!(b > a) || !(tol > 0.0) || panels0 < 1) fail("bad romberg parameters");
  constexpr int kCols = 4;
  std::vector<std::vector<Vec>> table;  // table[level][col]

  int n = panels0;
  double h = (b - a) / n;
  Vec sum = 0.5 * (g(a) + g(b));
  for (int i = 1; i < n; ++i) sum += g(a + i * h);

  QuadResult r;
  for (int lv = 0; lv < max_levels; ++lv) {
    if (lv > 0) {
      Vec odd = Vec::Zero(sum.size());
      for (int i = 0; i < n; ++i) odd += g(a + (i + 0.5) * h);
      n *= 2;
      h *= 0.5;
      sum += odd;
    }
    std::vector<Vec> row;
    row.push_back(h * sum);
    for (int c = 1; c <= std::min(lv, kCols - 1); ++c) {
      const double f = std::pow(4.0, c);
      row.push_back((f * row[c - 1] - table[lv - 1][c - 1]) / (f - 1.0));
    }
    table.push_back(row);
    const Vec& best = row.back();
    double delta = 0.0;
    if (lv > 0) {
      const Vec& prev = table[lv - 1].back();
      delta = (best - prev).cwiseAbs().maxCoeff();
    }
    r.levels.push_back({h, best.cwiseAbs().maxCoeff(), delta});
    if (lv > 0 && delta <= tol) {
      r.value = best;
      r.converged = true;
      return r;
    }
  }
  r.value = table.back().back();
  return r;
}

const GaussRule& gauss_legendre_24() {
  // 24-point rule mapped to [0,1]; nodes/weights from the symmetric rule on
  // [-1,1] via x -> (x+1)/2, w -> w/2.
  static const GaussRule rule = [] {
    const double xs[12] = {
        0.064056892862605626, 0.191118867473616309, 0.315042679696163374,
        0.433793507626045138, 0.545421471388839536, 0.648093651936975569,
        0.740124191578554364, 0.820001985973902922, 0.886415527004401034,
        0.938274552002732758, 0.974728555971309498, 0.995187219997021360};
    const double ws[12] = {
        0.127938195346752157, 0.125837456346828296, 0.121670472927803391,
        0.115505668053725601, 0.107444270115965634, 0.097618652104113888,
        0.086190161531953275, 0.073346481411080306, 0.059298584915436781,
        0.044277438817419806, 0.028531388628933663, 0.012341229799987200};
    GaussRule r;
    for (int i = 11; i >= 0; --i) {
      r.x.push_back((1.0 - xs[i]) / 2.0);
      r.w.push_back(ws[i] / 2.0);
    }
    for (int i = 0; i < 12; ++i) {
      r.x.push_back((1.0 + xs[i]) / 2.0);
      r.w.push_back(ws[i] / 2.0);
    }
    return r;
  }();
  return rule;
}

}  // namespace fraclab
