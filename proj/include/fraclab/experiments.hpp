#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fraclab {

// One verdict line: `value` compared against `threshold` under `comparator`
// ("<=" or ">="), so the margin is always on record next to the verdict.
struct CheckRow {
  std::string experiment;
  std::string check;
  double value = 0.0;
  double threshold = 0.0;
  std::string comparator = "<=";
  bool pass = false;
};

struct ExperimentReport {
  std::string name;
  std::vector<CheckRow> checks;
  bool all_pass() const;
};

struct ExperimentOptions {
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  double tolerance = 0.0;  // 0 keeps each experiment's built-in thresholds
};

// Vertex ids iy*nx + ix over the inclusive index rectangle, sorted. The
// standard way this code carves patches and observation windows out of the
// periodic grids.
std::vector<int> grid_block(int nx, int ix0, int ix1, int iy0, int iy1);

// A manifold against a randomly relabeled copy of itself: measurement maps,
// restricted heat flow, driven waves, and the heat kernel on the observation
// window must all agree. Controls: the identity relabeling agrees exactly,
// and a weight defect hidden outside the patch is detected.
ExperimentReport exp_isometric_consistency(const ExperimentOptions& opts);

// Two tori of different extent sharing a flat patch: measurement maps,
// difference moments, restricted heat data, and spectra recovered from local
// traces must all separate the pair by a wide margin. Control: the same torus
// against itself stays at zero.
ExperimentReport exp_torus_distinguish(const ExperimentOptions& opts);

// Constrained source families and the factor-peeling chain on an isometric
// pair: comparisons on N_ell agree, every peeling step checks out, and the
// peeled vector is orthogonal to the annihilated eigenfunctions. Controls: a
// non-isometric pair fails the first comparison, and an undersized patch
// margin is refused.
ExperimentReport exp_nell_pipeline(const ExperimentOptions& opts);

// Reflection double of a Dirichlet path: its spectrum embeds into the double
// via odd eigenvectors and the inverse fractional power commutes with odd
// extension. Control: the even extension breaks the identity.
ExperimentReport exp_doubling(const ExperimentOptions& opts);

// The analytic identities in one bundle: the derivative-matching integral
// identity over an alpha and k sweep, difference moments for isometric and
// non-isometric pairs, heat synthesis from wave samples, and exponential
// decay-rate fits at two separations. Control: the identity with mismatched
// alpha on the two sides is visibly violated.
ExperimentReport exp_analytic_identities(const ExperimentOptions& opts);

std::vector<std::string> experiment_names();
ExperimentReport run_experiment(const std::string& name, const ExperimentOptions& opts);

// Aggregated verdict table (experiment, check, value, threshold, comparator,
// pass), the file every experiment run ends with.
void write_report_csv(const std::string& path, const std::vector<CheckRow>& rows);

}  // namespace fraclab
