// Command-line front end. Every subcommand reads its parameters from the
// merged configuration (file values first, command-line flags on top) and
// writes CSV files with header rows into the output directory.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fraclab/config.hpp"
#include "fraclab/csv.hpp"
#include "fraclab/experiments.hpp"
#include "fraclab/fractional.hpp"
#include "fraclab/manifold.hpp"
#include "fraclab/pair.hpp"
#include "fraclab/recovery.hpp"
#include "fraclab/sources.hpp"
#include "fraclab/spectral.hpp"
#include "fraclab/wave.hpp"

namespace {

using namespace fraclab;

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument("cli: " + what); }

std::string out_path(const Config& cfg, const std::string& file) {
  const std::string dir = cfg.get("out", "out");
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / file).string();
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(item);
  return parts;
}

int parse_int(const std::string& s, const std::string& what) {
  size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    fail(what + " has a malformed integer: " + s);
  }
  if (used != s.size()) fail(what + " has a malformed integer: " + s);
  return v;
}

// Builder name (torus, cycle, path) with its dimension keys, or a CSV path.
DiscreteManifold build_mesh(const Config& cfg, const std::string& key) {
  const std::string spec = cfg.get(key, "");
  if (spec.empty()) fail("this subcommand needs " + key + "= (torus, cycle, path, or a CSV path)");
  if (spec == "torus") {
    const int nx = cfg.get_int("nx", 8);
    const int ny = cfg.get_int("ny", nx);
    return build_flat_torus(nx, ny, cfg.get_double("hx", 1.0), cfg.get_double("hy", 1.0));
  }
  if (spec == "cycle") return build_cycle(cfg.get_int("n", 12));
  if (spec == "path") return build_path_dirichlet(cfg.get_int("n", 6));
  return read_mesh(spec);
}

// Vertex set syntax: "block:ix0,ix1,iy0,iy1" (needs nx for the row stride)
// or a plain comma-separated id list.
std::vector<int> parse_vertices(const Config& cfg, const std::string& key,
                                const DiscreteManifold& m) {
  const std::string spec = cfg.get(key, "");
  if (spec.empty()) {
    fail("this subcommand needs " + key + "= (block:ix0,ix1,iy0,iy1 or id,id,...)");
  }
  std::vector<int> verts;
  if (spec.rfind("block:", 0) == 0) {
    const auto parts = split_commas(spec.substr(6));
    if (parts.size() != 4) fail(key + ": block needs exactly ix0,ix1,iy0,iy1");
    if (!cfg.has("nx")) fail(key + ": block syntax needs nx= for the row stride");
    verts = grid_block(cfg.get_int("nx", 0), parse_int(parts[0], key), parse_int(parts[1], key),
                       parse_int(parts[2], key), parse_int(parts[3], key));
  } else {
    for (const auto& p : split_commas(spec)) verts.push_back(parse_int(p, key));
  }
  for (int v : verts) {
    if (v < 0 || v >= m.n()) {
      fail(key + ": vertex " + std::to_string(v) + " outside mesh of size " +
           std::to_string(m.n()));
    }
  }
  return verts;
}

Vec indicator(int n, int v) {
  Vec f = Vec::Zero(n);
  f[v] = 1.0;
  return f;
}

// Point source usable with inverse powers: on a closed manifold the constant
// mode is removed first.
Vec point_source(const DiscreteManifold& m, int v) {
  Vec f = indicator(m.n(), v);
  if (m.closed()) f.array() -= m.mass.dot(f) / m.mass.sum();
  return f;
}

int cmd_mesh(const Config& cfg) {
  const DiscreteManifold m = build_mesh(cfg, "mesh");
  const std::string path = out_path(cfg, "mesh.csv");
  write_mesh(m, path);
  std::cout << m.label << ": " << m.n() << " vertices, " << m.weights.nonZeros() / 2
            << " edges, " << m.boundary.size() << " boundary -> " << path << "\n";
  return 0;
}

int cmd_eigs(const Config& cfg) {
  const DiscreteManifold m = build_mesh(cfg, "mesh");
  const SpectralDecomposition d = decompose(m);
  const std::string path = out_path(cfg, "spectrum.csv");
  write_spectrum_csv(path, d, cfg.get_double("group_tol", 1e-9));
  std::cout << m.label << ": " << d.modes() << " modes, lambda in [" << d.eigenvalues[0] << ", "
            << d.eigenvalues[d.modes() - 1] << "] -> " << path << "\n";
  return 0;
}

int cmd_frac(const Config& cfg) {
  const DiscreteManifold m = build_mesh(cfg, "mesh");
  const SpectralDecomposition d = decompose(m);
  FracParams p;
  p.alpha = cfg.get_double("alpha", 0.5);
  p.tolerance = cfg.get_double("tolerance", 1e-9);
  const Vec f = point_source(m, cfg.get_int("vertex", 0));

  std::vector<QuadLevel> levels;
  const Vec uq = frac_inverse_quadrature(d, p, f, &levels);
  const Vec us = frac_inverse_spectral(d, p, f);

  {
    CsvWriter csv(out_path(cfg, "frac.csv"), {"vertex", "quadrature", "spectral", "abs_diff"});
    for (int v = 0; v < m.n(); ++v) {
      csv.row({std::to_string(v), fmt_g17(uq[v]), fmt_g17(us[v]),
               fmt_g17(std::abs(uq[v] - us[v]))});
    }
  }
  {
    CsvWriter csv(out_path(cfg, "frac_levels.csv"), {"level", "h", "estimate_norm", "delta"});
    for (size_t i = 0; i < levels.size(); ++i) {
      csv.row({std::to_string(i), fmt_g17(levels[i].h), fmt_g17(levels[i].estimate_norm),
               fmt_g17(levels[i].delta)});
    }
  }
  const double gap = (uq - us).cwiseAbs().maxCoeff();
  std::cout << m.label << ": alpha=" << p.alpha << ", quadrature vs spectral max gap " << gap
            << " (" << levels.size() << " levels) -> " << out_path(cfg, "frac.csv") << "\n";
  return 0;
}

int cmd_heat_trace(const Config& cfg) {
  const DiscreteManifold m = build_mesh(cfg, "mesh");
  const SpectralDecomposition d = decompose(m);
  const Region obs = Region::make(m, parse_vertices(cfg, "region", m));
  const std::vector<int> src_ids = parse_vertices(cfg, "source", m);
  Mat src(m.n(), static_cast<int>(src_ids.size()));
  for (size_t j = 0; j < src_ids.size(); ++j) src.col(j) = indicator(m.n(), src_ids[j]);

  const HeatTraceSet tr = sample_traces(d, src, obs, cfg.get_double("t0", 0.05),
                                        cfg.get_double("dt", 0.1), cfg.get_int("steps", 40));
  const std::string path = out_path(cfg, "traces.csv");
  write_traces_csv(path, tr);
  std::cout << m.label << ": " << tr.n_sources() << " sources x " << tr.obs_vertices.size()
            << " vertices x " << tr.steps << " times -> " << path << "\n";
  return 0;
}

int cmd_wave(const Config& cfg) {
  const DiscreteManifold m = build_mesh(cfg, "mesh");
  const SpectralDecomposition d = decompose(m);
  const double t_eval = cfg.get_double("t", 2.0);
  const double dt_auto = 0.19 / std::sqrt(lambda_max_bound(m));
  const TimeProfile prof = TimeProfile::bump(0.1, 0.9, 1.0, cfg.get_double("dt", dt_auto));
  const Vec v = indicator(m.n(), cfg.get_int("vertex", 0));
  const Vec u = duhamel_solve(d, prof, v, t_eval);

  CsvWriter csv(out_path(cfg, "wave.csv"), {"t", "vertex", "value"});
  for (int i = 0; i < m.n(); ++i) csv.row({fmt_g17(t_eval), std::to_string(i), fmt_g17(u[i])});
  std::cout << m.label << ": driven wave at t=" << t_eval << ", |u|_m = " << norm_m(m, u)
            << " -> " << out_path(cfg, "wave.csv") << "\n";
  return 0;
}

int cmd_s2s(const Config& cfg) {
  const DiscreteManifold m1 = build_mesh(cfg, "mesh");
  const DiscreteManifold m2 = build_mesh(cfg, "mesh2");
  const std::vector<int> patch = parse_vertices(cfg, "region", m1);
  const std::vector<int> obs = parse_vertices(cfg, "obs", m1);
  // The identification sends each patch vertex to the same id on the second
  // mesh; meshes with different labelings should be aligned beforehand.
  const ManifoldPair pair = ManifoldPair::make(m1, m2, patch, patch, obs);

  FracParams p;
  p.alpha = cfg.get_double("alpha", 0.5);
  p.tolerance = cfg.get_double("tolerance", 1e-8);
  const Region patch_region = Region::make(m1, patch);
  const SourceSpace space = cfg.has("ell")
                                ? build_source_space_nell(pair, patch_region, cfg.get_int("ell", 0))
                                : build_source_space(m1, patch_region, SourceKind::Dtilde0);

  const auto rows = compare_s2s(pair, space, p);
  const std::string path = out_path(cfg, "s2s.csv");
  write_s2s_csv(path, rows);
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, r.rel_discrepancy);
  std::cout << m1.label << " vs " << m2.label << ": " << space.dim()
            << " sources, max rel discrepancy " << worst << " -> " << path << "\n";
  return 0;
}

int cmd_recover(const Config& cfg) {
  const std::uint64_t seed = cfg.get_seed(1);
  const auto recover_one = [&](const DiscreteManifold& m) {
    const SpectralDecomposition d = decompose(m);
    const Region obs = Region::make(m, parse_vertices(cfg, "region", m));
    std::vector<int> src_ids;
    if (cfg.has("source")) {
      src_ids = parse_vertices(cfg, "source", m);
    } else {
      src_ids.assign(obs.vertices.begin(),
                     obs.vertices.begin() + std::min<size_t>(4, obs.vertices.size()));
    }
    Mat src(m.n(), static_cast<int>(src_ids.size()));
    for (size_t j = 0; j < src_ids.size(); ++j) src.col(j) = indicator(m.n(), src_ids[j]);
    const HeatTraceSet tr = sample_traces(d, src, obs, cfg.get_double("t0", 0.05),
                                          cfg.get_double("dt", 0.12), cfg.get_int("steps", 60));
    const PencilResult pr = pencil_eigenvalues(tr, cfg.get_int("rank", 7), seed);
    return recover_projectors(tr, pr.lambda);
  };

  const DiscreteManifold m1 = build_mesh(cfg, "mesh");
  const auto modes1 = recover_one(m1);
  const std::string path = out_path(cfg, "recovered.csv");
  write_recovered_csv(path, modes1);
  std::cout << m1.label << ": recovered " << modes1.size() << " rates";
  for (const auto& md : modes1) std::cout << " " << md.lambda << "(x" << md.multiplicity << ")";
  std::cout << " -> " << path << "\n";

  if (cfg.has("mesh2")) {
    const DiscreteManifold m2 = build_mesh(cfg, "mesh2");
    const auto modes2 = recover_one(m2);
    const auto verdicts = compare_spectra(modes1, modes2, cfg.get_double("tolerance", 1e-6));
    const std::string vpath = out_path(cfg, "verdicts.csv");
    write_verdicts_csv(vpath, verdicts);
    int matched = 0;
    for (const auto& v : verdicts) matched += v.matched ? 1 : 0;
    std::cout << m1.label << " vs " << m2.label << ": " << matched << "/" << verdicts.size()
              << " rates matched -> " << vpath << "\n";
  }
  return 0;
}

int cmd_double(const Config& cfg) {
  const DiscreteManifold m = build_mesh(cfg, "mesh");
  const DoubleManifold dbl = double_manifold(m);
  write_mesh(dbl.doubled, out_path(cfg, "double_mesh.csv"));
  const SpectralDecomposition d_half = decompose(m);
  const SpectralDecomposition d_dbl = decompose(dbl.doubled);

  double worst_gap = 0.0;
  for (int k = 0; k < d_half.modes(); ++k) {
    const double lam = d_half.eigenvalues[k];
    double best = std::abs(d_dbl.eigenvalues[0] - lam);
    for (int j = 1; j < d_dbl.modes(); ++j) {
      best = std::min(best, std::abs(d_dbl.eigenvalues[j] - lam));
    }
    worst_gap = std::max(worst_gap, best / std::max(1.0, lam));
  }

  int v = cfg.get_int("vertex", -1);
  if (v < 0) v = m.interior().at(m.interior().size() / 2);
  if (m.is_boundary(v)) fail("double: vertex= must be interior");
  Vec f = indicator(m.n(), v);
  FracParams p;
  p.alpha = cfg.get_double("alpha", 0.5);
  p.tolerance = cfg.get_double("tolerance", 1e-9);
  const Vec lhs = frac_inverse_spectral(d_half, p, f);
  const Vec rhs = dbl.restrict_plus(frac_inverse_spectral(d_dbl, p, dbl.odd_extension(f)));
  Vec diff = lhs - rhs;
  for (int b : m.boundary) diff[b] = 0.0;
  const double rel = norm_m(m, diff) / norm_m(m, lhs);

  CsvWriter csv(out_path(cfg, "double_identity.csv"),
                {"alpha", "vertex", "rel_err", "spectrum_gap"});
  csv.row({fmt_g17(p.alpha), std::to_string(v), fmt_g17(rel), fmt_g17(worst_gap)});
  std::cout << m.label << ": double " << dbl.doubled.label << ", spectrum gap " << worst_gap
            << ", inverse-power identity rel err " << rel << " -> "
            << out_path(cfg, "double_identity.csv") << "\n";
  return 0;
}

int cmd_exp(const Config& cfg, const std::string& name) {
  ExperimentOptions opts;
  opts.out_dir = cfg.get("out", "out");
  opts.seed = cfg.get_seed(1);
  opts.tolerance = cfg.get_double("tolerance", 0.0);

  std::vector<std::string> names;
  if (name == "all") {
    names = experiment_names();
  } else {
    names.push_back(name);
  }

  std::vector<CheckRow> all_rows;
  bool ok = true;
  for (const auto& n : names) {
    const ExperimentReport rep = run_experiment(n, opts);
    for (const auto& c : rep.checks) {
      std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.experiment << "/" << c.check << ": "
                << c.value << " " << c.comparator << " " << c.threshold << "\n";
      all_rows.push_back(c);
    }
    ok = ok && rep.all_pass();
  }
  const std::string report = out_path(cfg, "report.csv");
  write_report_csv(report, all_rows);
  std::cout << (ok ? "all checks passed" : "CHECKS FAILED") << " -> " << report << "\n";
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"discrete-manifold laboratory: heat, wave, and fractional operators with\n"
               "source-to-solution comparison, spectral recovery, and experiment reports"};
  app.require_subcommand(1);

  std::string config_path, out_dir, exp_name;
  std::uint64_t seed = 1;
  double tol = 0.0;
  auto* opt_config = app.add_option("--config", config_path, "key=value configuration file");
  auto* opt_out = app.add_option("--out", out_dir, "output directory (default out)");
  auto* opt_seed = app.add_option("--seed", seed, "deterministic seed (default 1)");
  auto* opt_tol = app.add_option("--tol", tol, "override the default tolerance");

  auto* sc_mesh = app.add_subcommand("mesh", "build a mesh and write it as CSV");
  auto* sc_eigs = app.add_subcommand("eigs", "eigendecomposition with multiplicity groups");
  auto* sc_frac = app.add_subcommand("frac", "inverse fractional power, both routes");
  auto* sc_trace = app.add_subcommand("heat-trace", "restricted heat traces on a time grid");
  auto* sc_wave = app.add_subcommand("wave", "driven wave solution at a fixed time");
  auto* sc_s2s = app.add_subcommand("s2s", "compare source-to-solution maps of a pair");
  auto* sc_recover = app.add_subcommand("recover", "eigenvalues and kernels from heat traces");
  auto* sc_double = app.add_subcommand("double", "double a manifold with boundary");
  auto* sc_exp = app.add_subcommand("exp", "run a named experiment (or 'all')");
  sc_exp->add_option("name", exp_name, "experiment name")->required();
  for (auto* sc : {sc_mesh, sc_eigs, sc_frac, sc_trace, sc_wave, sc_s2s, sc_recover, sc_double,
                   sc_exp}) {
    sc->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);

  try {
    Config cfg;
    if (opt_config->count() > 0) cfg = load_config(config_path);
    if (opt_out->count() > 0) cfg.set("out", out_dir);
    if (opt_seed->count() > 0) cfg.set("seed", std::to_string(seed));
    if (opt_tol->count() > 0) cfg.set("tolerance", fmt_g17(tol));

    if (sc_mesh->parsed()) return cmd_mesh(cfg);
    if (sc_eigs->parsed()) return cmd_eigs(cfg);
    if (sc_frac->parsed()) return cmd_frac(cfg);
    if (sc_trace->parsed()) return cmd_heat_trace(cfg);
    if (sc_wave->parsed()) return cmd_wave(cfg);
    if (sc_s2s->parsed()) return cmd_s2s(cfg);
    if (sc_recover->parsed()) return cmd_recover(cfg);
    if (sc_double->parsed()) return cmd_double(cfg);
    if (sc_exp->parsed()) return cmd_exp(cfg, exp_name);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
