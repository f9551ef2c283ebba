#include "fraclab/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "fraclab/csv.hpp"

namespace fraclab {

namespace {

void fail(const std::string& what) { throw std::invalid_argument(what); }

// Breadth-first reachability over positive-weight edges.
int reachable_count(const SpMat& w, int start) {
  const int n = static_cast<int>(w.rows());
  std::vector<char> seen(n, 0);
  std::deque<int> q{start};
  seen[start] = 1;
  int count = 1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop_front();
    for (SpMat::InnerIterator it(w, v); it; ++it) {
      if (it.value() > 0.0 && !seen[it.row()]) {
        seen[it.row()] = 1;
        ++count;
        q.push_back(static_cast<int>(it.row()));
      }
    }
  }
  return count;
}

}  // namespace

bool DiscreteManifold::is_boundary(int v) const {
  return std::binary_search(boundary.begin(), boundary.end(), v);
}

std::vector<int> DiscreteManifold::interior() const {
  std::vector<int> out;
  out.reserve(n() - boundary.size());
  for (int v = 0; v < n(); ++v)
    if (!is_boundary(v)) out.push_back(v);
  return out;
}

std::vector<int> DiscreteManifold::neighbors(int v) const {
  std::vector<int> out;
  for (SpMat::InnerIterator it(weights, v); it; ++it)
    if (it.value() > 0.0) out.push_back(static_cast<int>(it.row()));
  std::sort(out.begin(), out.end());
  return out;
}

Vec DiscreteManifold::apply_stiffness(const Vec& f) const {
  if (f.size() != n()) fail("apply_stiffness: dimension mismatch");
  Vec g = f;
  for (int b : boundary) g[b] = 0.0;  // Dirichlet data
  Vec out = Vec::Zero(n());
  for (int v = 0; v < n(); ++v) {
    double acc = 0.0;
    for (SpMat::InnerIterator it(weights, v); it; ++it)
      acc += it.value() * (g[v] - g[it.row()]);
    out[v] = acc / mass[v];
  }
  for (int b : boundary) out[b] = 0.0;
  return out;
}

void DiscreteManifold::validate() const {
  const int nn = n();
  if (nn <= 0) fail("manifold: empty vertex set");
  if (weights.rows() != nn || weights.cols() != nn) fail("manifold: weight matrix dimension mismatch");
  if (coords.rows() != 0 && (coords.rows() != nn || coords.cols() != 3))
    fail("manifold: coordinate block must be n x 3 when present");
  for (int v = 0; v < nn; ++v)
    if (!(mass[v] > 0.0)) fail("manifold: nonpositive vertex mass");
  for (int v = 0; v < nn; ++v) {
    for (SpMat::InnerIterator it(weights, v); it; ++it) {
      if (it.row() == it.col() && it.value() != 0.0) fail("manifold: diagonal weight");
      if (it.value() < 0.0) fail("manifold: negative weight");
      if (weights.coeff(it.col(), it.row()) != it.value()) fail("manifold: asymmetric weights");
    }
  }
  if (!boundary.empty()) {
    if (!std::is_sorted(boundary.begin(), boundary.end())) fail("manifold: unsorted boundary list");
    if (std::adjacent_find(boundary.begin(), boundary.end()) != boundary.end())
      fail("manifold: duplicate boundary vertex");
    if (boundary.front() < 0 || boundary.back() >= nn) fail("manifold: boundary vertex out of range");
    if (static_cast<int>(boundary.size()) >= nn) fail("manifold: no interior vertices");
  }
  if (reachable_count(weights, 0) != nn) fail("manifold: graph is disconnected");
}

double dot_m(const DiscreteManifold& m, const Vec& a, const Vec& b) {
  return (m.mass.array() * a.array() * b.array()).sum();
}

double norm_m(const DiscreteManifold& m, const Vec& a) { return std::sqrt(dot_m(m, a, a)); }

DiscreteManifold build_flat_torus(int nx, int ny, double hx, double hy) {
  if (nx < 3 || ny < 3) fail("build_flat_torus: nx and ny must be >= 3 (shorter cycles duplicate edges)");
  if (!(hx > 0.0) || !(hy > 0.0)) fail("build_flat_torus: spacings must be positive");
  const int n = nx * ny;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(4 * n);
  const double wx = hy / hx, wy = hx / hy;
  auto id = [nx](int ix, int iy) { return iy * nx + ix; };
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const int a = id(ix, iy);
      const int bx = id((ix + 1) % nx, iy);
      const int by = id(ix, (iy + 1) % ny);
      trips.emplace_back(a, bx, wx);
      trips.emplace_back(bx, a, wx);
      trips.emplace_back(a, by, wy);
      trips.emplace_back(by, a, wy);
    }
  }
  DiscreteManifold m;
  m.weights.resize(n, n);
  m.weights.setFromTriplets(trips.begin(), trips.end());
  m.mass = Vec::Constant(n, hx * hy);
  m.label = "torus_" + std::to_string(nx) + "x" + std::to_string(ny);
  m.validate();
  return m;
}

DiscreteManifold build_cycle(int n) {
  if (n < 3) fail("build_cycle: need n >= 3");
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * n);
  for (int v = 0; v < n; ++v) {
    const int w = (v + 1) % n;
    trips.emplace_back(v, w, 1.0);
    trips.emplace_back(w, v, 1.0);
  }
  DiscreteManifold m;
  m.weights.resize(n, n);
  m.weights.setFromTriplets(trips.begin(), trips.end());
  m.mass = Vec::Ones(n);
  m.label = "cycle_" + std::to_string(n);
  m.validate();
  return m;
}

DiscreteManifold build_path_dirichlet(int n_interior) {
  if (n_interior < 1) fail("build_path_dirichlet: need at least one interior vertex");
  const int n = n_interior + 2;
  std::vector<Eigen::Triplet<double>> trips;
  for (int v = 0; v + 1 < n; ++v) {
    trips.emplace_back(v, v + 1, 1.0);
    trips.emplace_back(v + 1, v, 1.0);
  }
  DiscreteManifold m;
  m.weights.resize(n, n);
  m.weights.setFromTriplets(trips.begin(), trips.end());
  m.mass = Vec::Ones(n);
  m.boundary = {0, n - 1};
  m.label = "path_" + std::to_string(n_interior);
  m.validate();
  return m;
}

Region Region::make(const DiscreteManifold& m, std::vector<int> verts) {
  if (verts.empty()) fail("region: empty vertex set");
  std::sort(verts.begin(), verts.end());
  if (std::adjacent_find(verts.begin(), verts.end()) != verts.end()) fail("region: duplicate vertex");
  if (verts.front() < 0 || verts.back() >= m.n()) fail("region: vertex out of range");
  if (static_cast<int>(verts.size()) + static_cast<int>(m.boundary.size()) >= m.n())
    fail("region: must be a strict subset of the interior");
  for (int v : verts)
    if (m.is_boundary(v)) fail("region: contains a boundary vertex");

  std::vector<char> inside(m.n(), 0);
  for (int v : verts) inside[v] = 1;

  // Induced-subgraph connectivity.
  {
    std::vector<char> seen(m.n(), 0);
    std::deque<int> q{verts[0]};
    seen[verts[0]] = 1;
    size_t count = 1;
    while (!q.empty()) {
      const int v = q.front();
      q.pop_front();
      for (SpMat::InnerIterator it(m.weights, v); it; ++it) {
        const int u = static_cast<int>(it.row());
        if (it.value() > 0.0 && inside[u] && !seen[u]) {
          seen[u] = 1;
          ++count;
          q.push_back(u);
        }
      }
    }
    if (count != verts.size()) fail("region: not connected as an induced subgraph");
  }

  // Hop distance to the complement, by BFS from all outside vertices at once.
  std::vector<int> dist(m.n(), -1);
  std::deque<int> q;
  for (int v = 0; v < m.n(); ++v) {
    if (!inside[v]) {
      dist[v] = 0;
      q.push_back(v);
    }
  }
  while (!q.empty()) {
    const int v = q.front();
    q.pop_front();
    for (SpMat::InnerIterator it(m.weights, v); it; ++it) {
      const int u = static_cast<int>(it.row());
      if (it.value() > 0.0 && dist[u] < 0) {
        dist[u] = dist[v] + 1;
        q.push_back(u);
      }
    }
  }

  Region r;
  r.vertices = std::move(verts);
  r.depth.reserve(r.vertices.size());
  int max_depth = 0;
  for (int v : r.vertices) {
    r.depth.push_back(dist[v]);
    max_depth = std::max(max_depth, dist[v]);
  }
  r.margin = max_depth - 1;
  return r;
}

bool Region::contains(int v) const {
  return std::binary_search(vertices.begin(), vertices.end(), v);
}

int Region::index_of(int v) const {
  auto it = std::lower_bound(vertices.begin(), vertices.end(), v);
  if (it == vertices.end() || *it != v) return -1;
  return static_cast<int>(it - vertices.begin());
}

std::vector<int> Region::shrink(int k) const {
  std::vector<int> out;
  for (size_t i = 0; i < vertices.size(); ++i)
    if (depth[i] > k) out.push_back(vertices[i]);
  return out;
}

Vec Region::restrict_to(const Vec& full) const {
  Vec out(size());
  for (int i = 0; i < size(); ++i) out[i] = full[vertices[i]];
  return out;
}

Vec Region::extend_from(const Vec& local, int n) const {
  if (local.size() != size()) fail("region: local vector size mismatch");
  Vec out = Vec::Zero(n);
  for (int i = 0; i < size(); ++i) out[vertices[i]] = local[i];
  return out;
}

Vec RestrictionOperator::apply(const Vec& full) const {
  if (full.size() != n) fail("restriction: dimension mismatch");
  return region.restrict_to(full);
}

Vec RestrictionOperator::embed(const Vec& local) const { return region.extend_from(local, n); }

PatchIsometry PatchIsometry::make(const DiscreteManifold& m1, const DiscreteManifold& m2,
                                  const Region& patch1, const std::vector<int>& image) {
  if (image.size() != patch1.vertices.size()) fail("patch isometry: image size mismatch");
  std::vector<int> sorted_image = image;
  std::sort(sorted_image.begin(), sorted_image.end());
  if (std::adjacent_find(sorted_image.begin(), sorted_image.end()) != sorted_image.end())
    fail("patch isometry: image has duplicates");

  PatchIsometry iso;
  iso.patch1 = patch1;
  iso.patch2 = Region::make(m2, sorted_image);
  iso.image = image;
  iso.n1 = m1.n();
  iso.n2 = m2.n();

  const int p = patch1.size();
  // Dense local blocks so that zero couplings are compared too. Equality is
  // exact by design: a patch isometry copies the metric, it does not fit it.
  Mat w1 = Mat::Zero(p, p), w2 = Mat::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    const int v1 = patch1.vertices[i];
    const int v2 = image[i];
    if (m1.mass[v1] != m2.mass[v2]) fail("patch isometry: vertex masses differ");
    for (SpMat::InnerIterator it(m1.weights, v1); it; ++it) {
      const int j = patch1.index_of(static_cast<int>(it.row()));
      if (j >= 0) w1(i, j) = it.value();
    }
    for (SpMat::InnerIterator it(m2.weights, v2); it; ++it) {
      const int v2j = static_cast<int>(it.row());
      for (int j = 0; j < p; ++j) {
        if (image[j] == v2j) {
          w2(i, j) = it.value();
          break;
        }
      }
    }
  }
  if (w1 != w2) fail("patch isometry: intra-patch weights differ");
  return iso;
}

int PatchIsometry::map(int v1) const {
  const int i = patch1.index_of(v1);
  if (i < 0) fail("patch isometry: vertex not in patch");
  return image[i];
}

int PatchIsometry::map_back(int v2) const {
  for (size_t i = 0; i < image.size(); ++i)
    if (image[i] == v2) return patch1.vertices[i];
  fail("patch isometry: vertex not in image patch");
  return -1;
}

Vec PatchIsometry::transport(const Vec& f1) const {
  if (f1.size() != n1) fail("patch isometry: transport dimension mismatch");
  for (int v = 0; v < n1; ++v)
    if (f1[v] != 0.0 && patch1.index_of(v) < 0)
      fail("patch isometry: transported vector has support outside the patch");
  Vec out = Vec::Zero(n2);
  for (size_t i = 0; i < image.size(); ++i) out[image[i]] = f1[patch1.vertices[i]];
  return out;
}

Vec PatchIsometry::pull_back(const Vec& f2) const {
  if (f2.size() != n2) fail("patch isometry: pull_back dimension mismatch");
  for (int v = 0; v < n2; ++v)
    if (f2[v] != 0.0 && patch2.index_of(v) < 0)
      fail("patch isometry: pulled-back vector has support outside the patch");
  Vec out = Vec::Zero(n1);
  for (size_t i = 0; i < image.size(); ++i) out[patch1.vertices[i]] = f2[image[i]];
  return out;
}

Vec DoubleManifold::odd_extension(const Vec& f) const {
  const int n = static_cast<int>(embed_plus.size());
  if (f.size() != n) fail("odd_extension: dimension mismatch");
  Vec out = Vec::Zero(doubled.n());
  for (int v = 0; v < n; ++v) {
    if (embed_plus[v] == embed_minus[v]) {
      if (f[v] != 0.0) fail("odd_extension: argument does not vanish on the boundary");
      continue;
    }
    out[embed_plus[v]] = f[v];
    out[embed_minus[v]] = -f[v];
  }
  return out;
}

Vec DoubleManifold::restrict_plus(const Vec& big) const {
  if (big.size() != doubled.n()) fail("restrict_plus: dimension mismatch");
  const int n = static_cast<int>(embed_plus.size());
  Vec out(n);
  for (int v = 0; v < n; ++v) out[v] = big[embed_plus[v]];
  return out;
}

DoubleManifold double_manifold(const DiscreteManifold& m) {
  if (m.closed()) fail("double_manifold: manifold has no boundary to glue along");
  m.validate();
  const int n = m.n();
  const int nb = static_cast<int>(m.boundary.size());
  const int n2 = 2 * n - nb;

  DoubleManifold dm;
  dm.embed_plus.resize(n);
  dm.embed_minus.resize(n);
  for (int v = 0; v < n; ++v) dm.embed_plus[v] = v;
  {
    int next = n;
    for (int v = 0; v < n; ++v) dm.embed_minus[v] = m.is_boundary(v) ? v : next++;
  }
  dm.seam = m.boundary;

  std::vector<Eigen::Triplet<double>> trips;
  Vec mass = Vec::Zero(n2);
  for (int v = 0; v < n; ++v) {
    mass[dm.embed_plus[v]] += m.mass[v];
    mass[dm.embed_minus[v]] += m.mass[v];  // seam rows accumulate both copies
  }
  for (int v = 0; v < n; ++v) {
    for (SpMat::InnerIterator it(m.weights, v); it; ++it) {
      const int u = static_cast<int>(it.row());
      if (u <= v || it.value() == 0.0) continue;
      const auto add = [&trips](int a, int b, double w) {
        trips.emplace_back(a, b, w);
        trips.emplace_back(b, a, w);
      };
      add(dm.embed_plus[v], dm.embed_plus[u], it.value());
      // A seam-seam edge maps to the same vertex pair in both copies; the
      // triplet sum then doubles it, matching the doubled seam mass.
      add(dm.embed_minus[v], dm.embed_minus[u], it.value());
    }
  }
  dm.doubled.weights.resize(n2, n2);
  dm.doubled.weights.setFromTriplets(trips.begin(), trips.end());
  dm.doubled.mass = mass;
  dm.doubled.label = m.label + "_doubled";
  dm.doubled.validate();
  return dm;
}

double graph_distance(const DiscreteManifold& m, const Region& a, const Region& b) {
  for (int v : a.vertices)
    if (b.contains(v)) fail("graph_distance: regions overlap");

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(m.n(), inf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  for (int v : a.vertices) {
    dist[v] = 0.0;
    heap.emplace(0.0, v);
  }
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    if (b.contains(v)) return d;
    for (SpMat::InnerIterator it(m.weights, v); it; ++it) {
      if (it.value() <= 0.0) continue;
      const int u = static_cast<int>(it.row());
      const double len = std::sqrt(std::sqrt(m.mass[v] * m.mass[u]) / it.value());
      if (d + len < dist[u]) {
        dist[u] = d + len;
        heap.emplace(dist[u], u);
      }
    }
  }
  fail("graph_distance: regions not connected");
  return inf;
}

DiscreteManifold relabel_vertices(const DiscreteManifold& m, const std::vector<int>& new_id) {
  const int n = m.n();
  if (static_cast<int>(new_id.size()) != n) fail("relabel: permutation length mismatch");
  std::vector<char> hit(n, 0);
  for (int v : new_id) {
    if (v < 0 || v >= n || hit[v]) fail("relabel: new_id is not a permutation");
    hit[v] = 1;
  }

  DiscreteManifold out;
  out.label = m.label + "/relabeled";
  out.mass = Vec(n);
  for (int v = 0; v < n; ++v) out.mass[new_id[v]] = m.mass[v];
  if (m.coords.rows() == n) {
    out.coords = Mat(n, m.coords.cols());
    for (int v = 0; v < n; ++v) out.coords.row(new_id[v]) = m.coords.row(v);
  }
  std::vector<Eigen::Triplet<double>> trips;
  for (int v = 0; v < n; ++v)
    for (SpMat::InnerIterator it(m.weights, v); it; ++it)
      trips.emplace_back(new_id[static_cast<int>(it.row())], new_id[v], it.value());
  out.weights = SpMat(n, n);
  out.weights.setFromTriplets(trips.begin(), trips.end());
  for (int v : m.boundary) out.boundary.push_back(new_id[v]);
  std::sort(out.boundary.begin(), out.boundary.end());
  out.validate();
  return out;
}

void write_mesh(const DiscreteManifold& m, const std::string& path) {
  m.validate();
  std::vector<std::tuple<int, int, double>> edges;
  for (int v = 0; v < m.n(); ++v)
    for (SpMat::InnerIterator it(m.weights, v); it; ++it)
      if (it.value() != 0.0 && v < it.row())
        edges.emplace_back(v, static_cast<int>(it.row()), it.value());
  std::sort(edges.begin(), edges.end());

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "dm " << m.n() << ' ' << edges.size() << ' ' << m.boundary.size() << '\n';
  const bool with_coords = m.coords.rows() != 0;
  for (int v = 0; v < m.n(); ++v) {
    out << "v " << fmt_g17(m.mass[v]);
    if (with_coords)
      out << ' ' << fmt_g17(m.coords(v, 0)) << ' ' << fmt_g17(m.coords(v, 1)) << ' '
          << fmt_g17(m.coords(v, 2));
    out << '\n';
  }
  for (const auto& [i, j, w] : edges) out << "e " << i << ' ' << j << ' ' << fmt_g17(w) << '\n';
  for (int b : m.boundary) out << "b " << b << '\n';
}

DiscreteManifold read_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file: " + path);
  auto bad = [&path](const std::string& why) {
    throw std::runtime_error("malformed mesh file " + path + ": " + why);
  };

  std::string tag;
  int n = 0;
  long ne = 0, nb = 0;
  if (!(in >> tag >> n >> ne >> nb) || tag != "dm") bad("expected header 'dm <n> <n_edges> <n_boundary>'");
  if (n <= 0 || ne < 0 || nb < 0) bad("nonpositive counts in header");

  DiscreteManifold m;
  m.mass.resize(n);
  bool with_coords = false;
  for (int v = 0; v < n; ++v) {
    if (!(in >> tag) || tag != "v") bad("expected vertex line");
    if (!(in >> m.mass[v])) bad("vertex line missing mass");
    if (v == 0) {
      // Peek: coordinates are all-or-none across the file.
      std::string rest;
      std::getline(in, rest);
      std::istringstream ss(rest);
      double x, y, z;
      if (ss >> x >> y >> z) {
        with_coords = true;
        m.coords.resize(n, 3);
        m.coords.row(0) << x, y, z;
      }
    } else if (with_coords) {
      double x, y, z;
      if (!(in >> x >> y >> z)) bad("vertex line missing coordinates");
      m.coords.row(v) << x, y, z;
    }
  }
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * ne);
  int prev_i = -1, prev_j = -1;
  for (long e = 0; e < ne; ++e) {
    int i, j;
    double w;
    if (!(in >> tag >> i >> j >> w) || tag != "e") bad("expected edge line");
    if (i < 0 || j < 0 || i >= n || j >= n) bad("edge vertex out of range");
    if (i >= j) bad("edge must satisfy i < j");
    if (std::make_pair(i, j) <= std::make_pair(prev_i, prev_j)) bad("edges not in lexicographic order");
    prev_i = i;
    prev_j = j;
    trips.emplace_back(i, j, w);
    trips.emplace_back(j, i, w);
  }
  int prev_b = -1;
  for (long b = 0; b < nb; ++b) {
    int v;
    if (!(in >> tag >> v) || tag != "b") bad("expected boundary line");
    if (v <= prev_b) bad("boundary vertices not ascending");
    prev_b = v;
    m.boundary.push_back(v);
  }
  std::string leftover;
  if (in >> leftover) bad("trailing content after declared records");

  m.weights.resize(n, n);
  m.weights.setFromTriplets(trips.begin(), trips.end());
  m.label = path;
  m.validate();
  return m;
}

}  // namespace fraclab
