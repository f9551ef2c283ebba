#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>
#include <vector>

namespace fraclab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;

// Weighted graph playing the role of a Riemannian manifold, possibly with
// boundary. The Laplacian convention is
//
//   (L f)_i = (1/m_i) * sum_j w_ij (f_i - f_j),
//
// so L annihilates constants on a closed manifold and is self-adjoint in the
// mass inner product (f,g)_m = sum_i m_i f_i g_i. When `boundary` is nonempty
// the operator acts on interior vertices with homogeneous Dirichlet data:
// boundary entries of the argument are treated as zero and boundary rows of
// the result are zero.
struct DiscreteManifold {
  SpMat weights;              // symmetric, zero diagonal, nonnegative entries
  Vec mass;                   // strictly positive vertex masses
  std::vector<int> boundary;  // sorted vertex ids; empty <=> closed manifold
  Mat coords;                 // n x 3 embedding, optional (0 rows when absent)
  std::string label;

  int n() const { return static_cast<int>(mass.size()); }
  bool closed() const { return boundary.empty(); }
  bool is_boundary(int v) const;
  std::vector<int> interior() const;
  std::vector<int> neighbors(int v) const;

  // L f with the Dirichlet projection described above.
  Vec apply_stiffness(const Vec& f) const;

  // Throws std::invalid_argument on any violated structural invariant
  // (asymmetry, diagonal weight, negative weight or mass, disconnected
  // graph, unsorted/duplicate/out-of-range boundary list).
  void validate() const;
};

double dot_m(const DiscreteManifold& m, const Vec& a, const Vec& b);
double norm_m(const DiscreteManifold& m, const Vec& a);

// Flat torus on an nx-by-ny periodic grid with spacings hx, hy. Vertex id is
// iy*nx + ix. Horizontal couplings hy/hx, vertical hx/hy, mass hx*hy, so the
// operator is the standard five-point Laplacian with eigenvalues
// 4 sin^2(pi j/nx)/hx^2 + 4 sin^2(pi k/ny)/hy^2. Requires nx, ny >= 3.
DiscreteManifold build_flat_torus(int nx, int ny, double hx, double hy);

// Cycle graph on n >= 3 vertices, unit weights and masses.
DiscreteManifold build_cycle(int n);

// Path with n_interior >= 1 interior vertices plus two boundary endpoints,
// unit weights and masses. Vertices are ordered 0..n_interior+1 along the
// path with 0 and n_interior+1 on the boundary.
DiscreteManifold build_path_dirichlet(int n_interior);

// Vertex subset of one manifold, kept sorted. `depth[i]` is the hop distance
// from vertices[i] to the complement (1 on the inner rim), so the set of
// vertices surviving k one-ring shrinks is {v : depth(v) > k}. margin is the
// number of shrinks that leave the region nonempty.
struct Region {
  std::vector<int> vertices;  // sorted, nonempty
  std::vector<int> depth;     // parallel to vertices
  int margin = 0;

  // Validates: nonempty, in range, sorted unique, disjoint from the boundary,
  // strict subset of the vertex set, connected as an induced subgraph.
  static Region make(const DiscreteManifold& m, std::vector<int> verts);

  int size() const { return static_cast<int>(vertices.size()); }
  bool contains(int v) const;
  int index_of(int v) const;  // position in `vertices`, -1 if absent
  std::vector<int> shrink(int k) const;  // vertices with depth > k

  Vec restrict_to(const Vec& full) const;           // length-|O| slice
  Vec extend_from(const Vec& local, int n) const;   // zero-padded embedding
};

// Coordinate projection onto a region. Idempotent: apply(extend(x)) == x.
struct RestrictionOperator {
  Region region;
  int n = 0;            // dimension of the ambient manifold
  std::string target;   // label of the manifold it acts on

  Vec apply(const Vec& full) const;
  Vec embed(const Vec& local) const;
};

// Exact identification of a patch of m1 with a patch of m2: image[i] in m2
// corresponds to patch1.vertices[i]. Validation demands bitwise equality of
// all intra-patch weights and of vertex masses; approximate agreement is not
// an isometry here.
struct PatchIsometry {
  Region patch1;
  Region patch2;           // Region over sorted(image) on m2
  std::vector<int> image;  // parallel to patch1.vertices
  int n1 = 0, n2 = 0;

  static PatchIsometry make(const DiscreteManifold& m1, const DiscreteManifold& m2,
                            const Region& patch1, const std::vector<int>& image);

  int map(int v1) const;       // patch vertex of m1 -> vertex of m2
  int map_back(int v2) const;  // inverse

  // Push a vector supported in patch1 to m2 (and back). Throws if the
  // argument has support outside the patch.
  Vec transport(const Vec& f1) const;
  Vec pull_back(const Vec& f2) const;
};

// Two copies of a bordered manifold glued along their common boundary. Seam
// vertices appear once and their mass is the sum of the two one-sided
// contributions; every interior vertex appears in both copies.
struct DoubleManifold {
  DiscreteManifold doubled;
  std::vector<int> embed_plus;   // original vertex id -> id in doubled
  std::vector<int> embed_minus;
  std::vector<int> seam;         // ids in doubled of the glued boundary

  // Odd extension: +f on the plus copy, -f on the minus copy, 0 on the seam.
  // Requires f to vanish on the original boundary.
  Vec odd_extension(const Vec& f) const;
  // Values of a doubled-manifold vector on the plus copy, as a vector over
  // the original manifold (boundary entries taken from the seam).
  Vec restrict_plus(const Vec& big) const;
};

DoubleManifold double_manifold(const DiscreteManifold& m);

// Shortest weighted path distance between two disjoint regions. Edge lengths
// are derived from the stencil data as sqrt(sqrt(m_i*m_j)/w_ij), which equals
// the physical spacing for every builder above.
double graph_distance(const DiscreteManifold& m, const Region& a, const Region& b);

// Copy of m with vertex i renamed new_id[i]. new_id must be a permutation of
// 0..n-1. The result is isometric to m by construction; together with the
// permutation it supplies exact test pairs for the comparison pipeline.
DiscreteManifold relabel_vertices(const DiscreteManifold& m, const std::vector<int>& new_id);

// Plain-text mesh exchange format:
//   dm <n> <n_edges> <n_boundary>
//   v <mass> [x y z]          (one per vertex, ascending id)
//   e <i> <j> <weight>        (one per undirected edge, i < j, lexicographic)
//   b <i>                     (one per boundary vertex, ascending)
// Writing then reading reproduces the manifold bit for bit.
void write_mesh(const DiscreteManifold& m, const std::string& path);
DiscreteManifold read_mesh(const std::string& path);

}  // namespace fraclab
