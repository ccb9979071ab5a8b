#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace stgcn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Sparse undirected graph with node features, integer labels and
/// train/val/test masks. Edges are stored once as (i, j) with i < j,
/// deduplicated and sorted; self-loops are never stored (normalization adds
/// them). Immutable by convention once built.
struct Graph {
  int num_nodes = 0;
  std::vector<std::pair<int, int>> edges;
  Matrix features;               // num_nodes x feature_dim
  std::vector<int> labels;       // class index in [0, num_classes)
  int num_classes = 0;
  std::vector<std::string> class_names;
  std::vector<std::uint8_t> train_mask, val_mask, test_mask;
  int skipped_citations = 0;     // cite lines dropped at load (unresolved ids)

  int feature_dim() const { return static_cast<int>(features.cols()); }
  int num_edges() const { return static_cast<int>(edges.size()); }

  /// Checks the structural invariants (edge canonical form, mask
  /// disjointness, label range). Throws on violation.
  void validate() const;
};

enum class AdjacencyKind { Full, Dropped };

/// Symmetrically normalized adjacency D^{-1/2} (A + I) D^{-1/2} in CSR form
/// with sorted column indices per row. Symmetric by construction: the (i, j)
/// and (j, i) entries are computed from the same integer degree product.
struct NormalizedAdjacency {
  int num_nodes = 0;
  std::vector<int> row_ptr;      // size num_nodes + 1
  std::vector<int> col_idx;      // sorted within each row
  std::vector<double> values;
  AdjacencyKind kind = AdjacencyKind::Full;
  double drop_rate = 0.0;
  std::uint64_t drop_seed = 0;

  int nnz() const { return static_cast<int>(col_idx.size()); }

  /// Entry (i, j); zero when absent.
  double at(int i, int j) const;

  /// Sparse-dense product: (this) * dense. Row-wise accumulation in CSR
  /// order, so the reduction order is fixed and results are reproducible.
  Matrix multiply(const Matrix& dense) const;
};

/// Node split policy: either per-split fractions (stratified by class,
/// largest-remainder rounding) or absolute per-class counts.
struct SplitPolicy {
  enum class Kind { Fractions, PerClassCounts };
  Kind kind = Kind::Fractions;
  double f_train = 0.6, f_val = 0.2, f_test = 0.2;
  int n_train = 0, n_val = 0, n_test = 0;  // per class

  static SplitPolicy fractions(double train, double val, double test) {
    SplitPolicy p;
    p.kind = Kind::Fractions;
    p.f_train = train;
    p.f_val = val;
    p.f_test = test;
    return p;
  }
  static SplitPolicy per_class(int train, int val, int test) {
    SplitPolicy p;
    p.kind = Kind::PerClassCounts;
    p.n_train = train;
    p.n_val = val;
    p.n_test = test;
    return p;
  }
};

/// Loads a citation dataset from the raw text pair: one node per content
/// line (`<id> <f_1> ... <f_F> <class>`), one directed citation per cites
/// line (`<citing> <cited>`). Directed citations are merged into undirected
/// deduplicated edges; class strings map to contiguous indices by first
/// appearance; masks are left unset. Lines whose ids do not resolve are
/// counted in `skipped_citations` and dropped.
Graph load_citation_raw(const std::string& content_path, const std::string& cites_path);

/// Returns a copy of `g` with masks assigned according to `policy`,
/// stratified by class and deterministic given `seed`.
Graph split_nodes(const Graph& g, const SplitPolicy& policy, std::uint64_t seed);

/// D^{-1/2} (A + I) D^{-1/2} over the full edge set.
NormalizedAdjacency normalize(const Graph& g);

/// DropEdge: retains each undirected edge independently with probability
/// 1 - rate (both directions together), then renormalizes with self-loops.
/// Pure function of (g, rate, seed). rate must lie in [0, 0.9].
NormalizedAdjacency drop_edge(const Graph& g, double rate, std::uint64_t seed);

}  // namespace stgcn
