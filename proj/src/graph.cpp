#include "stgcn/graph.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "stgcn/errors.hpp"
#include "stgcn/rng.hpp"

namespace stgcn {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& tok, const std::string& file, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError(file + ":" + std::to_string(line_no) + ": bad numeric field '" + tok + "'");
  }
  return v;
}

// Builds the normalized CSR from a retained undirected edge set. Degrees are
// taken in A+I, so every node keeps a positive self-loop entry.
NormalizedAdjacency build_normalized(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<int>> nbrs(n);
  for (int i = 0; i < n; ++i) nbrs[i].push_back(i);  // self-loop
  for (const auto& [a, b] : edges) {
    nbrs[a].push_back(b);
    nbrs[b].push_back(a);
  }
  std::vector<std::int64_t> degree(n);
  for (int i = 0; i < n; ++i) {
    std::sort(nbrs[i].begin(), nbrs[i].end());
    degree[i] = static_cast<std::int64_t>(nbrs[i].size());
  }
  NormalizedAdjacency adj;
  adj.num_nodes = n;
  adj.row_ptr.resize(n + 1, 0);
  for (int i = 0; i < n; ++i) adj.row_ptr[i + 1] = adj.row_ptr[i] + static_cast<int>(nbrs[i].size());
  adj.col_idx.reserve(adj.row_ptr[n]);
  adj.values.reserve(adj.row_ptr[n]);
  for (int i = 0; i < n; ++i) {
    for (int j : nbrs[i]) {
      adj.col_idx.push_back(j);
      adj.values.push_back(1.0 / std::sqrt(static_cast<double>(degree[i] * degree[j])));
    }
  }
  return adj;
}

}  // namespace

void Graph::validate() const {
  if (num_nodes <= 0) throw ConfigError("graph has no nodes");
  std::unordered_set<std::int64_t> seen;
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= num_nodes || b >= num_nodes)
      throw ConfigError("edge endpoint out of range");
    if (a == b) throw ConfigError("self-loop stored in edge list");
    if (a > b) throw ConfigError("edge not in canonical (i < j) form");
    if (!seen.insert(static_cast<std::int64_t>(a) * num_nodes + b).second)
      throw ConfigError("duplicate edge in edge list");
  }
  for (int label : labels) {
    if (label < 0 || label >= num_classes) throw ConfigError("label out of class range");
  }
  const auto sized = [&](const std::vector<std::uint8_t>& m) {
    return m.empty() || static_cast<int>(m.size()) == num_nodes;
  };
  if (!sized(train_mask) || !sized(val_mask) || !sized(test_mask))
    throw ConfigError("mask size mismatch");
  if (!train_mask.empty() && !val_mask.empty() && !test_mask.empty()) {
    for (int i = 0; i < num_nodes; ++i) {
      if (train_mask[i] + val_mask[i] + test_mask[i] > 1)
        throw ConfigError("masks overlap at node " + std::to_string(i));
    }
  }
}

Graph load_citation_raw(const std::string& content_path, const std::string& cites_path) {
  std::ifstream content(content_path);
  if (!content) throw IoError("cannot open content file: " + content_path);
  std::ifstream cites(cites_path);
  if (!cites) throw IoError("cannot open cites file: " + cites_path);

  Graph g;
  std::unordered_map<std::string, int> id_of;
  std::unordered_map<std::string, int> class_of;
  std::vector<std::vector<double>> feature_rows;
  std::string line;
  std::size_t line_no = 0;
  int feature_dim = -1;

  while (std::getline(content, line)) {
    ++line_no;
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    if (toks.size() < 3) {
      throw ParseError(content_path + ":" + std::to_string(line_no) +
                       ": expected <id> <features...> <class>, got " +
                       std::to_string(toks.size()) + " fields");
    }
    if (feature_dim < 0) feature_dim = static_cast<int>(toks.size()) - 2;
    if (static_cast<int>(toks.size()) - 2 != feature_dim) {
      throw ParseError(content_path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(feature_dim) + " feature fields, got " +
                       std::to_string(toks.size() - 2));
    }
    const std::string& id = toks.front();
    if (!id_of.emplace(id, static_cast<int>(feature_rows.size())).second) {
      throw ParseError(content_path + ":" + std::to_string(line_no) + ": duplicate node id '" +
                       id + "'");
    }
    std::vector<double> row(feature_dim);
    for (int f = 0; f < feature_dim; ++f) row[f] = parse_double(toks[f + 1], content_path, line_no);
    feature_rows.push_back(std::move(row));

    const std::string& cls = toks.back();
    auto it = class_of.find(cls);
    if (it == class_of.end()) {
      it = class_of.emplace(cls, static_cast<int>(g.class_names.size())).first;
      g.class_names.push_back(cls);
    }
    g.labels.push_back(it->second);
  }
  if (feature_rows.empty()) throw ParseError(content_path + ": empty content file");

  g.num_nodes = static_cast<int>(feature_rows.size());
  g.num_classes = static_cast<int>(g.class_names.size());
  g.features.resize(g.num_nodes, feature_dim);
  for (int i = 0; i < g.num_nodes; ++i) {
    for (int f = 0; f < feature_dim; ++f) g.features(i, f) = feature_rows[i][f];
  }

  std::unordered_set<std::int64_t> edge_set;
  line_no = 0;
  while (std::getline(cites, line)) {
    ++line_no;
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    if (toks.size() != 2) {
      throw ParseError(cites_path + ":" + std::to_string(line_no) +
                       ": expected <citing_id> <cited_id>");
    }
    auto a_it = id_of.find(toks[0]);
    auto b_it = id_of.find(toks[1]);
    if (a_it == id_of.end() || b_it == id_of.end()) {
      ++g.skipped_citations;
      continue;
    }
    int a = a_it->second, b = b_it->second;
    if (a == b) continue;  // citation of itself; never stored
    if (a > b) std::swap(a, b);
    if (edge_set.insert(static_cast<std::int64_t>(a) * g.num_nodes + b).second) {
      g.edges.emplace_back(a, b);
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.validate();
  return g;
}

namespace {

// Largest-remainder apportionment of `total` items over the three splits.
// Ties go to the earlier split (train, then val, then test).
std::array<int, 3> apportion(int total, const std::array<double, 3>& fractions) {
  std::array<double, 3> target{};
  double sum = 0.0;
  for (int k = 0; k < 3; ++k) {
    target[k] = fractions[k] * total;
    sum += target[k];
  }
  std::array<int, 3> counts{};
  int assigned = 0;
  for (int k = 0; k < 3; ++k) {
    counts[k] = static_cast<int>(std::floor(target[k]));
    assigned += counts[k];
  }
  int want = static_cast<int>(std::llround(sum));
  want = std::min(want, total);
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return target[a] - std::floor(target[a]) > target[b] - std::floor(target[b]);
  });
  for (int k = 0; k < 3 && assigned < want; ++k) {
    ++counts[order[k]];
    ++assigned;
  }
  return counts;
}

}  // namespace

Graph split_nodes(const Graph& g, const SplitPolicy& policy, std::uint64_t seed) {
  if (g.labels.empty() || g.num_classes <= 0) throw ConfigError("split_nodes: graph has no labels");
  if (policy.kind == SplitPolicy::Kind::Fractions) {
    const double sum = policy.f_train + policy.f_val + policy.f_test;
    if (policy.f_train < 0 || policy.f_val < 0 || policy.f_test < 0 || sum > 1.0 + 1e-12)
      throw ConfigError("split_nodes: fractions must be non-negative and sum to at most 1");
  } else {
    if (policy.n_train < 0 || policy.n_val < 0 || policy.n_test < 0)
      throw ConfigError("split_nodes: per-class counts must be non-negative");
  }

  std::vector<std::vector<int>> by_class(g.num_classes);
  for (int i = 0; i < g.num_nodes; ++i) by_class[g.labels[i]].push_back(i);

  Graph out = g;
  out.train_mask.assign(g.num_nodes, 0);
  out.val_mask.assign(g.num_nodes, 0);
  out.test_mask.assign(g.num_nodes, 0);

  rng::Stream stream(seed);
  for (int c = 0; c < g.num_classes; ++c) {
    auto& nodes = by_class[c];
    // Fisher-Yates on the class members (already in ascending node order).
    for (std::size_t i = nodes.size(); i > 1; --i) {
      std::swap(nodes[i - 1], nodes[stream.below(i)]);
    }
    std::array<int, 3> counts{};
    if (policy.kind == SplitPolicy::Kind::Fractions) {
      counts = apportion(static_cast<int>(nodes.size()),
                         {policy.f_train, policy.f_val, policy.f_test});
    } else {
      counts = {policy.n_train, policy.n_val, policy.n_test};
      if (counts[0] + counts[1] + counts[2] > static_cast<int>(nodes.size())) {
        const std::string name =
            c < static_cast<int>(g.class_names.size()) && !g.class_names[c].empty()
                ? g.class_names[c]
                : std::to_string(c);
        throw ConfigError("split_nodes: class '" + name + "' has " +
                          std::to_string(nodes.size()) + " nodes, needs " +
                          std::to_string(counts[0] + counts[1] + counts[2]));
      }
    }
    std::size_t pos = 0;
    for (int k = 0; k < counts[0]; ++k) out.train_mask[nodes[pos++]] = 1;
    for (int k = 0; k < counts[1]; ++k) out.val_mask[nodes[pos++]] = 1;
    for (int k = 0; k < counts[2]; ++k) out.test_mask[nodes[pos++]] = 1;
  }
  out.validate();
  return out;
}

double NormalizedAdjacency::at(int i, int j) const {
  for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
    if (col_idx[k] == j) return values[k];
  }
  return 0.0;
}

Matrix NormalizedAdjacency::multiply(const Matrix& dense) const {
  if (dense.rows() != num_nodes) throw ShapeError("adjacency/dense row mismatch");
  Matrix out = Matrix::Zero(num_nodes, dense.cols());
  for (int i = 0; i < num_nodes; ++i) {
    auto row = out.row(i);
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      row += values[k] * dense.row(col_idx[k]);
    }
  }
  return out;
}

NormalizedAdjacency normalize(const Graph& g) {
  NormalizedAdjacency adj = build_normalized(g.num_nodes, g.edges);
  adj.kind = AdjacencyKind::Full;
  return adj;
}

NormalizedAdjacency drop_edge(const Graph& g, double rate, std::uint64_t seed) {
  if (rate < 0.0 || rate > 0.9)
    throw std::out_of_range("drop_edge: rate " + std::to_string(rate) + " outside [0, 0.9]");
  rng::Stream stream(seed);
  std::vector<std::pair<int, int>> retained;
  retained.reserve(g.edges.size());
  for (const auto& e : g.edges) {
    if (stream.uniform() >= rate) retained.push_back(e);
  }
  NormalizedAdjacency adj = build_normalized(g.num_nodes, retained);
  adj.kind = AdjacencyKind::Dropped;
  adj.drop_rate = rate;
  adj.drop_seed = seed;
  return adj;
}

}  // namespace stgcn
