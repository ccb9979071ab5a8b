#include "stgcn/synthetic.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <vector>

#include "stgcn/csv.hpp"
#include "stgcn/errors.hpp"
#include "stgcn/rng.hpp"

namespace stgcn {

void SyntheticSpec::validate() const {
  if (nodes < 2) throw ConfigError("synthetic: need at least 2 nodes");
  if (classes < 2) throw ConfigError("synthetic: need at least 2 classes");
  if (communities < classes) throw ConfigError("synthetic: classes must not exceed communities");
  if (nodes < communities) throw ConfigError("synthetic: need at least one node per community");
  if (!(p_in > p_out)) throw ConfigError("synthetic: p_in must exceed p_out");
  if (p_in < 0.0 || p_in > 1.0 || p_out < 0.0)
    throw ConfigError("synthetic: edge probabilities out of range");
  if (feature_dim < 1) throw ConfigError("synthetic: feature_dim must be positive");
  if (noise < 0.0) throw ConfigError("synthetic: noise must be non-negative");
}

SyntheticResult generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  rng::Stream stream(rng::derive_seed(seed, "synthetic"));

  SyntheticResult result;
  Graph& g = result.graph;
  g.num_nodes = spec.nodes;
  g.num_classes = spec.classes;

  // Contiguous community blocks; class = community mod classes.
  std::vector<int> community(spec.nodes);
  for (int i = 0; i < spec.nodes; ++i) {
    community[i] = static_cast<int>(static_cast<long>(i) * spec.communities / spec.nodes);
    g.labels.push_back(community[i] % spec.classes);
  }
  for (int c = 0; c < spec.classes; ++c) g.class_names.push_back("c" + std::to_string(c));

  Matrix centroids(spec.classes, spec.feature_dim);
  for (int c = 0; c < spec.classes; ++c)
    for (int f = 0; f < spec.feature_dim; ++f) centroids(c, f) = stream.normal();
  g.features.resize(spec.nodes, spec.feature_dim);
  for (int i = 0; i < spec.nodes; ++i)
    for (int f = 0; f < spec.feature_dim; ++f)
      g.features(i, f) = centroids(g.labels[i], f) + spec.noise * stream.normal();

  for (int i = 0; i < spec.nodes; ++i) {
    for (int j = i + 1; j < spec.nodes; ++j) {
      const double p = community[i] == community[j] ? spec.p_in : spec.p_out;
      if (stream.uniform() < p) g.edges.emplace_back(i, j);
    }
  }
  g.validate();
  result.oracle_acc = centroid_neighbor_oracle(g);
  return result;
}

double centroid_neighbor_oracle(const Graph& g) {
  Matrix centroids = Matrix::Zero(g.num_classes, g.feature_dim());
  std::vector<int> counts(g.num_classes, 0);
  for (int i = 0; i < g.num_nodes; ++i) {
    centroids.row(g.labels[i]) += g.features.row(i);
    ++counts[g.labels[i]];
  }
  for (int c = 0; c < g.num_classes; ++c) {
    if (counts[c] > 0) centroids.row(c) /= counts[c];
  }

  std::vector<int> nearest(g.num_nodes);
  for (int i = 0; i < g.num_nodes; ++i) {
    int best = 0;
    double best_d = (g.features.row(i) - centroids.row(0)).squaredNorm();
    for (int c = 1; c < g.num_classes; ++c) {
      const double d = (g.features.row(i) - centroids.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    nearest[i] = best;
  }

  std::vector<std::vector<int>> nbrs(g.num_nodes);
  for (const auto& [a, b] : g.edges) {
    nbrs[a].push_back(b);
    nbrs[b].push_back(a);
  }
  int correct = 0;
  std::vector<int> votes(g.num_classes);
  for (int i = 0; i < g.num_nodes; ++i) {
    std::fill(votes.begin(), votes.end(), 0);
    votes[nearest[i]] += 1;
    for (int j : nbrs[i]) votes[nearest[j]] += 1;
    int pred = nearest[i];
    for (int c = 0; c < g.num_classes; ++c) {
      if (votes[c] > votes[pred]) pred = c;
    }
    correct += (pred == g.labels[i]);
  }
  return static_cast<double>(correct) / g.num_nodes;
}

void write_citation_files(const Graph& g, const std::string& dir, const std::string& prefix) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream content(fs::path(dir) / (prefix + ".content"), std::ios::binary);
  if (!content) throw IoError("cannot write content file under " + dir);
  for (int i = 0; i < g.num_nodes; ++i) {
    content << 'n' << i;
    for (int f = 0; f < g.feature_dim(); ++f) content << ' ' << csv::fmt(g.features(i, f));
    const std::string& name =
        g.labels[i] < static_cast<int>(g.class_names.size()) && !g.class_names[g.labels[i]].empty()
            ? g.class_names[g.labels[i]]
            : "c" + std::to_string(g.labels[i]);
    content << ' ' << name << '\n';
  }
  std::ofstream cites(fs::path(dir) / (prefix + ".cites"), std::ios::binary);
  if (!cites) throw IoError("cannot write cites file under " + dir);
  for (const auto& [a, b] : g.edges) cites << 'n' << a << ' ' << 'n' << b << '\n';
}

}  // namespace stgcn
