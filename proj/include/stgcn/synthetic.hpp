#pragma once

#include <cstdint>
#include <string>

#include "stgcn/graph.hpp"

namespace stgcn {

/// Planted-partition benchmark spec: `communities` equal blocks of nodes,
/// intra-block edge probability p_in, inter-block p_out, class =
/// community mod classes, and class-correlated Gaussian features
/// (unit-normal class centroids plus `noise`-scaled node noise).
struct SyntheticSpec {
  int nodes = 600;
  int classes = 3;
  int communities = 3;
  double p_in = 0.05;
  double p_out = 0.005;
  int feature_dim = 32;
  double noise = 1.0;

  void validate() const;
};

struct SyntheticResult {
  Graph graph;          // masks unset; apply split_nodes afterwards
  double oracle_acc;    // attainable-accuracy estimate, see below
};

/// Deterministic generator. The oracle estimate is computed from the
/// generated data itself: nearest empirical class centroid per node,
/// refined by one round of neighborhood majority vote (own prediction
/// counted once, ties keep the nearest-centroid label).
SyntheticResult generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Emits the graph in the raw citation format (`<prefix>.content` and
/// `<prefix>.cites` under `dir`); loading the pair back reproduces the
/// graph. Byte-identical output for identical inputs.
void write_citation_files(const Graph& graph, const std::string& dir,
                          const std::string& prefix);

double centroid_neighbor_oracle(const Graph& graph);

}  // namespace stgcn
