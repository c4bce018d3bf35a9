// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dastnet/rng.hpp"
#include "dastnet/tensor.hpp"

namespace dastnet {

struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
};

/// Undirected road network with binary adjacency. Duplicate and reversed
/// edges collapse into one; self-loops and out-of-range ids are rejected.
class RoadGraph {
 public:
  RoadGraph() = default;
  RoadGraph(std::size_t node_count, std::span<const Edge> edges);

  std::size_t node_count() const { return neighbors_.size(); }
  std::size_t edge_count() const;
  /// Sorted ascending.
  const std::vector<std::size_t>& neighbors(std::size_t v) const { return neighbors_[v]; }
  std::size_t degree(std::size_t v) const { return neighbors_[v].size(); }
  bool connected(std::size_t u, std::size_t v) const;

  /// Edges with u < v, lexicographically ordered.
  std::vector<Edge> edges() const;
  /// Dense N x N binary symmetric adjacency.
  Tensor adjacency() const;
  /// Row-normalized adjacency: row v holds 1/|N(v)| at its neighbors, all
  /// zeros for an isolated node.
  Tensor mean_aggregation_matrix() const;

 private:
  std::vector<std::vector<std::size_t>> neighbors_;
};

/// Same as the RoadGraph constructor; named for symmetry with file loading.
RoadGraph load_graph(std::size_t node_count, std::span<const Edge> edges);

/// Text edge list: one "u,v" per line, '#' starts a comment. A comment of the
/// form "# nodes=N" fixes the node count (so isolated trailing nodes survive a
/// round trip); otherwise N = max id + 1.
RoadGraph read_edge_list(const std::filesystem::path& path);
void write_edge_list(const RoadGraph& graph, const std::filesystem::path& path);

struct WalkCorpus {
  std::vector<std::vector<std::size_t>> walks;
  std::size_t walk_length = 0;
  std::size_t walks_per_node = 0;
};

/// One second-order node2vec walk of at most `length` nodes. Unnormalized
/// transition weights from (prev, cur) to x: 1/p if x == prev, 1 if x is a
/// neighbor of prev, 1/q otherwise. Stops early at a node without neighbors.
std::vector<std::size_t> biased_walk(const RoadGraph& graph, std::size_t start,
                                     std::size_t length, double p, double q, Rng& rng);

/// walks_per_node walks from every node; walk r of node v is at index
/// v * walks_per_node + r and uses an RNG stream derived from (seed, v).
WalkCorpus build_corpus(const RoadGraph& graph, std::size_t walks_per_node, std::size_t length,
                        double p, double q, std::uint64_t seed);

struct SkipGramOptions {
  std::size_t dim = 64;
  std::size_t window = 3;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;
  std::uint64_t seed = 0;
};

/// Skip-gram with negative sampling over walk windows. Returns the input
/// (center) vectors as an N x dim matrix. If `epoch_losses` is given it
/// receives the mean pair loss of every epoch.
Tensor train_skipgram(const WalkCorpus& corpus, std::size_t node_count,
                      const SkipGramOptions& options,
                      std::vector<double>* epoch_losses = nullptr);

/// CSV: "node_id,x0,...,x{D-1}" header, then one row per node.
void write_raw_features(const Tensor& features, const std::filesystem::path& path);
Tensor read_raw_features(const std::filesystem::path& path);

}  // namespace dastnet
