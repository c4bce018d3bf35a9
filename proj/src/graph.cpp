// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dastnet/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "dastnet/error.hpp"
#include "dastnet/kv.hpp"

namespace dastnet {

RoadGraph::RoadGraph(std::size_t node_count, std::span<const Edge> edges)
    : neighbors_(node_count) {
  if (node_count == 0) throw DomainError("graph needs at least one node");
  for (const auto& e : edges) {
    if (e.u >= node_count || e.v >= node_count)
      throw DomainError("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                        ") out of range for " + std::to_string(node_count) + " nodes");
    if (e.u == e.v) throw DomainError("self-loop at node " + std::to_string(e.u));
    neighbors_[e.u].push_back(e.v);
    neighbors_[e.v].push_back(e.u);
  }
  for (auto& list : neighbors_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
}

std::size_t RoadGraph::edge_count() const {
  std::size_t twice = 0;
  for (const auto& l : neighbors_) twice += l.size();
  return twice / 2;
}

bool RoadGraph::connected(std::size_t u, std::size_t v) const {
  const auto& l = neighbors_[u];
  return std::binary_search(l.begin(), l.end(), v);
}

std::vector<Edge> RoadGraph::edges() const {
  std::vector<Edge> out;
  for (std::size_t u = 0; u < neighbors_.size(); ++u)
    for (auto v : neighbors_[u])
      if (u < v) out.push_back({u, v});
  return out;
}

Tensor RoadGraph::adjacency() const {
  const std::size_t n = node_count();
  Tensor a({n, n});
  for (std::size_t u = 0; u < n; ++u)
    for (auto v : neighbors_[u]) a.at(u, v) = 1.0;
  return a;
}

Tensor RoadGraph::mean_aggregation_matrix() const {
  const std::size_t n = node_count();
  Tensor a({n, n});
  for (std::size_t u = 0; u < n; ++u) {
    if (neighbors_[u].empty()) continue;
    const double w = 1.0 / static_cast<double>(neighbors_[u].size());
    for (auto v : neighbors_[u]) a.at(u, v) = w;
  }
  return a;
}

RoadGraph load_graph(std::size_t node_count, std::span<const Edge> edges) {
  return RoadGraph(node_count, edges);
}

namespace {

std::size_t parse_index(const std::string& text, const std::filesystem::path& path,
                        std::size_t line) {
  const std::string t = trim(text);
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw FormatError(path.string() + ":" + std::to_string(line) + ": bad node id '" + text + "'");
  return value;
}

}  // namespace

RoadGraph read_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open edge list " + path.string());
  std::vector<Edge> edges;
  std::size_t declared = 0;
  std::size_t max_id = 0;
  bool any = false;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("nodes=");
      if (pos != std::string::npos) declared = parse_index(line.substr(pos + 6), path, lineno);
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 'u,v'");
    Edge e{parse_index(line.substr(0, comma), path, lineno),
           parse_index(line.substr(comma + 1), path, lineno)};
    max_id = std::max({max_id, e.u, e.v});
    any = true;
    edges.push_back(e);
  }
  std::size_t n = declared;
  if (n == 0) {
    if (!any) throw FormatError(path.string() + ": no edges and no node count");
    n = max_id + 1;
  }
  return RoadGraph(n, edges);
}

void write_edge_list(const RoadGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write edge list " + path.string());
  out << "# nodes=" << graph.node_count() << '\n';
  for (const auto& e : graph.edges()) out << e.u << ',' << e.v << '\n';
  if (!out) throw FormatError("write failed for " + path.string());
}

std::vector<std::size_t> biased_walk(const RoadGraph& graph, std::size_t start,
                                     std::size_t length, double p, double q, Rng& rng) {
  if (length == 0) throw std::invalid_argument("walk length must be at least 1");
  if (!(p > 0) || !(q > 0)) throw std::invalid_argument("node2vec p and q must be positive");
  std::vector<std::size_t> walk{start};
  walk.reserve(length);
  std::vector<double> weights;
  while (walk.size() < length) {
    const std::size_t cur = walk.back();
    const auto& nbrs = graph.neighbors(cur);
    if (nbrs.empty()) break;
    if (walk.size() == 1) {
      walk.push_back(nbrs[rng.below(nbrs.size())]);
      continue;
    }
    const std::size_t prev = walk[walk.size() - 2];
    weights.resize(nbrs.size());
    double total = 0.0;
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      const std::size_t x = nbrs[i];
      double w;
      if (x == prev)
        w = 1.0 / p;
      else if (graph.connected(prev, x))
        w = 1.0;
      else
        w = 1.0 / q;
      weights[i] = w;
      total += w;
    }
    double r = rng.uniform() * total;
    std::size_t pick = nbrs.size() - 1;
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      if (r < weights[i]) {
        pick = i;
        break;
      }
      r -= weights[i];
    }
    walk.push_back(nbrs[pick]);
  }
  return walk;
}

WalkCorpus build_corpus(const RoadGraph& graph, std::size_t walks_per_node, std::size_t length,
                        double p, double q, std::uint64_t seed) {
  if (walks_per_node == 0 || length == 0)
    throw std::invalid_argument("walks per node and walk length must be positive");
  WalkCorpus corpus;
  corpus.walk_length = length;
  corpus.walks_per_node = walks_per_node;
  const std::size_t n = graph.node_count();
  corpus.walks.resize(n * walks_per_node);
  const auto nodes = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < nodes; ++i) {
    const auto v = static_cast<std::size_t>(i);
    Rng rng(derive_seed(seed, "node2vec.walk", v));
    for (std::size_t r = 0; r < walks_per_node; ++r)
      corpus.walks[v * walks_per_node + r] = biased_walk(graph, v, length, p, q, rng);
  }
  return corpus;
}

namespace {

double sigmoid(double x) {
  if (x > 30) return 1.0;
  if (x < -30) return 0.0;
  return 1.0 / (1.0 + std::exp(-x));
}

}  // namespace

Tensor train_skipgram(const WalkCorpus& corpus, std::size_t node_count,
                      const SkipGramOptions& options, std::vector<double>* epoch_losses) {
  if (options.dim == 0) throw std::invalid_argument("skip-gram dimension must be at least 1");
  if (options.window == 0) throw std::invalid_argument("skip-gram window must be at least 1");
  if (corpus.walks.empty()) throw std::invalid_argument("skip-gram needs a non-empty corpus");

  const std::size_t dim = options.dim;
  Rng rng(options.seed);
  Tensor input({node_count, dim});
  for (auto& x : input.data()) x = (rng.uniform() - 0.5) / static_cast<double>(dim);
  std::vector<double> output(node_count * dim, 0.0);

  // Unigram^0.75 negative-sampling distribution.
  std::vector<double> freq(node_count, 0.0);
  std::size_t tokens = 0;
  for (const auto& w : corpus.walks) {
    for (auto v : w) {
      if (v >= node_count) throw DomainError("walk references node beyond node count");
      freq[v] += 1.0;
    }
    tokens += w.size();
  }
  std::vector<double> cdf(node_count);
  double acc = 0.0;
  for (std::size_t v = 0; v < node_count; ++v) {
    acc += std::pow(freq[v], 0.75);
    cdf[v] = acc;
  }
  auto draw_negative = [&]() {
    const double r = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), r);
    return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(),
                                                             static_cast<std::ptrdiff_t>(node_count - 1)));
  };

  const double total_tokens = static_cast<double>(tokens * options.epochs);
  double processed = 0.0;
  std::vector<double> grad_center(dim);

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t pairs = 0;
    for (const auto& walk : corpus.walks) {
      for (std::size_t i = 0; i < walk.size(); ++i, processed += 1.0) {
        const double lr =
            options.learning_rate * std::max(1e-4, 1.0 - processed / std::max(1.0, total_tokens));
        const std::size_t center = walk[i];
        const std::size_t lo = i >= options.window ? i - options.window : 0;
        const std::size_t hi = std::min(walk.size() - 1, i + options.window);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const std::size_t context = walk[j];
          double* vin = input.data().data() + center * dim;
          std::fill(grad_center.begin(), grad_center.end(), 0.0);
          for (std::size_t s = 0; s <= options.negatives; ++s) {
            const bool positive = s == 0;
            const std::size_t target = positive ? context : draw_negative();
            if (!positive && target == context) continue;
            double* vout = output.data() + target * dim;
            double dot = 0.0;
            for (std::size_t d = 0; d < dim; ++d) dot += vin[d] * vout[d];
            const double sig = sigmoid(dot);
            const double label = positive ? 1.0 : 0.0;
            loss_sum -= positive ? std::log(std::max(sig, 1e-12)) : std::log(std::max(1.0 - sig, 1e-12));
            const double g = lr * (label - sig);
            for (std::size_t d = 0; d < dim; ++d) {
              grad_center[d] += g * vout[d];
              vout[d] += g * vin[d];
            }
          }
          for (std::size_t d = 0; d < dim; ++d) vin[d] += grad_center[d];
          ++pairs;
        }
      }
    }
    if (epoch_losses) epoch_losses->push_back(pairs ? loss_sum / static_cast<double>(pairs) : 0.0);
  }
  return input;
}

void write_raw_features(const Tensor& features, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write features " + path.string());
  out << "node_id";
  for (std::size_t d = 0; d < features.cols(); ++d) out << ",x" << d;
  out << '\n';
  for (std::size_t v = 0; v < features.rows(); ++v) {
    out << v;
    for (std::size_t d = 0; d < features.cols(); ++d) out << ',' << format_double(features.at(v, d));
    out << '\n';
  }
}

Tensor read_raw_features(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open features " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    if (parse_index(cell, path, rows + 2) != rows)
      throw FormatError(path.string() + ": node ids must be 0..N-1 in order");
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      values.push_back(parse_double(cell, path.string()));
      ++c;
    }
    if (rows == 0) cols = c;
    if (c != cols || c == 0) throw FormatError(path.string() + ": ragged feature rows");
    ++rows;
  }
  if (rows == 0) throw FormatError(path.string() + ": no features");
  return Tensor({rows, cols}, std::move(values));
}

}  // namespace dastnet
