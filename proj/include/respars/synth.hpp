#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "respars/graph.hpp"
#include "respars/linalg.hpp"
#include "respars/rng.hpp"
#include "respars/train.hpp"

// Stochastic-block-model generator for desk-scale node-classification
// datasets: block-structured edges, Gaussian features around per-block
// means (unit noise), block labels, and a seeded 60/20/20 mask split.

namespace respars {

struct SbmSpec {
  int n = 120;
  int blocks = 3;
  double p_in = 0.3;
  double p_out = 0.02;
  int feature_dim = 8;
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 1 || blocks < 1 || n % blocks != 0)
      throw std::invalid_argument("SbmSpec: n must be a positive multiple of blocks");
    if (!(0.0 <= p_out && p_out <= p_in && p_in <= 1.0))
      throw std::invalid_argument("SbmSpec: need 0 <= p_out <= p_in <= 1");
    if (feature_dim < 1) throw std::invalid_argument("SbmSpec: feature_dim must be >= 1");
  }
};

struct SynthData {
  Graph graph;
  Matrix features;
  std::vector<int> labels;
  NodeMasks masks;
};

// Bernoulli edge draw per node pair; the pair index keys the stream so the
// iteration order is irrelevant.
inline Graph sbm_graph(int n, int blocks, double p_in, double p_out, std::uint64_t key) {
  std::vector<Edge> edges;
  const int per_block = n / blocks;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double p = (i / per_block == j / per_block) ? p_in : p_out;
      if (p <= 0.0) continue;
      const std::uint64_t pair = static_cast<std::uint64_t>(i) * n + j;
      if (rng::uniform01(key, pair) < p) edges.push_back({i, j, 1.0});
    }
  return Graph::build(n, std::move(edges));
}

inline Graph erdos_renyi(int n, double p, std::uint64_t seed) {
  return sbm_graph(n, 1, p, p, seed);
}

// Regenerates with a derived key until connected; gives up after
// max_attempts.
inline Graph connected_graph_or_throw(int n, int blocks, double p_in, double p_out,
                                      std::uint64_t seed, int max_attempts = 10) {
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Graph g = sbm_graph(n, blocks, p_in, p_out, rng::derive(seed, 100 + attempt));
    if (connected_components(g).count == 1) return g;
  }
  throw std::runtime_error("gen_synth: graph disconnected after " +
                           std::to_string(max_attempts) + " attempts");
}

inline SynthData gen_synth(const SbmSpec& spec) {
  spec.validate();
  SynthData data;
  data.graph = connected_graph_or_throw(spec.n, spec.blocks, spec.p_in, spec.p_out, spec.seed);

  const int per_block = spec.n / spec.blocks;
  data.labels.resize(spec.n);
  for (int i = 0; i < spec.n; ++i) data.labels[i] = i / per_block;

  // Block means at twice the unit feature noise keeps the classes separable
  // even after aggressive sparsification.
  const std::uint64_t mean_key = rng::derive(spec.seed, 1);
  Matrix means(spec.blocks, spec.feature_dim);
  for (int b = 0; b < spec.blocks; ++b)
    for (int d = 0; d < spec.feature_dim; ++d)
      means(b, d) =
          2.0 * rng::normal(mean_key, static_cast<std::uint64_t>(b) * spec.feature_dim + d);

  const std::uint64_t feat_key = rng::derive(spec.seed, 2);
  data.features = Matrix(spec.n, spec.feature_dim);
  for (int i = 0; i < spec.n; ++i)
    for (int d = 0; d < spec.feature_dim; ++d)
      data.features(i, d) = means(data.labels[i], d) +
                            rng::normal(feat_key, static_cast<std::uint64_t>(i) * spec.feature_dim + d);

  // Seeded shuffle, then 60/20/20 in shuffle order.
  std::vector<int> order(spec.n);
  for (int i = 0; i < spec.n; ++i) order[i] = i;
  rng::Stream stream(rng::derive(spec.seed, 3));
  for (int i = spec.n - 1; i > 0; --i) {
    const int j = static_cast<int>(stream.next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }
  data.masks.train.assign(spec.n, 0);
  data.masks.val.assign(spec.n, 0);
  data.masks.test.assign(spec.n, 0);
  const int train_end = static_cast<int>(0.6 * spec.n);
  const int val_end = static_cast<int>(0.8 * spec.n);
  for (int pos = 0; pos < spec.n; ++pos) {
    if (pos < train_end)
      data.masks.train[order[pos]] = 1;
    else if (pos < val_end)
      data.masks.val[order[pos]] = 1;
    else
      data.masks.test[order[pos]] = 1;
  }
  return data;
}

}  // namespace respars
