#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "respars/effres.hpp"
#include "respars/graph.hpp"
#include "respars/linalg.hpp"
#include "respars/rng.hpp"
#include "respars/sparsify.hpp"

// Attention-based layer forwards. Neighborhoods always include the node
// itself, so softmax rows stay well defined even when sparsification strips
// a node bare. Attention looks only at connectivity; sampled edge weights
// matter for the propagation-matrix models, not for attention support.

namespace respars {

enum class Nonlin { identity, relu, elu, softmax_out };
enum class AttnKind { gat, cosine, gaan };
enum class HeadCombiner { concat, average };
enum class SamplerMode { full, fastgat_per_head, fastgat_layer, fastgat_const };

// Two-layer perceptron x -> w2 * relu(w1 x + b1); no bias on the output.
struct Mlp2 {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
};

struct HeadParams {
  Matrix weight;  // D x F
  AttnKind kind = AttnKind::gat;
  Nonlin sigma = Nonlin::elu;
  std::vector<double> attn;  // gat: length 2F
  double leaky_slope = 0.2;
  bool symmetric_attn = false;
  double beta = 1.0;  // cosine
  Mlp2 fc_src, fc_dst;  // gaan
};

// Copies the first half of a GAT attention vector onto the second, which
// makes the pre-softmax score matrix symmetric.
inline void make_attention_symmetric(std::vector<double>& a) {
  const std::size_t f = a.size() / 2;
  for (std::size_t i = 0; i < f; ++i) a[f + i] = a[i];
}

// CSR-style neighborhoods N_i plus self, ascending per row.
struct AttnSupport {
  int n = 0;
  std::vector<int> offsets;  // size n+1
  std::vector<int> nbr;
};

inline AttnSupport attention_support(const Graph& g) {
  AttnSupport s;
  s.n = g.node_count();
  s.offsets.assign(s.n + 1, 0);
  for (int i = 0; i < s.n; ++i)
    s.offsets[i + 1] = s.offsets[i] + static_cast<int>(g.neighbors(i).size()) + 1;
  s.nbr.resize(s.offsets[s.n]);
  for (int i = 0; i < s.n; ++i) {
    int at = s.offsets[i];
    bool placed_self = false;
    for (const Neighbor& nb : g.neighbors(i)) {
      if (!placed_self && i < nb.node) {
        s.nbr[at++] = i;
        placed_self = true;
      }
      s.nbr[at++] = nb.node;
    }
    if (!placed_self) s.nbr[at++] = i;
  }
  return s;
}

struct AttentionMatrix {
  AttnSupport support;
  std::vector<double> scores;  // pre-softmax e_ij, aligned with support.nbr
  std::vector<double> alpha;   // row softmax of scores

  // Gamma = exp(scores) placed on the support, zero elsewhere.
  Matrix dense_gamma() const {
    Matrix m(support.n, support.n);
    for (int i = 0; i < support.n; ++i)
      for (int k = support.offsets[i]; k < support.offsets[i + 1]; ++k)
        m(i, support.nbr[k]) = std::exp(scores[k]);
    return m;
  }

  Matrix dense_alpha() const {
    Matrix m(support.n, support.n);
    for (int i = 0; i < support.n; ++i)
      for (int k = support.offsets[i]; k < support.offsets[i + 1]; ++k)
        m(i, support.nbr[k]) = alpha[k];
    return m;
  }
};

inline void softmax_rows(const AttnSupport& s, const std::vector<double>& scores,
                         std::vector<double>& alpha) {
  alpha.resize(scores.size());
  for (int i = 0; i < s.n; ++i) {
    const int lo = s.offsets[i], hi = s.offsets[i + 1];
    double mx = -1e300;
    for (int k = lo; k < hi; ++k) mx = std::max(mx, scores[k]);
    double sum = 0.0;
    for (int k = lo; k < hi; ++k) {
      alpha[k] = std::exp(scores[k] - mx);
      sum += alpha[k];
    }
    for (int k = lo; k < hi; ++k) alpha[k] /= sum;
  }
}

inline double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }

inline void apply_nonlin(Matrix& m, Nonlin sigma) {
  switch (sigma) {
    case Nonlin::identity:
      return;
    case Nonlin::relu:
      for (double& v : m.data()) v = v > 0.0 ? v : 0.0;
      return;
    case Nonlin::elu:
      for (double& v : m.data()) v = v > 0.0 ? v : std::expm1(v);
      return;
    case Nonlin::softmax_out:
      for (int i = 0; i < m.rows(); ++i) {
        auto row = m.row(i);
        double mx = -1e300;
        for (double v : row) mx = std::max(mx, v);
        double sum = 0.0;
        for (double& v : row) {
          v = std::exp(v - mx);
          sum += v;
        }
        for (double& v : row) v /= sum;
      }
      return;
  }
}

// Applies the perceptron; `pre_hidden_out`, when given, receives the hidden
// layer before its ReLU (backprop needs the pre-activation).
inline std::vector<double> mlp2_apply(const Mlp2& fc, std::span<const double> x,
                                      std::vector<double>* pre_hidden_out = nullptr) {
  const int h = fc.w1.rows();
  const int o = fc.w2.rows();
  std::vector<double> pre(h);
  for (int i = 0; i < h; ++i) {
    double s = fc.b1[i];
    auto row = fc.w1.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) s += row[j] * x[j];
    pre[i] = s;
  }
  std::vector<double> u(o);
  for (int i = 0; i < o; ++i) {
    double s = 0.0;
    auto row = fc.w2.row(i);
    for (int j = 0; j < h; ++j) s += row[j] * (pre[j] > 0.0 ? pre[j] : 0.0);
    u[i] = s;
  }
  if (pre_hidden_out) *pre_hidden_out = std::move(pre);
  return u;
}

// Everything one attention head computes, kept for reuse by backprop.
struct HeadForwardCache {
  AttentionMatrix attn;
  std::vector<double> raw_scores;  // gat: pre-LeakyReLU; cosine: cos(h_i,h_j)
  Matrix transformed;              // M = H W
  Matrix hidden_src, hidden_dst;   // gaan: w1 m + b1 per node (pre-ReLU)
  Matrix key_src, key_dst;         // gaan: fc outputs per node
  std::vector<double> row_norms;   // cosine: ||h_i||
  Matrix preact;                   // rows aggregated by alpha
  Matrix activated;                // sigma(preact)
};

// Forward pass of one head on the given support graph. `H` is the layer
// input shared by all heads.
inline HeadForwardCache head_forward(const Graph& support_graph, const Matrix& H,
                                     const HeadParams& p) {
  const int n = support_graph.node_count();
  if (H.rows() != n) throw std::invalid_argument("head_forward: feature row count != node count");
  if (p.weight.rows() != H.cols())
    throw std::invalid_argument("head_forward: weight shape does not match features");
  const int f = p.weight.cols();

  HeadForwardCache c;
  c.attn.support = attention_support(support_graph);
  const AttnSupport& s = c.attn.support;
  c.transformed = H * p.weight;
  c.attn.scores.resize(s.nbr.size());
  c.raw_scores.assign(s.nbr.size(), 0.0);

  switch (p.kind) {
    case AttnKind::gat: {
      if (static_cast<int>(p.attn.size()) != 2 * f)
        throw std::invalid_argument("head_forward: gat attention vector must have length 2F");
      std::vector<double> src(n), dst(n);
      for (int i = 0; i < n; ++i) {
        double a = 0.0, b = 0.0;
        auto row = c.transformed.row(i);
        for (int j = 0; j < f; ++j) {
          a += p.attn[j] * row[j];
          b += p.attn[f + j] * row[j];
        }
        src[i] = a;
        dst[i] = b;
      }
      for (int i = 0; i < n; ++i)
        for (int k = s.offsets[i]; k < s.offsets[i + 1]; ++k) {
          c.raw_scores[k] = src[i] + dst[s.nbr[k]];
          c.attn.scores[k] = leaky_relu(c.raw_scores[k], p.leaky_slope);
        }
      break;
    }
    case AttnKind::cosine: {
      c.row_norms.resize(n);
      for (int i = 0; i < n; ++i) {
        double sq = 0.0;
        for (double v : H.row(i)) sq += v * v;
        c.row_norms[i] = std::sqrt(sq);
      }
      for (int i = 0; i < n; ++i)
        for (int k = s.offsets[i]; k < s.offsets[i + 1]; ++k) {
          const int j = s.nbr[k];
          double cosij = 0.0;
          if (c.row_norms[i] > 0.0 && c.row_norms[j] > 0.0) {
            double dot = 0.0;
            auto hi = H.row(i), hj = H.row(j);
            for (int d = 0; d < H.cols(); ++d) dot += hi[d] * hj[d];
            cosij = dot / (c.row_norms[i] * c.row_norms[j]);
          }
          c.raw_scores[k] = cosij;
          c.attn.scores[k] = p.beta * cosij;
        }
      break;
    }
    case AttnKind::gaan: {
      if (p.fc_src.w1.cols() != f || p.fc_dst.w1.cols() != f)
        throw std::invalid_argument("head_forward: gaan fc input width must equal F");
      const int fk = p.fc_src.w2.rows();
      if (p.fc_dst.w2.rows() != fk)
        throw std::invalid_argument("head_forward: gaan fc key widths differ");
      c.hidden_src = Matrix(n, p.fc_src.w1.rows());
      c.hidden_dst = Matrix(n, p.fc_dst.w1.rows());
      c.key_src = Matrix(n, fk);
      c.key_dst = Matrix(n, fk);
      std::vector<double> hidden;
      for (int i = 0; i < n; ++i) {
        auto u = mlp2_apply(p.fc_src, c.transformed.row(i), &hidden);
        for (int d = 0; d < static_cast<int>(hidden.size()); ++d) c.hidden_src(i, d) = hidden[d];
        for (int d = 0; d < fk; ++d) c.key_src(i, d) = u[d];
        auto v = mlp2_apply(p.fc_dst, c.transformed.row(i), &hidden);
        for (int d = 0; d < static_cast<int>(hidden.size()); ++d) c.hidden_dst(i, d) = hidden[d];
        for (int d = 0; d < fk; ++d) c.key_dst(i, d) = v[d];
      }
      for (int i = 0; i < n; ++i)
        for (int k = s.offsets[i]; k < s.offsets[i + 1]; ++k) {
          const int j = s.nbr[k];
          double dot = 0.0;
          for (int d = 0; d < fk; ++d) dot += c.key_src(i, d) * c.key_dst(j, d);
          c.attn.scores[k] = dot;
        }
      break;
    }
  }

  softmax_rows(s, c.attn.scores, c.attn.alpha);

  c.preact = Matrix(n, f);
  for (int i = 0; i < n; ++i) {
    auto out = c.preact.row(i);
    for (int k = s.offsets[i]; k < s.offsets[i + 1]; ++k) {
      const double a = c.attn.alpha[k];
      auto mj = c.transformed.row(s.nbr[k]);
      for (int d = 0; d < f; ++d) out[d] += a * mj[d];
    }
  }
  c.activated = c.preact;
  apply_nonlin(c.activated, p.sigma);
  return c;
}

inline AttentionMatrix attention_matrix(const Graph& g, const Matrix& H, const HeadParams& p) {
  return head_forward(g, H, p).attn;
}

// Eq.-style GCN layer: sigma(Dt^{-1/2} (A+I) Dt^{-1/2} H W).
inline Matrix gcn_forward(const Graph& g, const Matrix& H, const Matrix& W, Nonlin sigma) {
  if (H.rows() != g.node_count()) throw std::invalid_argument("gcn_forward: feature rows != nodes");
  if (W.rows() != H.cols()) throw std::invalid_argument("gcn_forward: weight shape mismatch");
  Matrix out = build_laplacian(g, LaplacianKind::gcn_norm) * (H * W);
  apply_nonlin(out, sigma);
  return out;
}

inline Matrix combine_heads(const std::vector<Matrix>& outs, HeadCombiner combiner) {
  const int n = outs.front().rows();
  const int f = outs.front().cols();
  const int k = static_cast<int>(outs.size());
  if (combiner == HeadCombiner::concat) {
    Matrix m(n, k * f);
    for (int h = 0; h < k; ++h)
      for (int i = 0; i < n; ++i)
        for (int d = 0; d < f; ++d) m(i, h * f + d) = outs[h](i, d);
    return m;
  }
  Matrix m(n, f);
  for (int h = 0; h < k; ++h)
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < f; ++d) m(i, d) += outs[h](i, d) / static_cast<double>(k);
  return m;
}

// One multi-head attention layer; all heads read the same input features.
inline Matrix gat_layer_forward(const Graph& g, const Matrix& H,
                                const std::vector<HeadParams>& heads, HeadCombiner combiner) {
  if (heads.empty()) throw std::invalid_argument("gat_layer_forward: no heads");
  if (combiner == HeadCombiner::concat && heads.front().sigma == Nonlin::softmax_out)
    throw std::invalid_argument("gat_layer_forward: classification layer must average heads");
  std::vector<Matrix> outs;
  outs.reserve(heads.size());
  for (const HeadParams& p : heads) outs.push_back(head_forward(g, H, p).activated);
  return combine_heads(outs, combiner);
}

struct LayerConfig {
  int heads = 1;
  int out_features = 8;
  AttnKind kind = AttnKind::gat;
  HeadCombiner combiner = HeadCombiner::concat;
  Nonlin sigma = Nonlin::elu;
};

struct ModelConfig {
  std::vector<LayerConfig> layers;
  SamplerMode mode = SamplerMode::full;
  double epsilon = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    if (layers.empty()) throw std::invalid_argument("ModelConfig: no layers");
    if (layers.back().combiner != HeadCombiner::average)
      throw std::invalid_argument("ModelConfig: last layer must average heads");
  }
};

using ModelParams = std::vector<std::vector<HeadParams>>;  // [layer][head]

inline std::uint64_t sampler_seed(const ModelConfig& cfg, int layer, int head) {
  switch (cfg.mode) {
    case SamplerMode::fastgat_const:
      return rng::derive2(cfg.seed, 1, 0);
    case SamplerMode::fastgat_layer:
      return rng::derive2(cfg.seed, 2, static_cast<std::uint64_t>(layer) + 1);
    case SamplerMode::fastgat_per_head:
      return rng::derive2(cfg.seed, 3,
                          (static_cast<std::uint64_t>(layer) + 1) * 4096 + head + 1);
    case SamplerMode::full:
      break;
  }
  return 0;
}

// The per-(layer, head) support graphs plus how many sampler calls built
// them: 1 for const, L for per-layer, sum of K_l for per-head, 0 for full.
struct SampledSupports {
  std::vector<std::vector<const Graph*>> per_layer_head;
  std::vector<SparsifiedGraph> storage;
  int sampler_invocations = 0;
};

inline SampledSupports sample_supports(const Graph& g, const ModelConfig& cfg,
                                       const ResistanceTable* table) {
  cfg.validate();
  SampledSupports out;
  const int num_layers = static_cast<int>(cfg.layers.size());
  out.per_layer_head.resize(num_layers);

  if (cfg.mode == SamplerMode::full) {
    for (int l = 0; l < num_layers; ++l)
      out.per_layer_head[l].assign(cfg.layers[l].heads, &g);
    return out;
  }
  if (table == nullptr)
    throw std::invalid_argument("sample_supports: sampling mode requires a resistance table");

  // Count total sparsifiers first so `storage` never reallocates.
  int total = 0;
  if (cfg.mode == SamplerMode::fastgat_const) total = 1;
  if (cfg.mode == SamplerMode::fastgat_layer) total = num_layers;
  if (cfg.mode == SamplerMode::fastgat_per_head)
    for (const LayerConfig& lc : cfg.layers) total += lc.heads;
  out.storage.reserve(total);

  auto draw = [&](int layer, int head) -> const Graph* {
    SparsifyConfig sc;
    sc.epsilon = cfg.epsilon;
    sc.seed = sampler_seed(cfg, layer, head);
    out.storage.push_back(sample_sparsifier(g, *table, sc));
    ++out.sampler_invocations;
    return &out.storage.back().graph;
  };

  if (cfg.mode == SamplerMode::fastgat_const) {
    const Graph* shared = draw(0, 0);
    for (int l = 0; l < num_layers; ++l) out.per_layer_head[l].assign(cfg.layers[l].heads, shared);
  } else if (cfg.mode == SamplerMode::fastgat_layer) {
    for (int l = 0; l < num_layers; ++l)
      out.per_layer_head[l].assign(cfg.layers[l].heads, draw(l, 0));
  } else {
    for (int l = 0; l < num_layers; ++l) {
      out.per_layer_head[l].resize(cfg.layers[l].heads);
      for (int k = 0; k < cfg.layers[l].heads; ++k) out.per_layer_head[l][k] = draw(l, k);
    }
  }
  return out;
}

struct ForwardStats {
  int sampler_invocations = 0;
  long attention_pairs = 0;  // directed pairs incl. self, summed over heads
};

struct ForwardResult {
  Matrix output;  // final-layer rows (row-stochastic when sigma=softmax_out)
  ForwardStats stats;
};

// Full model forward under the configured sampler mode. `table` may be null
// in full mode; sampling modes require it to match `g` by content hash.
inline ForwardResult fastgat_forward(const Graph& g, const Matrix& H, const ModelConfig& cfg,
                                     const ModelParams& params, const ResistanceTable* table) {
  cfg.validate();
  if (params.size() != cfg.layers.size())
    throw std::invalid_argument("fastgat_forward: params/layers mismatch");
  const SampledSupports supports = sample_supports(g, cfg, table);

  ForwardResult res;
  res.stats.sampler_invocations = supports.sampler_invocations;
  Matrix h = H;
  for (int l = 0; l < static_cast<int>(cfg.layers.size()); ++l) {
    const LayerConfig& lc = cfg.layers[l];
    if (static_cast<int>(params[l].size()) != lc.heads)
      throw std::invalid_argument("fastgat_forward: head count mismatch at layer " + std::to_string(l));
    std::vector<Matrix> outs;
    outs.reserve(lc.heads);
    for (int k = 0; k < lc.heads; ++k) {
      HeadForwardCache c = head_forward(*supports.per_layer_head[l][k], h, params[l][k]);
      res.stats.attention_pairs += static_cast<long>(c.attn.support.nbr.size());
      outs.push_back(std::move(c.activated));
    }
    h = combine_heads(outs, lc.combiner);
  }
  res.output = std::move(h);
  return res;
}

// Max |row-normalized exp(LeakyReLU scores) - softmax attention| for a GAT
// head: the two routes are algebraically identical, so this measures only
// floating-point disagreement.
inline double prop1_equivalence_check(const Graph& g, const Matrix& H, const HeadParams& p) {
  if (p.kind != AttnKind::gat)
    throw std::invalid_argument("prop1_equivalence_check: gat attention only");
  const HeadForwardCache c = head_forward(g, H, p);
  const AttnSupport& s = c.attn.support;
  double dev = 0.0;
  for (int i = 0; i < s.n; ++i) {
    double rowsum = 0.0;
    for (int k = s.offsets[i]; k < s.offsets[i + 1]; ++k) rowsum += std::exp(c.attn.scores[k]);
    for (int k = s.offsets[i]; k < s.offsets[i + 1]; ++k)
      dev = std::max(dev, std::abs(std::exp(c.attn.scores[k]) / rowsum - c.attn.alpha[k]));
  }
  return dev;
}

}  // namespace respars
