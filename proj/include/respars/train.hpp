#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "respars/gnn.hpp"
#include "respars/graph.hpp"
#include "respars/rng.hpp"
#include "respars/sparsify.hpp"

// Desk-scale training: hand-derived reverse-mode gradients for the attention
// layers, a finite-difference oracle, Adam, and the adaptive edge-budget
// controller. All randomness flows through counter-based streams so a fixed
// TrainConfig reproduces its trace bit for bit.

namespace respars {

struct NodeMasks {
  std::vector<char> train, val, test;
};

inline int mask_count(const std::vector<char>& mask) {
  int c = 0;
  for (char m : mask) c += m ? 1 : 0;
  return c;
}

// Mean negative log-likelihood over masked nodes; rows of `probs` must
// already be distributions (softmax outputs). Probabilities are floored at
// 1e-12 inside the log.
inline double cross_entropy_loss(const Matrix& probs, const std::vector<int>& labels,
                                 const std::vector<char>& mask) {
  if (probs.rows() != static_cast<int>(labels.size()) || labels.size() != mask.size())
    throw std::invalid_argument("cross_entropy_loss: shape mismatch");
  const int cnt = mask_count(mask);
  if (cnt == 0) throw std::invalid_argument("cross_entropy_loss: empty mask");
  double loss = 0.0;
  for (int i = 0; i < probs.rows(); ++i) {
    if (!mask[i]) continue;
    const int y = labels[i];
    if (y < 0 || y >= probs.cols()) throw std::invalid_argument("cross_entropy_loss: label out of range");
    loss -= std::log(std::max(probs(i, y), 1e-12));
  }
  return loss / cnt;
}

inline double accuracy(const Matrix& probs, const std::vector<int>& labels,
                       const std::vector<char>& mask) {
  const int cnt = mask_count(mask);
  if (cnt == 0) throw std::invalid_argument("accuracy: empty mask");
  int correct = 0;
  for (int i = 0; i < probs.rows(); ++i) {
    if (!mask[i]) continue;
    int arg = 0;
    for (int c = 1; c < probs.cols(); ++c)
      if (probs(i, c) > probs(i, arg)) arg = c;
    if (arg == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / cnt;
}

// Micro-averaged F1 over argmax predictions. For single-label multi-class
// every wrong prediction is one FP and one FN, so this equals accuracy; the
// aggregation is still done through TP/FP/FN counts.
inline double micro_f1(const Matrix& probs, const std::vector<int>& labels,
                       const std::vector<char>& mask) {
  const int cnt = mask_count(mask);
  if (cnt == 0) throw std::invalid_argument("micro_f1: empty mask");
  long tp = 0, fp = 0, fn = 0;
  for (int i = 0; i < probs.rows(); ++i) {
    if (!mask[i]) continue;
    int arg = 0;
    for (int c = 1; c < probs.cols(); ++c)
      if (probs(i, c) > probs(i, arg)) arg = c;
    if (arg == labels[i]) {
      ++tp;
    } else {
      ++fp;
      ++fn;
    }
  }
  const double denom = tp + 0.5 * (fp + fn);
  return denom > 0.0 ? tp / denom : 0.0;
}

// ---------------------------------------------------------------------------
// Parameter plumbing

struct HeadGrads {
  Matrix weight;
  std::vector<double> attn;
  double beta = 0.0;
  Mlp2 fc_src, fc_dst;
};

using ModelGrads = std::vector<std::vector<HeadGrads>>;

inline HeadGrads zero_grads_like(const HeadParams& p) {
  HeadGrads g;
  g.weight = Matrix(p.weight.rows(), p.weight.cols());
  g.attn.assign(p.attn.size(), 0.0);
  auto zero_mlp = [](const Mlp2& m) {
    Mlp2 z;
    z.w1 = Matrix(m.w1.rows(), m.w1.cols());
    z.b1.assign(m.b1.size(), 0.0);
    z.w2 = Matrix(m.w2.rows(), m.w2.cols());
    return z;
  };
  g.fc_src = zero_mlp(p.fc_src);
  g.fc_dst = zero_mlp(p.fc_dst);
  return g;
}

inline ModelGrads zero_grads_like(const ModelParams& params) {
  ModelGrads g(params.size());
  for (std::size_t l = 0; l < params.size(); ++l)
    for (const HeadParams& p : params[l]) g[l].push_back(zero_grads_like(p));
  return g;
}

// Canonical scalar order: layer, head, then weight / attn / beta / fc_src /
// fc_dst. Grads use the identical order so Adam and the finite-difference
// oracle can walk both in lockstep.
inline std::vector<double*> parameter_pointers(ModelParams& params) {
  std::vector<double*> out;
  for (auto& layer : params)
    for (HeadParams& p : layer) {
      for (double& v : p.weight.data()) out.push_back(&v);
      if (p.kind == AttnKind::gat)
        for (double& v : p.attn) out.push_back(&v);
      if (p.kind == AttnKind::cosine) out.push_back(&p.beta);
      if (p.kind == AttnKind::gaan)
        for (Mlp2* fc : {&p.fc_src, &p.fc_dst}) {
          for (double& v : fc->w1.data()) out.push_back(&v);
          for (double& v : fc->b1) out.push_back(&v);
          for (double& v : fc->w2.data()) out.push_back(&v);
        }
    }
  return out;
}

inline std::vector<double> gradient_values(const ModelGrads& grads, const ModelParams& params) {
  std::vector<double> out;
  for (std::size_t l = 0; l < params.size(); ++l)
    for (std::size_t k = 0; k < params[l].size(); ++k) {
      const HeadParams& p = params[l][k];
      const HeadGrads& g = grads[l][k];
      for (double v : g.weight.data()) out.push_back(v);
      if (p.kind == AttnKind::gat)
        for (double v : g.attn) out.push_back(v);
      if (p.kind == AttnKind::cosine) out.push_back(g.beta);
      if (p.kind == AttnKind::gaan)
        for (const Mlp2* fc : {&g.fc_src, &g.fc_dst}) {
          for (double v : fc->w1.data()) out.push_back(v);
          for (double v : fc->b1) out.push_back(v);
          for (double v : fc->w2.data()) out.push_back(v);
        }
    }
  return out;
}

// Glorot-uniform initialization, one counter stream per tensor.
inline ModelParams init_model_params(const ModelConfig& cfg, int input_dim, std::uint64_t seed) {
  cfg.validate();
  ModelParams params(cfg.layers.size());
  int in_dim = input_dim;
  for (std::size_t l = 0; l < cfg.layers.size(); ++l) {
    const LayerConfig& lc = cfg.layers[l];
    const int f = lc.out_features;
    for (int k = 0; k < lc.heads; ++k) {
      HeadParams p;
      p.kind = lc.kind;
      p.sigma = lc.sigma;
      const std::uint64_t hkey = rng::derive2(seed, l + 1, static_cast<std::uint64_t>(k) + 1);
      auto fill = [&](Matrix& m, int fan_in, int fan_out, std::uint64_t tag) {
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        const std::uint64_t key = rng::derive(hkey, tag);
        std::size_t idx = 0;
        for (double& v : m.data()) v = (2.0 * rng::uniform01(key, idx++) - 1.0) * bound;
      };
      p.weight = Matrix(in_dim, f);
      fill(p.weight, in_dim, f, 0);
      if (lc.kind == AttnKind::gat) {
        p.attn.resize(2 * f);
        const double bound = std::sqrt(6.0 / (2 * f + 1));
        const std::uint64_t key = rng::derive(hkey, 1);
        for (std::size_t i = 0; i < p.attn.size(); ++i)
          p.attn[i] = (2.0 * rng::uniform01(key, i) - 1.0) * bound;
      } else if (lc.kind == AttnKind::cosine) {
        p.beta = 1.0;
      } else {
        auto init_fc = [&](Mlp2& fc, std::uint64_t tag) {
          fc.w1 = Matrix(f, f);
          fill(fc.w1, f, f, tag);
          fc.b1.assign(f, 0.0);
          fc.w2 = Matrix(f, f);
          fill(fc.w2, f, f, tag + 1);
        };
        init_fc(p.fc_src, 3);
        init_fc(p.fc_dst, 5);
      }
      params[l].push_back(std::move(p));
    }
    in_dim = lc.combiner == HeadCombiner::concat ? lc.heads * f : f;
  }
  return params;
}

// ---------------------------------------------------------------------------
// Forward with caches, loss, and hand-rolled backward

struct ModelForwardCache {
  std::vector<Matrix> inputs;  // inputs[l] feeds layer l
  std::vector<std::vector<HeadForwardCache>> heads;
  Matrix output;
  double min_abs_preact = 1e300;  // distance to the nearest ReLU/ELU/LeakyReLU kink
};

inline ModelForwardCache model_forward(const ModelConfig& cfg, const ModelParams& params,
                                       const SampledSupports& supports, const Matrix& H) {
  ModelForwardCache c;
  c.inputs.push_back(H);
  c.heads.resize(cfg.layers.size());
  for (std::size_t l = 0; l < cfg.layers.size(); ++l) {
    const LayerConfig& lc = cfg.layers[l];
    std::vector<Matrix> outs;
    outs.reserve(lc.heads);
    for (int k = 0; k < lc.heads; ++k) {
      HeadForwardCache hc = head_forward(*supports.per_layer_head[l][k], c.inputs[l], params[l][k]);
      if (lc.sigma == Nonlin::relu || lc.sigma == Nonlin::elu)
        for (double v : hc.preact.data()) c.min_abs_preact = std::min(c.min_abs_preact, std::abs(v));
      if (lc.kind == AttnKind::gat)
        for (double v : hc.raw_scores) c.min_abs_preact = std::min(c.min_abs_preact, std::abs(v));
      if (lc.kind == AttnKind::gaan) {
        for (double v : hc.hidden_src.data()) c.min_abs_preact = std::min(c.min_abs_preact, std::abs(v));
        for (double v : hc.hidden_dst.data()) c.min_abs_preact = std::min(c.min_abs_preact, std::abs(v));
      }
      outs.push_back(hc.activated);
      c.heads[l].push_back(std::move(hc));
    }
    c.inputs.push_back(combine_heads(outs, lc.combiner));
  }
  c.output = c.inputs.back();
  c.inputs.pop_back();
  return c;
}

struct BackpropResult {
  ModelGrads grads;
  double loss = 0.0;
  Matrix probs;
  double min_abs_preact = 1e300;
};

namespace detail {

// d(loss)/d(output). Matches cross_entropy_loss including its probability
// floor: floored entries contribute zero gradient.
inline Matrix loss_output_gradient(const Matrix& probs, const std::vector<int>& labels,
                                   const std::vector<char>& mask) {
  const int cnt = mask_count(mask);
  Matrix d(probs.rows(), probs.cols());
  for (int i = 0; i < probs.rows(); ++i) {
    if (!mask[i]) continue;
    const double p = probs(i, labels[i]);
    if (p > 1e-12) d(i, labels[i]) = -1.0 / (p * cnt);
  }
  return d;
}

// dZ from dAct for one head given sigma and cached values.
inline Matrix nonlin_backward(const Matrix& d_act, const HeadForwardCache& hc, Nonlin sigma) {
  const int n = d_act.rows(), f = d_act.cols();
  Matrix dz(n, f);
  switch (sigma) {
    case Nonlin::identity:
      dz = d_act;
      break;
    case Nonlin::relu:
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < f; ++j) dz(i, j) = hc.preact(i, j) > 0.0 ? d_act(i, j) : 0.0;
      break;
    case Nonlin::elu:
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < f; ++j)
          dz(i, j) = d_act(i, j) * (hc.preact(i, j) > 0.0 ? 1.0 : std::exp(hc.preact(i, j)));
      break;
    case Nonlin::softmax_out:
      for (int i = 0; i < n; ++i) {
        double inner = 0.0;
        for (int j = 0; j < f; ++j) inner += d_act(i, j) * hc.activated(i, j);
        for (int j = 0; j < f; ++j) dz(i, j) = hc.activated(i, j) * (d_act(i, j) - inner);
      }
      break;
  }
  return dz;
}

}  // namespace detail

// Exact reverse-mode gradients of the masked cross-entropy through the whole
// model. Subgraph sampling is frozen: supports are inputs, not variables.
inline BackpropResult backprop_gradients(const ModelConfig& cfg, const ModelParams& params,
                                         const SampledSupports& supports, const Matrix& H,
                                         const std::vector<int>& labels,
                                         const std::vector<char>& mask) {
  cfg.validate();
  ModelForwardCache fwd = model_forward(cfg, params, supports, H);

  BackpropResult res;
  res.probs = fwd.output;
  res.loss = cross_entropy_loss(fwd.output, labels, mask);
  res.min_abs_preact = fwd.min_abs_preact;
  res.grads = zero_grads_like(params);

  Matrix d_layer_out = detail::loss_output_gradient(fwd.output, labels, mask);

  for (int l = static_cast<int>(cfg.layers.size()) - 1; l >= 0; --l) {
    const LayerConfig& lc = cfg.layers[l];
    const Matrix& input = fwd.inputs[l];
    const int n = input.rows();
    const int f = lc.out_features;
    Matrix d_input(n, input.cols());

    for (int k = 0; k < lc.heads; ++k) {
      const HeadParams& p = params[l][k];
      const HeadForwardCache& hc = fwd.heads[l][k];
      HeadGrads& g = res.grads[l][k];
      const AttnSupport& s = hc.attn.support;

      // Split the combined gradient back out of concat/average.
      Matrix d_act(n, f);
      if (lc.combiner == HeadCombiner::concat) {
        for (int i = 0; i < n; ++i)
          for (int d = 0; d < f; ++d) d_act(i, d) = d_layer_out(i, k * f + d);
      } else {
        const double inv = 1.0 / lc.heads;
        for (int i = 0; i < n; ++i)
          for (int d = 0; d < f; ++d) d_act(i, d) = d_layer_out(i, d) * inv;
      }

      const Matrix dz = detail::nonlin_backward(d_act, hc, lc.sigma);

      // Aggregation Z(i,:) = sum_j alpha_ij M(j,:).
      std::vector<double> d_alpha(s.nbr.size(), 0.0);
      Matrix d_m(n, f);
      for (int i = 0; i < n; ++i) {
        auto dzi = dz.row(i);
        for (int kk = s.offsets[i]; kk < s.offsets[i + 1]; ++kk) {
          const int j = s.nbr[kk];
          auto mj = hc.transformed.row(j);
          double dot = 0.0;
          for (int d = 0; d < f; ++d) dot += dzi[d] * mj[d];
          d_alpha[kk] = dot;
          const double a = hc.attn.alpha[kk];
          auto dmj = d_m.row(j);
          for (int d = 0; d < f; ++d) dmj[d] += a * dzi[d];
        }
      }

      // Softmax rows: de = alpha * (d_alpha - <d_alpha, alpha>_row).
      std::vector<double> d_score(s.nbr.size());
      for (int i = 0; i < n; ++i) {
        double inner = 0.0;
        for (int kk = s.offsets[i]; kk < s.offsets[i + 1]; ++kk)
          inner += d_alpha[kk] * hc.attn.alpha[kk];
        for (int kk = s.offsets[i]; kk < s.offsets[i + 1]; ++kk)
          d_score[kk] = hc.attn.alpha[kk] * (d_alpha[kk] - inner);
      }

      switch (p.kind) {
        case AttnKind::gat: {
          // score = LeakyReLU(a1.m_i + a2.m_j)
          std::vector<double> row_sum(n, 0.0), col_sum(n, 0.0);
          for (int i = 0; i < n; ++i)
            for (int kk = s.offsets[i]; kk < s.offsets[i + 1]; ++kk) {
              const double ds =
                  d_score[kk] * (hc.raw_scores[kk] > 0.0 ? 1.0 : p.leaky_slope);
              row_sum[i] += ds;
              col_sum[s.nbr[kk]] += ds;
            }
          for (int i = 0; i < n; ++i) {
            auto mi = hc.transformed.row(i);
            auto dmi = d_m.row(i);
            for (int d = 0; d < f; ++d) {
              g.attn[d] += row_sum[i] * mi[d];
              g.attn[f + d] += col_sum[i] * mi[d];
              dmi[d] += row_sum[i] * p.attn[d] + col_sum[i] * p.attn[f + d];
            }
          }
          break;
        }
        case AttnKind::cosine: {
          // score = beta * cos(h_i, h_j) on the raw layer input.
          for (int i = 0; i < n; ++i) {
            for (int kk = s.offsets[i]; kk < s.offsets[i + 1]; ++kk) {
              const int j = s.nbr[kk];
              g.beta += d_score[kk] * hc.raw_scores[kk];
              const double dcos = d_score[kk] * p.beta;
              if (dcos == 0.0) continue;
              const double ni = hc.row_norms[i], nj = hc.row_norms[j];
              if (ni <= 0.0 || nj <= 0.0) continue;  // cos pinned to 0 there
              const double cosij = hc.raw_scores[kk];
              auto hi = input.row(i);
              auto hj = input.row(j);
              auto di = d_input.row(i);
              auto dj = d_input.row(j);
              for (int d = 0; d < input.cols(); ++d) {
                di[d] += dcos * (hj[d] / (ni * nj) - cosij * hi[d] / (ni * ni));
                dj[d] += dcos * (hi[d] / (ni * nj) - cosij * hj[d] / (nj * nj));
              }
            }
          }
          break;
        }
        case AttnKind::gaan: {
          // score = <fc_src(m_i), fc_dst(m_j)>
          const int fk = p.fc_src.w2.rows();
          Matrix d_u(n, fk), d_v(n, fk);
          for (int i = 0; i < n; ++i)
            for (int kk = s.offsets[i]; kk < s.offsets[i + 1]; ++kk) {
              const int j = s.nbr[kk];
              const double ds = d_score[kk];
              if (ds == 0.0) continue;
              for (int d = 0; d < fk; ++d) {
                d_u(i, d) += ds * hc.key_dst(j, d);
                d_v(j, d) += ds * hc.key_src(i, d);
              }
            }
          auto mlp_backward = [&](const Mlp2& fc, Mlp2& gfc, const Matrix& pre_hidden,
                                  const Matrix& d_key) {
            const int h = fc.w1.rows();
            for (int i = 0; i < n; ++i) {
              auto mi = hc.transformed.row(i);
              std::vector<double> dt(h, 0.0);
              for (int o = 0; o < fk; ++o) {
                const double dko = d_key(i, o);
                if (dko == 0.0) continue;
                auto w2row = fc.w2.row(o);
                auto gw2row = gfc.w2.row(o);
                for (int t = 0; t < h; ++t) {
                  const double pre = pre_hidden(i, t);
                  const double post = pre > 0.0 ? pre : 0.0;
                  gw2row[t] += dko * post;
                  if (pre > 0.0) dt[t] += dko * w2row[t];
                }
              }
              auto dmi = d_m.row(i);
              for (int t = 0; t < h; ++t) {
                if (dt[t] == 0.0) continue;
                gfc.b1[t] += dt[t];
                auto w1row = fc.w1.row(t);
                auto gw1row = gfc.w1.row(t);
                for (int d = 0; d < f; ++d) {
                  gw1row[d] += dt[t] * mi[d];
                  dmi[d] += dt[t] * w1row[d];
                }
              }
            }
          };
          mlp_backward(p.fc_src, g.fc_src, hc.hidden_src, d_u);
          mlp_backward(p.fc_dst, g.fc_dst, hc.hidden_dst, d_v);
          break;
        }
      }

      // M = input * W: accumulate dW and the input gradient.
      for (int i = 0; i < n; ++i) {
        auto hi = input.row(i);
        auto dmi = d_m.row(i);
        auto di = d_input.row(i);
        for (int d = 0; d < f; ++d) {
          const double dm = dmi[d];
          if (dm == 0.0) continue;
          for (int c = 0; c < input.cols(); ++c) {
            g.weight(c, d) += hi[c] * dm;
            di[c] += dm * p.weight(c, d);
          }
        }
      }
    }
    d_layer_out = std::move(d_input);
  }
  return res;
}

inline double model_loss(const ModelConfig& cfg, const ModelParams& params,
                         const SampledSupports& supports, const Matrix& H,
                         const std::vector<int>& labels, const std::vector<char>& mask) {
  return cross_entropy_loss(model_forward(cfg, params, supports, H).output, labels, mask);
}

struct GradcheckReport {
  double max_rel_error = 0.0;
  bool pass = false;
  double min_abs_preact = 0.0;  // instances close to a kink are not FD-comparable
};

// Central differences on every scalar parameter against the analytic
// gradients. Relative error uses max(|g_a|, |g_n|, 1e-8) in the denominator.
inline GradcheckReport finite_diff_gradcheck(const ModelConfig& cfg, ModelParams params,
                                             const SampledSupports& supports, const Matrix& H,
                                             const std::vector<int>& labels,
                                             const std::vector<char>& mask, double h = 1e-4,
                                             double tol = 1e-4) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_gradcheck: h must be > 0");
  const BackpropResult bp = backprop_gradients(cfg, params, supports, H, labels, mask);
  const std::vector<double> analytic = gradient_values(bp.grads, params);
  std::vector<double*> ptrs = parameter_pointers(params);

  GradcheckReport rep;
  rep.min_abs_preact = bp.min_abs_preact;
  for (std::size_t i = 0; i < ptrs.size(); ++i) {
    const double saved = *ptrs[i];
    *ptrs[i] = saved + h;
    const double up = model_loss(cfg, params, supports, H, labels, mask);
    *ptrs[i] = saved - h;
    const double down = model_loss(cfg, params, supports, H, labels, mask);
    *ptrs[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double rel = std::abs(analytic[i] - numeric) /
                       std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    rep.max_rel_error = std::max(rep.max_rel_error, rel);
  }
  rep.pass = rep.max_rel_error <= tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m, v;
  long step = 0;
};

inline void adam_step(std::vector<double*>& params, const std::vector<double>& grads,
                      AdamState& state, const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: size mismatch");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    *params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

// ---------------------------------------------------------------------------
// Training loop

struct TrainConfig {
  int epochs = 200;
  AdamConfig adam;
  std::uint64_t seed = 0;
  ModelConfig model;
  NodeMasks masks;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double seconds = 0.0;  // wall time; never serialized into data outputs
  long edge_count = 0;
};

using TrainTrace = std::vector<EpochRecord>;

struct TrainResult {
  TrainTrace trace;
  ModelParams params;
  ForwardStats forward_stats;  // per-epoch sampler/attention work
  Matrix final_probs;
};

// Two-layer default: 8 heads x 8 features with ELU and concat, then a single
// averaged softmax head with one output per class.
inline ModelConfig default_model_config(int num_classes, AttnKind kind = AttnKind::gat,
                                        SamplerMode mode = SamplerMode::full, double epsilon = 0.5,
                                        std::uint64_t seed = 0) {
  ModelConfig cfg;
  cfg.layers.push_back({8, 8, kind, HeadCombiner::concat, Nonlin::elu});
  cfg.layers.push_back({1, num_classes, kind, HeadCombiner::average, Nonlin::softmax_out});
  cfg.mode = mode;
  cfg.epsilon = epsilon;
  cfg.seed = seed;
  return cfg;
}

inline void validate_masks(const NodeMasks& masks, int n) {
  if (static_cast<int>(masks.train.size()) != n || static_cast<int>(masks.val.size()) != n ||
      static_cast<int>(masks.test.size()) != n)
    throw std::invalid_argument("masks: size mismatch");
  for (int i = 0; i < n; ++i)
    if ((masks.train[i] ? 1 : 0) + (masks.val[i] ? 1 : 0) + (masks.test[i] ? 1 : 0) > 1)
      throw std::invalid_argument("masks: overlapping assignment at node " + std::to_string(i));
  if (mask_count(masks.train) == 0) throw std::invalid_argument("masks: no training nodes");
}

namespace detail {
inline long trace_edge_count(const Graph& g, const SampledSupports& supports) {
  if (supports.storage.empty()) return g.edge_count();
  long total = 0;
  for (const SparsifiedGraph& s : supports.storage) total += s.record.distinct_edges;
  return total / static_cast<long>(supports.storage.size());
}
}  // namespace detail

inline TrainResult train(const TrainConfig& cfg, const Graph& g, const Matrix& H,
                         const std::vector<int>& labels, const ResistanceTable* table) {
  cfg.model.validate();
  validate_masks(cfg.masks, g.node_count());
  TrainResult res;
  res.params = init_model_params(cfg.model, H.cols(), cfg.seed);
  if (cfg.epochs == 0) return res;

  // Subgraph draws depend only on (model.seed, layer, head), so they are
  // made once and stay fixed for the whole run.
  const SampledSupports supports = sample_supports(g, cfg.model, table);
  const long edge_count = detail::trace_edge_count(g, supports);

  std::vector<double*> ptrs = parameter_pointers(res.params);
  AdamState adam;
  const bool has_val = mask_count(cfg.masks.val) > 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    BackpropResult bp =
        backprop_gradients(cfg.model, res.params, supports, H, labels, cfg.masks.train);
    const std::vector<double> grads = gradient_values(bp.grads, res.params);
    adam_step(ptrs, grads, adam, cfg.adam);
    const auto t1 = std::chrono::steady_clock::now();

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = bp.loss;
    rec.train_acc = accuracy(bp.probs, labels, cfg.masks.train);
    rec.val_acc = has_val ? accuracy(bp.probs, labels, cfg.masks.val) : 0.0;
    rec.seconds = std::chrono::duration<double>(t1 - t0).count();
    rec.edge_count = edge_count;
    res.trace.push_back(rec);
  }

  ForwardResult last = fastgat_forward(g, H, cfg.model, res.params, table);
  res.forward_stats = last.stats;
  res.final_probs = std::move(last.output);
  return res;
}

// ---------------------------------------------------------------------------
// Adaptive edge-budget controller

struct AdaptiveConfig {
  int window = 20;
  double eps_start = 0.9;
  double eps_floor = 0.5;      // densest sparsifier the controller may reach
  double stall_slope = 1e-4;   // accuracy/epoch below which learning counts as stalled
  int edge_increment = 0;      // 0 selects ceil(0.003 M)
  bool use_validation_slope = false;
};

enum class AdaptiveAction { none, add, remove };

// Controller decision for one window. Stalled progress densifies; a marked
// improvement right after a densification undoes it (tries sparser again).
inline AdaptiveAction adaptive_decide(double slope, const std::optional<double>& prev_slope,
                                      AdaptiveAction last_action, const AdaptiveConfig& cfg) {
  if (slope < cfg.stall_slope) return AdaptiveAction::add;
  if (prev_slope.has_value() && slope >= *prev_slope + cfg.stall_slope &&
      last_action == AdaptiveAction::add)
    return AdaptiveAction::remove;
  return AdaptiveAction::none;
}

inline double lsq_slope(std::span<const double> y) {
  const int n = static_cast<int>(y.size());
  if (n < 2) return 0.0;
  const double tbar = (n - 1) / 2.0;
  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= n;
  double num = 0.0, den = 0.0;
  for (int t = 0; t < n; ++t) {
    num += (t - tbar) * (y[t] - ybar);
    den += (t - tbar) * (t - tbar);
  }
  return num / den;
}

struct AdaptiveResult {
  TrainTrace trace;
  std::vector<long> edge_trace;  // per epoch
  std::vector<AdaptiveAction> actions;  // one per completed window
  ModelParams params;
  Matrix final_probs;
};

inline AdaptiveResult adaptive_train(const TrainConfig& cfg, const AdaptiveConfig& acfg,
                                     const Graph& g, const Matrix& H,
                                     const std::vector<int>& labels,
                                     const ResistanceTable& table) {
  cfg.model.validate();
  validate_masks(cfg.masks, g.node_count());
  if (acfg.eps_floor > acfg.eps_start)
    throw std::invalid_argument("adaptive_train: eps_floor must not exceed eps_start");
  const int m = g.edge_count();
  const int increment =
      acfg.edge_increment > 0 ? acfg.edge_increment
                              : std::max(1, static_cast<int>(std::ceil(0.003 * m)));

  // Sampling distribution shared by the initial draw and every batch.
  std::vector<double> mass(m);
  double total = 0.0;
  for (int e = 0; e < m; ++e) {
    mass[e] = g.edges()[e].w * std::max(table.values[e], 0.0);
    total += mass[e];
  }
  if (!(total > 0.0)) throw std::invalid_argument("adaptive_train: no sampleable edges");

  SparsifyConfig sc;
  sc.epsilon = acfg.eps_start;
  sc.seed = rng::derive(cfg.model.seed, 11);
  const SparsifiedGraph start = sample_sparsifier(g, table, sc);
  const long q0 = start.record.q;

  SparsifyConfig fc;
  fc.epsilon = acfg.eps_floor;
  fc.seed = rng::derive(cfg.model.seed, 12);
  const int floor_budget = sample_sparsifier(g, table, fc).graph.edge_count();

  // Current subgraph as edge-id -> weight; ids index g.edges().
  std::map<int, double> current;
  for (const Edge& e : start.graph.edges()) {
    const auto it = std::lower_bound(
        g.edges().begin(), g.edges().end(), e,
        [](const Edge& a, const Edge& b) { return a.u != b.u ? a.u < b.u : a.v < b.v; });
    current[static_cast<int>(it - g.edges().begin())] = e.w;
  }

  auto build_current = [&]() {
    std::vector<Edge> edges;
    edges.reserve(current.size());
    for (const auto& [id, w] : current) edges.push_back({g.edges()[id].u, g.edges()[id].v, w});
    return Graph::build(g.node_count(), std::move(edges));
  };

  ModelConfig live = cfg.model;
  live.mode = SamplerMode::full;  // the controller owns the subgraph

  AdaptiveResult res;
  res.params = init_model_params(cfg.model, H.cols(), cfg.seed);
  std::vector<double*> ptrs = parameter_pointers(res.params);
  AdamState adam;

  Graph cur_graph = build_current();
  SampledSupports supports = sample_supports(cur_graph, live, nullptr);
  const bool has_val = mask_count(cfg.masks.val) > 0;

  std::vector<double> window_acc;
  std::optional<double> prev_slope;
  AdaptiveAction last_action = AdaptiveAction::none;
  std::vector<std::vector<int>> added_batches;
  int window_idx = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    BackpropResult bp = backprop_gradients(live, res.params, supports, H, labels, cfg.masks.train);
    adam_step(ptrs, gradient_values(bp.grads, res.params), adam, cfg.adam);
    const auto t1 = std::chrono::steady_clock::now();

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = bp.loss;
    rec.train_acc = accuracy(bp.probs, labels, cfg.masks.train);
    rec.val_acc = has_val ? accuracy(bp.probs, labels, cfg.masks.val) : 0.0;
    rec.seconds = std::chrono::duration<double>(t1 - t0).count();
    rec.edge_count = static_cast<long>(current.size());
    res.trace.push_back(rec);
    res.edge_trace.push_back(static_cast<long>(current.size()));

    window_acc.push_back(acfg.use_validation_slope ? rec.val_acc : rec.train_acc);
    if (static_cast<int>(window_acc.size()) < acfg.window || epoch == cfg.epochs - 1) continue;

    const double slope = lsq_slope(window_acc);
    window_acc.clear();
    AdaptiveAction action = adaptive_decide(slope, prev_slope, last_action, acfg);
    prev_slope = slope;
    ++window_idx;

    if (action == AdaptiveAction::add) {
      // Draw absent edges without replacement by p_e; Alg-2 weight for a
      // single draw out of the original q0.
      std::vector<int> absent;
      for (int e = 0; e < m; ++e)
        if (!current.count(e)) absent.push_back(e);
      const int room = floor_budget - static_cast<int>(current.size());
      const int want = std::min({increment, static_cast<int>(absent.size()), std::max(room, 0)});
      if (want <= 0) {
        action = AdaptiveAction::none;
      } else {
        rng::Stream stream(rng::derive2(cfg.model.seed, 100, window_idx));
        std::vector<int> batch;
        for (int pick = 0; pick < want; ++pick) {
          double sub_total = 0.0;
          for (int e : absent) sub_total += mass[e];
          double u = stream.next_uniform01() * sub_total;
          std::size_t chosen = absent.size() - 1;
          for (std::size_t a = 0; a < absent.size(); ++a) {
            u -= mass[absent[a]];
            if (u <= 0.0) {
              chosen = a;
              break;
            }
          }
          const int id = absent[chosen];
          absent.erase(absent.begin() + chosen);
          const double p = mass[id] / total;
          current[id] = g.edges()[id].w / (static_cast<double>(q0) * p);
          batch.push_back(id);
        }
        added_batches.push_back(std::move(batch));
      }
    } else if (action == AdaptiveAction::remove) {
      if (added_batches.empty()) {
        action = AdaptiveAction::none;
      } else {
        for (int id : added_batches.back()) current.erase(id);
        added_batches.pop_back();
      }
    }
    res.actions.push_back(action);
    last_action = action;
    if (action != AdaptiveAction::none) {
      cur_graph = build_current();
      supports = sample_supports(cur_graph, live, nullptr);
    }
  }
  if (cfg.epochs > 0)
    res.final_probs = model_forward(live, res.params, supports, H).output;
  return res;
}

}  // namespace respars
