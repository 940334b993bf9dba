#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "respars/effres.hpp"
#include "respars/gnn.hpp"
#include "respars/graph.hpp"
#include "respars/linalg.hpp"
#include "respars/sparsify.hpp"
#include "respars/train.hpp"

// Numerical certification of the layer-approximation bounds. The measured
// epsilon* is the max of the index-wise eigenvalue deviation of the
// combinatorial Laplacians and the max relative degree deviation: the bound
// derivations rely on both the spectrum and the degrees staying close.

namespace respars {

struct BoundReport {
  std::string model;  // "gcn" or "gat"
  double lhs = 0.0;   // || Hf - Hs ||_F
  double rhs = 0.0;   // c * eps_star * ||L_norm|| * ||H W||_F
  double constant = 0.0;
  double eps_star = 0.0;
  double degree_deviation = 0.0;
  bool holds = false;
};

// Oversampled draw count for the small-epsilon regime the proofs assume.
inline long theory_grade_sample_count(int n, double epsilon) {
  return static_cast<long>(
      std::ceil(4.0 * n * std::log(static_cast<double>(n)) / (epsilon * epsilon)));
}

namespace detail {
inline void require_lipschitz_unit(Nonlin sigma, const char* where) {
  if (sigma != Nonlin::relu && sigma != Nonlin::elu)
    throw std::invalid_argument(std::string(where) + ": nonlinearity must be relu or elu");
}
}  // namespace detail

// Single-layer propagation bound for the degree-normalized smoothing
// operator D^{-1/2} A D^{-1/2} (scale-invariant, so reweighting both graphs
// by a common factor leaves the features unchanged).
inline BoundReport theorem1_check(const Graph& g_full, const Graph& g_sparse, const Matrix& H,
                                  const Matrix& W, Nonlin sigma) {
  detail::require_lipschitz_unit(sigma, "theorem1_check");
  if (g_full.node_count() != g_sparse.node_count())
    throw std::invalid_argument("theorem1_check: node-count mismatch");
  if (connected_components(g_full).count != connected_components(g_sparse).count)
    throw std::invalid_argument("theorem1_check: component-count mismatch");

  auto smoothing = [](const Graph& g) {
    Matrix p = build_laplacian(g, LaplacianKind::sym_norm);
    p *= -1.0;
    for (int i = 0; i < p.rows(); ++i) p(i, i) += 1.0;  // I - L_norm
    return p;
  };

  const Matrix hw = H * W;
  Matrix hf = smoothing(g_full) * hw;
  Matrix hs = smoothing(g_sparse) * hw;
  apply_nonlin(hf, sigma);
  apply_nonlin(hs, sigma);

  const SpectralReport spec = spectral_check(g_full, g_sparse);
  BoundReport rep;
  rep.model = "gcn";
  rep.constant = 4.0;
  rep.eps_star = std::max(spec.epsilon_star, spec.max_degree_deviation);
  rep.degree_deviation = spec.max_degree_deviation;
  rep.lhs = (hf - hs).frobenius_norm();
  const double lnorm =
      spectral_norm(SymmetricMatrix{build_laplacian(g_full, LaplacianKind::sym_norm)});
  rep.rhs = rep.constant * rep.eps_star * lnorm * hw.frobenius_norm();
  rep.holds = rep.lhs <= rep.rhs;
  return rep;
}

namespace detail {

inline void require_symmetric_nonneg(const Matrix& gamma, const char* where) {
  if (gamma.rows() != gamma.cols()) throw std::invalid_argument(std::string(where) + ": not square");
  const double scale = gamma.max_abs();
  for (int i = 0; i < gamma.rows(); ++i)
    for (int j = i; j < gamma.cols(); ++j) {
      if (std::abs(gamma(i, j) - gamma(j, i)) > 1e-9 * scale)
        throw std::invalid_argument(std::string(where) + ": theorem requires symmetric attention");
      if (gamma(i, j) < 0.0)
        throw std::invalid_argument(std::string(where) + ": attention weights must be nonnegative");
    }
}

inline std::vector<double> row_sums(const Matrix& m) {
  std::vector<double> s(m.rows(), 0.0);
  for (int i = 0; i < m.rows(); ++i)
    for (double v : m.row(i)) s[i] += v;
  return s;
}

// sigma(Gamma_D^{-1} Gamma H W)
inline Matrix gamma_propagate(const Matrix& gamma, const Matrix& hw, Nonlin sigma) {
  const std::vector<double> d = row_sums(gamma);
  Matrix out(gamma.rows(), hw.cols());
  for (int i = 0; i < gamma.rows(); ++i) {
    if (!(d[i] > 0.0)) throw std::invalid_argument("gamma_propagate: empty attention row");
    for (int j = 0; j < gamma.cols(); ++j) {
      const double a = gamma(i, j) / d[i];
      if (a == 0.0) continue;
      for (int c = 0; c < hw.cols(); ++c) out(i, c) += a * hw(j, c);
    }
  }
  apply_nonlin(out, sigma);
  return out;
}

// Combinatorial Laplacian of a weighted symmetric matrix; self weights
// cancel. Off-diagonal pairs are averaged so inputs within the looser
// attention-symmetry tolerance still form an exactly symmetric Laplacian.
inline Matrix gamma_laplacian(const Matrix& gamma) {
  const int n = gamma.rows();
  Matrix lap(n, n);
  for (int i = 0; i < n; ++i) {
    double deg = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double w = 0.5 * (gamma(i, j) + gamma(j, i));
      deg += w;
      lap(i, j) = -w;
    }
    lap(i, i) = deg;
  }
  return lap;
}

}  // namespace detail

// Attention-layer bound: both Gamma matrices act as weighted adjacency
// matrices (their diagonals are the retained self-attention weights).
inline BoundReport theorem2_check(const Matrix& gamma_full, const Matrix& gamma_sparse,
                                  const Matrix& H, const Matrix& W, Nonlin sigma) {
  detail::require_lipschitz_unit(sigma, "theorem2_check");
  detail::require_symmetric_nonneg(gamma_full, "theorem2_check");
  detail::require_symmetric_nonneg(gamma_sparse, "theorem2_check");
  if (gamma_full.rows() != gamma_sparse.rows() || gamma_full.rows() != H.rows())
    throw std::invalid_argument("theorem2_check: shape mismatch");

  const Matrix hw = H * W;
  const Matrix hf = detail::gamma_propagate(gamma_full, hw, sigma);
  const Matrix hs = detail::gamma_propagate(gamma_sparse, hw, sigma);

  BoundReport rep;
  rep.model = "gat";
  rep.constant = 6.0;
  rep.lhs = (hf - hs).frobenius_norm();

  const SymEig eig_f = sym_eig(SymmetricMatrix{detail::gamma_laplacian(gamma_full)});
  const SymEig eig_s = sym_eig(SymmetricMatrix{detail::gamma_laplacian(gamma_sparse)});
  double lam_max = 0.0;
  for (double l : eig_f.values) lam_max = std::max(lam_max, std::abs(l));
  const double cutoff = 1e-9 * lam_max;
  double eps_eig = 0.0;
  for (std::size_t i = 0; i < eig_f.values.size(); ++i) {
    if (std::abs(eig_f.values[i]) <= cutoff) continue;
    eps_eig = std::max(eps_eig, std::abs(eig_s.values[i] - eig_f.values[i]) / eig_f.values[i]);
  }
  const std::vector<double> df = detail::row_sums(gamma_full);
  const std::vector<double> ds = detail::row_sums(gamma_sparse);
  double eps_deg = 0.0;
  for (std::size_t i = 0; i < df.size(); ++i)
    if (df[i] > 0.0) eps_deg = std::max(eps_deg, std::abs(ds[i] - df[i]) / df[i]);
  rep.eps_star = std::max(eps_eig, eps_deg);
  rep.degree_deviation = eps_deg;

  // ||I - Gamma_D^{-1/2} Gamma Gamma_D^{-1/2}|| of the full attention graph.
  const int n = gamma_full.rows();
  Matrix lnorm(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      lnorm(i, j) = (i == j ? 1.0 : 0.0) - gamma_full(i, j) / std::sqrt(df[i] * df[j]);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (lnorm(i, j) + lnorm(j, i));
      lnorm(i, j) = v;
      lnorm(j, i) = v;
    }
  rep.rhs = rep.constant * rep.eps_star * spectral_norm(SymmetricMatrix{std::move(lnorm)}) *
            hw.frobenius_norm();
  rep.holds = rep.lhs <= rep.rhs;
  return rep;
}

// Resistance-sample the off-diagonal part of a symmetric attention matrix,
// keeping the self weights untouched.
inline Matrix sparsify_gamma(const Matrix& gamma, double epsilon, long q_override,
                             std::uint64_t seed) {
  detail::require_symmetric_nonneg(gamma, "sparsify_gamma");
  const int n = gamma.rows();
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (gamma(i, j) > 0.0) edges.push_back({i, j, gamma(i, j)});
  const Graph g = Graph::build(n, std::move(edges));
  const ResistanceTable table = exact_resistances(g);
  SparsifyConfig cfg;
  cfg.epsilon = epsilon;
  cfg.q_override = q_override;
  cfg.seed = seed;
  const SparsifiedGraph s = sample_sparsifier(g, table, cfg);
  Matrix out(n, n);
  for (int i = 0; i < n; ++i) out(i, i) = gamma(i, i);
  for (const Edge& e : s.graph.edges()) {
    out(e.u, e.v) = e.w;
    out(e.v, e.u) = e.w;
  }
  return out;
}

struct Lemma1Report {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

// ||A - D^{-1} A D|| <= ||A|| (||I - D^{-1}|| + ||D^{-1}|| ||I - D||).
inline Lemma1Report lemma1_check(const Matrix& a, const std::vector<double>& diag) {
  if (a.rows() != a.cols() || static_cast<int>(diag.size()) != a.rows())
    throw std::invalid_argument("lemma1_check: shape mismatch");
  for (double d : diag)
    if (!(d > 0.0)) throw std::invalid_argument("lemma1_check: diagonal entries must be positive");

  const int n = a.rows();
  Matrix conj(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) conj(i, j) = a(i, j) - a(i, j) * diag[j] / diag[i];

  double ninv = 0.0, nid = 0.0, ninvd = 0.0;
  for (double d : diag) {
    ninv = std::max(ninv, std::abs(1.0 - 1.0 / d));
    nid = std::max(nid, std::abs(1.0 - d));
    ninvd = std::max(ninvd, 1.0 / d);
  }
  Lemma1Report rep;
  rep.lhs = operator_norm(conj);
  rep.rhs = operator_norm(a) * (ninv + ninvd * nid);
  rep.holds = rep.lhs <= rep.rhs + 1e-10;
  return rep;
}

// ---------------------------------------------------------------------------
// Weight drift: paired training runs from identical initialization

struct DriftReport {
  std::vector<double> epsilons;
  std::vector<double> mean_rel_errors;  // aligned with epsilons
};

namespace detail {

inline double tensor_rel_error(const Matrix& a, const Matrix& b) {
  const double denom = a.frobenius_norm();
  return denom > 0.0 ? (a - b).frobenius_norm() / denom : 0.0;
}

// Mean relative Frobenius error over every learned tensor (weights and
// attention parameters) of matching heads.
inline double mean_param_rel_error(const ModelParams& a, const ModelParams& b) {
  double sum = 0.0;
  long count = 0;
  for (std::size_t l = 0; l < a.size(); ++l)
    for (std::size_t k = 0; k < a[l].size(); ++k) {
      const HeadParams& pa = a[l][k];
      const HeadParams& pb = b[l][k];
      sum += tensor_rel_error(pa.weight, pb.weight);
      ++count;
      if (pa.kind == AttnKind::gat) {
        double na = 0.0, nd = 0.0;
        for (std::size_t i = 0; i < pa.attn.size(); ++i) {
          na += pa.attn[i] * pa.attn[i];
          const double d = pa.attn[i] - pb.attn[i];
          nd += d * d;
        }
        sum += na > 0.0 ? std::sqrt(nd / na) : 0.0;
        ++count;
      } else if (pa.kind == AttnKind::cosine) {
        sum += pa.beta != 0.0 ? std::abs(pa.beta - pb.beta) / std::abs(pa.beta) : 0.0;
        ++count;
      } else {
        sum += tensor_rel_error(pa.fc_src.w1, pb.fc_src.w1);
        sum += tensor_rel_error(pa.fc_src.w2, pb.fc_src.w2);
        sum += tensor_rel_error(pa.fc_dst.w1, pb.fc_dst.w1);
        sum += tensor_rel_error(pa.fc_dst.w2, pb.fc_dst.w2);
        count += 4;
      }
    }
  return count > 0 ? sum / count : 0.0;
}

}  // namespace detail

// Trains a full-graph model and an epsilon-sparsified twin from the same
// initialization for each seed, then reports the mean parameter drift per
// epsilon. epsilon = 0 means the pass-through sparsifier (identical runs).
inline DriftReport weight_drift_experiment(const Graph& g, const Matrix& H,
                                           const std::vector<int>& labels,
                                           const TrainConfig& base,
                                           const ResistanceTable& table,
                                           const std::vector<double>& eps_list,
                                           const std::vector<std::uint64_t>& seeds) {
  DriftReport rep;
  rep.epsilons = eps_list;
  rep.mean_rel_errors.assign(eps_list.size(), 0.0);

  for (std::uint64_t seed : seeds) {
    TrainConfig full_cfg = base;
    full_cfg.seed = seed;
    full_cfg.model.seed = seed;
    full_cfg.model.mode = SamplerMode::full;
    const TrainResult full = train(full_cfg, g, H, labels, &table);

    for (std::size_t e = 0; e < eps_list.size(); ++e) {
      TrainConfig sparse_cfg = full_cfg;
      if (eps_list[e] == 0.0) {
        sparse_cfg.model.mode = SamplerMode::full;  // pass-through
      } else {
        sparse_cfg.model.mode = SamplerMode::fastgat_const;
        sparse_cfg.model.epsilon = eps_list[e];
      }
      const TrainResult sparse = train(sparse_cfg, g, H, labels, &table);
      rep.mean_rel_errors[e] += detail::mean_param_rel_error(full.params, sparse.params);
    }
  }
  for (double& v : rep.mean_rel_errors) v /= static_cast<double>(seeds.size());
  return rep;
}

}  // namespace respars
