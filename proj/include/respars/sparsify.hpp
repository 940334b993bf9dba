#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "respars/effres.hpp"
#include "respars/graph.hpp"
#include "respars/linalg.hpp"
#include "respars/rng.hpp"

// Effective-resistance-weighted edge sampling with reweighting, plus the
// eigenvalue-wise spectral check that certifies the result.

namespace respars {

struct SparsifyConfig {
  double epsilon = 0.5;
  long q_override = 0;  // 0 selects sample_count(n, M, epsilon)
  std::uint64_t seed = 0;
};

struct SamplingRecord {
  double epsilon = 0.0;
  long q = 0;
  std::uint64_t seed = 0;
  int distinct_edges = 0;
  double percent_reduction = 0.0;  // 1 - distinct/M
};

struct SparsifiedGraph {
  Graph graph;  // same node set, retained edges reweighted
  SamplingRecord record;
};

// Number of with-replacement draws: max(1, floor(0.16 n ln(n) / eps^2)).
inline long sample_count(int n, [[maybe_unused]] long m, double epsilon) {
  if (n < 2) throw std::invalid_argument("sample_count: need n >= 2");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("sample_count: epsilon must lie in (0,1)");
  const double q = std::floor(0.16 * n * std::log(static_cast<double>(n)) / (epsilon * epsilon));
  return std::max(1L, static_cast<long>(q));
}

// Draw q edges with replacement from p_e proportional to w_e R_e; an edge
// drawn with multiplicity m keeps weight m * w_e / (q p_e). Draw i is a pure
// function of (seed, i), so the draw order never matters.
inline SparsifiedGraph sample_sparsifier(const Graph& g, const ResistanceTable& table,
                                         const SparsifyConfig& cfg) {
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0))
    throw std::invalid_argument("sample_sparsifier: epsilon must lie in (0,1)");
  if (table.graph_hash != content_hash(g))
    throw std::invalid_argument("sample_sparsifier: resistance table does not match graph");
  const int m = g.edge_count();
  if (static_cast<int>(table.values.size()) != m)
    throw std::invalid_argument("sample_sparsifier: table size mismatch");

  std::vector<double> cum(m);
  double total = 0.0;
  for (int e = 0; e < m; ++e) {
    total += g.edges()[e].w * std::max(table.values[e], 0.0);
    cum[e] = total;
  }
  if (!(total > 0.0)) throw std::invalid_argument("sample_sparsifier: no sampleable edges");

  const long q = cfg.q_override > 0 ? cfg.q_override : sample_count(g.node_count(), m, cfg.epsilon);

  std::vector<long> multiplicity(m, 0);
  for (long i = 0; i < q; ++i) {
    const double u = rng::uniform01(cfg.seed, static_cast<std::uint64_t>(i)) * total;
    const int e = static_cast<int>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    ++multiplicity[std::min(e, m - 1)];
  }

  std::vector<Edge> kept;
  for (int e = 0; e < m; ++e) {
    if (multiplicity[e] == 0) continue;
    const double p = g.edges()[e].w * std::max(table.values[e], 0.0) / total;
    const double w = static_cast<double>(multiplicity[e]) * g.edges()[e].w / (static_cast<double>(q) * p);
    kept.push_back({g.edges()[e].u, g.edges()[e].v, w});
  }

  SparsifiedGraph out;
  out.graph = Graph::build(g.node_count(), std::move(kept));
  out.record.epsilon = cfg.epsilon;
  out.record.q = q;
  out.record.seed = cfg.seed;
  out.record.distinct_edges = out.graph.edge_count();
  out.record.percent_reduction = 1.0 - static_cast<double>(out.record.distinct_edges) / m;
  return out;
}

struct SpectralReport {
  std::vector<double> eig_g;  // ascending, combinatorial Laplacian
  std::vector<double> eig_h;
  double epsilon_star = 0.0;  // max_i |l_i(H) - l_i(G)| / l_i(G) over l_i(G) > 0
  double max_degree_deviation = 0.0;
  bool components_match = false;
};

namespace detail {
inline int zero_eigenvalue_count(const std::vector<double>& eig) {
  double lam_max = 0.0;
  for (double l : eig) lam_max = std::max(lam_max, std::abs(l));
  const double cutoff = 1e-9 * lam_max;
  int zeros = 0;
  for (double l : eig)
    if (std::abs(l) <= cutoff || lam_max == 0.0) ++zeros;
  return zeros;
}
}  // namespace detail

// Index-by-index comparison of sorted Laplacian spectra. Zero eigenvalues of
// the original are skipped; a zero-count (component-count) mismatch fails
// the report rather than producing a misleading epsilon*.
inline SpectralReport spectral_check(const Graph& g, const Graph& h) {
  if (g.node_count() != h.node_count())
    throw std::invalid_argument("spectral_check: node-count mismatch");
  SpectralReport rep;
  rep.eig_g = sym_eig(SymmetricMatrix{build_laplacian(g, LaplacianKind::combinatorial)}).values;
  rep.eig_h = sym_eig(SymmetricMatrix{build_laplacian(h, LaplacianKind::combinatorial)}).values;

  rep.components_match =
      detail::zero_eigenvalue_count(rep.eig_g) == detail::zero_eigenvalue_count(rep.eig_h);

  double lam_max = 0.0;
  for (double l : rep.eig_g) lam_max = std::max(lam_max, std::abs(l));
  const double cutoff = 1e-9 * lam_max;
  for (int i = 0; i < static_cast<int>(rep.eig_g.size()); ++i) {
    if (std::abs(rep.eig_g[i]) <= cutoff) continue;
    rep.epsilon_star =
        std::max(rep.epsilon_star, std::abs(rep.eig_h[i] - rep.eig_g[i]) / rep.eig_g[i]);
  }
  for (int v = 0; v < g.node_count(); ++v) {
    if (g.degree(v) <= 0.0) continue;
    rep.max_degree_deviation =
        std::max(rep.max_degree_deviation, std::abs(h.degree(v) - g.degree(v)) / g.degree(v));
  }
  return rep;
}

// Monte-Carlo unbiasedness probe: the mean sampled Laplacian over `trials`
// independent sparsifiers is compared entrywise (on the support of L_G)
// against L_G. Per-edge mean weights suffice: every Laplacian entry is a
// signed sum of them.
inline double expectation_check(const Graph& g, const ResistanceTable& table, double epsilon,
                                int trials, std::uint64_t seed) {
  if (trials < 1000) throw std::invalid_argument("expectation_check: trials must be >= 1000");
  const int m = g.edge_count();
  std::vector<double> mean_w(m, 0.0);
  SparsifyConfig cfg;
  cfg.epsilon = epsilon;
  for (int t = 0; t < trials; ++t) {
    cfg.seed = rng::derive(seed, static_cast<std::uint64_t>(t));
    const SparsifiedGraph s = sample_sparsifier(g, table, cfg);
    for (const Edge& e : s.graph.edges()) {
      // Canonical order is preserved under subsetting; locate by (u,v).
      const auto it = std::lower_bound(g.edges().begin(), g.edges().end(), e,
                                       [](const Edge& a, const Edge& b) {
                                         return a.u != b.u ? a.u < b.u : a.v < b.v;
                                       });
      mean_w[it - g.edges().begin()] += e.w;
    }
  }
  for (double& w : mean_w) w /= static_cast<double>(trials);

  // Off-diagonal entries deviate exactly like the edge means; diagonals like
  // the incident sums.
  double err = 0.0;
  std::vector<double> mean_deg(g.node_count(), 0.0);
  for (int e = 0; e < m; ++e) {
    err = std::max(err, std::abs(mean_w[e] - g.edges()[e].w) / g.edges()[e].w);
    mean_deg[g.edges()[e].u] += mean_w[e];
    mean_deg[g.edges()[e].v] += mean_w[e];
  }
  for (int v = 0; v < g.node_count(); ++v) {
    if (g.degree(v) <= 0.0) continue;
    err = std::max(err, std::abs(mean_deg[v] - g.degree(v)) / g.degree(v));
  }
  return err;
}

}  // namespace respars
