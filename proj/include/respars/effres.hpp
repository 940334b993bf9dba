#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "respars/graph.hpp"
#include "respars/linalg.hpp"
#include "respars/rng.hpp"

// Effective resistances, exact (dense pseudo-inverse) and sketched
// (Rademacher projection of the weighted incidence matrix plus CG solves),
// with a text cache keyed by the graph content hash.

namespace respars {

enum class ResistanceMethod { exact, sketched };

struct SketchConfig {
  double tau = 0.1;      // distortion tolerance, in (0,1)
  int rows = 0;          // 0 selects ceil(24 ln(n) / tau^2)
  std::uint64_t seed = 0;
  double cg_tol = 1e-8;
  int cg_max_iter = 0;   // 0 selects 10n
};

struct ResistanceTable {
  std::vector<double> values;  // ordered as Graph::edges()
  ResistanceMethod method = ResistanceMethod::exact;
  double tau = 0.0;
  int rows = 0;
  std::uint64_t seed = 0;
  std::uint64_t graph_hash = 0;
};

inline int default_sketch_rows(int n, double tau) {
  const double t = std::ceil(24.0 * std::log(static_cast<double>(n)) / (tau * tau));
  return std::max(1, static_cast<int>(t));
}

// R_e = b_e^T L^+ b_e for every edge.
inline ResistanceTable exact_resistances(const Graph& g) {
  if (g.node_count() > 3000)
    throw std::invalid_argument("exact_resistances: graph too large for dense pseudo-inverse");
  ResistanceTable table;
  table.method = ResistanceMethod::exact;
  table.graph_hash = content_hash(g);
  table.values.reserve(g.edge_count());
  if (g.edge_count() == 0) return table;

  const SymmetricMatrix lap{build_laplacian(g, LaplacianKind::combinatorial)};
  const SymmetricMatrix pinv = pinv_laplacian(lap);
  for (const Edge& e : g.edges())
    table.values.push_back(pinv(e.u, e.u) + pinv(e.v, e.v) - 2.0 * pinv(e.u, e.v));
  return table;
}

// Sketched resistances: Z = P Y^{1/2} B L^+ built row by row, where P has
// Rademacher entries +-1/sqrt(t). Row i of P Y^{1/2} B is assembled directly
// from its per-edge signs and solved against L with preconditioned CG; the
// row RNG stream is keyed by seed XOR row so rows are order-independent.
inline ResistanceTable approx_resistances(const Graph& g, const SketchConfig& cfg) {
  if (!(cfg.tau > 0.0 && cfg.tau < 1.0))
    throw std::invalid_argument("approx_resistances: tau must lie in (0,1)");
  const int n = g.node_count();
  const int m = g.edge_count();
  const int t = cfg.rows > 0 ? cfg.rows : default_sketch_rows(n, cfg.tau);
  const int max_iter = cfg.cg_max_iter > 0 ? cfg.cg_max_iter : 10 * std::max(n, 1);

  ResistanceTable table;
  table.method = ResistanceMethod::sketched;
  table.tau = cfg.tau;
  table.rows = t;
  table.seed = cfg.seed;
  table.graph_hash = content_hash(g);
  table.values.assign(m, 0.0);
  if (m == 0) return table;

  std::vector<double> sqrt_w(m);
  for (int e = 0; e < m; ++e) sqrt_w[e] = std::sqrt(g.edges()[e].w);
  const double scale = 1.0 / std::sqrt(static_cast<double>(t));

  std::vector<double> diag(n);
  for (int i = 0; i < n; ++i) diag[i] = g.degree(i);
  const auto comps = component_lists(g);
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (int i = 0; i < n; ++i) y[i] = diag[i] * x[i];
    for (const Edge& e : g.edges()) {
      y[e.u] -= e.w * x[e.v];
      y[e.v] -= e.w * x[e.u];
    }
  };

  std::vector<double> rhs(n);
  for (int row = 0; row < t; ++row) {
    const std::uint64_t row_key = cfg.seed ^ static_cast<std::uint64_t>(row);
    std::fill(rhs.begin(), rhs.end(), 0.0);
    for (int e = 0; e < m; ++e) {
      const double sign = (rng::at(row_key, e) >> 63) ? scale : -scale;
      const double val = sign * sqrt_w[e];
      rhs[g.edges()[e].u] += val;
      rhs[g.edges()[e].v] -= val;
    }
    const std::vector<double> z =
        detail::cg_laplacian_core(n, apply, diag, comps, rhs, cfg.cg_tol, max_iter);
    for (int e = 0; e < m; ++e) {
      const double d = z[g.edges()[e].u] - z[g.edges()[e].v];
      table.values[e] += d * d;
    }
  }

  // JL noise can push near-zero resistances slightly negative; floor them
  // so tables stay valid sampling weights.
  for (double& r : table.values) r = std::max(r, 1e-12);
  return table;
}

struct FosterReport {
  double sum = 0.0;
  double expected = 0.0;
  bool pass = false;
};

// Foster's theorem: sum of w_e R_e equals n - (component count).
inline FosterReport foster_check(const Graph& g, const ResistanceTable& table) {
  if (table.method != ResistanceMethod::exact)
    throw std::invalid_argument("foster_check: oracle requires exact resistances");
  if (static_cast<int>(table.values.size()) != g.edge_count())
    throw std::invalid_argument("foster_check: table size mismatch");
  FosterReport rep;
  for (int e = 0; e < g.edge_count(); ++e) rep.sum += g.edges()[e].w * table.values[e];
  rep.expected = g.node_count() - connected_components(g).count;
  rep.pass = std::abs(rep.sum - rep.expected) <= 1e-6 * g.node_count();
  return rep;
}

namespace detail {
inline std::string format_hex16(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}
}  // namespace detail

// Cache file: "# respars-cache v1" header, key=value metadata, then one
// "u v r" line per edge in canonical order (r at 17 significant digits).
inline std::string serialize_resistance_table(const Graph& g, const ResistanceTable& table) {
  std::string out = "# respars-cache v1\n";
  out += "graph_hash=" + detail::format_hex16(table.graph_hash) + "\n";
  out += std::string("method=") + (table.method == ResistanceMethod::exact ? "exact" : "sketched") + "\n";
  out += "tau=";
  detail::append_weight(out, table.tau);
  out += "\nt=" + std::to_string(table.rows);
  out += "\nseed=" + std::to_string(table.seed) + "\n";
  for (int e = 0; e < g.edge_count(); ++e) {
    out += std::to_string(g.edges()[e].u);
    out += ' ';
    out += std::to_string(g.edges()[e].v);
    out += ' ';
    detail::append_weight(out, table.values[e]);
    out += '\n';
  }
  return out;
}

inline void cache_store(const std::filesystem::path& path, const Graph& g,
                        const ResistanceTable& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cache_store: cannot open " + path.string());
  out << serialize_resistance_table(g, table);
  if (!out) throw std::runtime_error("cache_store: write failed for " + path.string());
}

inline ResistanceTable cache_load(const std::filesystem::path& path, const Graph& g) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cache_load: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "# respars-cache v1")
    throw std::runtime_error("cache_load: malformed cache header");

  ResistanceTable table;
  auto expect_kv = [&](const std::string& key) {
    if (!std::getline(in, line) || line.rfind(key + "=", 0) != 0)
      throw std::runtime_error("cache_load: malformed cache, expected key '" + key + "'");
    return line.substr(key.size() + 1);
  };
  table.graph_hash = std::stoull(expect_kv("graph_hash"), nullptr, 16);
  const std::string method = expect_kv("method");
  if (method == "exact")
    table.method = ResistanceMethod::exact;
  else if (method == "sketched")
    table.method = ResistanceMethod::sketched;
  else
    throw std::runtime_error("cache_load: unknown method '" + method + "'");
  table.tau = std::stod(expect_kv("tau"));
  table.rows = std::stoi(expect_kv("t"));
  table.seed = std::stoull(expect_kv("seed"));

  if (table.graph_hash != content_hash(g))
    throw std::runtime_error("cache_load: stale cache (graph hash mismatch)");

  table.values.reserve(g.edge_count());
  int idx = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int u, v;
    double r;
    if (!(ls >> u >> v >> r)) throw std::runtime_error("cache_load: malformed edge line");
    if (idx >= g.edge_count() || u != g.edges()[idx].u || v != g.edges()[idx].v)
      throw std::runtime_error("cache_load: edge order mismatch");
    table.values.push_back(r);
    ++idx;
  }
  if (idx != g.edge_count()) throw std::runtime_error("cache_load: truncated cache");
  return table;
}

}  // namespace respars
