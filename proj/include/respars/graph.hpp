#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "respars/linalg.hpp"

// Canonical weighted undirected graph: edge list with u < v, sorted and
// deduplicated, plus a per-node adjacency index. Graphs are immutable after
// construction and safe to share across threads.

namespace respars {

struct Edge {
  int u = 0;
  int v = 0;
  double w = 1.0;
};

struct Neighbor {
  int node;
  int edge;  // index into edges()
};

class Graph {
 public:
  Graph() = default;

  // Canonicalizes raw edges: orients u < v, drops self-loops (counted),
  // merges duplicates by summing weights. Node ids must lie in [0, n).
  static Graph build(int n, std::vector<Edge> raw) {
    if (n < 1) throw std::invalid_argument("Graph: node count must be >= 1");
    int dropped = 0;
    std::map<std::pair<int, int>, double> merged;
    for (const Edge& e : raw) {
      if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n)
        throw std::invalid_argument("Graph: node id out of range");
      if (!(e.w > 0.0)) throw std::invalid_argument("Graph: edge weight must be > 0");
      if (e.u == e.v) {
        ++dropped;
        continue;
      }
      const auto key = std::minmax(e.u, e.v);
      merged[{key.first, key.second}] += e.w;
    }
    Graph g;
    g.n_ = n;
    g.self_loops_dropped_ = dropped;
    g.edges_.reserve(merged.size());
    for (const auto& [uv, w] : merged) g.edges_.push_back({uv.first, uv.second, w});
    g.build_index();
    return g;
  }

  int node_count() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  int self_loops_dropped() const { return self_loops_dropped_; }

  std::span<const Neighbor> neighbors(int v) const {
    return {adj_.data() + adj_off_[v], static_cast<std::size_t>(adj_off_[v + 1] - adj_off_[v])};
  }

  // Weighted degree.
  double degree(int v) const { return degree_[v]; }

  double total_weight() const {
    double s = 0.0;
    for (const Edge& e : edges_) s += e.w;
    return s;
  }

 private:
  void build_index() {
    adj_off_.assign(n_ + 1, 0);
    degree_.assign(n_, 0.0);
    for (const Edge& e : edges_) {
      ++adj_off_[e.u + 1];
      ++adj_off_[e.v + 1];
      degree_[e.u] += e.w;
      degree_[e.v] += e.w;
    }
    for (int i = 0; i < n_; ++i) adj_off_[i + 1] += adj_off_[i];
    adj_.resize(adj_off_[n_]);
    std::vector<int> cursor(adj_off_.begin(), adj_off_.end() - 1);
    for (int id = 0; id < static_cast<int>(edges_.size()); ++id) {
      const Edge& e = edges_[id];
      adj_[cursor[e.u]++] = {e.v, id};
      adj_[cursor[e.v]++] = {e.u, id};
    }
  }

  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<int> adj_off_;
  std::vector<Neighbor> adj_;
  std::vector<double> degree_;
  int self_loops_dropped_ = 0;
};

// Text format: optional "# n=<count>" first line, then "u v [w]" per line,
// '#' starts a comment, 0-indexed ids, weight defaults to 1.0. Reversed or
// repeated rows merge by weight sum; self-loops are dropped.
inline Graph parse_edge_list(std::istream& in) {
  std::vector<Edge> raw;
  std::string line;
  int declared_n = -1;
  int max_id = -1;
  bool first = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (first && line.rfind("# n=", 0) == 0) {
      declared_n = std::stoi(line.substr(4));
      if (declared_n < 1) throw std::runtime_error("parse_edge_list: declared n must be >= 1");
      first = false;
      continue;
    }
    first = false;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ls(line);
    long long u, v;
    if (!(ls >> u >> v))
      throw std::runtime_error("parse_edge_list: malformed line " + std::to_string(lineno));
    double w = 1.0;
    if (ls >> w) {
      if (!(w > 0.0))
        throw std::runtime_error("parse_edge_list: non-positive weight at line " + std::to_string(lineno));
    }
    if (u < 0 || v < 0) throw std::runtime_error("parse_edge_list: negative node id at line " + std::to_string(lineno));
    if (declared_n >= 0 && (u >= declared_n || v >= declared_n))
      throw std::runtime_error("parse_edge_list: node id exceeds declared n at line " + std::to_string(lineno));
    max_id = std::max(max_id, static_cast<int>(std::max(u, v)));
    raw.push_back({static_cast<int>(u), static_cast<int>(v), w});
  }
  const int n = declared_n >= 0 ? declared_n : max_id + 1;
  if (n < 1) throw std::runtime_error("parse_edge_list: empty input and no node-count header");
  return Graph::build(n, std::move(raw));
}

inline Graph parse_edge_list(const std::string& text) {
  std::istringstream in(text);
  return parse_edge_list(in);
}

namespace detail {
inline void append_weight(std::string& out, double w) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", w);
  out += buf;
}
}  // namespace detail

// Writer counterpart of parse_edge_list; always emits the node-count header
// so isolated nodes round-trip.
inline std::string serialize_edge_list(const Graph& g) {
  std::string out = "# n=" + std::to_string(g.node_count()) + "\n";
  for (const Edge& e : g.edges()) {
    out += std::to_string(e.u);
    out += ' ';
    out += std::to_string(e.v);
    out += ' ';
    detail::append_weight(out, e.w);
    out += '\n';
  }
  return out;
}

enum class LaplacianKind { combinatorial, sym_norm, rw_norm, gcn_norm };

// Dense Laplacian-family matrices. rw_norm is asymmetric in general, so the
// return type is a plain Matrix; wrap in SymmetricMatrix where applicable.
//   combinatorial: L = D - A
//   sym_norm:      I - D^{-1/2} A D^{-1/2}
//   rw_norm:       D^{-1} L
//   gcn_norm:      Dt^{-1/2} (A + I) Dt^{-1/2}, Dt the degree matrix of A + I
inline Matrix build_laplacian(const Graph& g, LaplacianKind kind) {
  const int n = g.node_count();
  Matrix m(n, n);
  switch (kind) {
    case LaplacianKind::combinatorial: {
      for (const Edge& e : g.edges()) {
        m(e.u, e.v) -= e.w;
        m(e.v, e.u) -= e.w;
      }
      for (int i = 0; i < n; ++i) m(i, i) = g.degree(i);
      return m;
    }
    case LaplacianKind::sym_norm: {
      std::vector<double> dinv(n);
      for (int i = 0; i < n; ++i) {
        if (g.degree(i) <= 0.0) throw std::runtime_error("build_laplacian: zero degree node for sym_norm");
        dinv[i] = 1.0 / std::sqrt(g.degree(i));
      }
      for (const Edge& e : g.edges()) {
        const double v = e.w * dinv[e.u] * dinv[e.v];
        m(e.u, e.v) -= v;
        m(e.v, e.u) -= v;
      }
      for (int i = 0; i < n; ++i) m(i, i) += 1.0;
      return m;
    }
    case LaplacianKind::rw_norm: {
      for (int i = 0; i < n; ++i) {
        if (g.degree(i) <= 0.0) throw std::runtime_error("build_laplacian: zero degree node for rw_norm");
      }
      for (const Edge& e : g.edges()) {
        m(e.u, e.v) -= e.w / g.degree(e.u);
        m(e.v, e.u) -= e.w / g.degree(e.v);
      }
      for (int i = 0; i < n; ++i) m(i, i) += 1.0;
      return m;
    }
    case LaplacianKind::gcn_norm: {
      std::vector<double> dinv(n);
      for (int i = 0; i < n; ++i) dinv[i] = 1.0 / std::sqrt(g.degree(i) + 1.0);
      for (const Edge& e : g.edges()) {
        const double v = e.w * dinv[e.u] * dinv[e.v];
        m(e.u, e.v) += v;
        m(e.v, e.u) += v;
      }
      for (int i = 0; i < n; ++i) m(i, i) = dinv[i] * dinv[i];
      return m;
    }
  }
  throw std::logic_error("build_laplacian: unknown kind");
}

struct Components {
  std::vector<int> label;  // in [0, count)
  int count = 0;
};

inline Components connected_components(const Graph& g) {
  const int n = g.node_count();
  Components out;
  out.label.assign(n, -1);
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (out.label[s] >= 0) continue;
    const int id = out.count++;
    out.label[s] = id;
    stack.push_back(s);
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const Neighbor& nb : g.neighbors(u)) {
        if (out.label[nb.node] < 0) {
          out.label[nb.node] = id;
          stack.push_back(nb.node);
        }
      }
    }
  }
  return out;
}

// Node index lists per component, for null-space projections.
inline std::vector<std::vector<int>> component_lists(const Graph& g) {
  const Components c = connected_components(g);
  std::vector<std::vector<int>> lists(c.count);
  for (int i = 0; i < g.node_count(); ++i) lists[c.label[i]].push_back(i);
  return lists;
}

// FNV-1a over "n=<n>\n" followed by canonical "u v w\n" lines (weights at
// 17 significant digits). Input-order independent by construction.
inline std::uint64_t content_hash(const Graph& g) {
  std::string bytes = "n=" + std::to_string(g.node_count()) + "\n";
  for (const Edge& e : g.edges()) {
    bytes += std::to_string(e.u);
    bytes += ' ';
    bytes += std::to_string(e.v);
    bytes += ' ';
    detail::append_weight(bytes, e.w);
    bytes += '\n';
  }
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace respars
