#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "respars/gnn.hpp"
#include "respars/synth.hpp"
#include "respars/train.hpp"
#include "support/corpus.hpp"

using namespace respars;

namespace {

HeadParams gat_head(Matrix w, std::vector<double> a, Nonlin sigma = Nonlin::identity) {
  HeadParams p;
  p.kind = AttnKind::gat;
  p.weight = std::move(w);
  p.attn = std::move(a);
  p.sigma = sigma;
  return p;
}

Matrix column(std::vector<double> v) {
  Matrix m(static_cast<int>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<int>(i), 0) = v[i];
  return m;
}

Matrix random_matrix(int r, int c, std::uint64_t seed, double scale = 1.0) {
  Matrix m(r, c);
  std::uint64_t idx = 0;
  for (double& v : m.data()) v = scale * (2.0 * rng::uniform01(seed, idx++) - 1.0);
  return m;
}

HeadParams random_head(AttnKind kind, int d, int f, std::uint64_t seed,
                       Nonlin sigma = Nonlin::identity) {
  HeadParams p;
  p.kind = kind;
  p.sigma = sigma;
  p.weight = random_matrix(d, f, rng::derive(seed, 1), 0.8);
  if (kind == AttnKind::gat) {
    p.attn.resize(2 * f);
    for (int i = 0; i < 2 * f; ++i) p.attn[i] = 2.0 * rng::uniform01(rng::derive(seed, 2), i) - 1.0;
  } else if (kind == AttnKind::cosine) {
    p.beta = 1.5;
  } else {
    p.fc_src.w1 = random_matrix(f, f, rng::derive(seed, 3), 0.7);
    p.fc_src.b1.assign(f, 0.1);
    p.fc_src.w2 = random_matrix(f, f, rng::derive(seed, 4), 0.7);
    p.fc_dst.w1 = random_matrix(f, f, rng::derive(seed, 5), 0.7);
    p.fc_dst.b1.assign(f, -0.1);
    p.fc_dst.w2 = random_matrix(f, f, rng::derive(seed, 6), 0.7);
  }
  return p;
}

}  // namespace

TEST_CASE("attention_matrix degenerate parameters give uniform rows", "[gnn]") {
  const Graph g = corpus::path3();
  const Matrix h = random_matrix(3, 2, 11);

  SECTION("gat with W = 0") {
    HeadParams p = gat_head(Matrix(2, 2), {0.3, -0.2, 0.9, 0.4});
    const AttentionMatrix a = attention_matrix(g, h, p);
    const Matrix dense = a.dense_alpha();
    REQUIRE(dense(0, 0) == Catch::Approx(0.5));
    REQUIRE(dense(1, 0) == Catch::Approx(1.0 / 3.0));
    REQUIRE(dense(1, 1) == Catch::Approx(1.0 / 3.0));
  }
  SECTION("gat with a = 0") {
    HeadParams p = gat_head(random_matrix(2, 2, 3), {0.0, 0.0, 0.0, 0.0});
    const Matrix dense = attention_matrix(g, h, p).dense_alpha();
    REQUIRE(dense(1, 2) == Catch::Approx(1.0 / 3.0));
  }
  SECTION("gaan with W = 0") {
    HeadParams p = random_head(AttnKind::gaan, 2, 2, 4);
    p.weight = Matrix(2, 2);
    const Matrix dense = attention_matrix(g, h, p).dense_alpha();
    REQUIRE(dense(1, 0) == Catch::Approx(1.0 / 3.0));
  }
}

TEST_CASE("attention_matrix pinned scalar example", "[gnn]") {
  // Path of three, D = F = 1, W = [1], a = [1, 1], features (0, 1, 2):
  // scores are m_i + m_j on each neighborhood (LeakyReLU inactive, all >= 0).
  const Graph g = corpus::path3();
  Matrix w(1, 1);
  w(0, 0) = 1.0;
  const HeadParams p = gat_head(std::move(w), {1.0, 1.0});
  const Matrix a = attention_matrix(g, column({0.0, 1.0, 2.0}), p).dense_alpha();

  const double e0 = std::exp(0.0), e1 = std::exp(1.0), e2 = std::exp(2.0), e3 = std::exp(3.0),
               e4 = std::exp(4.0);
  REQUIRE(a(0, 0) == Catch::Approx(e0 / (e0 + e1)).margin(1e-14));
  REQUIRE(a(0, 1) == Catch::Approx(e1 / (e0 + e1)).margin(1e-14));
  REQUIRE(a(1, 0) == Catch::Approx(e1 / (e1 + e2 + e3)).margin(1e-14));
  REQUIRE(a(1, 1) == Catch::Approx(e2 / (e1 + e2 + e3)).margin(1e-14));
  REQUIRE(a(1, 2) == Catch::Approx(e3 / (e1 + e2 + e3)).margin(1e-14));
  REQUIRE(a(2, 1) == Catch::Approx(e3 / (e3 + e4)).margin(1e-14));
  REQUIRE(a(2, 2) == Catch::Approx(e4 / (e3 + e4)).margin(1e-14));
}

TEST_CASE("attention rows are stochastic with exact off-support zeros", "[gnn]") {
  for (AttnKind kind : {AttnKind::gat, AttnKind::cosine, AttnKind::gaan}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Graph g = corpus::er_connected(14, 0.3, seed);
      const Matrix h = random_matrix(14, 3, seed * 13);
      const HeadParams p = random_head(kind, 3, 3, seed);
      const Matrix dense = attention_matrix(g, h, p).dense_alpha();

      Matrix adj(14, 14);
      for (const Edge& e : g.edges()) {
        adj(e.u, e.v) = 1.0;
        adj(e.v, e.u) = 1.0;
      }
      for (int i = 0; i < 14; ++i) {
        double rowsum = 0.0;
        for (int j = 0; j < 14; ++j) {
          rowsum += dense(i, j);
          if (i != j && adj(i, j) == 0.0) REQUIRE(dense(i, j) == 0.0);
        }
        REQUIRE(rowsum == Catch::Approx(1.0).margin(1e-10));
      }
    }
  }
}

TEST_CASE("cosine attention handles zero feature rows", "[gnn]") {
  const Graph g = corpus::path3();
  Matrix h(3, 2);
  h(1, 0) = 1.0;  // rows 0 and 2 are zero
  HeadParams p = random_head(AttnKind::cosine, 2, 2, 9);
  const AttentionMatrix a = attention_matrix(g, h, p);
  for (double s : a.scores) REQUIRE(std::isfinite(s));
  const Matrix dense = a.dense_alpha();
  // Row 0 only sees zero-norm pairs (cos pinned to 0), hence uniform; row 1
  // keeps its self-cosine of 1 and zeros toward the empty neighbors.
  REQUIRE(dense(0, 0) == Catch::Approx(0.5));
  const double eb = std::exp(p.beta);
  REQUIRE(dense(1, 1) == Catch::Approx(eb / (eb + 2.0)).margin(1e-12));
  REQUIRE(dense(1, 0) == Catch::Approx(1.0 / (eb + 2.0)).margin(1e-12));
}

TEST_CASE("gcn_forward", "[gnn]") {
  SECTION("isolated single node applies sigma(HW)") {
    const Graph g = Graph::build(1, {});
    Matrix h(1, 2);
    h(0, 0) = -1.0;
    h(0, 1) = 2.0;
    const Matrix out = gcn_forward(g, h, Matrix::identity(2), Nonlin::relu);
    REQUIRE(out(0, 0) == 0.0);
    REQUIRE(out(0, 1) == Catch::Approx(2.0));
  }
  SECTION("edgeless graph with identity weights is the identity on H >= 0") {
    const Graph g = Graph::build(3, {});
    Matrix h(3, 2);
    h(0, 0) = 0.5;
    h(1, 1) = 1.5;
    h(2, 0) = 2.5;
    const Matrix out = gcn_forward(g, h, Matrix::identity(2), Nonlin::relu);
    REQUIRE((out - h).max_abs() == Catch::Approx(0.0).margin(1e-15));
  }
  SECTION("path of three, hand-computed propagation") {
    // Dt = diag(2,3,2); row (Dt^-1/2 (A+I) Dt^-1/2) H for H = e_0.
    const Matrix out =
        gcn_forward(corpus::path3(), column({1.0, 0.0, 0.0}), Matrix::identity(1), Nonlin::identity);
    REQUIRE(out(0, 0) == Catch::Approx(0.5).margin(1e-14));
    REQUIRE(out(1, 0) == Catch::Approx(1.0 / std::sqrt(6.0)).margin(1e-14));
    REQUIRE(out(2, 0) == Catch::Approx(0.0).margin(1e-14));
  }
}

TEST_CASE("gat_layer_forward", "[gnn]") {
  const Graph g = corpus::path3();
  const Matrix h = random_matrix(3, 2, 21);

  SECTION("zero weights give a zero matrix of concatenated width") {
    std::vector<HeadParams> heads;
    for (int k = 0; k < 3; ++k) heads.push_back(gat_head(Matrix(2, 2), {0.1, 0.2, 0.3, 0.4}, Nonlin::relu));
    const Matrix out = gat_layer_forward(g, h, heads, HeadCombiner::concat);
    REQUIRE(out.cols() == 6);
    REQUIRE(out.max_abs() == 0.0);
  }
  SECTION("identical heads concatenate into identical blocks") {
    const HeadParams p = random_head(AttnKind::gat, 2, 2, 31);
    const Matrix out = gat_layer_forward(g, h, {p, p}, HeadCombiner::concat);
    for (int i = 0; i < 3; ++i)
      for (int d = 0; d < 2; ++d) REQUIRE(out(i, d) == out(i, 2 + d));
  }
  SECTION("single head composes attention with aggregation") {
    Matrix w(1, 1);
    w(0, 0) = 1.0;
    const HeadParams p = gat_head(std::move(w), {1.0, 1.0});
    const Matrix feats = column({0.0, 1.0, 2.0});
    const Matrix alpha = attention_matrix(g, feats, p).dense_alpha();
    const Matrix out = gat_layer_forward(g, feats, {p}, HeadCombiner::average);
    for (int i = 0; i < 3; ++i) {
      double expect = 0.0;
      for (int j = 0; j < 3; ++j) expect += alpha(i, j) * feats(j, 0);
      REQUIRE(out(i, 0) == Catch::Approx(expect).margin(1e-14));
    }
  }
  SECTION("classification layer refuses concat") {
    std::vector<HeadParams> heads = {random_head(AttnKind::gat, 2, 2, 41, Nonlin::softmax_out)};
    REQUIRE_THROWS(gat_layer_forward(g, h, heads, HeadCombiner::concat));
  }
}

TEST_CASE("fastgat_forward modes", "[gnn]") {
  SbmSpec spec;
  spec.n = 60;
  spec.blocks = 3;
  spec.p_in = 0.3;
  spec.p_out = 0.02;
  spec.feature_dim = 6;
  spec.seed = 4;
  const SynthData data = gen_synth(spec);
  REQUIRE(data.graph.edge_count() == 207);
  const ResistanceTable table = exact_resistances(data.graph);

  ModelConfig cfg;
  cfg.layers.push_back({4, 5, AttnKind::gat, HeadCombiner::concat, Nonlin::elu});
  cfg.layers.push_back({1, 3, AttnKind::gat, HeadCombiner::average, Nonlin::softmax_out});
  cfg.epsilon = 0.5;
  cfg.seed = 7;
  const ModelParams params = init_model_params(cfg, spec.feature_dim, 99);

  SECTION("sampler invocation counts per mode") {
    cfg.mode = SamplerMode::full;
    REQUIRE(fastgat_forward(data.graph, data.features, cfg, params, &table).stats.sampler_invocations == 0);
    cfg.mode = SamplerMode::fastgat_const;
    REQUIRE(fastgat_forward(data.graph, data.features, cfg, params, &table).stats.sampler_invocations == 1);
    cfg.mode = SamplerMode::fastgat_layer;
    REQUIRE(fastgat_forward(data.graph, data.features, cfg, params, &table).stats.sampler_invocations == 2);
    cfg.mode = SamplerMode::fastgat_per_head;
    REQUIRE(fastgat_forward(data.graph, data.features, cfg, params, &table).stats.sampler_invocations == 5);
  }
  SECTION("pinned logits, reproducible across reruns") {
    cfg.mode = SamplerMode::fastgat_const;
    const ForwardResult a = fastgat_forward(data.graph, data.features, cfg, params, &table);
    REQUIRE(a.output(0, 1) == Catch::Approx(0.94788543754105736).epsilon(1e-12));
    REQUIRE(a.output(59, 2) == Catch::Approx(0.39332998144657516).epsilon(1e-12));
    const ForwardResult b = fastgat_forward(data.graph, data.features, cfg, params, &table);
    REQUIRE(a.output.data().size() == b.output.data().size());
    for (std::size_t i = 0; i < a.output.data().size(); ++i)
      REQUIRE(a.output.data()[i] == b.output.data()[i]);
  }
  SECTION("sparsified modes do fewer attention computations than full") {
    cfg.mode = SamplerMode::full;
    const long full_pairs = fastgat_forward(data.graph, data.features, cfg, params, &table).stats.attention_pairs;
    cfg.mode = SamplerMode::fastgat_const;
    const long sparse_pairs = fastgat_forward(data.graph, data.features, cfg, params, &table).stats.attention_pairs;
    REQUIRE(sparse_pairs < full_pairs);
  }
  SECTION("single-edge graph: every mode equals the full forward") {
    const Graph tiny = corpus::single_edge();
    const Matrix h = random_matrix(2, 3, 5);
    ModelConfig tc;
    tc.layers.push_back({2, 3, AttnKind::gat, HeadCombiner::concat, Nonlin::elu});
    tc.layers.push_back({1, 2, AttnKind::gat, HeadCombiner::average, Nonlin::softmax_out});
    tc.seed = 3;
    const ModelParams tp = init_model_params(tc, 3, 17);
    const ResistanceTable tt = exact_resistances(tiny);
    tc.mode = SamplerMode::full;
    const Matrix full = fastgat_forward(tiny, h, tc, tp, &tt).output;
    for (SamplerMode mode :
         {SamplerMode::fastgat_const, SamplerMode::fastgat_layer, SamplerMode::fastgat_per_head}) {
      tc.mode = mode;
      const Matrix out = fastgat_forward(tiny, h, tc, tp, &tt).output;
      REQUIRE((out - full).max_abs() == Catch::Approx(0.0).margin(1e-15));
    }
  }
  SECTION("full mode equals the plain layer forward") {
    cfg.mode = SamplerMode::full;
    const Matrix via_model = fastgat_forward(data.graph, data.features, cfg, params, nullptr).output;
    Matrix manual = gat_layer_forward(data.graph, data.features, params[0], HeadCombiner::concat);
    manual = gat_layer_forward(data.graph, manual, params[1], HeadCombiner::average);
    REQUIRE((via_model - manual).max_abs() == Catch::Approx(0.0).margin(1e-15));
  }
}

TEST_CASE("permutation equivariance of the full forward", "[gnn]") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const int n = 12;
    const Graph g = corpus::er_connected(n, 0.3, seed);
    const Matrix h = random_matrix(n, 3, seed * 7);

    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    rng::Stream stream(seed * 100 + 1);
    for (int i = n - 1; i > 0; --i)
      std::swap(perm[i], perm[stream.next_below(static_cast<std::uint64_t>(i) + 1)]);

    std::vector<Edge> pedges;
    for (const Edge& e : g.edges()) pedges.push_back({perm[e.u], perm[e.v], e.w});
    const Graph pg = Graph::build(n, std::move(pedges));
    Matrix ph(n, 3);
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < 3; ++d) ph(perm[i], d) = h(i, d);

    const HeadParams p = random_head(AttnKind::gat, 3, 3, seed + 50, Nonlin::elu);
    const Matrix out = gat_layer_forward(g, h, {p}, HeadCombiner::average);
    const Matrix pout = gat_layer_forward(pg, ph, {p}, HeadCombiner::average);
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < 3; ++d)
        REQUIRE(pout(perm[i], d) == Catch::Approx(out(i, d)).margin(1e-10));
  }
}

TEST_CASE("prop1_equivalence_check", "[gnn]") {
  SECTION("row-normalized exp(LeakyReLU) equals softmax everywhere") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const Graph g = corpus::er_connected(12, 0.3, seed);
      const Matrix h = random_matrix(12, 3, seed * 3);
      const HeadParams p = random_head(AttnKind::gat, 3, 3, seed);
      REQUIRE(prop1_equivalence_check(g, h, p) <= 1e-12);
    }
  }
  SECTION("symmetric attention vector symmetrizes the raw scores") {
    const Graph g = corpus::er_connected(10, 0.4, 3);
    const Matrix h = random_matrix(10, 3, 5);
    HeadParams p = random_head(AttnKind::gat, 3, 3, 6);
    make_attention_symmetric(p.attn);
    p.symmetric_attn = true;
    const HeadForwardCache c = head_forward(g, h, p);
    Matrix scores(10, 10);
    const AttnSupport& s = c.attn.support;
    for (int i = 0; i < 10; ++i)
      for (int k = s.offsets[i]; k < s.offsets[i + 1]; ++k) scores(i, s.nbr[k]) = c.attn.scores[k];
    REQUIRE((scores - scores.transposed()).max_abs() <= 1e-12);
  }
  SECTION("zero weights give uniform normalized rows") {
    const Graph g = corpus::path3();
    const Matrix h = random_matrix(3, 2, 8);
    HeadParams p = gat_head(Matrix(2, 2), {0.4, 0.1, -0.7, 0.2});
    const Matrix gamma = attention_matrix(g, h, p).dense_gamma();
    // Row-normalize gamma by hand.
    for (int i = 0; i < 3; ++i) {
      double rowsum = 0.0;
      for (int j = 0; j < 3; ++j) rowsum += gamma(i, j);
      REQUIRE(gamma(i, i) / rowsum == Catch::Approx(i == 1 ? 1.0 / 3.0 : 0.5).margin(1e-14));
    }
    REQUIRE(prop1_equivalence_check(g, h, p) <= 1e-12);
  }
  SECTION("non-gat attention rejected") {
    const Graph g = corpus::path3();
    const Matrix h = random_matrix(3, 2, 9);
    REQUIRE_THROWS(prop1_equivalence_check(g, h, random_head(AttnKind::cosine, 2, 2, 4)));
  }
}
