// Acceptance suite: every release criterion exercised end to end at its
// stated tolerance, one PASS/FAIL line per criterion. Exits with the number
// of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "../support/corpus.hpp"
#include "respars/effres.hpp"
#include "respars/gnn.hpp"
#include "respars/graph.hpp"
#include "respars/io.hpp"
#include "respars/linalg.hpp"
#include "respars/sparsify.hpp"
#include "respars/synth.hpp"
#include "respars/theory.hpp"
#include "respars/train.hpp"

using namespace respars;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// Shared corpus: 100 seeded connected weighted graphs with n <= 50.
std::vector<Graph> small_corpus() {
  std::vector<Graph> graphs;
  graphs.reserve(100);
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const int n = 8 + static_cast<int>(seed % 43);  // 8..50
    graphs.push_back(corpus::er_connected_weighted(n, 0.3, seed));
  }
  return graphs;
}

const std::string cli = RESPARS_CLI_PATH;

int run_cli(const std::string& args) {
  const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

void c01_resistance_oracle(Check& c) {
  double worst = 0.0;
  for (const Graph& g : small_corpus()) {
    const ResistanceTable table = exact_resistances(g);
    const Matrix oracle = corpus::pinv_by_inverse(g);
    for (int e = 0; e < g.edge_count(); ++e) {
      const Edge& ed = g.edges()[e];
      const double ref = oracle(ed.u, ed.u) + oracle(ed.v, ed.v) - 2.0 * oracle(ed.u, ed.v);
      worst = std::max(worst, std::abs(table.values[e] - ref));
    }
  }
  c.require(worst <= 1e-8, "oracle deviation " + fmt(worst));
  c.note("max |R - b'L+b| = " + fmt(worst));

  const ResistanceTable tri = exact_resistances(corpus::triangle());
  for (double r : tri.values)
    c.require(std::abs(r - 2.0 / 3.0) <= 1e-8, "triangle edge " + fmt(r));
  const Graph tree = corpus::path3();
  const ResistanceTable tr = exact_resistances(tree);
  for (int e = 0; e < tree.edge_count(); ++e)
    c.require(std::abs(tr.values[e] - 1.0 / tree.edges()[e].w) <= 1e-8, "tree edge not 1/w");
}

void c02_foster(Check& c) {
  double worst = 0.0;
  for (const Graph& g : small_corpus()) {
    const FosterReport rep = foster_check(g, exact_resistances(g));
    worst = std::max(worst, std::abs(rep.sum - rep.expected) / g.node_count());
    c.require(rep.pass, "foster failed at n=" + std::to_string(g.node_count()));
  }
  c.note("max |sum - (n-c)|/n = " + fmt(worst));
}

void c03_sketch_accuracy(Check& c) {
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int n = 48 + 8 * k;  // 48..200
    const double p = std::min(0.3, 10.0 / n);
    const Graph g = corpus::er_connected(n, p, 300 + k);
    const ResistanceTable exact = exact_resistances(g);
    SketchConfig cfg;
    cfg.tau = 0.1;
    cfg.seed = 700 + k;
    const ResistanceTable approx = approx_resistances(g, cfg);
    for (int e = 0; e < g.edge_count(); ++e)
      worst = std::max(worst, std::abs(approx.values[e] - exact.values[e]) / exact.values[e]);
  }
  c.require(worst <= 0.25, "sketch deviation " + fmt(worst));
  c.note("max relative deviation = " + fmt(worst) + " over 20 graphs, default t");
}

void c04_unbiasedness(Check& c) {
  const Graph er = corpus::er_connected(20, 0.3, 12);
  const struct {
    const char* name;
    Graph g;
  } cases[] = {{"triangle", corpus::triangle()}, {"star4", corpus::star(4)}, {"er20", er}};
  for (const auto& t : cases) {
    const double err = expectation_check(t.g, exact_resistances(t.g), 0.5, 10000, 5);
    c.require(err <= 0.05, std::string(t.name) + " error " + fmt(err));
    c.note(std::string(t.name) + "=" + fmt(err));
  }
}

void c05_spectral_guarantee(Check& c) {
  const Graph g = corpus::er_connected(100, 0.1, 21);
  const ResistanceTable table = exact_resistances(g);
  const double eps = 0.5;
  const long q = static_cast<long>(std::ceil(4.0 * 100 * std::log(100.0) / (eps * eps)));
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SparsifyConfig cfg;
    cfg.epsilon = eps;
    cfg.q_override = q;
    cfg.seed = seed;
    const SpectralReport rep = spectral_check(g, sample_sparsifier(g, table, cfg).graph);
    const double star = std::max(rep.epsilon_star, rep.max_degree_deviation);
    c.require(star <= 1.5 * eps, "seed " + std::to_string(seed) + " eps* " + fmt(star));
  }
  // Formula-count draws (0.16 constant) are reported, not asserted.
  std::string formula;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SparsifyConfig cfg;
    cfg.epsilon = eps;
    cfg.seed = seed;
    const SpectralReport rep = spectral_check(g, sample_sparsifier(g, table, cfg).graph);
    formula += (formula.empty() ? "" : ",") + fmt(rep.epsilon_star);
  }
  c.note("theory-grade q=" + std::to_string(q) + "; formula-q eps* reported: " + formula);
}

void c06_theorem_bounds(Check& c) {
  // Input-graph route (theorem1_check).
  {
    const Graph g = corpus::er_connected(50, 0.2, 17);
    const ResistanceTable t = exact_resistances(g);
    const long q = theory_grade_sample_count(50, 0.25);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      SparsifyConfig cfg;
      cfg.epsilon = 0.25;
      cfg.q_override = q;
      cfg.seed = seed;
      const SparsifiedGraph s = sample_sparsifier(g, t, cfg);
      Matrix h(50, 4), w(4, 3);
      std::uint64_t idx = 0;
      for (double& v : h.data()) v = 2.0 * rng::uniform01(rng::derive(seed, 1), idx++) - 1.0;
      idx = 0;
      for (double& v : w.data()) v = 2.0 * rng::uniform01(rng::derive(seed, 2), idx++) - 1.0;
      const BoundReport rep = theorem1_check(g, s.graph, h, w, Nonlin::relu);
      c.require(rep.eps_star <= 0.3, "thm1 precondition eps* " + fmt(rep.eps_star));
      c.require(rep.holds, "thm1 seed " + std::to_string(seed) + " lhs " + fmt(rep.lhs) +
                               " > rhs " + fmt(rep.rhs));
    }
  }
  // Attention-graph route (theorem2_check, symmetric attention).
  {
    SbmSpec spec;
    spec.n = 40;
    spec.blocks = 2;
    spec.p_in = 0.4;
    spec.p_out = 0.1;
    spec.feature_dim = 4;
    spec.seed = 9;
    const SynthData data = gen_synth(spec);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      HeadParams p;
      p.kind = AttnKind::gat;
      p.weight = Matrix(4, 3);
      std::uint64_t idx = 0;
      for (double& v : p.weight.data())
        v = rng::uniform01(rng::derive(seed, 3), idx++) - 0.5;
      p.attn.resize(6);
      for (int i = 0; i < 6; ++i) p.attn[i] = rng::uniform01(rng::derive(seed, 4), i) - 0.5;
      make_attention_symmetric(p.attn);
      const Matrix gamma = attention_matrix(data.graph, data.features, p).dense_gamma();
      const Matrix gamma_s =
          sparsify_gamma(gamma, 0.25, theory_grade_sample_count(40, 0.25), seed);
      const BoundReport rep = theorem2_check(gamma, gamma_s, data.features, p.weight, Nonlin::elu);
      c.require(rep.eps_star <= 0.3, "thm2 precondition eps* " + fmt(rep.eps_star));
      c.require(rep.holds, "thm2 seed " + std::to_string(seed) + " lhs " + fmt(rep.lhs) +
                               " > rhs " + fmt(rep.rhs));
    }
  }
  // Lemma 1 is unconditional.
  int held = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Matrix a(10, 10);
    std::uint64_t idx = 0;
    for (double& v : a.data()) v = 2.0 * rng::uniform01(rng::derive(seed, 5), idx++) - 1.0;
    std::vector<double> d(10);
    for (int i = 0; i < 10; ++i) d[i] = 0.5 + 1.5 * rng::uniform01(rng::derive(seed, 6), i);
    held += lemma1_check(a, d).holds ? 1 : 0;
  }
  c.require(held == 100, "lemma1 held only " + std::to_string(held) + "/100");
  c.note("thm1/thm2 hold on 5+5 pinned seeds, lemma1 " + std::to_string(held) + "/100");
}

void c07_prop1(Check& c) {
  double worst_dev = 0.0, worst_sym = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const int n = 10 + static_cast<int>(seed % 8);
    const Graph g = corpus::er_connected(n, 0.35, rng::derive(seed, 41));
    Matrix h(n, 3);
    std::uint64_t idx = 0;
    for (double& v : h.data()) v = 2.0 * rng::uniform01(rng::derive(seed, 42), idx++) - 1.0;
    HeadParams p;
    p.kind = AttnKind::gat;
    p.weight = Matrix(3, 3);
    idx = 0;
    for (double& v : p.weight.data()) v = rng::uniform01(rng::derive(seed, 43), idx++) - 0.5;
    p.attn.resize(6);
    for (int i = 0; i < 6; ++i) p.attn[i] = rng::uniform01(rng::derive(seed, 44), i) - 0.5;
    worst_dev = std::max(worst_dev, prop1_equivalence_check(g, h, p));

    make_attention_symmetric(p.attn);
    const HeadForwardCache hc = head_forward(g, h, p);
    const AttnSupport& s = hc.attn.support;
    Matrix scores(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = s.offsets[i]; k < s.offsets[i + 1]; ++k) scores(i, s.nbr[k]) = hc.attn.scores[k];
    worst_sym = std::max(worst_sym, (scores - scores.transposed()).max_abs());
  }
  c.require(worst_dev <= 1e-12, "softmax equivalence " + fmt(worst_dev));
  c.require(worst_sym <= 1e-12, "symmetric-a asymmetry " + fmt(worst_sym));
  c.note("max deviation " + fmt(worst_dev) + ", max asymmetry " + fmt(worst_sym));
}

void c08_gradients(Check& c) {
  double worst = 0.0;
  for (AttnKind kind : {AttnKind::gat, AttnKind::cosine, AttnKind::gaan}) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const Graph g = erdos_renyi(8, 0.45, rng::derive(seed, 55));
      ModelConfig cfg;
      cfg.layers.push_back({2, 2, kind, HeadCombiner::concat, Nonlin::elu});
      cfg.layers.push_back({1, 2, kind, HeadCombiner::average, Nonlin::softmax_out});
      const ModelParams params = init_model_params(cfg, 3, seed);
      Matrix h(8, 3);
      std::uint64_t idx = 0;
      for (double& v : h.data()) v = 2.0 * rng::uniform01(rng::derive(seed, 7), idx++) - 1.0;
      std::vector<int> labels(8);
      for (int i = 0; i < 8; ++i) labels[i] = static_cast<int>(rng::at(rng::derive(seed, 9), i) % 2);
      const SampledSupports sup = sample_supports(g, cfg, nullptr);
      const GradcheckReport rep = finite_diff_gradcheck(cfg, params, sup, h, labels,
                                                        std::vector<char>(8, 1), 1e-4, 1e-4);
      worst = std::max(worst, rep.max_rel_error);
      c.require(rep.pass, "gradcheck kind " + std::to_string(static_cast<int>(kind)) + " seed " +
                              std::to_string(seed) + " err " + fmt(rep.max_rel_error));
    }
  }
  c.note("worst relative error " + fmt(worst) + " over 3 kinds x 20 seeds");
}

void c09_accuracy_parity(Check& c) {
  SbmSpec spec;
  spec.seed = 1;  // n=120, k=3, p_in=0.3, p_out=0.02
  const SynthData data = gen_synth(spec);
  const ResistanceTable table = exact_resistances(data.graph);
  double full_sum = 0.0, sparse_sum = 0.0;
  long full_pairs = 0, sparse_pairs = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrainConfig tc;
    tc.epochs = 200;
    tc.seed = seed;
    tc.model = default_model_config(3, AttnKind::gat, SamplerMode::full, 0.5, seed);
    tc.masks = data.masks;
    const TrainResult full = train(tc, data.graph, data.features, data.labels, &table);
    full_sum += micro_f1(full.final_probs, data.labels, data.masks.test);
    full_pairs = full.forward_stats.attention_pairs;

    tc.model.mode = SamplerMode::fastgat_const;
    const TrainResult sparse = train(tc, data.graph, data.features, data.labels, &table);
    sparse_sum += micro_f1(sparse.final_probs, data.labels, data.masks.test);
    sparse_pairs = sparse.forward_stats.attention_pairs;
    c.require(sparse.forward_stats.attention_pairs < full.forward_stats.attention_pairs,
              "sparse mode did not reduce attention work");
  }
  const double gap = std::abs(full_sum - sparse_sum) / 5.0;
  c.require(gap <= 0.03, "accuracy gap " + fmt(gap));
  c.note("mean full F1 " + fmt(full_sum / 5) + ", const F1 " + fmt(sparse_sum / 5) + ", gap " +
         fmt(gap) + "; pairs/epoch " + std::to_string(sparse_pairs) + " < " +
         std::to_string(full_pairs));
}

void c10_edge_reduction(Check& c) {
  c.require(sample_count(1000, 0, 0.5) == 4420,
            "sample_count(1000, ., 0.5) = " + std::to_string(sample_count(1000, 0, 0.5)));
  const Graph g = corpus::er_connected(80, 0.2, 33);
  const ResistanceTable t = exact_resistances(g);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SparsifyConfig cfg;
    cfg.epsilon = 0.3 + 0.05 * static_cast<double>(seed % 5);
    cfg.seed = seed;
    const SparsifiedGraph s = sample_sparsifier(g, t, cfg);
    const double expect = 1.0 - static_cast<double>(s.record.distinct_edges) / g.edge_count();
    c.require(s.record.percent_reduction == expect, "percent_reduction mismatch");
  }
  c.note("q(1000, ., 0.5) = 4420; reduction field consistent on 10 runs");
}

void c11_weight_drift(Check& c) {
  SbmSpec spec;
  spec.seed = 1;
  const SynthData data = gen_synth(spec);
  const ResistanceTable table = exact_resistances(data.graph);
  TrainConfig base;
  base.epochs = 100;
  base.model = default_model_config(3);
  base.masks = data.masks;

  const DriftReport zero = weight_drift_experiment(data.graph, data.features, data.labels, base,
                                                   table, {0.0}, {1, 2});
  c.require(zero.mean_rel_errors[0] == 0.0, "drift(eps=0) = " + fmt(zero.mean_rel_errors[0]));

  const std::vector<double> eps = {0.25, 0.5, 0.75};
  const DriftReport rep = weight_drift_experiment(data.graph, data.features, data.labels, base,
                                                  table, eps, {1, 2, 3, 4, 5});
  c.require(rep.mean_rel_errors.size() == 3, "incomplete drift report");
  std::string line;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    c.require(rep.mean_rel_errors[i] > 0.0, "drift at eps " + fmt(eps[i]) + " not positive");
    line += (line.empty() ? "" : ", ") + std::string("eps=") + fmt(eps[i]) + ": " +
            fmt(rep.mean_rel_errors[i]);
  }
  c.note("drift(eps=0) = 0; " + line + " (trend informational)");
}

void c12_cli_determinism(Check& c) {
  const fs::path dir = fs::temp_directory_path() / "respars_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string d = dir.string() + "/";

  // Run a command template twice ("@" expands to a per-run prefix) and
  // demand byte-identical data outputs.
  int commands = 0;
  auto twice_equal = [&](const std::string& args_template,
                         const std::vector<std::string>& outputs) {
    for (const char* tag : {"a_", "b_"}) {
      std::string args = args_template;
      std::string::size_type pos;
      while ((pos = args.find('@')) != std::string::npos) args.replace(pos, 1, d + tag);
      if (run_cli(args) != 0) {
        c.require(false, "command failed: " + args);
        return;
      }
    }
    for (const std::string& out : outputs)
      c.require(slurp(d + "a_" + out) == slurp(d + "b_" + out), out + " differs between reruns");
    ++commands;
  };

  twice_equal("gen-synth --n 80 --blocks 2 --seed 5 -o @synth",
              {"synth.edges", "synth.features", "synth.labels", "synth.masks"});
  const std::string edges = d + "a_synth.edges";
  const std::string data_flags = " --features " + d + "a_synth.features" + " --labels " + d +
                                 "a_synth.labels" + " --masks " + d + "a_synth.masks";
  twice_equal("resist " + edges + " --exact -o @exact.resist", {"exact.resist"});
  twice_equal("resist " + edges + " --sketch --tau 0.2 --seed 3 -o @sketch.resist",
              {"sketch.resist"});
  twice_equal("sparsify " + edges + " --epsilon 0.5 --seed 2 --cache " + d +
                  "a_exact.resist -o @sp.edges --report @sp.json",
              {"sp.edges", "sp.json"});
  twice_equal("spectral-check " + edges + " " + d + "a_sp.edges --report @spectral.json",
              {"spectral.json"});
  twice_equal("bound-check --model gcn " + edges + " --epsilon 0.25 --seed 4 --report @bound.json",
              {"bound.json"});
  twice_equal("train " + edges + data_flags +
                  " --mode const --epsilon 0.5 --epochs 15 --seed 6 --cache " + d +
                  "a_exact.resist --trace @trace.jsonl --logits @logits.mat --report @train.json",
              {"trace.jsonl", "logits.mat", "train.json"});
  twice_equal("adaptive-train " + edges + data_flags + " --epochs 25 --seed 6 --cache " + d +
                  "a_exact.resist --trace @atrace.jsonl --report @atrain.json",
              {"atrace.jsonl", "atrain.json"});
  twice_equal("gradcheck --attention gaan --seeds 3 --report @grad.json", {"grad.json"});
  c.note(std::to_string(commands) + " commands byte-identical across reruns");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Check&)> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "effective-resistance oracle equivalence", c01_resistance_oracle},
      {2, "Foster's theorem on the random corpus", c02_foster},
      {3, "sketched resistances within 0.25 of exact", c03_sketch_accuracy},
      {4, "sampler unbiasedness (Monte Carlo)", c04_unbiasedness},
      {5, "spectral guarantee at theory-grade sampling", c05_spectral_guarantee},
      {6, "theorem 1/2 bounds and lemma 1", c06_theorem_bounds},
      {7, "proposition 1 equivalence", c07_prop1},
      {8, "analytic gradients vs finite differences", c08_gradients},
      {9, "FastGAT accuracy parity on the SBM dataset", c09_accuracy_parity},
      {10, "edge-reduction formula and report fields", c10_edge_reduction},
      {11, "weight-drift experiment", c11_weight_drift},
      {12, "CLI determinism", c12_cli_determinism},
  };

  int failures = 0;
  for (const Criterion& cr : criteria) {
    Check check;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.fn(check);
    } catch (const std::exception& e) {
      check.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %02d %s (%.1fs)%s%s\n", check.ok ? "PASS" : "FAIL", cr.id, cr.name, secs,
                check.detail.empty() ? "" : " -- ", check.detail.c_str());
    std::fflush(stdout);
    failures += check.ok ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures;
}
