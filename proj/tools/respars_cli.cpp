// respars: effective-resistance graph sparsification and attention-GNN
// verification at desk scale.
//
// Subcommands: gen-synth, resist, sparsify, spectral-check, bound-check,
// train, adaptive-train, gradcheck. Every command is deterministic given its
// flags; data goes to files or stdout, logs go to stderr. Exit codes:
// 0 success, 1 failed report/assertion, 2 usage or I/O error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "respars/effres.hpp"
#include "respars/gnn.hpp"
#include "respars/graph.hpp"
#include "respars/io.hpp"
#include "respars/linalg.hpp"
#include "respars/sparsify.hpp"
#include "respars/synth.hpp"
#include "respars/theory.hpp"
#include "respars/train.hpp"

using json = nlohmann::ordered_json;
using namespace respars;

namespace {

constexpr const char* kVersion = "respars 1.0.0";

void emit(const std::string& content, const std::string& path) {
  if (path.empty() || path == "-")
    std::cout << content;
  else
    atomic_write(path, content);
}

ResistanceTable resolve_resistances(const Graph& g, const std::string& cache_path, bool sketch,
                                    double tau, int rows, std::uint64_t seed) {
  if (!cache_path.empty()) {
    ResistanceTable table = cache_load(cache_path, g);
    std::cerr << "resist cache hit: " << cache_path << " (method="
              << (table.method == ResistanceMethod::exact ? "exact" : "sketched") << ")\n";
    return table;
  }
  if (sketch) {
    SketchConfig cfg;
    cfg.tau = tau;
    cfg.rows = rows;
    cfg.seed = seed;
    return approx_resistances(g, cfg);
  }
  return exact_resistances(g);
}

AttnKind parse_attention(const std::string& name) {
  if (name == "gat") return AttnKind::gat;
  if (name == "cosine") return AttnKind::cosine;
  if (name == "gaan") return AttnKind::gaan;
  throw CLI::ValidationError("--attention", "unknown attention kind '" + name + "'");
}

SamplerMode parse_mode(const std::string& name) {
  if (name == "full") return SamplerMode::full;
  if (name == "const") return SamplerMode::fastgat_const;
  if (name == "layer") return SamplerMode::fastgat_layer;
  if (name == "head") return SamplerMode::fastgat_per_head;
  throw CLI::ValidationError("--mode", "unknown sampler mode '" + name + "'");
}

Matrix seeded_matrix(int rows, int cols, std::uint64_t key) {
  Matrix m(rows, cols);
  std::uint64_t idx = 0;
  for (double& v : m.data()) v = 2.0 * rng::uniform01(key, idx++) - 1.0;
  return m;
}

std::string trace_jsonl(const TrainTrace& trace) {
  std::string out;
  for (const EpochRecord& rec : trace) {
    json row;
    row["epoch"] = rec.epoch;
    row["loss"] = rec.loss;
    row["train_acc"] = rec.train_acc;
    row["val_acc"] = rec.val_acc;
    row["edge_count"] = rec.edge_count;
    out += row.dump();
    out += '\n';
  }
  return out;
}

int num_classes(const std::vector<int>& labels) {
  int c = 0;
  for (int l : labels) c = std::max(c, l + 1);
  return c;
}

struct DatasetArgs {
  std::string graph_path, features_path, labels_path, masks_path;

  void attach(CLI::App* cmd, bool need_labels) {
    cmd->add_option("graph", graph_path, "edge-list file")->required();
    cmd->add_option("--features", features_path, "feature matrix file")->required(need_labels);
    if (need_labels) {
      cmd->add_option("--labels", labels_path, "labels file (one class id per line)")->required();
      cmd->add_option("--masks", masks_path, "masks file (train/val/test/none per line)")->required();
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"effective-resistance spectral sparsification for attention GNNs"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "key=value config file; flags take precedence");
  int threads = 1;
  app.add_option("--threads", threads,
                 "parallelism cap (outputs are identical for any value)");
  app.require_subcommand(1);

  int exit_code = 0;

  // ---------------------------------------------------------------- gen-synth
  {
    auto* cmd = app.add_subcommand("gen-synth", "generate an SBM node-classification dataset");
    auto spec = std::make_shared<SbmSpec>();
    auto prefix = std::make_shared<std::string>();
    cmd->add_option("--n", spec->n, "node count")->capture_default_str();
    cmd->add_option("--blocks", spec->blocks, "number of blocks")->capture_default_str();
    cmd->add_option("--p-in", spec->p_in, "within-block edge probability")->capture_default_str();
    cmd->add_option("--p-out", spec->p_out, "cross-block edge probability")->capture_default_str();
    cmd->add_option("--feat-dim", spec->feature_dim, "feature dimension")->capture_default_str();
    cmd->add_option("--seed", spec->seed, "RNG seed")->capture_default_str();
    cmd->add_option("-o,--out", *prefix, "output path prefix")->required();
    cmd->callback([spec, prefix]() {
      const SynthData data = gen_synth(*spec);
      atomic_write(*prefix + ".edges", serialize_edge_list(data.graph));
      atomic_write(*prefix + ".features", format_matrix(data.features));
      atomic_write(*prefix + ".labels", format_labels(data.labels));
      atomic_write(*prefix + ".masks", format_masks(data.masks));
      std::cerr << "gen-synth: n=" << data.graph.node_count() << " M=" << data.graph.edge_count()
                << " -> " << *prefix << ".{edges,features,labels,masks}\n";
    });
  }

  // ------------------------------------------------------------------- resist
  {
    auto* cmd = app.add_subcommand("resist", "compute per-edge effective resistances");
    auto graph_path = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto sketch = std::make_shared<bool>(false);
    auto exact = std::make_shared<bool>(false);
    auto tau = std::make_shared<double>(0.1);
    auto rows = std::make_shared<int>(0);
    auto seed = std::make_shared<std::uint64_t>(0);
    cmd->add_option("graph", *graph_path, "edge-list file")->required();
    cmd->add_flag("--exact", *exact, "dense pseudo-inverse route (default)");
    cmd->add_flag("--sketch", *sketch, "randomized projection route");
    cmd->add_option("--tau", *tau, "sketch distortion tolerance")->capture_default_str();
    cmd->add_option("--rows", *rows, "sketch rows (0 = ceil(24 ln n / tau^2))")->capture_default_str();
    cmd->add_option("--seed", *seed, "sketch seed")->capture_default_str();
    cmd->add_option("-o,--out", *out, "cache file to write")->required();
    cmd->callback([=]() {
      if (*sketch && *exact) throw CLI::ValidationError("resist", "--exact and --sketch conflict");
      const Graph g = read_graph(*graph_path);
      const ResistanceTable table = resolve_resistances(g, "", *sketch, *tau, *rows, *seed);
      atomic_write(*out, serialize_resistance_table(g, table));
      std::cerr << "resist: " << g.edge_count() << " edges, method="
                << (*sketch ? "sketched" : "exact") << " -> " << *out << "\n";
    });
  }

  // ----------------------------------------------------------------- sparsify
  {
    auto* cmd = app.add_subcommand("sparsify", "resistance-weighted edge sampling");
    auto graph_path = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto report_path = std::make_shared<std::string>();
    auto cache = std::make_shared<std::string>();
    auto sketch = std::make_shared<bool>(false);
    auto tau = std::make_shared<double>(0.1);
    auto epsilon = std::make_shared<double>(0.5);
    auto q_override = std::make_shared<long>(0);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto spectral = std::make_shared<bool>(false);
    cmd->add_option("graph", *graph_path, "edge-list file")->required();
    cmd->add_option("--epsilon", *epsilon, "sparsification parameter in (0,1)")->capture_default_str();
    cmd->add_option("--q-override", *q_override, "explicit draw count (0 = formula)")->capture_default_str();
    cmd->add_option("--seed", *seed, "sampling seed")->capture_default_str();
    cmd->add_option("--cache", *cache, "resistance cache file to reuse");
    cmd->add_flag("--sketch", *sketch, "sketch resistances instead of exact");
    cmd->add_option("--tau", *tau, "sketch distortion tolerance")->capture_default_str();
    cmd->add_flag("--spectral", *spectral, "also measure epsilon* (eigendecomposition)");
    cmd->add_option("-o,--out", *out, "sparsified edge-list file")->required();
    cmd->add_option("--report", *report_path, "JSON report file");
    cmd->callback([=]() {
      const Graph g = read_graph(*graph_path);
      const ResistanceTable table = resolve_resistances(g, *cache, *sketch, *tau, 0, *seed);
      SparsifyConfig cfg;
      cfg.epsilon = *epsilon;
      cfg.q_override = *q_override;
      cfg.seed = *seed;
      const SparsifiedGraph s = sample_sparsifier(g, table, cfg);
      atomic_write(*out, serialize_edge_list(s.graph));

      json rep;
      rep["epsilon"] = s.record.epsilon;
      rep["q"] = s.record.q;
      rep["seed"] = s.record.seed;
      rep["distinct_edges"] = s.record.distinct_edges;
      rep["percent_reduction"] = s.record.percent_reduction;
      if (*spectral) rep["epsilon_star"] = spectral_check(g, s.graph).epsilon_star;
      if (!report_path->empty()) emit(rep.dump(2) + "\n", *report_path);
      std::cerr << "sparsify: kept " << s.record.distinct_edges << "/" << g.edge_count()
                << " edges (q=" << s.record.q << ")\n";
    });
  }

  // ----------------------------------------------------------- spectral-check
  {
    auto* cmd = app.add_subcommand("spectral-check", "compare Laplacian spectra of two graphs");
    auto g_path = std::make_shared<std::string>();
    auto h_path = std::make_shared<std::string>();
    auto report_path = std::make_shared<std::string>();
    cmd->add_option("graph", *g_path, "original edge-list file")->required();
    cmd->add_option("sparsified", *h_path, "comparison edge-list file")->required();
    cmd->add_option("--report", *report_path, "JSON report file (default stdout)");
    cmd->callback([=, &exit_code]() {
      const SpectralReport rep = spectral_check(read_graph(*g_path), read_graph(*h_path));
      json out;
      out["epsilon_star"] = rep.epsilon_star;
      out["max_degree_deviation"] = rep.max_degree_deviation;
      out["components_match"] = rep.components_match;
      out["eigenvalues_g"] = rep.eig_g;
      out["eigenvalues_h"] = rep.eig_h;
      emit(out.dump(2) + "\n", *report_path);
      if (!rep.components_match) {
        std::cerr << "spectral-check: component counts differ\n";
        exit_code = 1;
      }
    });
  }

  // -------------------------------------------------------------- bound-check
  {
    auto* cmd = app.add_subcommand("bound-check", "evaluate the layer approximation bounds");
    auto model = std::make_shared<std::string>("gcn");
    auto graph_path = std::make_shared<std::string>();
    auto features_path = std::make_shared<std::string>();
    auto sparse_path = std::make_shared<std::string>();
    auto epsilon = std::make_shared<double>(0.25);
    auto seed = std::make_shared<std::uint64_t>(1);
    auto out_features = std::make_shared<int>(3);
    auto sigma_name = std::make_shared<std::string>("relu");
    auto formula_q = std::make_shared<bool>(false);
    auto report_path = std::make_shared<std::string>();
    cmd->add_option("--model", *model, "gcn or gat")->capture_default_str();
    cmd->add_option("graph", *graph_path, "edge-list file")->required();
    cmd->add_option("--features", *features_path, "feature matrix (default: seeded random)");
    cmd->add_option("--sparsified", *sparse_path,
                    "pre-sparsified edge list (gcn only; default: theory-grade draw)");
    cmd->add_option("--epsilon", *epsilon, "target epsilon")->capture_default_str();
    cmd->add_option("--seed", *seed, "seed for sampling and synthetic tensors")->capture_default_str();
    cmd->add_option("--out-features", *out_features, "columns of the weight matrix")->capture_default_str();
    cmd->add_option("--sigma", *sigma_name, "relu or elu")->capture_default_str();
    cmd->add_flag("--formula-q", *formula_q,
                  "use the 0.16 draw-count formula instead of the oversampled constant 4");
    cmd->add_option("--report", *report_path, "JSON report file (default stdout)");
    cmd->callback([=, &exit_code]() {
      const Graph g = read_graph(*graph_path);
      const int n = g.node_count();
      const Matrix h = features_path->empty() ? seeded_matrix(n, 4, rng::derive(*seed, 21))
                                              : read_matrix(*features_path);
      const Nonlin sigma = *sigma_name == "elu" ? Nonlin::elu : Nonlin::relu;
      const long q = *formula_q ? 0 : theory_grade_sample_count(n, *epsilon);
      BoundReport rep;
      if (*model == "gcn") {
        const Matrix w = seeded_matrix(h.cols(), *out_features, rng::derive(*seed, 22));
        Graph sparse = [&]() {
          if (!sparse_path->empty()) return read_graph(*sparse_path);
          SparsifyConfig cfg;
          cfg.epsilon = *epsilon;
          cfg.q_override = q;
          cfg.seed = *seed;
          return sample_sparsifier(g, exact_resistances(g), cfg).graph;
        }();
        rep = theorem1_check(g, sparse, h, w, sigma);
      } else if (*model == "gat") {
        HeadParams p;
        p.kind = AttnKind::gat;
        p.weight = seeded_matrix(h.cols(), *out_features, rng::derive(*seed, 22));
        p.attn.resize(2 * *out_features);
        for (std::size_t i = 0; i < p.attn.size(); ++i)
          p.attn[i] = rng::uniform01(rng::derive(*seed, 23), i) - 0.5;
        make_attention_symmetric(p.attn);
        const Matrix gamma = attention_matrix(g, h, p).dense_gamma();
        const Matrix gamma_s = sparsify_gamma(gamma, *epsilon, q, *seed);
        rep = theorem2_check(gamma, gamma_s, h, p.weight, sigma);
      } else {
        throw CLI::ValidationError("--model", "must be gcn or gat");
      }
      json out;
      out["model"] = rep.model;
      out["eps_star"] = rep.eps_star;
      out["lhs"] = rep.lhs;
      out["rhs"] = rep.rhs;
      out["holds"] = rep.holds;
      out["seed"] = *seed;
      emit(out.dump(2) + "\n", *report_path);
      if (!rep.holds) {
        std::cerr << "bound-check: bound violated (lhs " << rep.lhs << " > rhs " << rep.rhs << ")\n";
        exit_code = 1;
      }
    });
  }

  // -------------------------------------------------------------------- train
  {
    auto* cmd = app.add_subcommand("train", "train the two-layer attention model");
    auto data_args = std::make_shared<DatasetArgs>();
    data_args->attach(cmd, true);
    auto mode_name = std::make_shared<std::string>("full");
    auto attention = std::make_shared<std::string>("gat");
    auto epsilon = std::make_shared<double>(0.5);
    auto epochs = std::make_shared<int>(200);
    auto lr = std::make_shared<double>(0.001);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto cache = std::make_shared<std::string>();
    auto trace_path = std::make_shared<std::string>();
    auto report_path = std::make_shared<std::string>();
    auto logits_path = std::make_shared<std::string>();
    cmd->add_option("--mode", *mode_name, "full | const | layer | head")->capture_default_str();
    cmd->add_option("--attention", *attention, "gat | cosine | gaan")->capture_default_str();
    cmd->add_option("--epsilon", *epsilon, "sparsification parameter")->capture_default_str();
    cmd->add_option("--epochs", *epochs, "training epochs")->capture_default_str();
    cmd->add_option("--lr", *lr, "Adam learning rate")->capture_default_str();
    cmd->add_option("--seed", *seed, "seed for init and sampling")->capture_default_str();
    cmd->add_option("--cache", *cache, "resistance cache file to reuse");
    cmd->add_option("--trace", *trace_path, "JSONL per-epoch trace file");
    cmd->add_option("--logits", *logits_path, "final output rows in matrix format");
    cmd->add_option("--report", *report_path, "JSON summary file (default stdout)");
    cmd->callback([=]() {
      const Graph g = read_graph(data_args->graph_path);
      const Matrix h = read_matrix(data_args->features_path);
      const std::vector<int> labels = read_labels(data_args->labels_path);
      TrainConfig tc;
      tc.epochs = *epochs;
      tc.adam.lr = *lr;
      tc.seed = *seed;
      tc.model = default_model_config(num_classes(labels), parse_attention(*attention),
                                      parse_mode(*mode_name), *epsilon, *seed);
      tc.masks = read_masks(data_args->masks_path);

      std::optional<ResistanceTable> table;
      if (tc.model.mode != SamplerMode::full)
        table = resolve_resistances(g, *cache, false, 0.1, 0, *seed);
      const TrainResult res = train(tc, g, h, labels, table ? &*table : nullptr);

      if (!trace_path->empty()) emit(trace_jsonl(res.trace), *trace_path);
      if (!logits_path->empty()) emit(format_matrix(res.final_probs), *logits_path);
      json rep;
      rep["mode"] = *mode_name;
      rep["attention"] = *attention;
      rep["epochs"] = *epochs;
      rep["epsilon"] = *epsilon;
      rep["seed"] = *seed;
      rep["final_loss"] = res.trace.empty() ? 0.0 : res.trace.back().loss;
      rep["final_train_acc"] = res.trace.empty() ? 0.0 : res.trace.back().train_acc;
      rep["final_val_acc"] = res.trace.empty() ? 0.0 : res.trace.back().val_acc;
      rep["test_micro_f1"] =
          res.trace.empty() ? 0.0 : micro_f1(res.final_probs, labels, tc.masks.test);
      rep["attention_pairs_per_epoch"] = res.forward_stats.attention_pairs;
      emit(rep.dump(2) + "\n", *report_path);

      double total_seconds = 0.0;
      for (const EpochRecord& r : res.trace) total_seconds += r.seconds;
      std::cerr << "train: " << res.trace.size() << " epochs in " << total_seconds << "s\n";
    });
  }

  // ----------------------------------------------------------- adaptive-train
  {
    auto* cmd = app.add_subcommand("adaptive-train", "train with the adaptive edge budget");
    auto data_args = std::make_shared<DatasetArgs>();
    data_args->attach(cmd, true);
    auto attention = std::make_shared<std::string>("gat");
    auto epochs = std::make_shared<int>(200);
    auto lr = std::make_shared<double>(0.001);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto cache = std::make_shared<std::string>();
    auto acfg = std::make_shared<AdaptiveConfig>();
    auto trace_path = std::make_shared<std::string>();
    auto report_path = std::make_shared<std::string>();
    auto logits_path = std::make_shared<std::string>();
    cmd->add_option("--attention", *attention, "gat | cosine | gaan")->capture_default_str();
    cmd->add_option("--epochs", *epochs, "training epochs")->capture_default_str();
    cmd->add_option("--lr", *lr, "Adam learning rate")->capture_default_str();
    cmd->add_option("--seed", *seed, "seed for init and sampling")->capture_default_str();
    cmd->add_option("--cache", *cache, "resistance cache file to reuse");
    cmd->add_option("--window", acfg->window, "epochs per controller window")->capture_default_str();
    cmd->add_option("--eps-start", acfg->eps_start, "initial sparsifier epsilon")->capture_default_str();
    cmd->add_option("--eps-floor", acfg->eps_floor, "densest allowed epsilon")->capture_default_str();
    cmd->add_option("--stall-slope", acfg->stall_slope, "accuracy/epoch stall threshold")->capture_default_str();
    cmd->add_option("--increment", acfg->edge_increment, "edges per densify step (0 = 0.003 M)")->capture_default_str();
    cmd->add_flag("--validation-slope", acfg->use_validation_slope,
                  "drive the controller from validation accuracy");
    cmd->add_option("--trace", *trace_path, "JSONL per-epoch trace file");
    cmd->add_option("--logits", *logits_path, "final output rows in matrix format");
    cmd->add_option("--report", *report_path, "JSON summary file (default stdout)");
    cmd->callback([=]() {
      const Graph g = read_graph(data_args->graph_path);
      const Matrix h = read_matrix(data_args->features_path);
      const std::vector<int> labels = read_labels(data_args->labels_path);
      TrainConfig tc;
      tc.epochs = *epochs;
      tc.adam.lr = *lr;
      tc.seed = *seed;
      tc.model = default_model_config(num_classes(labels), parse_attention(*attention),
                                      SamplerMode::fastgat_const, acfg->eps_start, *seed);
      tc.masks = read_masks(data_args->masks_path);
      const ResistanceTable table = resolve_resistances(g, *cache, false, 0.1, 0, *seed);
      const AdaptiveResult res = adaptive_train(tc, *acfg, g, h, labels, table);

      if (!trace_path->empty()) emit(trace_jsonl(res.trace), *trace_path);
      if (!logits_path->empty()) emit(format_matrix(res.final_probs), *logits_path);
      json rep;
      rep["attention"] = *attention;
      rep["epochs"] = *epochs;
      rep["seed"] = *seed;
      rep["eps_start"] = acfg->eps_start;
      rep["eps_floor"] = acfg->eps_floor;
      rep["final_train_acc"] = res.trace.empty() ? 0.0 : res.trace.back().train_acc;
      rep["test_micro_f1"] =
          res.trace.empty() ? 0.0 : micro_f1(res.final_probs, labels, tc.masks.test);
      rep["initial_edges"] = res.edge_trace.empty() ? 0 : res.edge_trace.front();
      rep["final_edges"] = res.edge_trace.empty() ? 0 : res.edge_trace.back();
      int adds = 0, removes = 0;
      for (AdaptiveAction a : res.actions) {
        adds += a == AdaptiveAction::add;
        removes += a == AdaptiveAction::remove;
      }
      rep["densify_steps"] = adds;
      rep["sparsify_steps"] = removes;
      emit(rep.dump(2) + "\n", *report_path);
    });
  }

  // ----------------------------------------------------------------- gradcheck
  {
    auto* cmd = app.add_subcommand("gradcheck", "finite-difference check of the analytic gradients");
    auto attention = std::make_shared<std::string>("gat");
    auto seeds = std::make_shared<int>(20);
    auto step = std::make_shared<double>(1e-4);
    auto tol = std::make_shared<double>(1e-4);
    auto report_path = std::make_shared<std::string>();
    cmd->add_option("--attention", *attention, "gat | cosine | gaan")->capture_default_str();
    cmd->add_option("--seeds", *seeds, "number of seeded tiny instances")->capture_default_str();
    cmd->add_option("--step", *step, "central-difference step")->capture_default_str();
    cmd->add_option("--tol", *tol, "relative-error tolerance")->capture_default_str();
    cmd->add_option("--report", *report_path, "JSON report file (default stdout)");
    cmd->callback([=, &exit_code]() {
      const AttnKind kind = parse_attention(*attention);
      double worst = 0.0;
      bool all_pass = true;
      for (std::uint64_t seed = 1; seed <= static_cast<std::uint64_t>(*seeds); ++seed) {
        const Graph g = erdos_renyi(8, 0.45, rng::derive(seed, 55));
        ModelConfig cfg;
        cfg.layers.push_back({2, 2, kind, HeadCombiner::concat, Nonlin::elu});
        cfg.layers.push_back({1, 2, kind, HeadCombiner::average, Nonlin::softmax_out});
        const ModelParams params = init_model_params(cfg, 3, seed);
        Matrix h(8, 3);
        std::uint64_t idx = 0;
        for (double& v : h.data()) v = 2.0 * rng::uniform01(rng::derive(seed, 7), idx++) - 1.0;
        std::vector<int> labels(8);
        for (int i = 0; i < 8; ++i)
          labels[i] = static_cast<int>(rng::at(rng::derive(seed, 9), i) % 2);
        const SampledSupports sup = sample_supports(g, cfg, nullptr);
        const GradcheckReport rep = finite_diff_gradcheck(cfg, params, sup, h, labels,
                                                          std::vector<char>(8, 1), *step, *tol);
        worst = std::max(worst, rep.max_rel_error);
        all_pass = all_pass && rep.pass;
      }
      json rep;
      rep["attention"] = *attention;
      rep["seeds"] = *seeds;
      rep["max_rel_error"] = worst;
      rep["pass"] = all_pass;
      emit(rep.dump(2) + "\n", *report_path);
      if (!all_pass) {
        std::cerr << "gradcheck: failure (worst relative error " << worst << ")\n";
        exit_code = 1;
      }
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "respars: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}
