#include "mlembed/commands.hpp"

#include "mlembed/errors.hpp"
#include "mlembed/log.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

namespace mlembed {

namespace fs = std::filesystem;

Task parse_task(const std::string& name) {
  if (name == "nc") return Task::Classification;
  if (name == "lp") return Task::LinkPrediction;
  if (name == "cd") return Task::Communities;
  throw ValidationError("task must be nc, lp or cd");
}

std::string task_name(Task task) {
  switch (task) {
    case Task::Classification: return "nc";
    case Task::LinkPrediction: return "lp";
    case Task::Communities: return "cd";
  }
  return "?";
}

namespace {

// Rethrows with the stage name prepended, keeping the exit-code class.
template <typename F>
auto stage(const std::string& name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const NumericError& e) {
    throw NumericError(name + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(name + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(name + ": " + e.what());
  }
}

fs::path output_path(const RunConfig& config, const std::string& file) {
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw IoError("cannot create output directory " + config.output_dir + ": " + ec.message());
  return fs::path(config.output_dir) / file;
}

template <typename Write>
void write_file(const fs::path& path, Write&& write) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write(out);
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

MultilayerNetwork load_network(const RunConfig& config) {
  if (config.edges.empty()) throw ValidationError("no edge file given (key `edges`)");
  return load_multilayer(config.edges, LoadOptions{config.strict});
}

void print_stats(std::ostream& out, const SupraGraph& g) {
  const auto& net = g.base();
  out << "replicas " << g.num_nodes() << ", intra edges " << g.num_intra_edges() << ", inter edges "
      << g.inter_edges().size() << '\n';
  for (const auto& s : g.coupling_stats()) {
    out << "inter " << net.layer_token(s.l) << '-' << net.layer_token(s.m) << ": " << s.retained << " of "
        << s.candidates << '\n';
  }
}

// Refinement for classification clusters into one community per label class.
RunConfig with_label_clusters(const RunConfig& config, const MultilayerNetwork& net) {
  if (config.labels.empty()) throw ValidationError("node classification needs a label file (key `labels`)");
  RunConfig copy = config;
  copy.embed.refine_config.clusters = static_cast<int>(load_labels(config.labels, net).num_classes());
  return copy;
}

Matrix embeddings_for(const RunConfig& config, const MultilayerNetwork& net, bool refine) {
  if (!config.embeddings.empty()) return load_embeddings(config.embeddings, net);
  return embed_network(net, config.resolved_embed(refine)).embeddings;
}

std::vector<ResultRow> classification_rows(const RunConfig& config, const Matrix& replicas,
                                           const MultilayerNetwork& net) {
  if (config.labels.empty()) throw ValidationError("node classification needs a label file (key `labels`)");
  const auto labels = load_labels(config.labels, net);
  const auto reps = aggregate_node_vectors(replicas, net, config.eval.aggregation);
  const auto result = node_classification_eval(reps, labels, config.eval.nc_folds, derive_seed(config.seed, 4));
  std::vector<ResultRow> rows;
  for (std::size_t f = 0; f < result.accuracy.size(); ++f) {
    rows.push_back({"accuracy", config.dataset, "fold" + std::to_string(f), result.accuracy[f]});
  }
  rows.push_back({"accuracy", config.dataset, "mean", result.mean});
  return rows;
}

std::vector<ResultRow> link_rows(const RunConfig& config, const MultilayerNetwork& net) {
  const auto result = link_prediction_eval(net, config.resolved_embed(config.eval.refine_lp),
                                           {config.eval.lp_folds, derive_seed(config.seed, 5)});
  std::vector<ResultRow> rows;
  for (LayerId l = 0; l < net.num_layers(); ++l) {
    for (std::size_t f = 0; f < result.auroc[l].size(); ++f) {
      rows.push_back({"auroc", config.dataset, net.layer_token(l) + "/fold" + std::to_string(f), result.auroc[l][f]});
    }
    rows.push_back({"auroc", config.dataset, net.layer_token(l) + "/mean", result.layer_mean[l]});
  }
  rows.push_back({"auroc", config.dataset, "mean", result.mean});
  return rows;
}

std::vector<ResultRow> community_rows(const RunConfig& config, const Matrix& replicas, const SupraGraph& g) {
  const auto sweep = community_detection_eval(replicas, g, config.eval.k_values,
                                              config.embed.refine_config.modularity, derive_seed(config.seed, 6),
                                              config.eval.kmeans_restarts);
  std::vector<ResultRow> rows;
  for (const auto& p : sweep) rows.push_back({"q_multi", config.dataset, "K=" + std::to_string(p.k), p.quality});
  return rows;
}

void report_rows(const RunConfig& config, const std::string& file, const std::vector<ResultRow>& rows,
                 std::ostream& out) {
  write_file(output_path(config, file), [&](std::ostream& o) { write_results_csv(o, rows); });
  write_results_table(out, rows);
}

Matrix run_refine(const RunConfig& config, const SupraGraph& g, const Matrix& x, std::ostream& out,
                  bool save = true) {
  auto cfg = config.resolved_embed(true).refine_config;
  const auto result = stage("refine", [&] { return refine(x, g, cfg); });
  out << "refine K=" << cfg.clusters << '\n';
  if (save) stage("refine", [&] {
    write_file(output_path(config, "refined_embeddings.txt"),
               [&](std::ostream& o) { write_embeddings(o, result.embeddings, g.base()); });
    write_file(output_path(config, "partition.txt"),
               [&](std::ostream& o) { write_partition(o, g.base(), result.labels); });
  });
  out << "q_multi initial " << format_double(result.initial_quality) << '\n';
  out << "q_multi final " << format_double(result.final_quality) << '\n';
  out << "outer iterations " << result.outer_iterations << '\n';
  if (!config.planted.empty()) {
    const auto planted = stage("refine", [&] {
      std::ifstream in(config.planted);
      if (!in) throw IoError("cannot open planted partition " + config.planted);
      return read_partition(in, g.base(), config.planted);
    });
    out << "nmi " << format_double(nmi(result.labels, planted)) << '\n';
  }
  return result.embeddings;
}

}  // namespace

void cmd_generate_sbm(const RunConfig& config, std::ostream& out) {
  stage("generate-sbm", [&] {
    config.validate();
    const auto sample = generate_sbm(config.sbm);
    write_file(output_path(config, "edges.txt"), [&](std::ostream& o) { write_multilayer(o, sample.net); });
    write_file(output_path(config, "planted.txt"),
               [&](std::ostream& o) { write_partition(o, sample.net, sample.planted); });
    out << "layers " << sample.net.num_layers() << ", nodes " << sample.net.num_nodes() << ", edges";
    for (const auto& layer : sample.net.layers()) out << ' ' << layer.num_edges();
    out << '\n';
  });
}

void cmd_build_supra(const RunConfig& config, std::ostream& out) {
  stage("build-supra", [&] {
    config.validate();
    const auto g = build_supra(load_network(config), config.embed.threshold);
    write_file(output_path(config, "supra_edges.txt"), [&](std::ostream& o) { write_supra_edges(o, g); });
    print_stats(out, g);
  });
}

void cmd_embed(const RunConfig& config, std::ostream& out) {
  stage("embed", [&] {
    config.validate();
    const auto result = embed_network(load_network(config), config.resolved_embed(false));
    write_file(output_path(config, "embeddings.txt"),
               [&](std::ostream& o) { write_embeddings(o, result.embeddings, result.supra.base()); });
    for (std::size_t e = 0; e < result.training.epoch_loss.size(); ++e) {
      out << "epoch " << e + 1 << " loss " << format_double(result.training.epoch_loss[e]) << '\n';
    }
  });
}

void cmd_refine(const RunConfig& config, std::ostream& out) {
  stage("refine", [&] { config.validate(); });
  const auto g = stage("refine", [&] { return build_supra(load_network(config), config.embed.threshold); });
  const auto x = stage("refine", [&] {
    const auto path = config.embeddings.empty() ? (fs::path(config.output_dir) / "embeddings.txt").string()
                                                : config.embeddings;
    return load_embeddings(path, g.base());
  });
  run_refine(config, g, x, out);
}

std::vector<ResultRow> cmd_eval(const RunConfig& config, Task task, std::ostream& out) {
  const std::string name = "eval-" + task_name(task);
  return stage(name, [&] {
    config.validate();
    auto net = load_network(config);
    std::vector<ResultRow> rows;
    switch (task) {
      case Task::Classification:
        rows = classification_rows(
            config, embeddings_for(with_label_clusters(config, net), net, config.eval.refine_nc), net);
        break;
      case Task::LinkPrediction:
        rows = link_rows(config, net);
        break;
      case Task::Communities: {
        const auto x = embeddings_for(config, net, config.eval.refine_cd);
        const auto g = build_supra(std::move(net), config.embed.threshold);
        rows = community_rows(config, x, g);
        break;
      }
    }
    report_rows(config, "results_" + task_name(task) + ".csv", rows, out);
    return rows;
  });
}

void cmd_pipeline(const RunConfig& config, std::ostream& out) {
  stage("pipeline", [&] { config.validate(); });
  stage("pipeline", [&] {
    write_file(output_path(config, "config.used"), [&](std::ostream& o) { write_config(o, config); });
  });
  const auto net = stage("pipeline", [&] { return load_network(config); });

  const auto embedded = stage("embed", [&] { return embed_network(net, config.resolved_embed(false)); });
  const auto& g = embedded.supra;
  stage("build-supra", [&] {
    write_file(output_path(config, "supra_edges.txt"), [&](std::ostream& o) { write_supra_edges(o, g); });
  });
  print_stats(out, g);
  stage("embed", [&] {
    write_file(output_path(config, "embeddings.txt"),
               [&](std::ostream& o) { write_embeddings(o, embedded.embeddings, net); });
  });

  std::optional<Matrix> refined;
  if (config.eval.refine_cd) {
    refined = run_refine(config, g, embedded.embeddings, out);
  }

  std::vector<ResultRow> rows;
  if (!config.labels.empty()) {
    Matrix x = embedded.embeddings;
    if (config.eval.refine_nc) {
      const auto nc_config = stage("eval-nc", [&] { return with_label_clusters(config, net); });
      const bool same_k = nc_config.embed.refine_config.clusters == config.embed.refine_config.clusters;
      x = refined && same_k ? *refined : run_refine(nc_config, g, embedded.embeddings, out, !refined.has_value());
    }
    auto nc = stage("eval-nc", [&] { return classification_rows(config, x, net); });
    rows.insert(rows.end(), nc.begin(), nc.end());
  }
  auto lp = stage("eval-lp", [&] { return link_rows(config, net); });
  rows.insert(rows.end(), lp.begin(), lp.end());
  const auto& xcd = config.eval.refine_cd ? *refined : embedded.embeddings;
  auto cd = stage("eval-cd", [&] { return community_rows(config, xcd, g); });
  rows.insert(rows.end(), cd.begin(), cd.end());
  stage("eval", [&] { report_rows(config, "results.csv", rows, out); });
}

}  // namespace mlembed
