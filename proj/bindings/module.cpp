#include "mlembed/errors.hpp"
#include "mlembed/eval.hpp"
#include "mlembed/graph.hpp"
#include "mlembed/kmeans.hpp"
#include "mlembed/modularity.hpp"
#include "mlembed/pipeline.hpp"
#include "mlembed/refine.hpp"
#include "mlembed/supra.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace pybind11::literals;
using namespace mlembed;

namespace {

MultilayerNetwork network_from_text(const std::string& text, bool strict) {
  std::istringstream in(text);
  return read_multilayer(in, LoadOptions{strict}, "<string>");
}

std::vector<std::string> supra_tokens(const MultilayerNetwork& net) {
  std::vector<std::string> out;
  out.reserve(net.num_supra());
  for (SupraIndex v = 0; v < net.num_supra(); ++v) out.push_back(net.supra_token(v));
  return out;
}

EmbedConfig make_embed_config(double threshold, int dim, std::uint32_t walks_per_node, std::uint32_t walk_length,
                              int window, int negatives, int epochs, std::uint64_t seed, unsigned threads) {
  EmbedConfig cfg;
  cfg.threshold = threshold;
  cfg.walk.walks_per_node = walks_per_node;
  cfg.walk.walk_length = walk_length;
  cfg.walk.seed = derive_seed(seed, 1);
  cfg.walk.threads = threads;
  cfg.sgns.dim = dim;
  cfg.sgns.window = window;
  cfg.sgns.negatives = negatives;
  cfg.sgns.epochs = epochs;
  cfg.sgns.seed = derive_seed(seed, 2);
  cfg.sgns.threads = threads;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multilayer network embeddings with modularity-guided refinement";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<MultilayerNetwork>(m, "Network")
      .def_property_readonly("num_nodes", &MultilayerNetwork::num_nodes)
      .def_property_readonly("num_layers", &MultilayerNetwork::num_layers)
      .def_property_readonly("num_supra", &MultilayerNetwork::num_supra)
      .def_property_readonly("node_tokens", [](const MultilayerNetwork& n) {
        return std::vector<std::string>(n.node_tokens().begin(), n.node_tokens().end());
      })
      .def_property_readonly("layer_tokens", [](const MultilayerNetwork& n) {
        return std::vector<std::string>(n.layer_tokens().begin(), n.layer_tokens().end());
      })
      .def("supra_tokens", &supra_tokens)
      .def("num_edges", [](const MultilayerNetwork& n, LayerId l) { return n.layer(l).num_edges(); }, "layer"_a)
      .def("edges", [](const MultilayerNetwork& n, LayerId l) { return n.layer(l).edges(); }, "layer"_a)
      .def("index_of", [](const MultilayerNetwork& n, NodeId v, LayerId l) { return n.index_of({v, l}); },
           "node"_a, "layer"_a);

  m.def("load_network", [](const std::string& path, bool strict) { return load_multilayer(path, LoadOptions{strict}); },
        "path"_a, "strict"_a = false, "Read a `layer src dst` edge list.");
  m.def("parse_network", &network_from_text, "text"_a, "strict"_a = false,
        "Parse edge-list text in the same format as load_network.");

  py::class_<SupraGraph>(m, "SupraGraph")
      .def_property_readonly("num_nodes", &SupraGraph::num_nodes)
      .def_property_readonly("num_intra_edges", &SupraGraph::num_intra_edges)
      .def_property_readonly("num_inter_edges", [](const SupraGraph& g) { return g.inter_edges().size(); })
      .def_property_readonly("threshold", &SupraGraph::threshold)
      .def_property_readonly("network", &SupraGraph::base, py::return_value_policy::reference_internal)
      .def("neighbors",
           [](const SupraGraph& g, SupraIndex v) {
             const auto nb = g.neighbors(v);
             return std::vector<SupraIndex>(nb.begin(), nb.end());
           },
           "index"_a)
      .def("coupling_stats", [](const SupraGraph& g) {
        py::list out;
        for (const auto& s : g.coupling_stats()) {
          out.append(py::dict("l"_a = s.l, "m"_a = s.m, "candidates"_a = s.candidates, "retained"_a = s.retained));
        }
        return out;
      });

  m.def("build_supra", [](const MultilayerNetwork& net, double threshold) { return build_supra(net, threshold); },
        "network"_a, "threshold"_a = kDefaultCouplingThreshold);
  m.def("jaccard", &jaccard_coupling, "network"_a, "node"_a, "l"_a, "m"_a);

  m.def(
      "embed",
      [](const MultilayerNetwork& net, double threshold, int dim, std::uint32_t walks_per_node,
         std::uint32_t walk_length, int window, int negatives, int epochs, std::uint64_t seed, unsigned threads) {
        auto cfg = make_embed_config(threshold, dim, walks_per_node, walk_length, window, negatives, epochs, seed,
                                     threads);
        py::gil_scoped_release release;
        return embed_network(net, cfg).embeddings;
      },
      "network"_a, "threshold"_a = kDefaultCouplingThreshold, "dim"_a = 128, "walks_per_node"_a = 10,
      "walk_length"_a = 40, "window"_a = 5, "negatives"_a = 5, "epochs"_a = 5, "seed"_a = 1, "threads"_a = 1,
      "Replica embeddings, one row per supra index.");

  m.def(
      "refine",
      [](const Matrix& x, const SupraGraph& g, int clusters, int max_outer_iters, int pretrain_epochs, double boost,
         double gamma, double sigma, std::uint64_t seed) {
        RefineConfig cfg;
        cfg.clusters = clusters;
        cfg.max_outer_iters = max_outer_iters;
        cfg.pretrain.epochs = pretrain_epochs;
        cfg.boost = boost;
        cfg.modularity.gamma = gamma;
        cfg.modularity.sigma = sigma;
        cfg.seed = seed;
        RefineResult r;
        {
          py::gil_scoped_release release;
          r = refine(x, g, cfg);
        }
        return py::dict("embeddings"_a = r.embeddings, "labels"_a = r.labels, "initial_labels"_a = r.initial_labels,
                        "initial_quality"_a = r.initial_quality, "final_quality"_a = r.final_quality,
                        "outer_iterations"_a = r.outer_iterations);
      },
      "embeddings"_a, "supra"_a, "clusters"_a, "max_outer_iters"_a = 100, "pretrain_epochs"_a = 200,
      "boost"_a = 0.25, "gamma"_a = 1.0, "sigma"_a = 1.0, "seed"_a = 1);

  m.def(
      "modularity",
      [](const SupraGraph& g, const std::vector<int>& labels, double gamma, double sigma) {
        return modularity_multislice(g, labels, ModularityParams{gamma, sigma, Coupling::AllCounterparts});
      },
      "supra"_a, "labels"_a, "gamma"_a = 1.0, "sigma"_a = 1.0, "Multislice modularity of a replica partition.");

  m.def(
      "kmeans",
      [](const Matrix& x, int k, std::uint64_t seed, int restarts) {
        auto r = kmeans(x, k, seed, {300, restarts});
        return py::make_tuple(r.labels, r.centroids, r.inertia);
      },
      "x"_a, "k"_a, "seed"_a = 1, "restarts"_a = 1);

  m.def(
      "generate_sbm",
      [](std::size_t layers, std::size_t nodes, int blocks, double p_in, double p_out, std::vector<bool> shared,
         std::uint64_t seed) {
        SbmSpec spec{layers, nodes, blocks, p_in, p_out, std::move(shared), seed};
        auto s = generate_sbm(spec);
        return py::make_tuple(std::move(s.net), s.planted);
      },
      "layers"_a = 2, "nodes"_a = 60, "blocks"_a = 3, "p_in"_a = 0.3, "p_out"_a = 0.02,
      "shared"_a = std::vector<bool>{}, "seed"_a = 1, "Returns (network, planted labels per supra index).");

  m.def("aggregate", [](const Matrix& x, const MultilayerNetwork& net, bool concat) {
    return aggregate_node_vectors(x, net, concat ? Aggregation::Concat : Aggregation::Mean);
  }, "embeddings"_a, "network"_a, "concat"_a = false);

  m.def(
      "node_classification",
      [](const Matrix& reps, const std::vector<int>& labels, int folds, std::uint64_t seed) {
        LabelTable table;
        table.labels = labels;
        int classes = 0;
        for (int c : labels) classes = std::max(classes, c + 1);
        for (int c = 0; c < classes; ++c) table.class_tokens.push_back(std::to_string(c));
        auto r = node_classification_eval(reps, table, folds, seed);
        return py::make_tuple(r.accuracy, r.mean);
      },
      "features"_a, "labels"_a, "folds"_a = 3, "seed"_a = 1, "Per-fold accuracy (%) and its mean.");

  m.def(
      "link_prediction",
      [](const MultilayerNetwork& net, int folds, double threshold, int dim, std::uint32_t walks_per_node,
         std::uint32_t walk_length, int epochs, std::uint64_t seed) {
        auto cfg = make_embed_config(threshold, dim, walks_per_node, walk_length, 5, 5, epochs, seed, 1);
        LinkPredictionResult r;
        {
          py::gil_scoped_release release;
          r = link_prediction_eval(net, cfg, {folds, seed});
        }
        return py::make_tuple(r.auroc, r.mean);
      },
      "network"_a, "folds"_a = 5, "threshold"_a = kDefaultCouplingThreshold, "dim"_a = 128, "walks_per_node"_a = 10,
      "walk_length"_a = 40, "epochs"_a = 5, "seed"_a = 1, "AUROC per [layer][fold] and the overall mean.");

  m.def("auroc", [](const std::vector<double>& pos, const std::vector<double>& neg) { return auroc(pos, neg); },
        "positive"_a, "negative"_a);
  m.def("nmi", [](const std::vector<int>& a, const std::vector<int>& b) { return nmi(a, b); }, "a"_a, "b"_a);
}
