#pragma once

#include "mlembed/graph.hpp"
#include "mlembed/matrix.hpp"
#include "mlembed/modularity.hpp"
#include "mlembed/pipeline.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mlembed {

enum class Aggregation { Mean, Concat };

// Per physical node features from replica embeddings. Mean averages over the
// layers containing the node; Concat lays out one block per layer, zero where
// the node is absent.
Matrix aggregate_node_vectors(const Matrix& replicas, const MultilayerNetwork& net,
                              Aggregation mode = Aggregation::Mean);

// Multinomial logistic regression with an L2 penalty on the weights, fitted by
// full-batch gradient descent with backtracking line search. Features are
// standardized with the training mean and deviation.
class LogisticRegression {
 public:
  struct Options {
    double l2 = 1e-4;
    int max_iters = 2000;
    double tol = 1e-6;  // on the gradient norm
  };

  LogisticRegression() = default;
  explicit LogisticRegression(Options options) : options_(options) {}

  void fit(const Matrix& x, std::span<const int> y, int num_classes);
  Matrix predict_proba(const Matrix& x) const;
  std::vector<int> predict(const Matrix& x) const;
  double objective(const Matrix& x, std::span<const int> y) const;
  int iterations() const noexcept { return iterations_; }

 private:
  Options options_{};
  Matrix weights_;  // [d x C]
  RowVector bias_;
  RowVector mean_, scale_;
  int iterations_ = 0;
};

// Stratified assignment of the given items to `folds` folds: each class is
// shuffled and dealt round robin.
std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed);

struct ClassificationResult {
  std::vector<double> accuracy;  // percent, per fold
  double mean = 0.0;
};

// Train on one fold, test on the rest, for every fold. Only labeled nodes take part.
ClassificationResult node_classification_eval(const Matrix& reps, const LabelTable& labels, int folds,
                                              std::uint64_t seed);

// Rank-based area under the ROC curve; tied scores share their average rank.
double auroc(std::span<const double> positive, std::span<const double> negative);

double cosine_similarity(const RowVector& a, const RowVector& b);

// Fold index for every edge of every layer; each layer is split on its own.
std::vector<std::vector<int>> edge_folds(const MultilayerNetwork& net, int folds, std::uint64_t seed);

// Copy of `net` without the edges assigned to `fold`. Every replica stays
// present, possibly with no edges.
MultilayerNetwork remove_fold(const MultilayerNetwork& net, const std::vector<std::vector<int>>& folds, int fold);

// Pairs of present nodes with no edge in the layer, drawn without replacement.
std::vector<std::pair<NodeId, NodeId>> sample_non_edges(const Layer& layer, std::size_t count, Rng& rng);

struct LinkPredictionOptions {
  int folds = 5;
  std::uint64_t seed = 1;
};

struct LinkPredictionResult {
  std::vector<std::vector<double>> auroc;  // [layer][fold]
  std::vector<double> layer_mean;
  double mean = 0.0;
};

// Per fold: drop the fold's edges from every layer, embed the incomplete
// network once, then score held-out edges against an equal number of
// non-edges of the same layer by cosine similarity. Replicas left without
// edges are scored with their aggregated node vector.
LinkPredictionResult link_prediction_eval(const MultilayerNetwork& net, const EmbedConfig& embed,
                                          const LinkPredictionOptions& options);

struct SweepPoint {
  int k = 0;
  double quality = 0.0;
};

// k-means on replica embeddings for every K, scored by Q_multi. K values that
// k-means cannot satisfy are skipped with a warning.
std::vector<SweepPoint> community_detection_eval(const Matrix& replicas, const SupraGraph& g,
                                                 std::span<const int> k_values, const ModularityParams& params,
                                                 std::uint64_t seed, int restarts = 10);

struct SbmSpec {
  std::size_t layers = 2;
  std::size_t nodes = 60;
  int blocks = 3;
  double p_in = 0.3;
  double p_out = 0.02;
  // Layers flagged true reuse the planted partition; the others get an
  // independently shuffled one. Empty means every layer shares it.
  std::vector<bool> shared;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SbmSample {
  MultilayerNetwork net;
  std::vector<std::vector<int>> blocks;  // [layer][node]
  Assignment planted;                    // per supra index
};

// Balanced contiguous blocks; independent Bernoulli edges per layer.
SbmSample generate_sbm(const SbmSpec& spec);

// Mutual information over the arithmetic mean of the two entropies. Two
// single-cluster partitions give 1, exactly one gives 0.
double nmi(std::span<const int> a, std::span<const int> b);

struct ResultRow {
  std::string metric;
  std::string dataset;
  std::string key;  // fold index, K, or a layer/fold pair
  double value = 0.0;
};

void write_results_csv(std::ostream& out, std::span<const ResultRow> rows);
void write_results_table(std::ostream& out, std::span<const ResultRow> rows);

}  // namespace mlembed
