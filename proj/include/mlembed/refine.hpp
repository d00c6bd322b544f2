#pragma once

#include "mlembed/kmeans.hpp"
#include "mlembed/matrix.hpp"
#include "mlembed/modularity.hpp"
#include "mlembed/random.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace mlembed {

// Four fully connected layers d -> h1 -> h2 -> h3 -> d. ReLU after the
// three hidden layers, linear output. Batches are rows: y = x W + b.
class RefineNet {
 public:
  static constexpr int kLayers = 4;

  struct Parameters {
    std::array<Matrix, kLayers> weights;  // [in x out]
    std::array<Matrix, kLayers> biases;   // [1 x out]

    Parameters& operator+=(const Parameters& other);
  };
  using Gradients = Parameters;

  // Intermediate values of a forward pass, needed for backprop.
  struct Cache {
    std::array<Matrix, kLayers + 1> activations;  // [0] is the input
    std::array<Matrix, kLayers - 1> preactivations;
  };

  // He-uniform weights, zero biases.
  RefineNet(int dim, std::array<int, 3> hidden, std::uint64_t seed);

  int dim() const noexcept { return dim_; }
  std::array<int, 3> hidden() const noexcept { return hidden_; }
  const Parameters& parameters() const noexcept { return params_; }
  Parameters& parameters() noexcept { return params_; }

  Matrix forward(const Matrix& x) const;
  Matrix forward(const Matrix& x, Cache& cache) const;
  // Gradients of a scalar loss given d loss / d output.
  Gradients backward(const Cache& cache, const Matrix& grad_output) const;

  std::size_t num_parameters() const;
  Vector flatten() const;
  void unflatten(const Vector& values);
  static Vector flatten(const Parameters& params);

 private:
  int dim_;
  std::array<int, 3> hidden_;
  Parameters params_;
};

// (2d, d/2, 2d), at least 1 unit each; (256, 64, 256) for d = 128.
std::array<int, 3> default_hidden_widths(int dim);

// Adam over a fixed list of parameter matrices.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads);
  double lr() const noexcept { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

struct PretrainOptions {
  int epochs = 200;
  double lr = 1e-3;
  int batch_size = 256;
  std::uint64_t seed = 1;
};

struct PretrainReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> epoch_loss;
};

// Mean over rows of ||H(x) - x||^2.
double autoencoder_loss(const RefineNet& net, const Matrix& x);
RefineNet::Gradients autoencoder_gradients(const RefineNet& net, const Matrix& x, double* loss = nullptr);

// Mini-batch Adam on the reconstruction loss. Throws NumericError on divergence.
PretrainReport pretrain_autoencoder(RefineNet& net, const Matrix& x, const PretrainOptions& options);

// Student-t soft assignment with alpha = 1: q_ik proportional to 1 / (1 + ||x_i - mu_k||^2).
Matrix soft_assign(const Matrix& xbar, const Matrix& centroids);

// Sharpened targets p_ik proportional to q_ik^2 / f_k with f_k = sum_i q_ik.
Matrix target_distribution(const Matrix& q);

// sum_i sum_k p_ik log(p_ik / q_ik); zero entries of p contribute nothing.
double kl_divergence(const Matrix& p, const Matrix& q);

// KL(P || Q) with Q computed from H(x) and the centroids, P held fixed.
struct KlGradients {
  double loss = 0.0;
  RefineNet::Gradients net;
  Matrix centroids;
};
KlGradients kl_loss(const RefineNet& net, const Matrix& x, const Matrix& centroids, const Matrix& p);

std::vector<int> hard_labels(const Matrix& q);

// Power-law rank sampler: P(rank s) proportional to s^-tau over 1..n with
// tau = 1 + 1/ln(n).
class RankSampler {
 public:
  explicit RankSampler(std::size_t n);

  double tau() const noexcept { return tau_; }
  std::size_t size() const noexcept { return cumulative_.size(); }
  // 1-based rank.
  std::size_t sample(Rng& rng) const;
  double mass(std::size_t rank) const;

 private:
  double tau_;
  std::vector<double> cumulative_;
};

// Replica indices sorted by ascending fitness, ties by index.
std::vector<SupraIndex> rank_by_fitness(const PartitionState& state);

// Draws the replica at a power-law rank of the ascending fitness order.
SupraIndex sample_low_fitness(const PartitionState& state, Rng& rng);

struct RefineConfig {
  int clusters = 2;                // K
  double boost = 0.25;             // c added to q of the chosen community
  int moves_per_iter = -1;         // -1: max(1, 1% of replicas)
  int max_outer_iters = 100;
  double tol = 0.001;              // stop when fewer replicas change label
  double lr = 1e-3;                // KL stage
  int inner_epochs = 1;
  int batch_size = 256;
  PretrainOptions pretrain{};
  std::array<int, 3> hidden{0, 0, 0};  // zeros: default_hidden_widths(d)
  ModularityParams modularity{};
  int kmeans_restarts = 10;
  int reseed_every = 0;            // > 0: rerun k-means for centroids every n outer iterations
  std::uint64_t seed = 1;

  void validate() const;
  int resolved_moves(std::size_t replicas) const;
};

struct MoveSummary {
  int moves = 0;          // replicas that changed community
  double total_gain = 0.0;
  std::vector<double> gains;
};

// Repeats moves_per_iter times: sample a low-fitness replica, move it to the
// community with the largest Q_multi gain (staying wins ties, other ties go to
// the lowest index), then add `boost` to its q entry for that community and
// renormalize the row. Fitness is recomputed before each draw.
MoveSummary modularity_moves(PartitionState& state, Matrix& q, const RefineConfig& cfg, Rng& rng);

struct RefineResult {
  Matrix embeddings;                 // refined X-bar
  Matrix centroids;
  Assignment labels;
  Assignment initial_labels;         // k-means on the autoencoder output
  double initial_quality = 0.0;      // Q_multi of initial_labels
  double final_quality = 0.0;        // Q_multi of labels
  int outer_iterations = 0;
  std::vector<double> change_fraction;
  PretrainReport pretrain;
};

// Autoencoder pretraining, k-means initialization, then alternating
// soft assignment, modularity moves, target computation and KL minimization
// until the label change fraction drops below tol or max_outer_iters.
RefineResult refine(const Matrix& x, const SupraGraph& g, const RefineConfig& cfg);

}  // namespace mlembed
