#include "mlembed/refine.hpp"

#include "mlembed/errors.hpp"
#include "mlembed/log.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>

namespace mlembed {

RefineNet::Parameters& RefineNet::Parameters::operator+=(const Parameters& other) {
  for (int l = 0; l < kLayers; ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
  return *this;
}

std::array<int, 3> default_hidden_widths(int dim) {
  return {std::max(1, 2 * dim), std::max(1, dim / 2), std::max(1, 2 * dim)};
}

RefineNet::RefineNet(int dim, std::array<int, 3> hidden, std::uint64_t seed) : dim_(dim), hidden_(hidden) {
  if (dim < 1) throw ValidationError("refine network input dimension must be >= 1");
  for (int h : hidden) {
    if (h < 1) throw ValidationError("hidden widths must be >= 1");
  }
  const std::array<int, kLayers + 1> widths{dim, hidden[0], hidden[1], hidden[2], dim};
  Rng rng(derive_seed(seed, 0x6e6574ULL));
  for (int l = 0; l < kLayers; ++l) {
    const double bound = std::sqrt(6.0 / widths[l]);
    Matrix w(widths[l], widths[l + 1]);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = (2.0 * uniform01(rng) - 1.0) * bound;
    params_.weights[l] = std::move(w);
    params_.biases[l] = Matrix::Zero(1, widths[l + 1]);
  }
}

Matrix RefineNet::forward(const Matrix& x) const {
  Cache cache;
  return forward(x, cache);
}

Matrix RefineNet::forward(const Matrix& x, Cache& cache) const {
  if (x.cols() != dim_) throw ValidationError("input width does not match the refine network");
  cache.activations[0] = x;
  for (int l = 0; l < kLayers; ++l) {
    Matrix z = cache.activations[l] * params_.weights[l];
    z.rowwise() += params_.biases[l].row(0);
    if (l + 1 < kLayers) {
      cache.activations[l + 1] = z.cwiseMax(0.0);
      cache.preactivations[l] = std::move(z);
    } else {
      cache.activations[l + 1] = std::move(z);
    }
  }
  return cache.activations[kLayers];
}

RefineNet::Gradients RefineNet::backward(const Cache& cache, const Matrix& grad_output) const {
  Gradients grads;
  Matrix g = grad_output;
  for (int l = kLayers - 1; l >= 0; --l) {
    grads.weights[l] = cache.activations[l].transpose() * g;
    grads.biases[l] = g.colwise().sum();
    if (l > 0) {
      Matrix upstream = g * params_.weights[l].transpose();
      g = upstream.cwiseProduct((cache.preactivations[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return grads;
}

std::size_t RefineNet::num_parameters() const {
  std::size_t total = 0;
  for (int l = 0; l < kLayers; ++l) {
    total += static_cast<std::size_t>(params_.weights[l].size() + params_.biases[l].size());
  }
  return total;
}

Vector RefineNet::flatten(const Parameters& params) {
  Eigen::Index total = 0;
  for (int l = 0; l < kLayers; ++l) total += params.weights[l].size() + params.biases[l].size();
  Vector out(total);
  Eigen::Index at = 0;
  for (int l = 0; l < kLayers; ++l) {
    for (const Matrix* m : {&params.weights[l], &params.biases[l]}) {
      out.segment(at, m->size()) = Eigen::Map<const Vector>(m->data(), m->size());
      at += m->size();
    }
  }
  return out;
}

Vector RefineNet::flatten() const { return flatten(params_); }

void RefineNet::unflatten(const Vector& values) {
  if (static_cast<std::size_t>(values.size()) != num_parameters()) throw ValidationError("parameter count mismatch");
  Eigen::Index at = 0;
  for (int l = 0; l < kLayers; ++l) {
    for (Matrix* m : {&params_.weights[l], &params_.biases[l]}) {
      Eigen::Map<Vector>(m->data(), m->size()) = values.segment(at, m->size());
      at += m->size();
    }
  }
}

Adam::Adam(double lr, double beta1, double beta2, double eps) : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (!(lr > 0.0)) throw ValidationError("learning rate must be > 0");
}

void Adam::step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads) {
  if (params.size() != grads.size()) throw ValidationError("parameter/gradient count mismatch");
  if (m_.empty()) {
    for (const Matrix* p : params) {
      m_.push_back(Matrix::Zero(p->rows(), p->cols()));
      v_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& g = *grads[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    params[i]->array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

namespace {

std::vector<Matrix*> parameter_list(RefineNet& net) {
  std::vector<Matrix*> out;
  for (int l = 0; l < RefineNet::kLayers; ++l) {
    out.push_back(&net.parameters().weights[l]);
    out.push_back(&net.parameters().biases[l]);
  }
  return out;
}

std::vector<const Matrix*> gradient_list(const RefineNet::Gradients& g) {
  std::vector<const Matrix*> out;
  for (int l = 0; l < RefineNet::kLayers; ++l) {
    out.push_back(&g.weights[l]);
    out.push_back(&g.biases[l]);
  }
  return out;
}

Matrix gather_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t j = 0; j < rows.size(); ++j) out.row(static_cast<Eigen::Index>(j)) = x.row(static_cast<Eigen::Index>(rows[j]));
  return out;
}

bool all_finite(const RefineNet& net) {
  for (int l = 0; l < RefineNet::kLayers; ++l) {
    if (!net.parameters().weights[l].allFinite() || !net.parameters().biases[l].allFinite()) return false;
  }
  return true;
}

void scale(RefineNet::Gradients& g, double factor) {
  for (int l = 0; l < RefineNet::kLayers; ++l) {
    g.weights[l] *= factor;
    g.biases[l] *= factor;
  }
}

}  // namespace

double autoencoder_loss(const RefineNet& net, const Matrix& x) {
  if (x.rows() == 0) throw ValidationError("empty input");
  return (net.forward(x) - x).squaredNorm() / static_cast<double>(x.rows());
}

RefineNet::Gradients autoencoder_gradients(const RefineNet& net, const Matrix& x, double* loss) {
  if (x.rows() == 0) throw ValidationError("empty input");
  RefineNet::Cache cache;
  const Matrix residual = net.forward(x, cache) - x;
  if (loss) *loss = residual.squaredNorm() / static_cast<double>(x.rows());
  return net.backward(cache, residual * (2.0 / static_cast<double>(x.rows())));
}

PretrainReport pretrain_autoencoder(RefineNet& net, const Matrix& x, const PretrainOptions& options) {
  if (x.rows() == 0) throw ValidationError("cannot pretrain on an empty embedding table");
  if (options.batch_size < 1) throw ValidationError("batch size must be >= 1");
  PretrainReport report;
  report.initial_loss = autoencoder_loss(net, x);
  report.final_loss = report.initial_loss;
  if (options.epochs <= 0) return report;

  Adam adam(options.lr);
  Rng rng(derive_seed(options.seed, 0x61757465ULL));
  std::vector<std::size_t> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(options.batch_size);
  const auto params = parameter_list(net);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const auto rows = std::span<const std::size_t>(order).subspan(start, std::min(batch, order.size() - start));
      const auto grads = autoencoder_gradients(net, gather_rows(x, rows));
      adam.step(params, gradient_list(grads));
    }
    const double loss = autoencoder_loss(net, x);
    if (!std::isfinite(loss) || !all_finite(net)) {
      throw NumericError("autoencoder pretraining diverged at epoch " + std::to_string(epoch + 1));
    }
    report.epoch_loss.push_back(loss);
  }
  report.final_loss = report.epoch_loss.back();
  logger()->info("autoencoder reconstruction loss {:.6g} -> {:.6g}", report.initial_loss, report.final_loss);
  return report;
}

Matrix soft_assign(const Matrix& xbar, const Matrix& centroids) {
  if (centroids.rows() < 1) throw ValidationError("soft assignment needs at least one centroid");
  if (centroids.cols() != xbar.cols()) throw ValidationError("centroid width does not match embeddings");
  Matrix q(xbar.rows(), centroids.rows());
  for (Eigen::Index i = 0; i < xbar.rows(); ++i) {
    for (Eigen::Index k = 0; k < centroids.rows(); ++k) {
      q(i, k) = 1.0 / (1.0 + (xbar.row(i) - centroids.row(k)).squaredNorm());
    }
    q.row(i) /= q.row(i).sum();
  }
  return q;
}

Matrix target_distribution(const Matrix& q) {
  const RowVector f = q.colwise().sum();
  Matrix p(q.rows(), q.cols());
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    for (Eigen::Index k = 0; k < q.cols(); ++k) p(i, k) = f(k) > 0.0 ? q(i, k) * q(i, k) / f(k) : 0.0;
    const double total = p.row(i).sum();
    if (!(total > 0.0)) throw NumericError("target distribution row has no mass");
    p.row(i) /= total;
  }
  return p;
}

double kl_divergence(const Matrix& p, const Matrix& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) throw ValidationError("KL operands differ in shape");
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index k = 0; k < p.cols(); ++k) {
      if (p(i, k) > 0.0) total += p(i, k) * std::log(p(i, k) / q(i, k));
    }
  }
  return total;
}

KlGradients kl_loss(const RefineNet& net, const Matrix& x, const Matrix& centroids, const Matrix& p) {
  RefineNet::Cache cache;
  const Matrix z = net.forward(x, cache);
  const Eigen::Index n = z.rows();
  const Eigen::Index k = centroids.rows();
  if (p.rows() != n || p.cols() != k) throw ValidationError("target distribution shape mismatch");

  Matrix kernel(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < k; ++c) kernel(i, c) = 1.0 / (1.0 + (z.row(i) - centroids.row(c)).squaredNorm());
  }
  Matrix q = kernel;
  for (Eigen::Index i = 0; i < n; ++i) q.row(i) /= q.row(i).sum();

  // For alpha = 1: dL/dz_i = 2 sum_k a_ik (z_i - mu_k) with a = (p - q) .* kernel.
  const Matrix a = (p - q).cwiseProduct(kernel);
  const Vector row_sum = a.rowwise().sum();
  const RowVector col_sum = a.colwise().sum();
  const Matrix grad_z = 2.0 * (row_sum.asDiagonal() * z - a * centroids);

  KlGradients out;
  out.loss = kl_divergence(p, q);
  out.centroids = -2.0 * (a.transpose() * z - col_sum.transpose().asDiagonal() * centroids);
  out.net = net.backward(cache, grad_z);
  return out;
}

std::vector<int> hard_labels(const Matrix& q) {
  std::vector<int> labels(static_cast<std::size_t>(q.rows()));
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    Eigen::Index arg = 0;
    q.row(i).maxCoeff(&arg);
    labels[i] = static_cast<int>(arg);
  }
  return labels;
}

RankSampler::RankSampler(std::size_t n) {
  if (n < 2) throw ValidationError("rank sampling needs at least 2 replicas");
  tau_ = 1.0 + 1.0 / std::log(static_cast<double>(n));
  cumulative_.resize(n);
  double total = 0.0;
  for (std::size_t s = 1; s <= n; ++s) {
    total += std::pow(static_cast<double>(s), -tau_);
    cumulative_[s - 1] = total;
  }
  for (double& c : cumulative_) c /= total;
  cumulative_.back() = 1.0;
}

std::size_t RankSampler::sample(Rng& rng) const {
  const double u = uniform01(rng);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1) + 1;
}

double RankSampler::mass(std::size_t rank) const {
  if (rank < 1 || rank > cumulative_.size()) throw ValidationError("rank out of range");
  return rank == 1 ? cumulative_[0] : cumulative_[rank - 1] - cumulative_[rank - 2];
}

std::vector<SupraIndex> rank_by_fitness(const PartitionState& state) {
  const auto fitness = state.all_fitness();
  std::vector<SupraIndex> order(fitness.size());
  std::iota(order.begin(), order.end(), SupraIndex{0});
  std::stable_sort(order.begin(), order.end(), [&](SupraIndex a, SupraIndex b) { return fitness[a] < fitness[b]; });
  return order;
}

SupraIndex sample_low_fitness(const PartitionState& state, Rng& rng) {
  const RankSampler sampler(state.assignment().size());
  return rank_by_fitness(state)[sampler.sample(rng) - 1];
}

void RefineConfig::validate() const {
  if (clusters < 2) throw ValidationError("refinement needs K >= 2 clusters");
  if (!(boost > 0.0)) throw ValidationError("boost must be > 0");
  if (!(tol > 0.0 && tol < 1.0)) throw ValidationError("assignment change tolerance must lie in (0, 1)");
  if (max_outer_iters < 0) throw ValidationError("max_outer_iters must be >= 0");
  if (moves_per_iter < -1) throw ValidationError("moves_per_iter must be >= 0 (or -1 for the default)");
  if (!(lr > 0.0)) throw ValidationError("learning rate must be > 0");
  if (inner_epochs < 0) throw ValidationError("inner_epochs must be >= 0");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
}

int RefineConfig::resolved_moves(std::size_t replicas) const {
  if (moves_per_iter >= 0) return moves_per_iter;
  return std::max(1, static_cast<int>(replicas / 100));
}

MoveSummary modularity_moves(PartitionState& state, Matrix& q, const RefineConfig& cfg, Rng& rng) {
  MoveSummary summary;
  const std::size_t n = state.assignment().size();
  if (q.rows() != static_cast<Eigen::Index>(n) || q.cols() != state.num_communities()) {
    throw ValidationError("soft assignment shape does not match the partition");
  }
  const int moves = cfg.resolved_moves(n);
  if (moves == 0) return summary;
  const RankSampler sampler(n);
  for (int m = 0; m < moves; ++m) {
    const auto order = rank_by_fitness(state);
    const SupraIndex v = order[sampler.sample(rng) - 1];
    const int current = state.community(v);
    int best = current;
    double best_gain = 0.0;
    for (int c = 0; c < state.num_communities(); ++c) {
      if (c == current) continue;
      const double gain = state.gain_of_move(v, c);
      if (gain > best_gain) {
        best_gain = gain;
        best = c;
      }
    }
    if (best != current) {
      state.move(v, best);
      ++summary.moves;
    }
    summary.total_gain += best_gain;
    summary.gains.push_back(best_gain);
    q(v, best) += cfg.boost;
    q.row(v) /= q.row(v).sum();
  }
  return summary;
}

RefineResult refine(const Matrix& x, const SupraGraph& g, const RefineConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(x.rows()) != g.num_nodes()) {
    throw ValidationError("embedding rows do not match the supra graph");
  }
  const int k = cfg.clusters;
  const auto hidden = cfg.hidden[0] > 0 ? cfg.hidden : default_hidden_widths(static_cast<int>(x.cols()));

  RefineResult result;
  RefineNet net(static_cast<int>(x.cols()), hidden, cfg.seed);
  PretrainOptions pretrain = cfg.pretrain;
  pretrain.seed = derive_seed(cfg.seed, 1);
  result.pretrain = pretrain_autoencoder(net, x, pretrain);

  result.embeddings = net.forward(x);
  auto km = kmeans(result.embeddings, k, derive_seed(cfg.seed, 2), {300, cfg.kmeans_restarts});
  Matrix centroids = std::move(km.centroids);
  result.initial_labels = km.labels;
  result.labels = km.labels;
  result.initial_quality = PartitionState(g, result.initial_labels, k, cfg.modularity).quality();

  Adam adam(cfg.lr);
  auto params = parameter_list(net);
  params.push_back(&centroids);
  Rng move_rng(derive_seed(cfg.seed, 3));
  Rng batch_rng(derive_seed(cfg.seed, 4));
  std::vector<std::size_t> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int iter = 0; iter < cfg.max_outer_iters; ++iter) {
    Matrix q = soft_assign(result.embeddings, centroids);
    PartitionState state(g, hard_labels(q), k, cfg.modularity);
    const auto moved = modularity_moves(state, q, cfg, move_rng);
    const Matrix p = target_distribution(q);

    double kl = 0.0;
    for (int epoch = 0; epoch < cfg.inner_epochs; ++epoch) {
      shuffle(order.begin(), order.end(), batch_rng);
      for (std::size_t start = 0; start < order.size(); start += batch) {
        const auto rows = std::span<const std::size_t>(order).subspan(start, std::min(batch, order.size() - start));
        auto grads = kl_loss(net, gather_rows(x, rows), centroids, gather_rows(p, rows));
        const double inv = 1.0 / static_cast<double>(rows.size());
        scale(grads.net, inv);
        grads.centroids *= inv;
        kl += grads.loss;
        auto grad_list = gradient_list(grads.net);
        grad_list.push_back(&grads.centroids);
        adam.step(params, grad_list);
      }
    }
    if (!all_finite(net) || !centroids.allFinite()) {
      throw NumericError("refinement diverged at outer iteration " + std::to_string(iter + 1));
    }

    result.embeddings = net.forward(x);
    if (cfg.reseed_every > 0 && (iter + 1) % cfg.reseed_every == 0) {
      centroids = kmeans(result.embeddings, k, derive_seed(cfg.seed, 5, static_cast<std::uint64_t>(iter)),
                         {300, cfg.kmeans_restarts})
                      .centroids;
    }
    auto labels = hard_labels(soft_assign(result.embeddings, centroids));
    std::size_t changed = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) changed += labels[i] != result.labels[i];
    const double fraction = static_cast<double>(changed) / static_cast<double>(labels.size());
    result.change_fraction.push_back(fraction);
    result.labels = std::move(labels);
    result.outer_iterations = iter + 1;
    logger()->info("refine iteration {}: {} moves (gain {:.4g}), KL {:.6g}, label change {:.4f}", iter + 1,
                   moved.moves, moved.total_gain, kl, fraction);
    if (fraction < cfg.tol) break;
  }

  result.centroids = std::move(centroids);
  result.final_quality = PartitionState(g, result.labels, k, cfg.modularity).quality();
  return result;
}

}  // namespace mlembed
