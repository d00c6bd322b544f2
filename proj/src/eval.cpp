#include "mlembed/eval.hpp"

#include "mlembed/errors.hpp"
#include "mlembed/kmeans.hpp"
#include "mlembed/log.hpp"
#include "mlembed/sgns.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <string>

namespace mlembed {

Matrix aggregate_node_vectors(const Matrix& replicas, const MultilayerNetwork& net, Aggregation mode) {
  if (static_cast<std::size_t>(replicas.rows()) != net.num_supra()) {
    throw ValidationError("embedding rows do not match the replica count");
  }
  const Eigen::Index d = replicas.cols();
  if (mode == Aggregation::Concat) {
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(net.num_nodes()), d * static_cast<Eigen::Index>(net.num_layers()));
    for (SupraIndex v = 0; v < net.num_supra(); ++v) {
      const auto sv = net.supra_node(v);
      out.block(sv.node, static_cast<Eigen::Index>(sv.layer) * d, 1, d) = replicas.row(v);
    }
    return out;
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(net.num_nodes()), d);
  std::vector<int> count(net.num_nodes(), 0);
  for (SupraIndex v = 0; v < net.num_supra(); ++v) {
    const auto node = net.supra_node(v).node;
    out.row(node) += replicas.row(v);
    ++count[node];
  }
  for (std::size_t i = 0; i < count.size(); ++i) {
    if (count[i] == 0) throw ValidationError("node " + net.node_token(static_cast<NodeId>(i)) + " has no replica");
    out.row(static_cast<Eigen::Index>(i)) /= count[i];
  }
  return out;
}

namespace {

Matrix softmax_rows(Matrix logits) {
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    logits.row(i).array() -= logits.row(i).maxCoeff();
    logits.row(i) = logits.row(i).array().exp().matrix();
    logits.row(i) /= logits.row(i).sum();
  }
  return logits;
}

Matrix select_rows(const Matrix& x, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t j = 0; j < rows.size(); ++j) out.row(static_cast<Eigen::Index>(j)) = x.row(rows[j]);
  return out;
}

}  // namespace

void LogisticRegression::fit(const Matrix& x, std::span<const int> y, int num_classes) {
  const Eigen::Index n = x.rows();
  if (n == 0 || static_cast<std::size_t>(n) != y.size()) throw ValidationError("training data shape mismatch");
  if (num_classes < 2) throw ValidationError("classification needs at least 2 classes");
  for (int c : y) {
    if (c < 0 || c >= num_classes) throw ValidationError("class label out of range");
  }

  mean_ = x.colwise().mean();
  scale_ = ((x.rowwise() - mean_).cwiseAbs2().colwise().sum() / static_cast<double>(n)).cwiseSqrt();
  for (Eigen::Index j = 0; j < scale_.size(); ++j) {
    if (!(scale_(j) > 1e-12)) scale_(j) = 1.0;
  }
  const Matrix z = (x.rowwise() - mean_).array().rowwise() / scale_.array();
  Matrix onehot = Matrix::Zero(n, num_classes);
  for (Eigen::Index i = 0; i < n; ++i) onehot(i, y[i]) = 1.0;

  weights_ = Matrix::Zero(x.cols(), num_classes);
  bias_ = RowVector::Zero(num_classes);
  const double inv_n = 1.0 / static_cast<double>(n);
  auto objective_at = [&](const Matrix& w, const RowVector& b) {
    Matrix logits = z * w;
    logits.rowwise() += b;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double top = logits.row(i).maxCoeff();
      loss += top + std::log((logits.row(i).array() - top).exp().sum()) - logits(i, y[i]);
    }
    return loss * inv_n + 0.5 * options_.l2 * w.squaredNorm();
  };

  double step = 1.0;
  double f = objective_at(weights_, bias_);
  iterations_ = 0;
  for (int iter = 0; iter < options_.max_iters; ++iter) {
    Matrix logits = z * weights_;
    logits.rowwise() += bias_;
    const Matrix residual = softmax_rows(std::move(logits)) - onehot;
    const Matrix gw = z.transpose() * residual * inv_n + options_.l2 * weights_;
    const RowVector gb = residual.colwise().sum() * inv_n;
    const double gnorm2 = gw.squaredNorm() + gb.squaredNorm();
    iterations_ = iter + 1;
    if (std::sqrt(gnorm2) < options_.tol) break;

    step = std::min(step * 2.0, 1e4);
    bool accepted = false;
    while (step > 1e-12) {
      Matrix w = weights_ - step * gw;
      RowVector b = bias_ - step * gb;
      const double f_new = objective_at(w, b);
      if (f_new <= f - 0.5 * step * gnorm2) {
        weights_ = std::move(w);
        bias_ = std::move(b);
        f = f_new;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  if (!weights_.allFinite()) throw NumericError("logistic regression diverged");
}

Matrix LogisticRegression::predict_proba(const Matrix& x) const {
  if (weights_.size() == 0) throw ValidationError("classifier is not fitted");
  Matrix logits = (((x.rowwise() - mean_).array().rowwise() / scale_.array()).matrix()) * weights_;
  logits.rowwise() += bias_;
  return softmax_rows(std::move(logits));
}

std::vector<int> LogisticRegression::predict(const Matrix& x) const {
  return hard_labels(predict_proba(x));
}

double LogisticRegression::objective(const Matrix& x, std::span<const int> y) const {
  const Matrix p = predict_proba(x);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) loss -= std::log(p(i, y[i]));
  return loss / static_cast<double>(p.rows()) + 0.5 * options_.l2 * weights_.squaredNorm();
}

std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed) {
  if (folds < 2) throw ValidationError("need at least 2 folds");
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  std::vector<int> fold(labels.size(), -1);
  Rng rng(derive_seed(seed, 0x666f6c64ULL));
  int offset = 0;
  for (auto& [cls, items] : members) {
    shuffle(items.begin(), items.end(), rng);
    // Continue dealing where the previous class stopped so fold sizes stay balanced.
    for (std::size_t j = 0; j < items.size(); ++j) fold[items[j]] = static_cast<int>((offset + j) % folds);
    offset = static_cast<int>((offset + items.size()) % folds);
  }
  return fold;
}

ClassificationResult node_classification_eval(const Matrix& reps, const LabelTable& labels, int folds,
                                              std::uint64_t seed) {
  if (static_cast<std::size_t>(reps.rows()) != labels.labels.size()) {
    throw ValidationError("representation rows do not match the node count");
  }
  std::vector<Eigen::Index> nodes;
  std::vector<int> y;
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    if (labels.labels[i] >= 0) {
      nodes.push_back(static_cast<Eigen::Index>(i));
      y.push_back(labels.labels[i]);
    }
  }
  const int classes = static_cast<int>(labels.num_classes());
  std::vector<int> per_class(static_cast<std::size_t>(classes), 0);
  for (int c : y) ++per_class[c];
  for (int c = 0; c < classes; ++c) {
    if (per_class[c] < folds) {
      throw ValidationError("class " + labels.class_tokens[c] + " has fewer labeled nodes than folds");
    }
  }

  const auto fold = stratified_folds(y, folds, seed);
  ClassificationResult result;
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train_rows, test_rows;
    std::vector<int> train_y, test_y;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      (fold[j] == f ? train_rows : test_rows).push_back(nodes[j]);
      (fold[j] == f ? train_y : test_y).push_back(y[j]);
    }
    std::set<int> seen(train_y.begin(), train_y.end());
    if (static_cast<int>(seen.size()) != classes) {
      throw ValidationError("fold " + std::to_string(f) + " is missing a class in its training part");
    }
    LogisticRegression model;
    model.fit(select_rows(reps, train_rows), train_y, classes);
    const auto predicted = model.predict(select_rows(reps, test_rows));
    std::size_t correct = 0;
    for (std::size_t j = 0; j < predicted.size(); ++j) correct += predicted[j] == test_y[j];
    result.accuracy.push_back(100.0 * static_cast<double>(correct) / static_cast<double>(predicted.size()));
  }
  result.mean = std::accumulate(result.accuracy.begin(), result.accuracy.end(), 0.0) / folds;
  return result;
}

double auroc(std::span<const double> positive, std::span<const double> negative) {
  if (positive.empty() || negative.empty()) throw ValidationError("AUROC needs positives and negatives");
  struct Scored {
    double score;
    bool positive;
  };
  std::vector<Scored> all;
  all.reserve(positive.size() + negative.size());
  for (double s : positive) all.push_back({s, true});
  for (double s : negative) all.push_back({s, false});
  for (const auto& s : all) {
    if (std::isnan(s.score)) throw NumericError("NaN score");
  }
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) { return a.score < b.score; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    for (std::size_t t = i; t < j; ++t) {
      if (all[t].positive) rank_sum += rank;
    }
    i = j;
  }
  const auto np = static_cast<double>(positive.size());
  const auto nn = static_cast<double>(negative.size());
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double cosine_similarity(const RowVector& a, const RowVector& b) {
  const double denom = a.norm() * b.norm();
  return denom > 0.0 ? a.dot(b) / denom : 0.0;
}

std::vector<std::vector<int>> edge_folds(const MultilayerNetwork& net, int folds, std::uint64_t seed) {
  if (folds < 2) throw ValidationError("need at least 2 folds");
  std::vector<std::vector<int>> out(net.num_layers());
  for (LayerId l = 0; l < net.num_layers(); ++l) {
    const std::size_t m = net.layer(l).num_edges();
    if (m < static_cast<std::size_t>(folds)) {
      throw ValidationError("layer " + net.layer_token(l) + " has fewer edges than folds");
    }
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0x65646765ULL, l));
    shuffle(perm.begin(), perm.end(), rng);
    out[l].resize(m);
    for (std::size_t i = 0; i < m; ++i) out[l][perm[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
  }
  return out;
}

MultilayerNetwork remove_fold(const MultilayerNetwork& net, const std::vector<std::vector<int>>& folds, int fold) {
  if (folds.size() != net.num_layers()) throw ValidationError("fold table does not match the layers");
  NetworkBuilder builder(net.num_nodes(), net.num_layers());
  for (LayerId l = 0; l < net.num_layers(); ++l) {
    const auto& layer = net.layer(l);
    for (NodeId v : layer.nodes()) builder.add_node(l, v);
    const auto edges = layer.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (folds[l][e] != fold) builder.add_edge(l, edges[e].first, edges[e].second);
    }
  }
  builder.set_node_tokens({net.node_tokens().begin(), net.node_tokens().end()});
  builder.set_layer_tokens({net.layer_tokens().begin(), net.layer_tokens().end()});
  return std::move(builder).build();
}

std::vector<std::pair<NodeId, NodeId>> sample_non_edges(const Layer& layer, std::size_t count, Rng& rng) {
  const auto nodes = layer.nodes();
  const std::size_t n = nodes.size();
  const std::size_t absent = n * (n - 1) / 2 - layer.num_edges();
  if (count > absent) throw ValidationError("layer has too few non-edges for the requested negatives");
  auto adjacent = [&](NodeId u, NodeId v) {
    const auto nb = layer.neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
  };
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(count);
  if (absent <= 4 * count) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!adjacent(nodes[i], nodes[j])) out.emplace_back(nodes[i], nodes[j]);
      }
    }
    shuffle(out.begin(), out.end(), rng);
    out.resize(count);
    return out;
  }
  std::set<std::pair<NodeId, NodeId>> taken;
  while (out.size() < count) {
    auto a = nodes[uniform_index(rng, n)];
    auto b = nodes[uniform_index(rng, n)];
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (adjacent(a, b) || !taken.emplace(a, b).second) continue;
    out.emplace_back(a, b);
  }
  return out;
}

LinkPredictionResult link_prediction_eval(const MultilayerNetwork& net, const EmbedConfig& embed,
                                          const LinkPredictionOptions& options) {
  embed.validate();
  const auto folds = edge_folds(net, options.folds, options.seed);
  LinkPredictionResult result;
  result.auroc.assign(net.num_layers(), {});
  for (int f = 0; f < options.folds; ++f) {
    const auto out = embed_network(remove_fold(net, folds, f), embed);
    const auto& partial = out.supra.base();
    const Matrix nodes = aggregate_node_vectors(out.embeddings, partial);
    for (LayerId l = 0; l < net.num_layers(); ++l) {
      auto vector_of = [&](NodeId v) -> RowVector {
        if (partial.layer(l).degree(v) == 0) return nodes.row(v);
        return out.embeddings.row(partial.index_of({v, l}));
      };
      auto score = [&](NodeId u, NodeId v) { return cosine_similarity(vector_of(u), vector_of(v)); };
      std::vector<double> pos, neg;
      const auto edges = net.layer(l).edges();
      for (std::size_t e = 0; e < edges.size(); ++e) {
        if (folds[l][e] == f) pos.push_back(score(edges[e].first, edges[e].second));
      }
      Rng rng(derive_seed(options.seed, 0x6e6567ULL, static_cast<std::uint64_t>(l) * 1000003ULL + f));
      for (const auto& [u, v] : sample_non_edges(net.layer(l), pos.size(), rng)) neg.push_back(score(u, v));
      const double value = auroc(pos, neg);
      logger()->info("link prediction fold {} layer {}: AUROC {:.4f}", f, net.layer_token(l), value);
      result.auroc[l].push_back(value);
    }
  }
  double total = 0.0;
  for (const auto& per_fold : result.auroc) {
    result.layer_mean.push_back(std::accumulate(per_fold.begin(), per_fold.end(), 0.0) / options.folds);
    total += result.layer_mean.back();
  }
  result.mean = total / static_cast<double>(net.num_layers());
  return result;
}

std::vector<SweepPoint> community_detection_eval(const Matrix& replicas, const SupraGraph& g,
                                                 std::span<const int> k_values, const ModularityParams& params,
                                                 std::uint64_t seed, int restarts) {
  if (static_cast<std::size_t>(replicas.rows()) != g.num_nodes()) {
    throw ValidationError("embedding rows do not match the supra graph");
  }
  std::vector<SweepPoint> out;
  for (int k : k_values) {
    try {
      const auto km = kmeans(replicas, k, derive_seed(seed, 0x6364ULL, static_cast<std::uint64_t>(k)), {300, restarts});
      out.push_back({k, PartitionState(g, km.labels, k, params).quality()});
    } catch (const ValidationError& e) {
      logger()->warn("skipping K = {}: {}", k, e.what());
    }
  }
  return out;
}

void SbmSpec::validate() const {
  if (layers < 1) throw ValidationError("SBM needs at least one layer");
  if (blocks < 1 || nodes < static_cast<std::size_t>(blocks)) throw ValidationError("SBM needs 1 <= blocks <= nodes");
  if (!(p_out >= 0.0 && p_out <= p_in && p_in <= 1.0)) throw ValidationError("SBM needs 0 <= p_out <= p_in <= 1");
  if (!shared.empty() && shared.size() != layers) throw ValidationError("shared flags must cover every layer");
}

SbmSample generate_sbm(const SbmSpec& spec) {
  spec.validate();
  const std::size_t n = spec.nodes;
  std::vector<int> base(n);
  for (std::size_t i = 0; i < n; ++i) base[i] = static_cast<int>(i * static_cast<std::size_t>(spec.blocks) / n);

  SbmSample sample;
  NetworkBuilder builder(n, spec.layers);
  for (LayerId l = 0; l < spec.layers; ++l) {
    Rng rng(derive_seed(spec.seed, 0x73626dULL, l));
    std::vector<int> blocks = base;
    if (!spec.shared.empty() && !spec.shared[l]) shuffle(blocks.begin(), blocks.end(), rng);
    for (NodeId u = 0; u < n; ++u) {
      builder.add_node(l, u);
      for (NodeId v = u + 1; v < n; ++v) {
        const double p = blocks[u] == blocks[v] ? spec.p_in : spec.p_out;
        if (uniform01(rng) < p) builder.add_edge(l, u, v);
      }
    }
    sample.blocks.push_back(std::move(blocks));
  }
  sample.net = std::move(builder).build();
  sample.planted.resize(sample.net.num_supra());
  for (SupraIndex v = 0; v < sample.net.num_supra(); ++v) {
    const auto sv = sample.net.supra_node(v);
    sample.planted[v] = sample.blocks[sv.layer][sv.node];
  }
  return sample;
}

double nmi(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw ValidationError("partitions cover different item counts");
  if (a.empty()) throw ValidationError("partitions are empty");
  const auto n = static_cast<double>(a.size());
  std::map<int, double> ca, cb;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
    joint[{a[i], b[i]}] += 1.0;
  }
  auto entropy = [&](const std::map<int, double>& counts) {
    double h = 0.0;
    for (const auto& [label, c] : counts) h -= (c / n) * std::log(c / n);
    return h;
  };
  const double ha = entropy(ca);
  const double hb = entropy(cb);
  if (ca.size() == 1 && cb.size() == 1) return 1.0;
  if (ca.size() == 1 || cb.size() == 1) return 0.0;
  double mi = 0.0;
  for (const auto& [key, c] : joint) mi += (c / n) * std::log(c * n / (ca[key.first] * cb[key.second]));
  return std::clamp(2.0 * mi / (ha + hb), 0.0, 1.0);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

}  // namespace

void write_results_csv(std::ostream& out, std::span<const ResultRow> rows) {
  out << "metric,dataset,key,value\n";
  for (const auto& r : rows) {
    out << csv_field(r.metric) << ',' << csv_field(r.dataset) << ',' << csv_field(r.key) << ','
        << format_double(r.value) << '\n';
  }
}

void write_results_table(std::ostream& out, std::span<const ResultRow> rows) {
  std::size_t wm = 6, wd = 7, wk = 3;
  for (const auto& r : rows) {
    wm = std::max(wm, r.metric.size());
    wd = std::max(wd, r.dataset.size());
    wk = std::max(wk, r.key.size());
  }
  out << std::left << std::setw(static_cast<int>(wm)) << "metric" << "  " << std::setw(static_cast<int>(wd))
      << "dataset" << "  " << std::setw(static_cast<int>(wk)) << "key" << "  value\n";
  for (const auto& r : rows) {
    out << std::setw(static_cast<int>(wm)) << r.metric << "  " << std::setw(static_cast<int>(wd)) << r.dataset
        << "  " << std::setw(static_cast<int>(wk)) << r.key << "  " << format_double(r.value) << '\n';
  }
}

}  // namespace mlembed
