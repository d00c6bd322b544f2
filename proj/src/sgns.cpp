#include "mlembed/sgns.hpp"

#include "mlembed/errors.hpp"
#include "mlembed/log.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>

namespace mlembed {

void SgnsConfig::validate() const {
  if (dim < 1) throw ValidationError("dim must be >= 1");
  if (window < 1) throw ValidationError("window must be >= 1");
  if (negatives < 1) throw ValidationError("negatives must be >= 1");
  if (epochs < 0) throw ValidationError("epochs must be >= 0");
  if (!(lr_final > 0.0) || !(lr_initial >= lr_final)) {
    throw ValidationError("learning rates must satisfy lr_initial >= lr_final > 0");
  }
  if (!std::isfinite(noise_exponent)) throw ValidationError("noise_exponent must be finite");
  if (threads < 1) throw ValidationError("threads must be >= 1");
}

EmbeddingTable init_embeddings(std::size_t rows, int dim, std::uint64_t seed) {
  EmbeddingTable table{Matrix(rows, dim), Matrix::Zero(rows, dim)};
  Rng rng(derive_seed(seed, 0x696e6974ULL));
  const double scale = 1.0 / dim;
  for (Eigen::Index i = 0; i < table.input.size(); ++i) {
    table.input.data()[i] = (uniform01(rng) - 0.5) * scale;
  }
  return table;
}

NoiseDistribution::NoiseDistribution(std::span<const std::uint64_t> frequency, double exponent) {
  cumulative_.resize(frequency.size());
  double total = 0.0;
  for (std::size_t i = 0; i < frequency.size(); ++i) {
    total += frequency[i] == 0 ? 0.0 : std::pow(static_cast<double>(frequency[i]), exponent);
    cumulative_[i] = total;
  }
  if (!(total > 0.0)) throw ValidationError("noise distribution has no mass");
  for (double& c : cumulative_) c /= total;
  cumulative_.back() = 1.0;
}

SupraIndex NoiseDistribution::sample(Rng& rng) const {
  const double u = uniform01(rng);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return static_cast<SupraIndex>(std::min<std::size_t>(it - cumulative_.begin(), cumulative_.size() - 1));
}

double NoiseDistribution::probability(SupraIndex v) const {
  const double hi = cumulative_.at(v);
  return v == 0 ? hi : hi - cumulative_[v - 1];
}

void for_each_pair(std::span<const SupraIndex> walk, int window,
                   const std::function<void(SupraIndex, SupraIndex)>& fn) {
  const auto n = static_cast<std::ptrdiff_t>(walk.size());
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const auto lo = std::max<std::ptrdiff_t>(0, t - window);
    const auto hi = std::min<std::ptrdiff_t>(n - 1, t + window);
    for (std::ptrdiff_t c = lo; c <= hi; ++c) {
      if (c != t) fn(walk[t], walk[c]);
    }
  }
}

std::vector<ContextPair> extract_pairs(const WalkCorpus& corpus, int window) {
  std::vector<ContextPair> pairs;
  for (std::size_t w = 0; w < corpus.num_walks(); ++w) {
    for_each_pair(corpus.walk(w), window, [&](SupraIndex a, SupraIndex b) { pairs.emplace_back(a, b); });
  }
  return pairs;
}

namespace {

// -log sigmoid(x), stable for large |x|.
double neg_log_sigmoid(double x) {
  return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Output rows touched by one step: the context (label 1) then negatives (label 0).
struct StepTargets {
  std::vector<SupraIndex> rows;
  std::vector<double> coeff;  // d loss / d (u_row . v)
};

double collect_targets(const EmbeddingTable& table, SupraIndex center, SupraIndex context,
                       std::span<const SupraIndex> negatives, StepTargets& targets) {
  const auto v = table.input.row(center);
  targets.rows.clear();
  targets.coeff.clear();
  const double pos = table.output.row(context).dot(v);
  double loss = neg_log_sigmoid(pos);
  targets.rows.push_back(context);
  targets.coeff.push_back(sigmoid(pos) - 1.0);
  for (SupraIndex n : negatives) {
    const double dot = table.output.row(n).dot(v);
    loss += neg_log_sigmoid(-dot);
    targets.rows.push_back(n);
    targets.coeff.push_back(sigmoid(dot));
  }
  return loss;
}

void check_index(const EmbeddingTable& table, SupraIndex i) {
  if (i >= table.input.rows()) throw ValidationError("embedding row " + std::to_string(i) + " out of range");
}

double step_impl(EmbeddingTable& table, SupraIndex center, SupraIndex context,
                 std::span<const SupraIndex> negatives, double lr, StepTargets& targets, RowVector& dv) {
  const double loss = collect_targets(table, center, context, negatives, targets);
  if (lr == 0.0) return loss;
  dv.setZero(table.input.cols());
  for (std::size_t k = 0; k < targets.rows.size(); ++k) {
    dv.noalias() += targets.coeff[k] * table.output.row(targets.rows[k]);
  }
  auto v = table.input.row(center);
  for (std::size_t k = 0; k < targets.rows.size(); ++k) {
    table.output.row(targets.rows[k]).noalias() -= (lr * targets.coeff[k]) * v;
  }
  v.noalias() -= lr * dv;
  if (!std::isfinite(loss) || !std::isfinite(v.squaredNorm())) {
    throw NumericError("skip-gram step produced a non-finite value at row " + std::to_string(center));
  }
  return loss;
}

}  // namespace

double sgns_loss(const EmbeddingTable& table, SupraIndex center, SupraIndex context,
                 std::span<const SupraIndex> negatives) {
  check_index(table, center);
  check_index(table, context);
  for (auto n : negatives) check_index(table, n);
  StepTargets targets;
  return collect_targets(table, center, context, negatives, targets);
}

SgnsGradient sgns_gradient(const EmbeddingTable& table, SupraIndex center, SupraIndex context,
                           std::span<const SupraIndex> negatives) {
  check_index(table, center);
  check_index(table, context);
  for (auto n : negatives) check_index(table, n);
  StepTargets targets;
  SgnsGradient grad;
  grad.loss = collect_targets(table, center, context, negatives, targets);
  grad.center = Vector::Zero(table.input.cols());
  const Vector v = table.input.row(center).transpose();
  for (std::size_t k = 0; k < targets.rows.size(); ++k) {
    grad.center += targets.coeff[k] * table.output.row(targets.rows[k]).transpose();
    auto it = std::find(grad.rows.begin(), grad.rows.end(), targets.rows[k]);
    if (it == grad.rows.end()) {
      grad.rows.push_back(targets.rows[k]);
      grad.output.push_back(targets.coeff[k] * v);
    } else {
      grad.output[static_cast<std::size_t>(it - grad.rows.begin())] += targets.coeff[k] * v;
    }
  }
  return grad;
}

double sgns_step(EmbeddingTable& table, SupraIndex center, SupraIndex context,
                 std::span<const SupraIndex> negatives, double lr) {
  check_index(table, center);
  check_index(table, context);
  for (auto n : negatives) check_index(table, n);
  if (!(lr >= 0.0)) throw ValidationError("learning rate must be >= 0");
  StepTargets targets;
  RowVector dv;
  return step_impl(table, center, context, negatives, lr, targets, dv);
}

namespace {

std::size_t count_pairs(std::size_t length, int window) {
  std::size_t total = 0;
  const auto n = static_cast<std::ptrdiff_t>(length);
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const auto lo = std::max<std::ptrdiff_t>(0, t - window);
    const auto hi = std::min<std::ptrdiff_t>(n - 1, t + window);
    total += static_cast<std::size_t>(hi - lo);
  }
  return total;
}

struct ShardResult {
  double loss = 0.0;
  std::size_t pairs = 0;
};

}  // namespace

EmbeddingTable train(const SupraGraph& g, const WalkCorpus& corpus, const SgnsConfig& cfg, TrainReport* report) {
  cfg.validate();
  const std::size_t n = g.num_nodes();
  if (corpus.vocabulary() != n) throw ValidationError("corpus vocabulary does not match the supra graph");
  if (corpus.num_walks() == 0) throw ValidationError("empty walk corpus");

  EmbeddingTable table = init_embeddings(n, cfg.dim, cfg.seed);
  const NoiseDistribution noise(corpus.frequency(), cfg.noise_exponent);

  std::size_t pairs_per_epoch = 0;
  for (std::size_t w = 0; w < corpus.num_walks(); ++w) pairs_per_epoch += count_pairs(corpus.walk(w).size(), cfg.window);
  const double total = static_cast<double>(pairs_per_epoch) * std::max(cfg.epochs, 1);
  if (report) {
    report->epoch_loss.clear();
    report->pairs_per_epoch = pairs_per_epoch;
  }

  std::vector<std::size_t> order(corpus.num_walks());
  std::atomic<std::size_t> processed{0};

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng order_rng(derive_seed(cfg.seed, 0x65706f6368ULL, static_cast<std::uint64_t>(epoch)));
    shuffle(order.begin(), order.end(), order_rng);

    auto shard = [&](std::size_t begin, std::size_t end, std::uint64_t shard_id, ShardResult& result) {
      Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch) + 1, shard_id));
      StepTargets targets;
      RowVector dv;
      std::vector<SupraIndex> negatives;
      negatives.reserve(static_cast<std::size_t>(cfg.negatives));
      for (std::size_t k = begin; k < end; ++k) {
        const auto walk = corpus.walk(order[k]);
        const auto len = static_cast<std::ptrdiff_t>(walk.size());
        for (std::ptrdiff_t t = 0; t < len; ++t) {
          const auto lo = std::max<std::ptrdiff_t>(0, t - cfg.window);
          const auto hi = std::min<std::ptrdiff_t>(len - 1, t + cfg.window);
          for (std::ptrdiff_t c = lo; c <= hi; ++c) {
            if (c == t) continue;
            const SupraIndex center = walk[t];
            const SupraIndex context = walk[c];
            negatives.clear();
            for (int s = 0; s < cfg.negatives; ++s) {
              const SupraIndex neg = noise.sample(rng);
              if (neg != context) negatives.push_back(neg);
            }
            const double progress = static_cast<double>(processed.fetch_add(1, std::memory_order_relaxed)) / total;
            const double lr = std::max(cfg.lr_final, cfg.lr_initial - (cfg.lr_initial - cfg.lr_final) * progress);
            result.loss += step_impl(table, center, context, negatives, lr, targets, dv);
            ++result.pairs;
          }
        }
      }
    };

    const unsigned workers = std::min<std::size_t>(cfg.threads, order.size());
    std::vector<ShardResult> results(std::max(workers, 1u));
    if (workers <= 1) {
      shard(0, order.size(), 0, results[0]);
    } else {
      std::vector<std::jthread> pool;
      const std::size_t chunk = (order.size() + workers - 1) / workers;
      for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(order.size(), begin + chunk);
        if (begin < end) pool.emplace_back(shard, begin, end, w, std::ref(results[w]));
      }
    }
    ShardResult sum;
    for (const auto& r : results) {
      sum.loss += r.loss;
      sum.pairs += r.pairs;
    }
    const double mean = sum.pairs ? sum.loss / static_cast<double>(sum.pairs) : 0.0;
    logger()->info("skip-gram epoch {}: mean pair loss {:.6f}", epoch + 1, mean);
    if (report) report->epoch_loss.push_back(mean);
  }
  return table;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw NumericError("cannot format value");
  return std::string(buf, ptr);
}

void write_embeddings(std::ostream& out, const Matrix& vectors, const MultilayerNetwork& net) {
  if (static_cast<std::size_t>(vectors.rows()) != net.num_supra()) {
    throw ValidationError("embedding rows do not match the number of replicas");
  }
  out << vectors.rows() << ' ' << vectors.cols() << '\n';
  for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
    out << net.supra_token(static_cast<SupraIndex>(i));
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) out << ' ' << format_double(vectors(i, j));
    out << '\n';
  }
}

void save_embeddings(const std::string& path, const Matrix& vectors, const MultilayerNetwork& net) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write `" + path + "`");
  write_embeddings(out, vectors, net);
  if (!out) throw IoError("write failed for `" + path + "`");
}

Matrix read_embeddings(std::istream& in, const MultilayerNetwork& net, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  long long rows = -1;
  long long dim = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream header(line);
    if (!(header >> rows >> dim) || rows < 0 || dim < 1) throw ParseError(source, line_no, "expected `rows dim` header");
    break;
  }
  if (dim < 1) throw ParseError(source, line_no, "missing header");
  if (static_cast<std::size_t>(rows) != net.num_supra()) {
    throw ValidationError(source + ": " + std::to_string(rows) + " vectors for " +
                          std::to_string(net.num_supra()) + " replicas");
  }

  std::unordered_map<std::string, LayerId> layer_index;
  for (LayerId l = 0; l < net.num_layers(); ++l) layer_index.emplace(net.layer_token(l), l);

  Matrix out(rows, dim);
  std::vector<char> seen(static_cast<std::size_t>(rows), 0);
  long long read = 0;
  while (read < rows && std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    const auto at = token.rfind('@');
    if (at == std::string::npos) throw ParseError(source, line_no, "expected `node@layer` token");
    const auto node = net.find_node_token(token.substr(0, at));
    const auto layer = layer_index.find(token.substr(at + 1));
    if (!node || layer == layer_index.end()) throw ParseError(source, line_no, "unknown replica `" + token + "`");
    const auto idx = net.find({*node, layer->second});
    if (!idx) throw ParseError(source, line_no, "unknown replica `" + token + "`");
    if (seen[*idx]) throw ParseError(source, line_no, "duplicate replica `" + token + "`");
    seen[*idx] = 1;
    for (long long j = 0; j < dim; ++j) {
      std::string value;
      if (!(fields >> value)) throw ParseError(source, line_no, "too few components");
      double x = 0.0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), x);
      if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ParseError(source, line_no, "malformed component `" + value + "`");
      }
      out(*idx, j) = x;
    }
    std::string extra;
    if (fields >> extra) throw ParseError(source, line_no, "too many components");
    ++read;
  }
  if (read != rows) throw ParseError(source, line_no, "file ends before all vectors were read");
  return out;
}

Matrix load_embeddings(const std::string& path, const MultilayerNetwork& net) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file `" + path + "`");
  return read_embeddings(in, net, path);
}

}  // namespace mlembed
