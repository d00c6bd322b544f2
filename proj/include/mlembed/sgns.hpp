#pragma once

#include "mlembed/matrix.hpp"
#include "mlembed/random.hpp"
#include "mlembed/walks.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace mlembed {

struct SgnsConfig {
  int dim = 128;
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  double lr_initial = 0.025;
  double lr_final = 0.0001;
  double noise_exponent = 0.75;
  std::uint64_t seed = 1;
  // 1 = deterministic single-threaded training. More threads shard walks
  // across workers with unsynchronized row updates; runs are then not
  // reproducible bit for bit.
  unsigned threads = 1;

  void validate() const;
};

// Input vectors are the published embeddings; output (context) vectors are
// internal to training. Row i belongs to supra index i.
struct EmbeddingTable {
  Matrix input;
  Matrix output;
};

// Input rows uniform in [-0.5/d, 0.5/d], output rows zero.
EmbeddingTable init_embeddings(std::size_t rows, int dim, std::uint64_t seed);

// Negative-sampling noise: P(v) proportional to freq(v)^exponent.
class NoiseDistribution {
 public:
  NoiseDistribution(std::span<const std::uint64_t> frequency, double exponent);

  SupraIndex sample(Rng& rng) const;
  double probability(SupraIndex v) const;
  std::size_t size() const noexcept { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
};

using ContextPair = std::pair<SupraIndex, SupraIndex>;  // (center, context)

// Calls fn(center, context) for every position t and offset 0 < |j| <= window.
void for_each_pair(std::span<const SupraIndex> walk, int window,
                   const std::function<void(SupraIndex, SupraIndex)>& fn);
std::vector<ContextPair> extract_pairs(const WalkCorpus& corpus, int window);

// Loss -log s(u_ctx . v) - sum_n log s(-u_n . v) for one (center, context)
// pair and its negatives, with gradients for every touched row. Repeated
// negative rows accumulate.
struct SgnsGradient {
  double loss = 0.0;
  Vector center;                  // d loss / d input[center]
  std::vector<SupraIndex> rows;   // output rows: context first, then negatives
  std::vector<Vector> output;     // d loss / d output[rows[k]]
};

double sgns_loss(const EmbeddingTable& table, SupraIndex center, SupraIndex context,
                 std::span<const SupraIndex> negatives);
SgnsGradient sgns_gradient(const EmbeddingTable& table, SupraIndex center, SupraIndex context,
                           std::span<const SupraIndex> negatives);

// One SGD step of size lr on the pair loss; returns the loss before the step.
// Throws NumericError if any touched row becomes non-finite.
double sgns_step(EmbeddingTable& table, SupraIndex center, SupraIndex context,
                 std::span<const SupraIndex> negatives, double lr);

struct TrainReport {
  std::vector<double> epoch_loss;  // mean pair loss per epoch
  std::size_t pairs_per_epoch = 0;
};

// Skip-gram with negative sampling over the corpus. Each epoch visits the
// walks in a freshly shuffled order; lr decays linearly from lr_initial to
// lr_final over all pairs of all epochs.
EmbeddingTable train(const SupraGraph& g, const WalkCorpus& corpus, const SgnsConfig& cfg,
                     TrainReport* report = nullptr);

// Embedding file: header `rows dim`, then `node@layer v1 ... vd` per row.
void write_embeddings(std::ostream& out, const Matrix& vectors, const MultilayerNetwork& net);
void save_embeddings(const std::string& path, const Matrix& vectors, const MultilayerNetwork& net);
// Rows are placed by supra index; every replica of `net` must be present.
Matrix read_embeddings(std::istream& in, const MultilayerNetwork& net, const std::string& source = "<stream>");
Matrix load_embeddings(const std::string& path, const MultilayerNetwork& net);

// Shortest round-trip decimal form, independent of the C locale.
std::string format_double(double value);

}  // namespace mlembed
