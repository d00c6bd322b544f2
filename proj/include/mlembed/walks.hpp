#pragma once

#include "mlembed/supra.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace mlembed {

struct WalkConfig {
  std::uint32_t walks_per_node = 10;
  std::uint32_t walk_length = 40;  // maximum number of tokens per walk
  std::uint64_t seed = 1;
  unsigned threads = 1;

  void validate() const;
};

// Truncated random walks stored back to back.
class WalkCorpus {
 public:
  WalkCorpus() = default;
  explicit WalkCorpus(std::size_t vocabulary) : frequency_(vocabulary, 0) {}

  void add_walk(std::span<const SupraIndex> walk);

  std::size_t num_walks() const noexcept { return offsets_.size() - 1; }
  std::size_t num_tokens() const noexcept { return tokens_.size(); }
  std::span<const SupraIndex> walk(std::size_t i) const;
  std::span<const std::uint64_t> frequency() const noexcept { return frequency_; }
  std::size_t vocabulary() const noexcept { return frequency_.size(); }

  friend bool operator==(const WalkCorpus&, const WalkCorpus&) = default;

 private:
  std::vector<SupraIndex> tokens_;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::uint64_t> frequency_;
};

// Uniform walks over the supra graph. Round r visits every supra node as a
// root in an order shuffled from (seed, r); the walk from root v in round r
// draws from a generator seeded by (seed, v, r), so the output does not
// depend on the thread count. A walk stops early at a node with no neighbors.
WalkCorpus generate_walks(const SupraGraph& g, const WalkConfig& cfg);

// One walk per line, tokens `node@layer`.
void write_corpus(std::ostream& out, const WalkCorpus& corpus, const MultilayerNetwork& net);

}  // namespace mlembed
