#include "mlembed/walks.hpp"

#include "mlembed/errors.hpp"
#include "mlembed/random.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <string>
#include <thread>

namespace mlembed {

void WalkConfig::validate() const {
  if (walks_per_node < 1) throw ValidationError("walks_per_node must be >= 1");
  if (walk_length < 2) throw ValidationError("walk_length must be >= 2");
  if (threads < 1) throw ValidationError("threads must be >= 1");
}

void WalkCorpus::add_walk(std::span<const SupraIndex> walk) {
  for (SupraIndex v : walk) {
    if (v >= frequency_.size()) throw ValidationError("walk token out of vocabulary");
    ++frequency_[v];
  }
  tokens_.insert(tokens_.end(), walk.begin(), walk.end());
  offsets_.push_back(tokens_.size());
}

std::span<const SupraIndex> WalkCorpus::walk(std::size_t i) const {
  return std::span<const SupraIndex>(tokens_).subspan(offsets_.at(i), offsets_.at(i + 1) - offsets_[i]);
}

namespace {

void walk_from(const SupraGraph& g, SupraIndex root, std::uint32_t length, Rng& rng,
               std::vector<SupraIndex>& out) {
  out.clear();
  out.push_back(root);
  SupraIndex current = root;
  while (out.size() < length) {
    const auto nb = g.neighbors(current);
    if (nb.empty()) break;
    current = nb[uniform_index(rng, nb.size())];
    out.push_back(current);
  }
}

}  // namespace

WalkCorpus generate_walks(const SupraGraph& g, const WalkConfig& cfg) {
  cfg.validate();
  const std::size_t n = g.num_nodes();
  if (n == 0) throw ValidationError("cannot walk an empty supra graph");

  WalkCorpus corpus(n);
  std::vector<SupraIndex> order(n);
  std::vector<std::vector<SupraIndex>> batch(n);

  for (std::uint32_t round = 0; round < cfg.walks_per_node; ++round) {
    std::iota(order.begin(), order.end(), SupraIndex{0});
    Rng order_rng(derive_seed(cfg.seed, 0x6f72646572ULL, round));
    shuffle(order.begin(), order.end(), order_rng);

    auto work = [&](std::size_t begin, std::size_t end) {
      for (std::size_t k = begin; k < end; ++k) {
        const SupraIndex root = order[k];
        Rng rng(derive_seed(cfg.seed, root, round));
        walk_from(g, root, cfg.walk_length, rng, batch[k]);
      }
    };
    const unsigned workers = std::min<std::size_t>(cfg.threads, n);
    if (workers <= 1) {
      work(0, n);
    } else {
      std::vector<std::jthread> pool;
      const std::size_t chunk = (n + workers - 1) / workers;
      for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin < end) pool.emplace_back(work, begin, end);
      }
    }
    for (const auto& walk : batch) corpus.add_walk(walk);
  }
  return corpus;
}

void write_corpus(std::ostream& out, const WalkCorpus& corpus, const MultilayerNetwork& net) {
  for (std::size_t i = 0; i < corpus.num_walks(); ++i) {
    const auto walk = corpus.walk(i);
    for (std::size_t t = 0; t < walk.size(); ++t) {
      if (t) out << ' ';
      out << net.supra_token(walk[t]);
    }
    out << '\n';
  }
}

}  // namespace mlembed
