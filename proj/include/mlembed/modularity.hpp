#pragma once

#include "mlembed/supra.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mlembed {

// Which counterpart pairs receive the coupling constant sigma.
enum class Coupling {
  AllCounterparts,  // every pair of replicas of the same node
  SupraEdges,       // only pairs joined by a retained inter-layer edge
};

struct ModularityParams {
  double gamma = 1.0;  // resolution, shared by all layers
  double sigma = 1.0;  // inter-layer coupling constant
  Coupling coupling = Coupling::AllCounterparts;
};

// Community per supra index (or per node id for a single layer).
using Assignment = std::vector<int>;

// Newman-Girvan modularity of one layer. `community` is indexed by node id;
// entries of absent nodes are ignored. Throws ValidationError for a layer
// without edges.
double modularity_single(const Layer& layer, std::span<const int> community);

// Multi-slice modularity over all replicas:
//   (1/2mu) * [ sum_l sum_{i,j} (e_ij - gamma n_i n_j / 2r_l) d(c_i, c_j)
//              + sigma * #(ordered coupled counterpart pairs in one community) ]
// with 2mu = sum_l 2 r_l + sigma * #(ordered coupled counterpart pairs).
// Layers without edges contribute no intra term.
double modularity_multislice(const SupraGraph& g, std::span<const int> assignment,
                             const ModularityParams& params = {});

// Counterpart lists under a coupling mode, CSR over supra indices.
class CounterpartIndex {
 public:
  CounterpartIndex(const SupraGraph& g, Coupling mode);

  std::span<const SupraIndex> of(SupraIndex v) const {
    return std::span<const SupraIndex>(targets_).subspan(offsets_[v], offsets_[v + 1] - offsets_[v]);
  }
  std::size_t total() const noexcept { return targets_.size(); }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<SupraIndex> targets_;
};

// Partition of the replicas into K communities with cached per-layer
// aggregates (internal edge counts, degree sums) and the count of coupled
// counterpart pairs that agree. Keeps a reference to `g`, which must outlive
// the state. Single writer.
class PartitionState {
 public:
  PartitionState(const SupraGraph& g, Assignment assignment, int num_communities,
                 const ModularityParams& params = {});

  const SupraGraph& graph() const noexcept { return *graph_; }
  const ModularityParams& params() const noexcept { return params_; }
  int num_communities() const noexcept { return k_; }
  int community(SupraIndex v) const { return assignment_.at(v); }
  const Assignment& assignment() const noexcept { return assignment_; }
  std::span<const SupraIndex> counterparts(SupraIndex v) const { return counterparts_.of(v); }

  // Q_multi from the cached aggregates.
  double quality() const;
  double normalization() const noexcept { return two_mu_; }

  // Q_multi(after moving v to target) - Q_multi(now). Exactly 0 when target
  // is v's current community.
  double gain_of_move(SupraIndex v, int target) const;
  // Gains for every target community.
  std::vector<double> gains(SupraIndex v) const;
  void move(SupraIndex v, int target);

  // Fitness of a replica:
  //   n_same / n_i - gamma * r_C / r_l + sigma * c_same / c_i
  // where n_same counts same-community intra neighbors, r_C is half the
  // degree sum of v's community in its layer, c_i counts coupled
  // counterparts and c_same those sharing v's community. A zero
  // denominator zeroes its term.
  double fitness(SupraIndex v) const;
  std::vector<double> all_fitness() const;

  // True iff every cached aggregate equals its from-scratch value.
  bool consistent() const;

 private:
  struct Aggregates {
    std::vector<std::int64_t> internal;  // [layer * K + c], edges inside c
    std::vector<std::int64_t> degree;    // [layer * K + c], degree sum
    std::int64_t agree = 0;              // ordered coupled pairs sharing a community

    friend bool operator==(const Aggregates&, const Aggregates&) = default;
  };

  Aggregates recompute() const;
  std::size_t slot(LayerId l, int c) const { return static_cast<std::size_t>(l) * static_cast<std::size_t>(k_) + static_cast<std::size_t>(c); }

  const SupraGraph* graph_;
  ModularityParams params_;
  int k_;
  Assignment assignment_;
  CounterpartIndex counterparts_;
  std::vector<LayerId> layer_of_;
  std::vector<std::int64_t> layer_edges_;
  double two_mu_ = 0.0;
  Aggregates agg_;
};

// Partition file: `node layer community` per replica, original tokens.
void write_partition(std::ostream& out, const MultilayerNetwork& net, std::span<const int> assignment);
Assignment read_partition(std::istream& in, const MultilayerNetwork& net, const std::string& source = "<stream>");

}  // namespace mlembed
