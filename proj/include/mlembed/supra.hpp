#pragma once

#include "mlembed/graph.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace mlembed {

inline constexpr double kDefaultCouplingThreshold = 0.1;

// Jaccard similarity of node i's neighborhoods in layers l and m. Two empty
// neighborhoods give 0. Throws ValidationError if i is missing from either layer.
double jaccard_coupling(const MultilayerNetwork& net, NodeId i, LayerId l, LayerId m);

// Coupling between the replicas of one node in two layers (a.layer < b.layer).
struct InterLayerEdge {
  SupraNode a;
  SupraNode b;
  double weight = 0.0;  // Jaccard value before binarization
};

// Counts of surviving inter-layer edges for each layer pair.
struct CouplingStats {
  LayerId l = 0;
  LayerId m = 0;
  std::size_t candidates = 0;  // nodes present in both layers
  std::size_t retained = 0;
};

// All intra-layer edges of the base network plus binarized counterpart
// couplings, in CSR form over supra indices. Owns its base network.
class SupraGraph {
 public:
  SupraGraph(MultilayerNetwork base, double threshold);

  const MultilayerNetwork& base() const noexcept { return base_; }
  double threshold() const noexcept { return threshold_; }
  std::size_t num_nodes() const noexcept { return base_.num_supra(); }
  std::size_t num_intra_edges() const noexcept { return num_intra_edges_; }

  // Intra neighbors (ascending node) followed by counterparts (ascending layer).
  std::span<const SupraIndex> neighbors(SupraIndex v) const;
  std::vector<SupraNode> supra_neighbors(SupraNode v) const;
  std::size_t degree(SupraIndex v) const { return neighbors(v).size(); }

  // Same-layer neighbors of v, ascending.
  std::span<const SupraIndex> intra_neighbors(SupraIndex v) const;
  // Counterpart replicas of v joined by a retained inter-layer edge.
  std::span<const SupraIndex> coupled(SupraIndex v) const;
  bool has_edge(SupraIndex a, SupraIndex b) const;

  std::span<const InterLayerEdge> inter_edges() const noexcept { return inter_edges_; }
  std::span<const CouplingStats> coupling_stats() const noexcept { return stats_; }

 private:
  MultilayerNetwork base_;
  double threshold_;
  std::size_t num_intra_edges_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<SupraIndex> targets_;
  std::vector<std::size_t> inter_begin_;  // per supra node, start of counterparts in targets_
  std::vector<InterLayerEdge> inter_edges_;
  std::vector<CouplingStats> stats_;
};

// Validates threshold in [0, 1] and builds the supra graph. An inter edge
// exists iff Jaccard >= threshold and Jaccard > 0.
SupraGraph build_supra(MultilayerNetwork net, double threshold = kDefaultCouplingThreshold);

// Edge-list export: intra edges under their layer token, inter edges under
// `inter:<l>-<m>` with the node token repeated.
void write_supra_edges(std::ostream& out, const SupraGraph& g);

}  // namespace mlembed
