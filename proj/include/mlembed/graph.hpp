#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mlembed {

using NodeId = std::uint32_t;
using LayerId = std::uint32_t;
// Dense index of a node-layer replica. Packing is layer-major: all replicas
// of layer 0 in ascending node order, then layer 1, and so on.
using SupraIndex = std::uint32_t;

inline constexpr std::uint32_t kAbsent = std::numeric_limits<std::uint32_t>::max();

// The replica of physical node `node` inside layer `layer`.
struct SupraNode {
  NodeId node = 0;
  LayerId layer = 0;

  friend auto operator<=>(const SupraNode&, const SupraNode&) = default;
};

// One undirected, unweighted layer over the shared node universe, in CSR form.
class Layer {
 public:
  Layer() = default;

  LayerId id() const noexcept { return id_; }
  bool contains(NodeId v) const noexcept { return v < present_.size() && present_[v] != 0; }

  // Sorted neighbors of `v`. Throws ValidationError when v is not in the layer.
  std::span<const NodeId> neighbors(NodeId v) const;
  std::size_t degree(NodeId v) const { return neighbors(v).size(); }

  // Present nodes in ascending order.
  std::span<const NodeId> nodes() const noexcept { return nodes_; }
  std::size_t num_nodes() const noexcept { return nodes_.size(); }
  std::size_t num_edges() const noexcept { return targets_.size() / 2; }

  // Each undirected edge once, as (u, v) with u < v, sorted.
  std::vector<std::pair<NodeId, NodeId>> edges() const;

 private:
  friend class NetworkBuilder;

  LayerId id_ = 0;
  std::vector<char> present_;
  std::vector<NodeId> nodes_;
  std::vector<std::size_t> offsets_;  // size universe + 1
  std::vector<NodeId> targets_;
};

// Multiplex network: L layers over nodes 0..N-1. Node i in layer l and node i
// in layer m are counterparts. Immutable once built.
class MultilayerNetwork {
 public:
  MultilayerNetwork() = default;

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_layers() const noexcept { return layers_.size(); }
  const Layer& layer(LayerId l) const;
  std::span<const Layer> layers() const noexcept { return layers_; }

  std::size_t num_supra() const noexcept { return layer_offsets_.empty() ? 0 : layer_offsets_.back(); }
  bool contains(SupraNode v) const noexcept;
  // Throws ValidationError for an invalid replica.
  SupraIndex index_of(SupraNode v) const;
  std::optional<SupraIndex> find(SupraNode v) const noexcept;
  SupraNode supra_node(SupraIndex idx) const;
  SupraIndex layer_begin(LayerId l) const { return layer_offsets_.at(l); }

  std::span<const NodeId> neighbors(SupraNode v) const;
  std::size_t degree(SupraNode v) const { return neighbors(v).size(); }

  // Layers that contain `v`, ascending.
  std::vector<LayerId> layers_of(NodeId v) const;

  const std::string& node_token(NodeId v) const { return node_tokens_.at(v); }
  const std::string& layer_token(LayerId l) const { return layer_tokens_.at(l); }
  std::optional<NodeId> find_node_token(const std::string& token) const;
  std::span<const std::string> node_tokens() const noexcept { return node_tokens_; }
  std::span<const std::string> layer_tokens() const noexcept { return layer_tokens_; }

  // "node@layer" using the original tokens.
  std::string supra_token(SupraIndex idx) const;

 private:
  friend class NetworkBuilder;

  std::size_t num_nodes_ = 0;
  std::vector<Layer> layers_;
  std::vector<SupraIndex> layer_offsets_;           // size L + 1
  std::vector<std::vector<std::uint32_t>> local_;    // [layer][node] -> rank or kAbsent
  std::vector<std::string> node_tokens_;
  std::vector<std::string> layer_tokens_;
};

// Accumulates nodes and edges, then produces a validated network.
class NetworkBuilder {
 public:
  NetworkBuilder(std::size_t num_nodes, std::size_t num_layers);

  void add_node(LayerId l, NodeId v);
  // Adds {u, v} to layer l. Duplicates and reversed duplicates collapse.
  // Self-loops throw ValidationError.
  void add_edge(LayerId l, NodeId u, NodeId v);

  void set_node_tokens(std::vector<std::string> tokens);
  void set_layer_tokens(std::vector<std::string> tokens);

  // With `require_cover`, every id in 0..N-1 must appear in some layer.
  MultilayerNetwork build(bool require_cover = true) &&;

 private:
  std::size_t num_nodes_;
  std::vector<std::vector<char>> present_;
  std::vector<std::vector<std::pair<NodeId, NodeId>>> edges_;
  std::vector<std::string> node_tokens_;
  std::vector<std::string> layer_tokens_;
};

struct LoadOptions {
  // Strict: self-loops and a weight column are errors. Lenient: self-loops
  // are dropped and weights ignored.
  bool strict = false;
};

// Edge list: one `layer src dst [weight]` per line, whitespace separated,
// `#` starts a comment. Layer and node tokens are densified: numerically
// when every token is a non-negative integer, lexicographically otherwise.
MultilayerNetwork read_multilayer(std::istream& in, const LoadOptions& options = {},
                                  const std::string& source = "<stream>");
MultilayerNetwork load_multilayer(const std::string& path, const LoadOptions& options = {});
void write_multilayer(std::ostream& out, const MultilayerNetwork& net);
void save_multilayer(const std::string& path, const MultilayerNetwork& net);

// Partial node -> class map with dense class indices.
struct LabelTable {
  std::vector<int> labels;                 // per NodeId, -1 when unlabeled
  std::vector<std::string> class_tokens;   // class index -> original token

  std::size_t num_classes() const noexcept { return class_tokens.size(); }
  std::size_t num_labeled() const;
};

// Label file: `node class_token` per line. Node tokens resolve through the
// network's token table; classes are indexed in order of first appearance.
LabelTable read_labels(std::istream& in, const MultilayerNetwork& net,
                       const std::string& source = "<stream>");
LabelTable load_labels(const std::string& path, const MultilayerNetwork& net);

}  // namespace mlembed
