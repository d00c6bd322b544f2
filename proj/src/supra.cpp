#include "mlembed/supra.hpp"

#include "mlembed/errors.hpp"

#include <algorithm>
#include <ostream>
#include <string>

namespace mlembed {

double jaccard_coupling(const MultilayerNetwork& net, NodeId i, LayerId l, LayerId m) {
  const auto a = net.neighbors({i, l});
  const auto b = net.neighbors({i, m});
  std::size_t common = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  const std::size_t united = a.size() + b.size() - common;
  if (united == 0) return 0.0;
  return static_cast<double>(common) / static_cast<double>(united);
}

SupraGraph::SupraGraph(MultilayerNetwork base, double threshold)
    : base_(std::move(base)), threshold_(threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ValidationError("coupling threshold must lie in [0, 1], got " + std::to_string(threshold));
  }
  const std::size_t n = base_.num_supra();
  const std::size_t num_layers = base_.num_layers();

  std::vector<std::vector<SupraIndex>> counterparts(n);
  for (LayerId l = 0; l < num_layers; ++l) {
    for (LayerId m = l + 1; m < num_layers; ++m) {
      CouplingStats stat{l, m, 0, 0};
      for (NodeId i : base_.layer(l).nodes()) {
        if (!base_.layer(m).contains(i)) continue;
        ++stat.candidates;
        const double w = jaccard_coupling(base_, i, l, m);
        if (w > 0.0 && w >= threshold_) {
          ++stat.retained;
          const SupraNode a{i, l};
          const SupraNode b{i, m};
          inter_edges_.push_back({a, b, w});
          const auto ia = base_.index_of(a);
          const auto ib = base_.index_of(b);
          counterparts[ia].push_back(ib);
          counterparts[ib].push_back(ia);
        }
      }
      stats_.push_back(stat);
    }
  }

  offsets_.assign(n + 1, 0);
  inter_begin_.assign(n, 0);
  for (SupraIndex v = 0; v < n; ++v) {
    const auto sv = base_.supra_node(v);
    offsets_[v + 1] = offsets_[v] + base_.degree(sv) + counterparts[v].size();
  }
  targets_.reserve(offsets_.back());
  for (SupraIndex v = 0; v < n; ++v) {
    const auto sv = base_.supra_node(v);
    for (NodeId u : base_.neighbors(sv)) {
      targets_.push_back(base_.index_of({u, sv.layer}));
    }
    inter_begin_[v] = targets_.size();
    // Supra indices are layer-major, so ascending index is ascending layer.
    auto& cp = counterparts[v];
    std::sort(cp.begin(), cp.end());
    targets_.insert(targets_.end(), cp.begin(), cp.end());
  }
  for (const auto& layer : base_.layers()) num_intra_edges_ += layer.num_edges();
}

std::span<const SupraIndex> SupraGraph::neighbors(SupraIndex v) const {
  if (v >= num_nodes()) throw ValidationError("supra index " + std::to_string(v) + " out of range");
  return std::span<const SupraIndex>(targets_).subspan(offsets_[v], offsets_[v + 1] - offsets_[v]);
}

std::span<const SupraIndex> SupraGraph::intra_neighbors(SupraIndex v) const {
  if (v >= num_nodes()) throw ValidationError("supra index " + std::to_string(v) + " out of range");
  return std::span<const SupraIndex>(targets_).subspan(offsets_[v], inter_begin_[v] - offsets_[v]);
}

std::span<const SupraIndex> SupraGraph::coupled(SupraIndex v) const {
  if (v >= num_nodes()) throw ValidationError("supra index " + std::to_string(v) + " out of range");
  return std::span<const SupraIndex>(targets_).subspan(inter_begin_[v], offsets_[v + 1] - inter_begin_[v]);
}

std::vector<SupraNode> SupraGraph::supra_neighbors(SupraNode v) const {
  const auto idx = base_.index_of(v);
  std::vector<SupraNode> out;
  for (SupraIndex u : neighbors(idx)) out.push_back(base_.supra_node(u));
  return out;
}

bool SupraGraph::has_edge(SupraIndex a, SupraIndex b) const {
  const auto nb = neighbors(a);
  const auto sa = base_.supra_node(a);
  const auto sb = base_.supra_node(b);
  if (sa.layer == sb.layer) {
    const auto intra = nb.first(inter_begin_[a] - offsets_[a]);
    return std::binary_search(intra.begin(), intra.end(), b);
  }
  const auto inter = coupled(a);
  return std::binary_search(inter.begin(), inter.end(), b);
}

SupraGraph build_supra(MultilayerNetwork net, double threshold) {
  return SupraGraph(std::move(net), threshold);
}

void write_supra_edges(std::ostream& out, const SupraGraph& g) {
  const auto& net = g.base();
  for (const auto& layer : net.layers()) {
    for (auto [u, v] : layer.edges()) {
      out << net.layer_token(layer.id()) << ' ' << net.node_token(u) << ' ' << net.node_token(v) << '\n';
    }
  }
  for (const auto& e : g.inter_edges()) {
    out << "inter:" << net.layer_token(e.a.layer) << '-' << net.layer_token(e.b.layer) << ' '
        << net.node_token(e.a.node) << ' ' << net.node_token(e.b.node) << '\n';
  }
}

}  // namespace mlembed
