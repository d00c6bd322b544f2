#include "mlembed/modularity.hpp"

#include "mlembed/errors.hpp"
#include "mlembed/log.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace mlembed {

namespace {

int count_communities(std::span<const int> assignment) {
  int k = 0;
  for (int c : assignment) {
    if (c < 0) throw ValidationError("negative community label");
    k = std::max(k, c + 1);
  }
  return std::max(k, 1);
}

}  // namespace

double modularity_single(const Layer& layer, std::span<const int> community) {
  const auto edges = static_cast<double>(layer.num_edges());
  if (edges == 0) throw ValidationError("modularity is undefined for a layer without edges");
  std::map<int, std::pair<double, double>> per_community;  // internal edges, degree sum
  for (NodeId u : layer.nodes()) {
    if (u >= community.size()) throw ValidationError("assignment does not cover node " + std::to_string(u));
    const int cu = community[u];
    auto& [internal, degree] = per_community[cu];
    const auto nb = layer.neighbors(u);
    degree += static_cast<double>(nb.size());
    for (NodeId v : nb) {
      if (u < v && community[v] == cu) internal += 1.0;
    }
  }
  double q = 0.0;
  for (const auto& [c, agg] : per_community) {
    const auto& [internal, degree] = agg;
    q += internal / edges - (degree / (2.0 * edges)) * (degree / (2.0 * edges));
  }
  return q;
}

double modularity_multislice(const SupraGraph& g, std::span<const int> assignment, const ModularityParams& params) {
  if (assignment.size() != g.num_nodes()) throw ValidationError("assignment size does not match replica count");
  for (const auto& layer : g.base().layers()) {
    if (layer.num_edges() == 0) {
      logger()->warn("layer {} has no edges; its intra-layer term is skipped", g.base().layer_token(layer.id()));
    }
  }
  PartitionState state(g, Assignment(assignment.begin(), assignment.end()), count_communities(assignment), params);
  return state.quality();
}

CounterpartIndex::CounterpartIndex(const SupraGraph& g, Coupling mode) {
  const auto& net = g.base();
  const std::size_t n = g.num_nodes();
  offsets_.assign(n + 1, 0);
  for (SupraIndex v = 0; v < n; ++v) {
    if (mode == Coupling::SupraEdges) {
      const auto cp = g.coupled(v);
      targets_.insert(targets_.end(), cp.begin(), cp.end());
    } else {
      const auto sv = net.supra_node(v);
      for (LayerId m = 0; m < net.num_layers(); ++m) {
        if (m == sv.layer) continue;
        if (auto idx = net.find({sv.node, m})) targets_.push_back(*idx);
      }
    }
    offsets_[v + 1] = targets_.size();
  }
}

PartitionState::PartitionState(const SupraGraph& g, Assignment assignment, int num_communities,
                               const ModularityParams& params)
    : graph_(&g),
      params_(params),
      k_(num_communities),
      assignment_(std::move(assignment)),
      counterparts_(g, params.coupling) {
  if (k_ < 1) throw ValidationError("number of communities must be >= 1");
  if (assignment_.size() != g.num_nodes()) throw ValidationError("assignment size does not match replica count");
  for (int c : assignment_) {
    if (c < 0 || c >= k_) throw ValidationError("community label " + std::to_string(c) + " out of range");
  }
  const auto& net = g.base();
  layer_of_.resize(g.num_nodes());
  for (SupraIndex v = 0; v < g.num_nodes(); ++v) layer_of_[v] = net.supra_node(v).layer;
  layer_edges_.resize(net.num_layers());
  two_mu_ = 0.0;
  for (LayerId l = 0; l < net.num_layers(); ++l) {
    layer_edges_[l] = static_cast<std::int64_t>(net.layer(l).num_edges());
    two_mu_ += 2.0 * static_cast<double>(layer_edges_[l]);
  }
  two_mu_ += params_.sigma * static_cast<double>(counterparts_.total());
  agg_ = recompute();
}

PartitionState::Aggregates PartitionState::recompute() const {
  const auto& g = *graph_;
  Aggregates agg;
  agg.internal.assign(layer_edges_.size() * static_cast<std::size_t>(k_), 0);
  agg.degree.assign(layer_edges_.size() * static_cast<std::size_t>(k_), 0);
  for (SupraIndex v = 0; v < g.num_nodes(); ++v) {
    const int c = assignment_[v];
    const auto s = slot(layer_of_[v], c);
    const auto nb = g.intra_neighbors(v);
    agg.degree[s] += static_cast<std::int64_t>(nb.size());
    for (SupraIndex u : nb) {
      if (v < u && assignment_[u] == c) ++agg.internal[s];
    }
    for (SupraIndex u : counterparts_.of(v)) {
      if (assignment_[u] == c) ++agg.agree;
    }
  }
  return agg;
}

double PartitionState::quality() const {
  if (!(two_mu_ > 0.0)) return 0.0;
  double total = 0.0;
  for (LayerId l = 0; l < layer_edges_.size(); ++l) {
    if (layer_edges_[l] == 0) continue;
    const double two_r = 2.0 * static_cast<double>(layer_edges_[l]);
    for (int c = 0; c < k_; ++c) {
      const auto s = slot(l, c);
      const auto d = static_cast<double>(agg_.degree[s]);
      total += 2.0 * static_cast<double>(agg_.internal[s]) - params_.gamma * d * d / two_r;
    }
  }
  total += params_.sigma * static_cast<double>(agg_.agree);
  return total / two_mu_;
}

double PartitionState::gain_of_move(SupraIndex v, int target) const {
  if (target < 0 || target >= k_) throw ValidationError("target community out of range");
  const int current = assignment_.at(v);
  if (target == current || !(two_mu_ > 0.0)) return 0.0;
  const LayerId l = layer_of_[v];
  const auto nb = graph_->intra_neighbors(v);
  std::int64_t to_current = 0;
  std::int64_t to_target = 0;
  for (SupraIndex u : nb) {
    if (assignment_[u] == current) ++to_current;
    else if (assignment_[u] == target) ++to_target;
  }
  double delta = 0.0;
  if (layer_edges_[l] > 0) {
    const auto k = static_cast<double>(nb.size());
    const double two_r = 2.0 * static_cast<double>(layer_edges_[l]);
    const auto d_current = static_cast<double>(agg_.degree[slot(l, current)]);
    const auto d_target = static_cast<double>(agg_.degree[slot(l, target)]);
    delta += 2.0 * static_cast<double>(to_target - to_current) -
             params_.gamma * 2.0 * k * (d_target - d_current + k) / two_r;
  }
  std::int64_t cp_current = 0;
  std::int64_t cp_target = 0;
  for (SupraIndex u : counterparts_.of(v)) {
    if (assignment_[u] == current) ++cp_current;
    else if (assignment_[u] == target) ++cp_target;
  }
  delta += params_.sigma * 2.0 * static_cast<double>(cp_target - cp_current);
  return delta / two_mu_;
}

std::vector<double> PartitionState::gains(SupraIndex v) const {
  std::vector<double> out(static_cast<std::size_t>(k_));
  for (int c = 0; c < k_; ++c) out[static_cast<std::size_t>(c)] = gain_of_move(v, c);
  return out;
}

void PartitionState::move(SupraIndex v, int target) {
  if (target < 0 || target >= k_) throw ValidationError("target community out of range");
  const int current = assignment_.at(v);
  if (target == current) return;
  const LayerId l = layer_of_[v];
  const auto nb = graph_->intra_neighbors(v);
  std::int64_t to_current = 0;
  std::int64_t to_target = 0;
  for (SupraIndex u : nb) {
    if (assignment_[u] == current) ++to_current;
    else if (assignment_[u] == target) ++to_target;
  }
  const auto k = static_cast<std::int64_t>(nb.size());
  agg_.internal[slot(l, current)] -= to_current;
  agg_.internal[slot(l, target)] += to_target;
  agg_.degree[slot(l, current)] -= k;
  agg_.degree[slot(l, target)] += k;
  for (SupraIndex u : counterparts_.of(v)) {
    if (assignment_[u] == current) agg_.agree -= 2;
    else if (assignment_[u] == target) agg_.agree += 2;
  }
  assignment_[v] = target;
}

double PartitionState::fitness(SupraIndex v) const {
  const int c = assignment_.at(v);
  const LayerId l = layer_of_[v];
  const auto nb = graph_->intra_neighbors(v);
  double lambda = 0.0;
  if (!nb.empty()) {
    const auto same = std::count_if(nb.begin(), nb.end(), [&](SupraIndex u) { return assignment_[u] == c; });
    lambda += static_cast<double>(same) / static_cast<double>(nb.size());
  }
  if (layer_edges_[l] > 0) {
    const double r_c = 0.5 * static_cast<double>(agg_.degree[slot(l, c)]);
    lambda -= params_.gamma * r_c / static_cast<double>(layer_edges_[l]);
  }
  const auto cp = counterparts_.of(v);
  if (!cp.empty()) {
    const auto same = std::count_if(cp.begin(), cp.end(), [&](SupraIndex u) { return assignment_[u] == c; });
    lambda += params_.sigma * static_cast<double>(same) / static_cast<double>(cp.size());
  }
  return lambda;
}

std::vector<double> PartitionState::all_fitness() const {
  std::vector<double> out(assignment_.size());
  for (SupraIndex v = 0; v < out.size(); ++v) out[v] = fitness(v);
  return out;
}

bool PartitionState::consistent() const { return recompute() == agg_; }

void write_partition(std::ostream& out, const MultilayerNetwork& net, std::span<const int> assignment) {
  if (assignment.size() != net.num_supra()) throw ValidationError("assignment size does not match replica count");
  for (SupraIndex v = 0; v < assignment.size(); ++v) {
    const auto sv = net.supra_node(v);
    out << net.node_token(sv.node) << ' ' << net.layer_token(sv.layer) << ' ' << assignment[v] << '\n';
  }
}

Assignment read_partition(std::istream& in, const MultilayerNetwork& net, const std::string& source) {
  std::unordered_map<std::string, LayerId> layer_index;
  for (LayerId l = 0; l < net.num_layers(); ++l) layer_index.emplace(net.layer_token(l), l);
  Assignment out(net.num_supra(), -1);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line.substr(0, line.find('#')));
    std::string node_token, layer_token;
    int community = -1;
    if (!(fields >> node_token)) continue;
    if (!(fields >> layer_token >> community) || community < 0) {
      throw ParseError(source, line_no, "expected `node layer community`");
    }
    const auto node = net.find_node_token(node_token);
    const auto layer = layer_index.find(layer_token);
    if (!node || layer == layer_index.end()) throw ParseError(source, line_no, "unknown replica");
    const auto idx = net.find({*node, layer->second});
    if (!idx) throw ParseError(source, line_no, "unknown replica");
    out[*idx] = community;
  }
  if (std::find(out.begin(), out.end(), -1) != out.end()) {
    throw ValidationError(source + ": partition does not cover every replica");
  }
  return out;
}

}  // namespace mlembed
