#include "mlembed/graph.hpp"

#include "mlembed/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace mlembed {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::string body = line.substr(0, line.find('#'));
  std::istringstream in(body);
  std::vector<std::string> fields;
  for (std::string token; in >> token;) fields.push_back(std::move(token));
  return fields;
}

bool is_unsigned_integer(const std::string& s) {
  if (s.empty() || s.size() > 19) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// Dense ids for a token set: numeric order if all tokens are integers.
std::vector<std::string> densify(std::vector<std::string> tokens) {
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  if (std::all_of(tokens.begin(), tokens.end(), is_unsigned_integer)) {
    std::sort(tokens.begin(), tokens.end(), [](const std::string& a, const std::string& b) {
      return std::stoull(a) < std::stoull(b);
    });
  }
  return tokens;
}

std::unordered_map<std::string, std::uint32_t> index_tokens(const std::vector<std::string>& tokens) {
  std::unordered_map<std::string, std::uint32_t> index;
  index.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) index.emplace(tokens[i], static_cast<std::uint32_t>(i));
  return index;
}

std::vector<std::string> default_tokens(std::size_t n) {
  std::vector<std::string> tokens(n);
  for (std::size_t i = 0; i < n; ++i) tokens[i] = std::to_string(i);
  return tokens;
}

}  // namespace

std::span<const NodeId> Layer::neighbors(NodeId v) const {
  if (!contains(v)) {
    throw ValidationError("node " + std::to_string(v) + " is not present in layer " + std::to_string(id_));
  }
  return std::span<const NodeId>(targets_).subspan(offsets_[v], offsets_[v + 1] - offsets_[v]);
}

std::vector<std::pair<NodeId, NodeId>> Layer::edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(num_edges());
  for (NodeId u : nodes_) {
    for (NodeId v : neighbors(u)) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

const Layer& MultilayerNetwork::layer(LayerId l) const {
  if (l >= layers_.size()) throw ValidationError("layer " + std::to_string(l) + " out of range");
  return layers_[l];
}

bool MultilayerNetwork::contains(SupraNode v) const noexcept {
  return v.layer < layers_.size() && layers_[v.layer].contains(v.node);
}

std::optional<SupraIndex> MultilayerNetwork::find(SupraNode v) const noexcept {
  if (!contains(v)) return std::nullopt;
  return layer_offsets_[v.layer] + local_[v.layer][v.node];
}

SupraIndex MultilayerNetwork::index_of(SupraNode v) const {
  if (auto idx = find(v)) return *idx;
  throw ValidationError("invalid replica: node " + std::to_string(v.node) + " in layer " +
                        std::to_string(v.layer));
}

SupraNode MultilayerNetwork::supra_node(SupraIndex idx) const {
  if (idx >= num_supra()) throw ValidationError("supra index " + std::to_string(idx) + " out of range");
  auto it = std::upper_bound(layer_offsets_.begin(), layer_offsets_.end(), idx);
  const auto l = static_cast<LayerId>(it - layer_offsets_.begin() - 1);
  return SupraNode{layers_[l].nodes()[idx - layer_offsets_[l]], l};
}

std::span<const NodeId> MultilayerNetwork::neighbors(SupraNode v) const {
  if (!contains(v)) {
    throw ValidationError("invalid replica: node " + std::to_string(v.node) + " in layer " +
                          std::to_string(v.layer));
  }
  return layers_[v.layer].neighbors(v.node);
}

std::vector<LayerId> MultilayerNetwork::layers_of(NodeId v) const {
  std::vector<LayerId> out;
  for (const auto& layer : layers_) {
    if (layer.contains(v)) out.push_back(layer.id());
  }
  return out;
}

std::optional<NodeId> MultilayerNetwork::find_node_token(const std::string& token) const {
  // Tokens are usually the decimal ids themselves.
  if (is_unsigned_integer(token)) {
    const auto guess = std::stoull(token);
    if (guess < node_tokens_.size() && node_tokens_[guess] == token) return static_cast<NodeId>(guess);
  }
  auto it = std::find(node_tokens_.begin(), node_tokens_.end(), token);
  if (it == node_tokens_.end()) return std::nullopt;
  return static_cast<NodeId>(it - node_tokens_.begin());
}

std::string MultilayerNetwork::supra_token(SupraIndex idx) const {
  const auto v = supra_node(idx);
  return node_tokens_[v.node] + "@" + layer_tokens_[v.layer];
}

NetworkBuilder::NetworkBuilder(std::size_t num_nodes, std::size_t num_layers)
    : num_nodes_(num_nodes),
      present_(num_layers, std::vector<char>(num_nodes, 0)),
      edges_(num_layers) {
  if (num_layers == 0) throw ValidationError("a multilayer network needs at least one layer");
  if (num_nodes >= kAbsent) throw ValidationError("too many nodes");
}

void NetworkBuilder::add_node(LayerId l, NodeId v) {
  if (l >= present_.size()) throw ValidationError("layer " + std::to_string(l) + " out of range");
  if (v >= num_nodes_) throw ValidationError("node " + std::to_string(v) + " out of range");
  present_[l][v] = 1;
}

void NetworkBuilder::add_edge(LayerId l, NodeId u, NodeId v) {
  if (u == v) {
    throw ValidationError("self-loop on node " + std::to_string(u) + " in layer " + std::to_string(l));
  }
  add_node(l, u);
  add_node(l, v);
  edges_[l].emplace_back(std::min(u, v), std::max(u, v));
}

void NetworkBuilder::set_node_tokens(std::vector<std::string> tokens) {
  if (tokens.size() != num_nodes_) throw ValidationError("node token count mismatch");
  node_tokens_ = std::move(tokens);
}

void NetworkBuilder::set_layer_tokens(std::vector<std::string> tokens) {
  if (tokens.size() != present_.size()) throw ValidationError("layer token count mismatch");
  layer_tokens_ = std::move(tokens);
}

MultilayerNetwork NetworkBuilder::build(bool require_cover) && {
  MultilayerNetwork net;
  const std::size_t num_layers = present_.size();
  net.num_nodes_ = num_nodes_;
  net.layers_.resize(num_layers);
  net.local_.assign(num_layers, std::vector<std::uint32_t>(num_nodes_, kAbsent));
  net.layer_offsets_.assign(num_layers + 1, 0);

  for (std::size_t l = 0; l < num_layers; ++l) {
    auto& layer = net.layers_[l];
    layer.id_ = static_cast<LayerId>(l);
    layer.present_ = std::move(present_[l]);

    auto& edges = edges_[l];
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    std::vector<std::size_t> degree(num_nodes_, 0);
    for (auto [u, v] : edges) {
      ++degree[u];
      ++degree[v];
    }
    layer.offsets_.assign(num_nodes_ + 1, 0);
    for (std::size_t v = 0; v < num_nodes_; ++v) layer.offsets_[v + 1] = layer.offsets_[v] + degree[v];
    layer.targets_.resize(layer.offsets_.back());
    std::vector<std::size_t> cursor(layer.offsets_.begin(), layer.offsets_.end() - 1);
    for (auto [u, v] : edges) {
      layer.targets_[cursor[u]++] = v;
      layer.targets_[cursor[v]++] = u;
    }
    for (std::size_t v = 0; v < num_nodes_; ++v) {
      std::sort(layer.targets_.begin() + static_cast<std::ptrdiff_t>(layer.offsets_[v]),
                layer.targets_.begin() + static_cast<std::ptrdiff_t>(layer.offsets_[v + 1]));
      if (layer.present_[v]) {
        net.local_[l][v] = static_cast<std::uint32_t>(layer.nodes_.size());
        layer.nodes_.push_back(static_cast<NodeId>(v));
      }
    }
    net.layer_offsets_[l + 1] = net.layer_offsets_[l] + static_cast<SupraIndex>(layer.nodes_.size());
  }

  if (require_cover) {
    for (std::size_t v = 0; v < num_nodes_; ++v) {
      const bool covered = std::any_of(net.layers_.begin(), net.layers_.end(),
                                       [&](const Layer& layer) { return layer.contains(static_cast<NodeId>(v)); });
      if (!covered) throw ValidationError("node " + std::to_string(v) + " belongs to no layer");
    }
  }

  net.node_tokens_ = node_tokens_.empty() ? default_tokens(num_nodes_) : std::move(node_tokens_);
  net.layer_tokens_ = layer_tokens_.empty() ? default_tokens(num_layers) : std::move(layer_tokens_);
  return net;
}

MultilayerNetwork read_multilayer(std::istream& in, const LoadOptions& options, const std::string& source) {
  struct RawEdge {
    std::string layer, src, dst;
  };
  std::vector<RawEdge> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields.size() < 3) throw ParseError(source, line_no, "expected `layer src dst`");
    if (fields.size() > 4) throw ParseError(source, line_no, "too many fields");
    if (fields.size() == 4) {
      double weight = 0.0;
      const auto& w = fields[3];
      auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), weight);
      if (ec != std::errc() || ptr != w.data() + w.size()) {
        throw ParseError(source, line_no, "malformed weight `" + w + "`");
      }
      if (options.strict) throw ParseError(source, line_no, "weighted edges are not supported in strict mode");
    }
    if (fields[1] == fields[2]) {
      if (options.strict) throw ParseError(source, line_no, "self-loop on node " + fields[1]);
      continue;
    }
    raw.push_back({std::move(fields[0]), std::move(fields[1]), std::move(fields[2])});
  }
  if (raw.empty()) throw ValidationError(source + ": no edges");

  std::vector<std::string> layer_tokens, node_tokens;
  for (const auto& e : raw) {
    layer_tokens.push_back(e.layer);
    node_tokens.push_back(e.src);
    node_tokens.push_back(e.dst);
  }
  layer_tokens = densify(std::move(layer_tokens));
  node_tokens = densify(std::move(node_tokens));
  const auto layer_index = index_tokens(layer_tokens);
  const auto node_index = index_tokens(node_tokens);

  NetworkBuilder builder(node_tokens.size(), layer_tokens.size());
  for (const auto& e : raw) {
    builder.add_edge(layer_index.at(e.layer), node_index.at(e.src), node_index.at(e.dst));
  }
  builder.set_node_tokens(std::move(node_tokens));
  builder.set_layer_tokens(std::move(layer_tokens));
  return std::move(builder).build();
}

MultilayerNetwork load_multilayer(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge file `" + path + "`");
  return read_multilayer(in, options, path);
}

void write_multilayer(std::ostream& out, const MultilayerNetwork& net) {
  for (const auto& layer : net.layers()) {
    for (auto [u, v] : layer.edges()) {
      out << net.layer_token(layer.id()) << ' ' << net.node_token(u) << ' ' << net.node_token(v) << '\n';
    }
  }
}

void save_multilayer(const std::string& path, const MultilayerNetwork& net) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write `" + path + "`");
  write_multilayer(out, net);
  if (!out) throw IoError("write failed for `" + path + "`");
}

std::size_t LabelTable::num_labeled() const {
  return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](int c) { return c >= 0; }));
}

LabelTable read_labels(std::istream& in, const MultilayerNetwork& net, const std::string& source) {
  LabelTable table;
  table.labels.assign(net.num_nodes(), -1);
  std::map<std::string, int> class_index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields.size() != 2) throw ParseError(source, line_no, "expected `node class`");
    const auto node = net.find_node_token(fields[0]);
    if (!node) throw ParseError(source, line_no, "unknown node `" + fields[0] + "`");
    auto [it, inserted] = class_index.emplace(fields[1], static_cast<int>(table.class_tokens.size()));
    if (inserted) table.class_tokens.push_back(fields[1]);
    int& slot = table.labels[*node];
    if (slot >= 0 && slot != it->second) {
      throw ParseError(source, line_no, "conflicting class for node `" + fields[0] + "`");
    }
    slot = it->second;
  }
  return table;
}

LabelTable load_labels(const std::string& path, const MultilayerNetwork& net) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label file `" + path + "`");
  return read_labels(in, net, path);
}

}  // namespace mlembed
