#pragma once

// Brute-force reference evaluators. Each works from raw adjacency and
// definitions only, never from the library's cached aggregates.

#include "mlembed/graph.hpp"
#include "mlembed/matrix.hpp"
#include "mlembed/modularity.hpp"
#include "mlembed/random.hpp"
#include "mlembed/supra.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <vector>

namespace oracle {

using namespace mlembed;

inline bool adjacent(const MultilayerNetwork& net, LayerId l, NodeId u, NodeId v) {
  if (!net.layer(l).contains(u)) return false;
  for (NodeId w : net.layer(l).neighbors(u)) {
    if (w == v) return true;
  }
  return false;
}

inline double jaccard(const MultilayerNetwork& net, NodeId i, LayerId l, LayerId m) {
  std::set<NodeId> a, b;
  for (NodeId v = 0; v < net.num_nodes(); ++v) {
    if (adjacent(net, l, i, v)) a.insert(v);
    if (adjacent(net, m, i, v)) b.insert(v);
  }
  std::set<NodeId> uni = a;
  uni.insert(b.begin(), b.end());
  if (uni.empty()) return 0.0;
  std::size_t inter = 0;
  for (NodeId v : a) inter += b.count(v);
  return static_cast<double>(inter) / static_cast<double>(uni.size());
}

// Single-layer modularity as a double sum over ordered node pairs.
inline double modularity_single(const MultilayerNetwork& net, LayerId l, const std::vector<int>& community) {
  const auto& layer = net.layer(l);
  double two_r = 0.0;
  for (NodeId v : layer.nodes()) two_r += static_cast<double>(layer.neighbors(v).size());
  double q = 0.0;
  for (NodeId i : layer.nodes()) {
    for (NodeId j : layer.nodes()) {
      if (community[i] != community[j]) continue;
      const double a = adjacent(net, l, i, j) ? 1.0 : 0.0;
      q += a - static_cast<double>(layer.degree(i)) * static_cast<double>(layer.degree(j)) / two_r;
    }
  }
  return q / two_r;
}

// Whether counterpart replicas a and b carry the coupling constant.
inline bool coupled(const SupraGraph& g, SupraIndex a, SupraIndex b, Coupling mode) {
  const auto& net = g.base();
  const auto sa = net.supra_node(a);
  const auto sb = net.supra_node(b);
  if (sa.node != sb.node || sa.layer == sb.layer) return false;
  if (mode == Coupling::AllCounterparts) return true;
  return jaccard(net, sa.node, sa.layer, sb.layer) >= g.threshold() && jaccard(net, sa.node, sa.layer, sb.layer) > 0.0;
}

// Multislice modularity as a double sum over ordered supra pairs.
inline double modularity_multislice(const SupraGraph& g, const std::vector<int>& c, const ModularityParams& p) {
  const auto& net = g.base();
  const std::size_t n = net.num_supra();
  std::vector<double> two_r(net.num_layers(), 0.0);
  for (SupraIndex a = 0; a < n; ++a) {
    const auto sa = net.supra_node(a);
    two_r[sa.layer] += static_cast<double>(net.degree(sa));
  }
  double two_mu = 0.0;
  for (double t : two_r) two_mu += t;
  for (SupraIndex a = 0; a < n; ++a) {
    for (SupraIndex b = 0; b < n; ++b) {
      if (coupled(g, a, b, p.coupling)) two_mu += p.sigma;
    }
  }
  double q = 0.0;
  for (SupraIndex a = 0; a < n; ++a) {
    for (SupraIndex b = 0; b < n; ++b) {
      if (c[a] != c[b]) continue;
      const auto sa = net.supra_node(a);
      const auto sb = net.supra_node(b);
      if (sa.layer == sb.layer) {
        if (two_r[sa.layer] == 0.0) continue;
        const double adj = adjacent(net, sa.layer, sa.node, sb.node) ? 1.0 : 0.0;
        q += adj - p.gamma * static_cast<double>(net.degree(sa)) * static_cast<double>(net.degree(sb)) / two_r[sa.layer];
      } else if (coupled(g, a, b, p.coupling)) {
        q += p.sigma;
      }
    }
  }
  return two_mu > 0.0 ? q / two_mu : 0.0;
}

// Per-replica fitness from definitions.
inline double fitness(const SupraGraph& g, const std::vector<int>& c, const ModularityParams& p, SupraIndex v) {
  const auto& net = g.base();
  const auto sv = net.supra_node(v);
  const auto& layer = net.layer(sv.layer);
  double lambda = 0.0;
  const double deg = static_cast<double>(layer.degree(sv.node));
  if (deg > 0) {
    double same = 0.0;
    for (NodeId u : layer.neighbors(sv.node)) same += c[net.index_of({u, sv.layer})] == c[v] ? 1.0 : 0.0;
    lambda += same / deg;
  }
  const double r_l = static_cast<double>(layer.num_edges());
  if (r_l > 0) {
    double member_degree = 0.0;
    for (NodeId u : layer.nodes()) {
      if (c[net.index_of({u, sv.layer})] == c[v]) member_degree += static_cast<double>(layer.degree(u));
    }
    lambda -= p.gamma * (0.5 * member_degree) / r_l;
  }
  double cp = 0.0, cp_same = 0.0;
  for (SupraIndex u = 0; u < net.num_supra(); ++u) {
    if (!coupled(g, v, u, p.coupling)) continue;
    cp += 1.0;
    cp_same += c[u] == c[v] ? 1.0 : 0.0;
  }
  if (cp > 0) lambda += p.sigma * cp_same / cp;
  return lambda;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Pair loss with explicit dot products.
inline double sgns_loss(const Matrix& in, const Matrix& out, SupraIndex center, SupraIndex context,
                        const std::vector<SupraIndex>& negatives) {
  double loss = -std::log(sigmoid(in.row(center).dot(out.row(context))));
  for (SupraIndex n : negatives) loss -= std::log(sigmoid(-in.row(center).dot(out.row(n))));
  return loss;
}

// Student-t soft assignment written with the general exponent, alpha = 1.
inline Matrix soft_assign(const Matrix& x, const Matrix& mu) {
  const double alpha = 1.0;
  Matrix q(x.rows(), mu.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double total = 0.0;
    for (Eigen::Index k = 0; k < mu.rows(); ++k) {
      double d2 = 0.0;
      for (Eigen::Index j = 0; j < x.cols(); ++j) d2 += (x(i, j) - mu(k, j)) * (x(i, j) - mu(k, j));
      q(i, k) = std::pow(1.0 + d2 / alpha, -(alpha + 1.0) / 2.0);
      total += q(i, k);
    }
    for (Eigen::Index k = 0; k < mu.rows(); ++k) q(i, k) /= total;
  }
  return q;
}

inline Matrix target_distribution(const Matrix& q) {
  Matrix p(q.rows(), q.cols());
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    double total = 0.0;
    for (Eigen::Index k = 0; k < q.cols(); ++k) {
      double f = 0.0;
      for (Eigen::Index r = 0; r < q.rows(); ++r) f += q(r, k);
      p(i, k) = q(i, k) * q(i, k) / f;
      total += p(i, k);
    }
    for (Eigen::Index k = 0; k < q.cols(); ++k) p(i, k) /= total;
  }
  return p;
}

inline double kl(const Matrix& p, const Matrix& q) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index k = 0; k < p.cols(); ++k) {
      if (p(i, k) > 0) total += p(i, k) * std::log(p(i, k) / q(i, k));
    }
  }
  return total;
}

// Central finite difference of f around x along every coordinate.
inline Vector numeric_gradient(const std::function<double(const Vector&)>& f, Vector x, double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = x(i);
    x(i) = orig + h;
    const double up = f(x);
    x(i) = orig - h;
    const double down = f(x);
    x(i) = orig;
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||), with a tiny floor for all-zero gradients.
inline double relative_error(const Vector& a, const Vector& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / scale;
}

// Random network with every node present in at least one layer.
inline MultilayerNetwork random_network(Rng& rng, std::size_t nodes, std::size_t layers, double p_edge,
                                        double p_present = 0.85) {
  NetworkBuilder b(nodes, layers);
  for (NodeId v = 0; v < nodes; ++v) {
    bool any = false;
    for (LayerId l = 0; l < layers; ++l) {
      if (uniform01(rng) < p_present) {
        b.add_node(l, v);
        any = true;
      }
    }
    if (!any) b.add_node(static_cast<LayerId>(uniform_index(rng, layers)), v);
  }
  // Edges only between nodes present in the layer; the builder adds the
  // endpoints otherwise, so test presence first with a local table.
  std::vector<std::vector<char>> present(layers, std::vector<char>(nodes, 0));
  MultilayerNetwork probe = NetworkBuilder(b).build();
  for (LayerId l = 0; l < layers; ++l) {
    for (NodeId v : probe.layer(l).nodes()) present[l][v] = 1;
  }
  for (LayerId l = 0; l < layers; ++l) {
    for (NodeId u = 0; u < nodes; ++u) {
      for (NodeId v = u + 1; v < nodes; ++v) {
        if (present[l][u] && present[l][v] && uniform01(rng) < p_edge) b.add_edge(l, u, v);
      }
    }
  }
  return std::move(b).build();
}

}  // namespace oracle
