#include "mlembed/errors.hpp"
#include "mlembed/supra.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <sstream>

using namespace mlembed;

namespace {

// Node 0 gets the given neighbor sets in layers 0 and 1.
MultilayerNetwork two_neighborhoods(std::vector<NodeId> a, std::vector<NodeId> b, std::size_t n) {
  NetworkBuilder builder(n, 2);
  for (NodeId v : a) builder.add_edge(0, 0, v);
  for (NodeId v : b) builder.add_edge(1, 0, v);
  for (NodeId v = 0; v < n; ++v) {
    builder.add_node(0, v);
    builder.add_node(1, v);
  }
  return std::move(builder).build();
}

}  // namespace

TEST_SUITE("supra") {
  TEST_CASE("jaccard examples") {
    CHECK(jaccard_coupling(two_neighborhoods({2, 3}, {2, 3}, 6), 0, 0, 1) == doctest::Approx(1.0));
    CHECK(jaccard_coupling(two_neighborhoods({2, 3}, {4, 5}, 6), 0, 0, 1) == 0.0);
    CHECK(jaccard_coupling(two_neighborhoods({1, 2, 3}, {2, 3, 4}, 6), 0, 0, 1) == doctest::Approx(0.5));
    // Both neighborhoods empty.
    CHECK(jaccard_coupling(two_neighborhoods({1}, {1}, 6), 5, 0, 1) == 0.0);
  }

  TEST_CASE("jaccard needs presence in both layers") {
    NetworkBuilder b(3, 2);
    b.add_edge(0, 0, 1);
    b.add_edge(1, 1, 2);
    const auto net = std::move(b).build();
    CHECK_THROWS_AS(jaccard_coupling(net, 0, 0, 1), ValidationError);
  }

  TEST_CASE("threshold outside [0, 1] is rejected") {
    const auto net = two_neighborhoods({1}, {1}, 3);
    CHECK_THROWS_AS(build_supra(net, 1.1), ValidationError);
    CHECK_THROWS_AS(build_supra(net, -0.1), ValidationError);
  }

  TEST_CASE("identical layers couple every non-isolated replica at any threshold") {
    NetworkBuilder b(5, 2);
    for (LayerId l = 0; l < 2; ++l) {
      b.add_edge(l, 0, 1);
      b.add_edge(l, 1, 2);
      b.add_edge(l, 2, 0);
      b.add_node(l, 3);
      b.add_edge(l, 4, 0);
    }
    const auto net = std::move(b).build();
    for (double theta : {0.0, 0.5, 1.0}) {
      const auto g = build_supra(net, theta);
      for (SupraIndex v = 0; v < g.num_nodes(); ++v) {
        const bool isolated = net.degree(net.supra_node(v)) == 0;
        CHECK(g.coupled(v).size() == (isolated ? 0U : 1U));
      }
    }
  }

  TEST_CASE("disjoint neighborhoods at theta = 1 keep intra edges only") {
    const auto g = build_supra(two_neighborhoods({1, 2}, {3, 4}, 5), 1.0);
    CHECK(g.inter_edges().empty());
    const auto idx = g.base().index_of({0, 0});
    CHECK(g.degree(idx) == 2);
  }

  TEST_CASE("neighbor order: intra then counterparts") {
    // Node 0: neighbors {1, 2} in layer 0 and {1, 2} in layer 1 -> coupled.
    const auto g = build_supra(two_neighborhoods({1, 2}, {1, 2}, 3), 0.1);
    const auto& net = g.base();
    const auto nb = g.supra_neighbors({0, 0});
    REQUIRE(nb.size() == 3);
    CHECK(nb[0] == SupraNode{1, 0});
    CHECK(nb[1] == SupraNode{2, 0});
    CHECK(nb[2] == SupraNode{0, 1});
    CHECK(g.has_edge(net.index_of({0, 0}), net.index_of({0, 1})));
    CHECK(g.coupled(net.index_of({0, 1})).size() == 1);
  }

  TEST_CASE("three-layer toy agrees with a brute-force coupling check") {
    NetworkBuilder b(7, 3);
    const std::vector<std::pair<NodeId, NodeId>> base = {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 6}};
    for (auto [u, v] : base) b.add_edge(0, u, v);
    for (auto [u, v] : std::vector<std::pair<NodeId, NodeId>>{{0, 1}, {1, 2}, {3, 4}, {5, 6}, {2, 6}}) b.add_edge(1, u, v);
    for (auto [u, v] : std::vector<std::pair<NodeId, NodeId>>{{0, 1}, {2, 0}, {4, 5}, {3, 6}}) b.add_edge(2, u, v);
    const auto net = std::move(b).build();
    for (double theta : {0.0, 0.1, 0.3, 0.5, 1.0}) {
      const auto g = build_supra(net, theta);
      for (SupraIndex a = 0; a < g.num_nodes(); ++a) {
        for (SupraIndex c = 0; c < g.num_nodes(); ++c) {
          const auto sa = net.supra_node(a);
          const auto sc = net.supra_node(c);
          bool expected = false;
          if (sa.layer == sc.layer) {
            expected = oracle::adjacent(net, sa.layer, sa.node, sc.node);
          } else if (sa.node == sc.node) {
            const double j = oracle::jaccard(net, sa.node, sa.layer, sc.layer);
            expected = j >= theta && j > 0.0;
          }
          CHECK(g.has_edge(a, c) == expected);
        }
      }
    }
  }

  TEST_CASE("random networks: counterpart-only, symmetric, monotone in theta") {
    Rng rng(21);
    for (int trial = 0; trial < 30; ++trial) {
      const auto net = oracle::random_network(rng, 8, 3, 0.4);
      std::size_t previous = std::numeric_limits<std::size_t>::max();
      for (double theta : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
        const auto g = build_supra(net, theta);
        for (const auto& e : g.inter_edges()) {
          CHECK(e.a.node == e.b.node);
          CHECK(e.a.layer < e.b.layer);
          CHECK(e.weight >= theta);
          CHECK(e.weight == doctest::Approx(oracle::jaccard(net, e.a.node, e.a.layer, e.b.layer)));
        }
        for (SupraIndex a = 0; a < g.num_nodes(); ++a) {
          for (SupraIndex c : g.neighbors(a)) CHECK(g.has_edge(c, a));
        }
        CHECK(g.inter_edges().size() <= previous);
        previous = g.inter_edges().size();
        CHECK(g.num_intra_edges() == [&] {
          std::size_t m = 0;
          for (const auto& layer : net.layers()) m += layer.num_edges();
          return m;
        }());
      }
      for (NodeId i = 0; i < net.num_nodes(); ++i) {
        for (LayerId l : net.layers_of(i)) {
          for (LayerId m : net.layers_of(i)) {
            const double j = jaccard_coupling(net, i, l, m);
            CHECK(j == doctest::Approx(jaccard_coupling(net, i, m, l)));
            CHECK(j >= 0.0);
            CHECK(j <= 1.0);
          }
        }
      }
    }
  }

  TEST_CASE("stats and export") {
    const auto g = build_supra(two_neighborhoods({1, 2}, {1, 2}, 3), 0.1);
    REQUIRE(g.coupling_stats().size() == 1);
    CHECK(g.coupling_stats()[0].candidates == 3);
    CHECK(g.coupling_stats()[0].retained == g.inter_edges().size());
    std::ostringstream out;
    write_supra_edges(out, g);
    CHECK(out.str().find("inter:0-1 0 0") != std::string::npos);
  }
}
