#include "mlembed/errors.hpp"
#include "mlembed/eval.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace mlembed;

namespace {

LabelTable make_labels(const std::vector<int>& y, int classes) {
  LabelTable t;
  t.labels = y;
  for (int c = 0; c < classes; ++c) t.class_tokens.push_back("c" + std::to_string(c));
  return t;
}

EmbedConfig small_embed(std::uint64_t seed) {
  EmbedConfig cfg;
  cfg.walk = WalkConfig{5, 20, seed, 1};
  cfg.sgns.dim = 8;
  cfg.sgns.epochs = 2;
  cfg.sgns.seed = seed;
  return cfg;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("mean aggregation") {
    NetworkBuilder b(3, 3);
    b.add_edge(0, 0, 1);
    b.add_edge(1, 0, 1);
    b.add_edge(2, 0, 2);
    const auto net = std::move(b).build();
    Matrix reps = Matrix::Zero(static_cast<Eigen::Index>(net.num_supra()), 3);
    for (LayerId l = 0; l < 3; ++l) reps(net.index_of({0, l}), l) = 1.0;
    reps.row(net.index_of({1, 0})) << 1, 2, 3;
    reps.row(net.index_of({1, 1})) << -1, -2, -3;
    reps.row(net.index_of({2, 2})) << 4, 5, 6;
    const auto mean = aggregate_node_vectors(reps, net);
    CHECK(mean.row(0).isApprox(RowVector::Constant(3, 1.0 / 3.0)));
    CHECK(mean.row(1).norm() == 0.0);
    CHECK(mean.row(2) == reps.row(net.index_of({2, 2})));

    const auto concat = aggregate_node_vectors(reps, net, Aggregation::Concat);
    CHECK(concat.cols() == 9);
    CHECK(concat.row(2).head(6).norm() == 0.0);
    CHECK(concat.row(2).tail(3) == reps.row(net.index_of({2, 2})));
  }

  TEST_CASE("separable blobs classify perfectly") {
    Rng rng(1);
    Matrix x(90, 4);
    std::vector<int> y(90);
    for (Eigen::Index i = 0; i < 90; ++i) {
      y[static_cast<std::size_t>(i)] = static_cast<int>(i % 3);
      for (int j = 0; j < 4; ++j) x(i, j) = (j == y[static_cast<std::size_t>(i)] ? 5.0 : 0.0) + uniform01(rng) - 0.5;
    }
    const auto r = node_classification_eval(x, make_labels(y, 3), 3, 7);
    CHECK(r.accuracy.size() == 3);
    CHECK(r.mean == doctest::Approx(100.0));
  }

  TEST_CASE("random labels sit at chance") {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed);
      Matrix x(200, 8);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = uniform01(rng);
      std::vector<int> y(200);
      for (std::size_t i = 0; i < 200; ++i) y[i] = static_cast<int>(i % 2);
      shuffle(y.begin(), y.end(), rng);
      total += node_classification_eval(x, make_labels(y, 2), 3, seed).mean;
    }
    CHECK(total / 20.0 == doctest::Approx(50.0).epsilon(0.1));
  }

  TEST_CASE("unlabeled nodes are ignored and thin classes rejected") {
    Matrix x = Matrix::Random(8, 2);
    CHECK_THROWS_AS(node_classification_eval(x, make_labels({0, 0, 0, 1, 1, -1, -1, -1}, 2), 3, 1), ValidationError);
    CHECK_NOTHROW(node_classification_eval(x, make_labels({0, 0, 0, 1, 1, 1, -1, -1}, 2), 3, 1));
  }

  TEST_CASE("stratified folds balance every class") {
    std::vector<int> y;
    for (int i = 0; i < 30; ++i) y.push_back(i < 12 ? 0 : 1);
    const auto folds = stratified_folds(y, 3, 5);
    std::vector<std::vector<int>> count(3, std::vector<int>(2, 0));
    for (std::size_t i = 0; i < y.size(); ++i) ++count[static_cast<std::size_t>(folds[i])][static_cast<std::size_t>(y[i])];
    for (int f = 0; f < 3; ++f) {
      CHECK(count[f][0] == 4);
      CHECK(count[f][1] == 6);
    }
  }

  TEST_CASE("logistic regression objective decreases") {
    Matrix x = Matrix::Random(40, 3);
    std::vector<int> y(40);
    for (std::size_t i = 0; i < 40; ++i) y[i] = x(static_cast<Eigen::Index>(i), 0) > 0 ? 1 : 0;
    LogisticRegression short_fit({1e-4, 5, 1e-6});
    short_fit.fit(x, y, 2);
    LogisticRegression full_fit;
    full_fit.fit(x, y, 2);
    CHECK(full_fit.objective(x, y) < short_fit.objective(x, y));
    const auto p = full_fit.predict_proba(x);
    for (Eigen::Index i = 0; i < p.rows(); ++i) CHECK(p.row(i).sum() == doctest::Approx(1.0));
  }

  TEST_CASE("auroc examples") {
    CHECK(auroc(std::vector<double>{0.9}, std::vector<double>{0.1}) == 1.0);
    CHECK(auroc(std::vector<double>{0.3, 0.3}, std::vector<double>{0.3, 0.3}) == 0.5);
    CHECK(auroc(std::vector<double>{0.8, 0.4}, std::vector<double>{0.6, 0.2}) == 0.75);
    CHECK(auroc(std::vector<double>{0.1}, std::vector<double>{0.9}) == 0.0);
    CHECK_THROWS_AS(auroc(std::vector<double>{}, std::vector<double>{0.1}), ValidationError);
  }

  TEST_CASE("auroc is invariant under monotone transforms and matches pair counting") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> pos(15), neg(12);
      // Coarse values so that ties occur.
      for (auto& s : pos) s = std::floor(uniform01(rng) * 8.0) / 8.0;
      for (auto& s : neg) s = std::floor(uniform01(rng) * 8.0) / 8.0;
      double pairs = 0.0;
      for (double a : pos) {
        for (double b : neg) pairs += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
      }
      const double value = auroc(pos, neg);
      CHECK(value == doctest::Approx(pairs / (15.0 * 12.0)));
      std::vector<double> tp, tn;
      for (double s : pos) tp.push_back(std::exp(3.0 * s) - 7.0);
      for (double s : neg) tn.push_back(std::exp(3.0 * s) - 7.0);
      CHECK(auroc(tp, tn) == doctest::Approx(value));
    }
  }

  TEST_CASE("edge folds partition each layer and removal keeps replicas") {
    Rng rng(9);
    const auto net = oracle::random_network(rng, 20, 2, 0.3);
    const auto folds = edge_folds(net, 5, 2);
    for (LayerId l = 0; l < 2; ++l) {
      std::vector<int> sizes(5, 0);
      for (int f : folds[l]) ++sizes[static_cast<std::size_t>(f)];
      CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
    }
    std::size_t kept = 0;
    for (int f = 0; f < 5; ++f) {
      const auto partial = remove_fold(net, folds, f);
      CHECK(partial.num_supra() == net.num_supra());
      for (LayerId l = 0; l < 2; ++l) kept += partial.layer(l).num_edges();
    }
    CHECK(kept == 4 * (net.layer(0).num_edges() + net.layer(1).num_edges()));
  }

  TEST_CASE("non-edges are valid and distinct") {
    Rng rng(4);
    const auto net = oracle::random_network(rng, 15, 1, 0.3, 1.0);
    const auto& layer = net.layer(0);
    const std::size_t absent = 15 * 14 / 2 - layer.num_edges();
    for (std::size_t count : {std::size_t{5}, absent / 2, absent}) {
      const auto pairs = sample_non_edges(layer, count, rng);
      CHECK(pairs.size() == count);
      std::set<std::pair<NodeId, NodeId>> seen;
      for (auto [u, v] : pairs) {
        CHECK(u < v);
        CHECK_FALSE(oracle::adjacent(net, 0, u, v));
        CHECK(seen.emplace(u, v).second);
      }
    }
    CHECK_THROWS_AS(sample_non_edges(layer, absent + 1, rng), ValidationError);
  }

  TEST_CASE("link prediction shapes and range") {
    SbmSpec spec;
    spec.nodes = 30;
    spec.p_in = 0.5;
    spec.p_out = 0.05;
    const auto sample = generate_sbm(spec);
    const auto r = link_prediction_eval(sample.net, small_embed(3), {3, 4});
    REQUIRE(r.auroc.size() == 2);
    for (const auto& layer : r.auroc) {
      CHECK(layer.size() == 3);
      for (double a : layer) {
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
      }
    }
    CHECK(r.mean > 0.5);
  }

  TEST_CASE("community sweep") {
    SbmSpec spec;
    spec.nodes = 30;
    spec.p_in = 0.6;
    spec.p_out = 0.02;
    const auto sample = generate_sbm(spec);
    const auto g = build_supra(sample.net, 0.1);
    const auto out = embed_network(sample.net, small_embed(5));
    const std::vector<int> ks{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const auto sweep = community_detection_eval(out.embeddings, g, ks, {}, 1, 2);
    REQUIRE(sweep.size() == ks.size());
    // K = 1 puts everything in one community.
    CHECK(sweep[0].quality == doctest::Approx(modularity_multislice(g, Assignment(g.num_nodes(), 0))));
    const double planted = modularity_multislice(g, sample.planted);
    CHECK(sweep[2].quality >= 0.95 * planted);

    // Identical rows: only K = 1 survives.
    const Matrix flat = Matrix::Ones(static_cast<Eigen::Index>(g.num_nodes()), 4);
    const auto degenerate = community_detection_eval(flat, g, ks, {}, 1, 1);
    REQUIRE(degenerate.size() == 1);
    CHECK(degenerate[0].k == 1);
    const std::vector<int> too_many{static_cast<int>(g.num_nodes()) + 1};
    CHECK(community_detection_eval(out.embeddings, g, too_many, {}, 1, 1).empty());
  }

  TEST_CASE("sbm structure") {
    SbmSpec cliques;
    cliques.nodes = 12;
    cliques.blocks = 3;
    cliques.p_in = 1.0;
    cliques.p_out = 0.0;
    const auto s = generate_sbm(cliques);
    for (LayerId l = 0; l < 2; ++l) {
      CHECK(s.net.layer(l).num_edges() == 3 * 6);
      for (auto [u, v] : s.net.layer(l).edges()) CHECK(s.blocks[l][u] == s.blocks[l][v]);
    }

    SbmSpec dense;
    dense.nodes = 120;
    dense.blocks = 2;
    dense.p_in = 0.3;
    dense.p_out = 0.05;
    dense.layers = 1;
    const auto d = generate_sbm(dense);
    double intra_edges = 0.0;
    for (auto [u, v] : d.net.layer(0).edges()) intra_edges += d.blocks[0][u] == d.blocks[0][v] ? 1.0 : 0.0;
    const double pairs = 2.0 * 60.0 * 59.0 / 2.0;
    const double sd = std::sqrt(pairs * 0.3 * 0.7);
    CHECK(std::abs(intra_edges - 0.3 * pairs) < 3.0 * sd);

    SbmSpec mixed = dense;
    mixed.layers = 2;
    mixed.shared = {true, false};
    const auto m = generate_sbm(mixed);
    CHECK(m.blocks[0] != m.blocks[1]);
    CHECK(generate_sbm(mixed).planted == m.planted);

    SbmSpec bad;
    bad.p_out = 0.5;
    CHECK_THROWS_AS(generate_sbm(bad), ValidationError);
  }

  TEST_CASE("nmi properties") {
    const std::vector<int> a{0, 0, 1, 1, 2, 2};
    CHECK(nmi(a, a) == doctest::Approx(1.0));
    CHECK(nmi(a, std::vector<int>{5, 5, 3, 3, 9, 9}) == doctest::Approx(1.0));
    CHECK(nmi(a, std::vector<int>(6, 0)) == 0.0);
    CHECK(nmi(std::vector<int>(6, 1), std::vector<int>(6, 0)) == 1.0);
    const std::vector<int> b{0, 1, 0, 1, 0, 1};
    CHECK(nmi(a, b) == doctest::Approx(nmi(b, a)));
    CHECK(nmi(a, b) < 0.5);
  }

  TEST_CASE("csv output") {
    const std::vector<ResultRow> rows{{"accuracy", "toy", "fold0", 99.5}, {"auroc", "toy,x", "0/1", 0.25}};
    std::ostringstream out;
    write_results_csv(out, rows);
    CHECK(out.str() == "metric,dataset,key,value\naccuracy,toy,fold0,99.5\nauroc,\"toy,x\",0/1,0.25\n");
  }
}
