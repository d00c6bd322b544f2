#include "mlembed/errors.hpp"
#include "mlembed/refine.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace mlembed;

namespace {

// Two 4-cliques joined by the edge 3-4.
SupraGraph two_cliques() {
  NetworkBuilder b(8, 1);
  for (NodeId base : {0u, 4u}) {
    for (NodeId u = base; u < base + 4; ++u) {
      for (NodeId v = u + 1; v < base + 4; ++v) b.add_edge(0, u, v);
    }
  }
  b.add_edge(0, 3, 4);
  return build_supra(std::move(b).build(), 0.1);
}

// Two noisy blobs around random centers in [-1, 1]^dim.
Matrix blobs(std::size_t per_blob, int dim, std::uint64_t seed) {
  Rng rng(seed);
  Matrix centers(2, dim);
  for (Eigen::Index i = 0; i < centers.size(); ++i) centers.data()[i] = 2.0 * uniform01(rng) - 1.0;
  Matrix x(static_cast<Eigen::Index>(2 * per_blob), dim);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto c = i < static_cast<Eigen::Index>(per_blob) ? 0 : 1;
    for (int j = 0; j < dim; ++j) x(i, j) = centers(c, j) + 0.2 * (uniform01(rng) - 0.5);
  }
  return x;
}

}  // namespace

TEST_SUITE("refine") {
  TEST_CASE("soft assignment closed forms") {
    Matrix mu(2, 1);
    mu << 0, 2;
    Matrix x(1, 1);
    x << 1;
    auto q = soft_assign(x, mu);
    CHECK(q(0, 0) == doctest::Approx(0.5));

    x << 0;
    mu << 0, 1;
    q = soft_assign(x, mu);
    CHECK(q(0, 0) == doctest::Approx(2.0 / 3.0));
    CHECK(q(0, 1) == doctest::Approx(1.0 / 3.0));

    Matrix mu3(3, 1);
    mu3 << 0, 1, 2;
    q = soft_assign(x, mu3);
    CHECK(q(0, 0) == doctest::Approx(10.0 / 17.0));
    CHECK(q(0, 1) == doctest::Approx(5.0 / 17.0));
    CHECK(q(0, 2) == doctest::Approx(2.0 / 17.0));

    Matrix xs = Matrix::Random(7, 3);
    Matrix ms = Matrix::Random(4, 3);
    CHECK((soft_assign(xs, ms) - oracle::soft_assign(xs, ms)).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("target distribution") {
    Matrix q(2, 2);
    q << 0.9, 0.1, 0.6, 0.4;
    const auto p = target_distribution(q);
    CHECK(p(0, 0) == doctest::Approx(0.9643).epsilon(1e-4));
    CHECK(p(0, 1) == doctest::Approx(0.0357).epsilon(1e-3));
    CHECK((p - oracle::target_distribution(q)).cwiseAbs().maxCoeff() < 1e-15);

    Matrix uniform = Matrix::Constant(3, 4, 0.25);
    CHECK((target_distribution(uniform) - uniform).cwiseAbs().maxCoeff() < 1e-15);
    Matrix single(1, 3);
    single << 0.2, 0.5, 0.3;
    CHECK((target_distribution(single) - single).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("kl divergence") {
    Matrix p(1, 2), q(1, 2);
    p << 1, 0;
    q << 0.5, 0.5;
    CHECK(kl_divergence(p, q) == doctest::Approx(std::log(2.0)));
    CHECK(kl_divergence(q, q) == 0.0);
  }

  TEST_CASE("autoencoder gradients match finite differences") {
    RefineNet net(8, {4, 4, 4}, 5);
    // Nonzero biases so every parameter is exercised.
    Vector theta = net.flatten();
    Rng rng(2);
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) += 0.05 * (uniform01(rng) - 0.5);
    net.unflatten(theta);
    const Matrix x = Matrix::Random(6, 8);
    double loss = 0.0;
    const auto grads = autoencoder_gradients(net, x, &loss);
    auto f = [&](const Vector& t) {
      RefineNet copy = net;
      copy.unflatten(t);
      const Matrix r = copy.forward(x) - x;
      return r.rowwise().squaredNorm().mean();
    };
    CHECK(loss == doctest::Approx(f(theta)));
    CHECK(oracle::relative_error(RefineNet::flatten(grads), oracle::numeric_gradient(f, theta)) < 1e-6);
  }

  TEST_CASE("kl gradients match finite differences for weights and centroids") {
    RefineNet net(6, {5, 3, 5}, 8);
    // Off the ReLU kinks: zero biases behind a dead unit sit exactly at 0.
    Vector shifted = net.flatten();
    Rng rng(6);
    for (Eigen::Index i = 0; i < shifted.size(); ++i) shifted(i) += 0.05 * (uniform01(rng) - 0.5);
    net.unflatten(shifted);
    const Matrix x = Matrix::Random(9, 6);
    Matrix mu = Matrix::Random(3, 6);
    const Matrix p = target_distribution(soft_assign(Matrix::Random(9, 6), mu));
    const auto grads = kl_loss(net, x, mu, p);
    const Vector theta = net.flatten();
    auto f_net = [&](const Vector& t) {
      RefineNet copy = net;
      copy.unflatten(t);
      return oracle::kl(p, oracle::soft_assign(copy.forward(x), mu));
    };
    CHECK(grads.loss == doctest::Approx(f_net(theta)));
    CHECK(oracle::relative_error(RefineNet::flatten(grads.net), oracle::numeric_gradient(f_net, theta)) < 1e-6);

    const Vector m0 = Eigen::Map<const Vector>(mu.data(), mu.size());
    const Matrix xbar = net.forward(x);
    auto f_mu = [&](const Vector& m) {
      Matrix c = mu;
      Eigen::Map<Vector>(c.data(), c.size()) = m;
      return oracle::kl(p, oracle::soft_assign(xbar, c));
    };
    const Vector analytic = Eigen::Map<const Vector>(grads.centroids.data(), grads.centroids.size());
    CHECK(oracle::relative_error(analytic, oracle::numeric_gradient(f_mu, m0)) < 1e-6);
  }

  TEST_CASE("pretraining") {
    const Matrix x = blobs(20, 6, 1);
    RefineNet net(6, default_hidden_widths(6), 3);
    const Vector before = net.flatten();
    PretrainOptions none;
    none.epochs = 0;
    pretrain_autoencoder(net, x, none);
    CHECK(net.flatten() == before);

    PretrainOptions opts;
    opts.epochs = 100;
    opts.lr = 1e-2;
    opts.batch_size = 16;
    const auto report = pretrain_autoencoder(net, x, opts);
    CHECK(report.final_loss < report.initial_loss);
    CHECK(report.epoch_loss.size() == 100);
  }

  TEST_CASE("default widths") {
    CHECK(default_hidden_widths(128) == std::array<int, 3>{256, 64, 256});
    CHECK(default_hidden_widths(1) == std::array<int, 3>{2, 1, 2});
  }

  TEST_CASE("rank sampler") {
    CHECK(RankSampler(100).tau() == doctest::Approx(1.2171).epsilon(1e-4));
    CHECK_THROWS_AS(RankSampler(1), ValidationError);
    const RankSampler s(50);
    double total = 0.0;
    for (std::size_t r = 1; r <= 50; ++r) {
      total += s.mass(r);
      if (r > 1) CHECK(s.mass(r) < s.mass(r - 1));
    }
    CHECK(total == doctest::Approx(1.0));
    CHECK(s.mass(1) / s.mass(2) == doctest::Approx(std::pow(2.0, s.tau())));

    Rng rng(4);
    std::vector<double> hits(11, 0.0);
    const int draws = 200'000;
    for (int i = 0; i < draws; ++i) hits[(s.sample(rng) - 1) / 5] += 1.0;
    for (std::size_t decile = 0; decile < 10; ++decile) {
      double expected = 0.0;
      for (std::size_t r = decile * 5 + 1; r <= decile * 5 + 5; ++r) expected += s.mass(r);
      CHECK(std::abs(hits[decile] / draws - expected) < 0.01);
    }
  }

  TEST_CASE("mislabeled node is the least fit and its best move restores the planted split") {
    const auto g = two_cliques();
    Assignment a{0, 0, 0, 0, 1, 1, 1, 1};
    const double planted = modularity_multislice(g, a);
    a[0] = 1;
    const PartitionState state(g, a, 2);
    CHECK(rank_by_fitness(state)[0] == 0);
    const auto fit = state.all_fitness();
    for (SupraIndex v = 1; v < 8; ++v) CHECK(fit[0] < fit[v]);
    // Exhaustive check over all single moves.
    double best = -1.0;
    SupraIndex best_v = 0;
    int best_c = 0;
    for (SupraIndex v = 0; v < 8; ++v) {
      for (int c = 0; c < 2; ++c) {
        if (state.gain_of_move(v, c) > best) {
          best = state.gain_of_move(v, c);
          best_v = v;
          best_c = c;
        }
      }
    }
    CHECK(best_v == 0);
    CHECK(best_c == 0);
    CHECK(best > 0.0);
    CHECK(state.quality() + best == doctest::Approx(planted));
  }

  TEST_CASE("moves update labels and boost q") {
    const auto g = two_cliques();
    Assignment a{1, 0, 0, 0, 1, 1, 1, 1};
    RefineConfig cfg;
    cfg.moves_per_iter = 0;
    PartitionState state(g, a, 2);
    Matrix q = Matrix::Constant(8, 2, 0.5);
    Rng rng(1);
    const auto none = modularity_moves(state, q, cfg, rng);
    CHECK(none.moves == 0);
    CHECK(state.assignment() == a);
    CHECK(q == Matrix::Constant(8, 2, 0.5));

    // Draw until the sampler picks node 0; every other node stays put.
    cfg.moves_per_iter = 1;
    bool restored = false;
    for (int attempt = 0; attempt < 50 && !restored; ++attempt) {
      const auto summary = modularity_moves(state, q, cfg, rng);
      CHECK(summary.gains.size() == 1);
      restored = state.community(0) == 0;
    }
    CHECK(restored);
    CHECK(state.assignment() == Assignment{0, 0, 0, 0, 1, 1, 1, 1});
    for (Eigen::Index i = 0; i < 8; ++i) CHECK(q.row(i).sum() == doctest::Approx(1.0));
    CHECK(q(0, 0) > q(0, 1));
    CHECK(state.consistent());
  }

  TEST_CASE("configuration validation") {
    RefineConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.clusters = 1;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = RefineConfig{};
    cfg.boost = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = RefineConfig{};
    CHECK(cfg.resolved_moves(50) == 1);
    CHECK(cfg.resolved_moves(1234) == 12);
  }

  TEST_CASE("zero outer iterations returns the autoencoder output and k-means labels") {
    const auto g = two_cliques();
    const Matrix x = blobs(4, 8, 3);
    RefineConfig cfg;
    cfg.max_outer_iters = 0;
    cfg.pretrain.epochs = 20;
    const auto r = refine(x, g, cfg);
    CHECK(r.outer_iterations == 0);
    CHECK(r.labels == r.initial_labels);
    CHECK(r.final_quality == r.initial_quality);

    RefineNet net(8, default_hidden_widths(8), cfg.seed);
    auto opts = cfg.pretrain;
    opts.seed = derive_seed(cfg.seed, 1);
    pretrain_autoencoder(net, x, opts);
    CHECK(r.embeddings == net.forward(x));
  }

  TEST_CASE("refinement is deterministic and keeps shapes") {
    const auto g = two_cliques();
    const Matrix x = blobs(4, 8, 7);
    RefineConfig cfg;
    cfg.pretrain.epochs = 30;
    cfg.max_outer_iters = 5;
    const auto a = refine(x, g, cfg);
    const auto b = refine(x, g, cfg);
    CHECK(a.embeddings == b.embeddings);
    CHECK(a.labels == b.labels);
    CHECK(a.labels.size() == 8);
    CHECK(a.centroids.rows() == 2);
    for (int c : a.labels) CHECK((c == 0 || c == 1));
    CHECK(std::abs(a.final_quality - modularity_multislice(g, a.labels)) < 1e-12);
  }
}
