#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <doctest.h>

#include "qftk/bayesopt.hpp"
#include "qftk/errors.hpp"
#include "qftk/krr.hpp"
#include "qftk/metrics.hpp"
#include "qftk/mixopt.hpp"
#include "qftk/rng.hpp"

using namespace qftk;

namespace {

KernelMatrix tt(Eigen::MatrixXd v) { return {std::move(v), MatrixKind::TrainTrain, "t"}; }
KernelMatrix et(Eigen::MatrixXd v) { return {std::move(v), MatrixKind::EvalTrain, "t"}; }

// y depends on one feature only; the second kernel sees unrelated noise
// features. Linear kernels throughout.
struct Discrimination {
  std::vector<KernelMatrix> train, val;
  Eigen::VectorXd y_train, y_val;
};

Discrimination discrimination_problem(std::uint64_t seed) {
  const int nt = 80, nv = 40, noise_dims = 10;
  Rng rng(seed);
  Eigen::MatrixXd x(nt + nv, 1), z(nt + nv, noise_dims);
  Eigen::VectorXd y(nt + nv);
  for (int i = 0; i < nt + nv; ++i) {
    x(i, 0) = rng.normal();
    y(i) = 2.0 * x(i, 0) + 0.1 * rng.normal();
    for (int d = 0; d < noise_dims; ++d) z(i, d) = rng.normal();
  }
  auto lin = [](const Eigen::MatrixXd& f, Eigen::Index r0, Eigen::Index nr, Eigen::Index nc) {
    return Eigen::MatrixXd(f.middleRows(r0, nr) * f.topRows(nc).transpose() / static_cast<double>(f.cols()));
  };
  Discrimination p;
  p.train = {tt(lin(x, 0, nt, nt)), tt(lin(z, 0, nt, nt))};
  p.val = {et(lin(x, nt, nv, nt)), et(lin(z, nt, nv, nt))};
  p.y_train = y.head(nt);
  p.y_val = y.tail(nv);
  return p;
}

Eigen::MatrixXd random_spd(Rng& rng, Eigen::Index n) {
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = rng.normal();
  return a * a.transpose() / static_cast<double>(n);
}

}  // namespace

TEST_SUITE("bayesopt") {

TEST_CASE("latin hypercube fills every stratum once per axis") {
  Rng rng(1);
  const Eigen::MatrixXd d = latin_hypercube(8, 3, rng);
  for (int c = 0; c < 3; ++c) {
    std::set<int> strata;
    for (int i = 0; i < 8; ++i) {
      CHECK(d(i, c) >= 0.0);
      CHECK(d(i, c) < 1.0);
      strata.insert(static_cast<int>(d(i, c) * 8));
    }
    CHECK(strata.size() == 8);
  }
}

TEST_CASE("matern and expected improvement") {
  CHECK(gp::matern52(0.0, 0.3) == 1.0);
  CHECK(gp::matern52(0.5, 0.3) < gp::matern52(0.1, 0.3));
  CHECK(gp::expected_improvement(1.0, 0.0, 0.5) == 0.0);
  CHECK(gp::expected_improvement(0.2, 0.0, 0.5) == doctest::Approx(0.3));
  CHECK(gp::expected_improvement(0.5, 1.0, 0.5) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)));
  CHECK(gp::expected_improvement(0.5, 2.0, 0.5) > gp::expected_improvement(0.5, 1.0, 0.5));
}

TEST_CASE("gp interpolates its observations") {
  Rng rng(2);
  Eigen::MatrixXd x(12, 2);
  Eigen::VectorXd y(12);
  for (int i = 0; i < 12; ++i) {
    x(i, 0) = rng.uniform();
    x(i, 1) = rng.uniform();
    y(i) = std::sin(3 * x(i, 0)) + x(i, 1) * x(i, 1);
  }
  const gp::Regressor model(x, y);
  const auto post = model.predict(x);
  CHECK((post.mean - y).cwiseAbs().maxCoeff() < 1e-3);
  CHECK(post.stddev.maxCoeff() < 1e-2);
}

TEST_CASE("minimizer stays in the box, is seeded, and finds a smooth minimum") {
  auto run = [](ProposalStrategy s, std::uint64_t seed) {
    SequentialMinimizer opt((Eigen::VectorXd(2) << -1, 0).finished(), (Eigen::VectorXd(2) << 1, 2).finished(), 25,
                            seed, s);
    for (int i = 0; i < 25; ++i) {
      const Eigen::VectorXd x = opt.ask();
      CHECK(x(0) >= -1.0);
      CHECK(x(0) <= 1.0);
      CHECK(x(1) >= 0.0);
      CHECK(x(1) <= 2.0);
      opt.tell(x, (x(0) - 0.3) * (x(0) - 0.3) + (x(1) - 1.2) * (x(1) - 1.2));
    }
    return opt;
  };
  const auto a = run(ProposalStrategy::GpExpectedImprovement, 7);
  const auto b = run(ProposalStrategy::GpExpectedImprovement, 7);
  for (std::size_t i = 0; i < a.points().size(); ++i) CHECK(a.points()[i] == b.points()[i]);
  CHECK(a.values()[static_cast<std::size_t>(a.incumbent())] < 1e-2);
  const auto r = run(ProposalStrategy::RandomSearch, 7);
  CHECK(r.incumbent() >= 0);
}

TEST_CASE("non-finite observations do not poison the surrogate") {
  SequentialMinimizer opt(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1), 12, 3);
  for (int i = 0; i < 12; ++i) {
    const Eigen::VectorXd x = opt.ask();
    opt.tell(x, x(0) < 0.5 ? std::numeric_limits<double>::infinity() : x(0));
  }
  CHECK(opt.incumbent() >= 0);
  CHECK(opt.points()[static_cast<std::size_t>(opt.incumbent())](0) >= 0.5);
}

}  // TEST_SUITE

TEST_SUITE("mixopt") {

TEST_CASE("softmax weights") {
  const auto u = softmax_weights(Eigen::VectorXd::Zero(3));
  for (int i = 0; i < 3; ++i) CHECK(u.weights(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const auto s = softmax_weights((Eigen::VectorXd(2) << 4, -4).finished());
  CHECK(s.weights(0) == doctest::Approx(std::exp(8.0) / (std::exp(8.0) + 1.0)).epsilon(1e-14));
  CHECK(std::abs(s.weights(0) - 0.99966) < 1e-5);
  CHECK_THROWS_AS(softmax_weights((Eigen::VectorXd(2) << 4.01, 0).finished()), Error);

  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    Eigen::VectorXd v(5);
    for (int i = 0; i < 5; ++i) v(i) = rng.uniform(-4, 4);
    const auto w = softmax_weights(v);
    Eigen::Index av, aw;
    v.maxCoeff(&av);
    w.weights.maxCoeff(&aw);
    CHECK(av == aw);
    CHECK(std::abs(w.weights.sum() - 1.0) < 1e-12);
    CHECK(w.weights.minCoeff() > 0.0);
  }
}

TEST_CASE("renormalized weights") {
  const auto h = renormalize_weights((Eigen::VectorXd(2) << 0.2, 0.2).finished());
  CHECK(h.weights(0) == 0.5);
  CHECK(h.weights(1) == 0.5);
  const auto one = renormalize_weights((Eigen::VectorXd(3) << 1, 0, 0).finished());
  CHECK(one.weights == (Eigen::VectorXd(3) << 1, 0, 0).finished());
  CHECK_FALSE(one.degenerate);
  const auto z = renormalize_weights(Eigen::VectorXd::Zero(4));
  CHECK(z.degenerate);
  CHECK(z.weights == Eigen::VectorXd::Constant(4, 0.25));
  CHECK_THROWS_AS(renormalize_weights((Eigen::VectorXd(2) << -0.1, 0.5).finished()), Error);
}

TEST_CASE("mixing") {
  Rng rng(5);
  const Eigen::MatrixXd a = random_spd(rng, 6), b = random_spd(rng, 6);
  const std::vector<KernelMatrix> mats{tt(a), tt(b)};
  CHECK(mix_kernels(mats, renormalize_weights((Eigen::VectorXd(2) << 1, 0).finished())).values == a);
  const auto mean = mix_kernels(mats, renormalize_weights((Eigen::VectorXd(2) << 0.5, 0.5).finished()));
  CHECK((mean.values - (a + b) / 2).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((mean.values - mean.values.transpose()).cwiseAbs().maxCoeff() <= 1e-12);

  const auto w = renormalize_weights((Eigen::VectorXd(2) << 0.5, 0.5).finished());
  try {
    mix_kernels({tt(a), et(b)}, w);
    FAIL("expected KindMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::KindMismatch);
  }
  try {
    mix_kernels({tt(a), tt(Eigen::MatrixXd::Zero(5, 5))}, w);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("jitter") {
  const auto j = add_jitter(tt(Eigen::MatrixXd::Identity(4, 4)));
  CHECK(j.values.diagonal() == Eigen::VectorXd::Constant(4, 1.0 + 1e-6));
  CHECK(add_jitter(tt(Eigen::MatrixXd::Zero(3, 3))).values == Eigen::MatrixXd::Zero(3, 3));

  Rng rng(6);
  const Eigen::MatrixXd k = random_spd(rng, 10);
  const double eps = jitter_epsilon(k);
  const Eigen::VectorXd before = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues();
  const Eigen::VectorXd after = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(add_jitter(tt(k)).values).eigenvalues();
  CHECK(((after - before).array() - eps).abs().maxCoeff() < 1e-12);
}

TEST_CASE("alpha grid") {
  const auto g = default_alpha_grid();
  REQUIRE(g.size() == 100);
  CHECK(g.front() == doctest::Approx(1e-6));
  CHECK(g.back() == doctest::Approx(1e3));
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
  OptimizationBudget b;
  b.alpha_grid = {1.0, 1.0};
  CHECK_THROWS_AS(b.validate(), Error);
  b = OptimizationBudget{};
  b.outer_calls = 0;
  CHECK_THROWS_AS(b.validate(), Error);
}

TEST_CASE("alpha search on the identity toy picks the smallest ridge") {
  const Eigen::VectorXd y = (Eigen::VectorXd(5) << 1, -2, 3, 0.5, -1).finished();
  const auto r = inner_alpha_search(tt(Eigen::MatrixXd::Identity(5, 5)), et(Eigen::MatrixXd::Identity(5, 5)), y, y,
                                    default_alpha_grid());
  CHECK(r.lambda == default_alpha_grid().front());
  CHECK(r.val_r2 > 0.999);
}

TEST_CASE("alpha search ties resolve to the larger ridge") {
  // eval kernel of zeros: every lambda predicts 0, so every score is equal
  const Eigen::VectorXd y = (Eigen::VectorXd(3) << 1, 2, 3).finished();
  const std::vector<double> grid{0.1, 1.0, 10.0};
  const auto r = inner_alpha_search(tt(Eigen::MatrixXd::Identity(3, 3)), et(Eigen::MatrixXd::Zero(3, 3)), y, y, grid);
  CHECK(r.lambda == 10.0);
}

TEST_CASE("alpha search fails when no grid point is solvable") {
  const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(4, 0, 1);
  try {
    inner_alpha_search(tt(-Eigen::MatrixXd::Identity(4, 4)), et(Eigen::MatrixXd::Identity(4, 4)), y, y,
                       {0.1, 0.5, 0.9});
    FAIL("expected AllFitsFailed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AllFitsFailed);
  }
  const auto partial = inner_alpha_search(tt(-Eigen::MatrixXd::Identity(4, 4)), et(Eigen::MatrixXd::Identity(4, 4)), y,
                                          y, {0.5, 2.0, 3.0});
  CHECK(partial.failed_points == 1);
}

TEST_CASE("alpha search matches an exhaustive re-scan with direct solves") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 30, m = 15;
    Eigen::MatrixXd feats(n + m, 4);
    for (Eigen::Index i = 0; i < feats.size(); ++i) feats(i) = rng.normal();
    const Eigen::MatrixXd all = (feats * feats.transpose()).array().exp().matrix() / 50.0;
    const Eigen::MatrixXd kt = all.topLeftCorner(n, n), kv = all.bottomLeftCorner(m, n);
    Eigen::VectorXd y = feats.col(0) + 0.3 * rng.normal_vector(n + m);
    const Eigen::VectorXd yt = y.head(n), yv = y.tail(m);
    const auto grid = default_alpha_grid();

    double best_l = 0.0, best_r = -std::numeric_limits<double>::infinity();
    for (double l : grid) {
      const auto model = krr_fit(tt(kt), yt, l);
      const double r = r2_score(krr_predict(model, et(kv)), yv);
      if (r >= best_r) {
        best_r = r;
        best_l = l;
      }
    }
    const auto got = inner_alpha_search(tt(kt), et(kv), yt, yv, grid);
    CHECK(got.lambda == best_l);
    CHECK(got.val_r2 == doctest::Approx(best_r).epsilon(1e-9));
  }
}

TEST_CASE("single kernel reduces to one alpha scan") {
  const auto p = discrimination_problem(11);
  const std::vector<KernelMatrix> t{p.train[0]}, v{p.val[0]};
  for (Branch b : {Branch::Classical, Branch::Quantum}) {
    const auto r = optimize_mixture(t, v, p.y_train, p.y_val, b, OptimizationBudget{});
    CHECK(r.weights.weights == Eigen::VectorXd::Ones(1));
    CHECK(r.trace.size() == 1);
    KernelMatrix k = t[0];
    if (b == Branch::Classical) k = add_jitter(k);
    const auto direct = inner_alpha_search(k, v[0], p.y_train, p.y_val, default_alpha_grid());
    CHECK(r.lambda == direct.lambda);
    CHECK(r.val_r2 == direct.val_r2);
  }
}

TEST_CASE("brute-force weight scan favours the informative kernel") {
  const auto p = discrimination_problem(1000);
  double prev = -1.0;
  for (int i = 1; i <= 19; ++i) {
    const double w = i / 20.0;
    const auto mw = renormalize_weights((Eigen::VectorXd(2) << w, 1 - w).finished());
    const double r2 = evaluate_weights(p.train, p.val, p.y_train, p.y_val, mw, default_alpha_grid()).val_r2;
    CHECK(r2 >= prev - 1e-12);
    prev = r2;
  }
}

TEST_CASE("optimizer discriminates informative from noise kernels") {
  for (Branch b : {Branch::Classical, Branch::Quantum}) {
    int hits = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto p = discrimination_problem(1000 + s);
      OptimizationBudget budget;
      budget.seed = s;
      const auto r = optimize_mixture(p.train, p.val, p.y_train, p.y_val, b, budget);
      CHECK(std::abs(r.weights.weights.sum() - 1.0) < 1e-9);
      if (r.weights.weights(0) >= 0.8) ++hits;
    }
    INFO(to_string(b));
    CHECK(hits >= 9);
  }
}

TEST_CASE("trace incumbent is monotone and runs are reproducible") {
  const auto p = discrimination_problem(2024);
  OptimizationBudget budget;
  budget.seed = 9;
  const auto a = optimize_mixture(p.train, p.val, p.y_train, p.y_val, Branch::Classical, budget);
  const auto b = optimize_mixture(p.train, p.val, p.y_train, p.y_val, Branch::Classical, budget);
  REQUIRE(a.trace.size() == 20);
  double incumbent = std::numeric_limits<double>::infinity();
  double best_seen = -std::numeric_limits<double>::infinity();
  for (const auto& e : a.trace) {
    const double next = std::min(incumbent, -e.val_r2);
    CHECK(next <= incumbent);
    incumbent = next;
    best_seen = std::max(best_seen, e.val_r2);
  }
  CHECK(a.val_r2 == best_seen);
  CHECK(trace_to_jsonl(a.trace, false) == trace_to_jsonl(b.trace, false));
  CHECK(a.weights.weights == b.weights.weights);
  CHECK(a.lambda == b.lambda);
}

TEST_CASE("branch parity under a forced common weight vector") {
  const auto p = discrimination_problem(77);
  MixtureWeights w{(Eigen::VectorXd(2) << 0.7, 0.3).finished(), Branch::Quantum, false};
  const auto q = evaluate_weights(p.train, p.val, p.y_train, p.y_val, w, default_alpha_grid());
  w.branch = Branch::Classical;
  const auto c = evaluate_weights(p.train, p.val, p.y_train, p.y_val, w, default_alpha_grid());

  // Classical path equals the quantum path run on a jittered train matrix.
  KernelMatrix kt = mix_kernels(p.train, w);
  const auto manual = inner_alpha_search(add_jitter(kt), mix_kernels(p.val, w), p.y_train, p.y_val, default_alpha_grid());
  CHECK(c.lambda == manual.lambda);
  CHECK(c.val_r2 == manual.val_r2);
  const auto plain = inner_alpha_search(kt, mix_kernels(p.val, w), p.y_train, p.y_val, default_alpha_grid());
  CHECK(q.lambda == plain.lambda);
  CHECK(q.val_r2 == plain.val_r2);
}

TEST_CASE("trace json lines") {
  std::vector<TraceEntry> t{{0, (Eigen::VectorXd(2) << 0.25, 0.75).finished(), 0.5, 0.875, 1.5},
                            {1, Eigen::VectorXd::Ones(2) / 2, 1.0, -std::numeric_limits<double>::infinity(), 2.0}};
  CHECK(trace_to_jsonl(t) ==
        "{\"call_index\":0,\"weights\":[0.25,0.75],\"lambda\":0.5,\"val_r2\":0.875,\"elapsed_ms\":1.5}\n"
        "{\"call_index\":1,\"weights\":[0.5,0.5],\"lambda\":1.0,\"val_r2\":null,\"elapsed_ms\":2.0}\n");
  CHECK(trace_to_jsonl(t, false).find("elapsed_ms") == std::string::npos);
}

}  // TEST_SUITE
