#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "qftk/errors.hpp"
#include "qftk/krr.hpp"
#include "qftk/rng.hpp"

using namespace qftk;
namespace fs = std::filesystem;

namespace {

KernelMatrix train_matrix(Eigen::MatrixXd v) { return {std::move(v), MatrixKind::TrainTrain, "test"}; }
KernelMatrix eval_matrix(Eigen::MatrixXd v) { return {std::move(v), MatrixKind::EvalTrain, "test"}; }

Eigen::MatrixXd random_spd(Rng& rng, Eigen::Index n) {
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.normal();
  Eigen::MatrixXd k = a * a.transpose() / static_cast<double>(n);
  k.diagonal().array() += 0.1;
  return k;
}

}  // namespace

TEST_SUITE("krr") {

TEST_CASE("identity kernel closed forms") {
  const Eigen::VectorXd y = (Eigen::VectorXd(5) << 1.5, -2.0, 0.25, 3.0, -0.125).finished();
  const auto k = train_matrix(Eigen::MatrixXd::Identity(5, 5));
  CHECK(krr_fit(k, y, 0.0).dual_coefficients == y);
  CHECK(krr_fit(k, y, 1.0).dual_coefficients == y / 2.0);
}

TEST_CASE("fit satisfies first-order stationarity of the ridge objective") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd k = random_spd(rng, 20);
    const Eigen::VectorXd y = rng.normal_vector(20);
    const double lambda = rng.uniform(0.01, 2.0);
    const auto model = krr_fit(train_matrix(k), y, lambda);
    const Eigen::VectorXd& a = model.dual_coefficients;
    const Eigen::VectorXd grad = -2.0 * k * (y - k * a) + 2.0 * lambda * k * a;
    CHECK(grad.norm() < 1e-8);
    CHECK(model.residual_norm < 1e-8 * y.norm());
  }
}

TEST_CASE("tiny ridge interpolates training targets") {
  Rng rng(18);
  const Eigen::MatrixXd k = random_spd(rng, 30);
  const Eigen::VectorXd y = rng.normal_vector(30);
  const auto model = krr_fit(train_matrix(k), y, 1e-12);
  const Eigen::VectorXd fitted = krr_predict(model, eval_matrix(k));
  CHECK((fitted - y).norm() <= 1e-6 * y.norm());
}

TEST_CASE("prediction examples") {
  const Eigen::VectorXd y = (Eigen::VectorXd(3) << 2.0, -1.0, 4.0).finished();
  const auto model = krr_fit(train_matrix(Eigen::MatrixXd::Identity(3, 3)), y, 0.0);
  Eigen::MatrixXd select = Eigen::MatrixXd::Zero(2, 3);
  select(0, 2) = 1.0;
  select(1, 0) = 1.0;
  const Eigen::VectorXd p = krr_predict(model, eval_matrix(select));
  CHECK(p(0) == 4.0);
  CHECK(p(1) == 2.0);

  Eigen::MatrixXd zero_row = Eigen::MatrixXd::Ones(2, 3);
  zero_row.row(1).setZero();
  CHECK(krr_predict(model, eval_matrix(zero_row))(1) == 0.0);

  // one training point: alpha = y / (k + lambda), prediction = alpha * k(train, test)
  const auto single = krr_fit(train_matrix(Eigen::MatrixXd::Constant(1, 1, 0.8)), Eigen::VectorXd::Constant(1, 3.0), 0.2);
  CHECK(single.dual_coefficients(0) == doctest::Approx(3.0));
  CHECK(krr_predict(single, eval_matrix(Eigen::MatrixXd::Constant(1, 1, 0.5)))(0) == doctest::Approx(1.5));
}

TEST_CASE("predictions are linear in the eval kernel") {
  Rng rng(19);
  const auto model = krr_fit(train_matrix(random_spd(rng, 12)), rng.normal_vector(12), 0.3);
  Eigen::MatrixXd a(4, 12), b(4, 12);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    a(i) = rng.normal();
    b(i) = rng.normal();
  }
  const double ca = 1.7, cb = -0.4;
  const Eigen::VectorXd lhs = krr_predict(model, eval_matrix(ca * a + cb * b));
  const Eigen::VectorXd rhs = ca * krr_predict(model, eval_matrix(a)) + cb * krr_predict(model, eval_matrix(b));
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("shape errors") {
  const auto k = train_matrix(Eigen::MatrixXd::Identity(3, 3));
  CHECK_THROWS_AS(krr_fit(k, Eigen::VectorXd::Zero(4), 1.0), Error);
  CHECK_THROWS_AS(krr_fit(train_matrix(Eigen::MatrixXd::Ones(2, 3)), Eigen::VectorXd::Zero(2), 1.0), Error);
  const auto model = krr_fit(k, Eigen::VectorXd::Ones(3), 1.0);
  try {
    krr_predict(model, eval_matrix(Eigen::MatrixXd::Ones(2, 4)));
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("indefinite matrix fails after jitter escalation") {
  Eigen::MatrixXd k = Eigen::MatrixXd::Identity(3, 3);
  k(2, 2) = -1.0;
  try {
    krr_fit(train_matrix(k), Eigen::VectorXd::Ones(3), 0.0);
    FAIL("expected FactorizationFailed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FactorizationFailed);
  }
  // Singular PSD matrix at lambda = 0 is rescued by the smallest jitter.
  const auto rescued = krr_fit(train_matrix(Eigen::MatrixXd::Ones(3, 3)), Eigen::VectorXd::Ones(3), 0.0);
  CHECK(rescued.applied_jitter > 0.0);
}

TEST_CASE("ridge path agrees with direct fits") {
  Rng rng(20);
  const Eigen::MatrixXd k = random_spd(rng, 25);
  const Eigen::VectorXd y = rng.normal_vector(25);
  Eigen::MatrixXd kv(7, 25);
  for (Eigen::Index i = 0; i < kv.size(); ++i) kv(i) = rng.normal();
  const RidgePath path(k, y);
  const Eigen::MatrixXd projected = path.project(kv);
  for (double lambda : {1e-6, 1e-3, 0.1, 10.0}) {
    const auto model = krr_fit(train_matrix(k), y, lambda);
    CHECK((path.dual_coefficients(lambda) - model.dual_coefficients).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((path.predict_projected(projected, lambda) - krr_predict(model, eval_matrix(kv))).cwiseAbs().maxCoeff() < 1e-9);
  }
  const RidgePath shifted(k, y, 0.5);
  CHECK((shifted.dual_coefficients(0.25) - path.dual_coefficients(0.75)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("kernel cache round trip and byte layout") {
  const fs::path dir = fs::temp_directory_path() / "qftk_krr_tests";
  fs::create_directories(dir);
  KernelMatrix k = eval_matrix((Eigen::MatrixXd(2, 3) << 1.0, 0.5, -0.25, 2.0, 3.0, 1e-300).finished());
  const fs::path p = dir / "k.qkrn";
  write_kernel_cache(p, k);
  CHECK(fs::file_size(p) == 4 + 4 + 1 + 8 + 8 + 6 * 8);

  std::ifstream in(p, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "QKRN");
  CHECK(bytes[4] == 1);
  CHECK(bytes[8] == 1);   // eval_train
  CHECK(bytes[9] == 2);   // rows, little endian
  CHECK(bytes[17] == 3);  // cols
  // 1.0 = 0x3FF0000000000000 stored little endian
  CHECK(bytes[25 + 7] == 0x3F);
  CHECK(bytes[25 + 6] == 0xF0);

  const auto back = read_kernel_cache(p);
  CHECK(back.kind == MatrixKind::EvalTrain);
  CHECK(back.values == k.values);

  bytes[0] = 'X';
  const fs::path bad = dir / "bad.qkrn";
  std::ofstream(bad, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  try {
    read_kernel_cache(bad);
    FAIL("expected CacheCorrupt");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CacheCorrupt);
  }
  std::ofstream(dir / "short.qkrn", std::ios::binary) << "QKRN";
  CHECK_THROWS_AS(read_kernel_cache(dir / "short.qkrn"), Error);
}

}  // TEST_SUITE
