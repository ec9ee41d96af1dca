#include "qftk/krr.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <vector>

#include "qftk/errors.hpp"

namespace qftk {

namespace {

void check_train_matrix(const KernelMatrix& k) {
  if (k.kind != MatrixKind::TrainTrain) throw Error(ErrorCode::KindMismatch, "expected a train-train kernel matrix");
  if (k.rows() != k.cols()) throw Error(ErrorCode::DimensionMismatch, "train kernel matrix is not square");
  if (!k.values.allFinite()) throw Error(ErrorCode::DimensionMismatch, "kernel matrix has non-finite entries");
  if ((k.values - k.values.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw Error(ErrorCode::DimensionMismatch, "train kernel matrix is not symmetric");
  }
}

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  const auto bits = std::bit_cast<std::conditional_t<sizeof(T) == 8, std::uint64_t, std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xFFu));
}

template <typename U>
U get_le(const std::vector<unsigned char>& in, std::size_t& pos) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(in[pos + i]) << (8 * i);
  pos += sizeof(U);
  return v;
}

}  // namespace

KrrModel krr_fit(const KernelMatrix& k, const Eigen::VectorXd& y, double lambda) {
  check_train_matrix(k);
  if (y.size() != k.rows()) throw Error(ErrorCode::DimensionMismatch, "target length does not match kernel matrix");
  if (!(lambda >= 0.0)) throw Error(ErrorCode::ConfigError, "ridge lambda must be non-negative");

  const Eigen::Index n = k.rows();
  const double scale = n > 0 ? std::max(k.values.trace() / static_cast<double>(n), 1e-300) : 1.0;
  for (double factor : {0.0, 1e-12, 1e-10, 1e-8}) {
    const double jitter = factor * scale;
    Eigen::MatrixXd a = k.values;
    a.diagonal().array() += lambda + jitter;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all()) continue;
    KrrModel model;
    model.dual_coefficients = ldlt.solve(y);
    model.ridge_lambda = lambda;
    model.training_targets = y;
    model.applied_jitter = jitter;
    model.residual_norm = (a * model.dual_coefficients - y).norm();
    return model;
  }
  throw Error(ErrorCode::FactorizationFailed, "K + lambda I is not positive definite (lambda = " + std::to_string(lambda) + ")");
}

Eigen::VectorXd krr_predict(const KrrModel& model, const KernelMatrix& k_hat) {
  if (k_hat.cols() != model.dual_coefficients.size()) {
    throw Error(ErrorCode::DimensionMismatch, "eval kernel has " + std::to_string(k_hat.cols()) + " columns, model has " +
                                                  std::to_string(model.dual_coefficients.size()) + " coefficients");
  }
  return k_hat.values * model.dual_coefficients;
}

RidgePath::RidgePath(const Eigen::MatrixXd& k_train, const Eigen::VectorXd& y, double diagonal_shift) {
  if (k_train.rows() != k_train.cols() || y.size() != k_train.rows()) throw Error(ErrorCode::DimensionMismatch, "ridge path shapes");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k_train);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::FactorizationFailed, "eigendecomposition did not converge");
  eigenvectors_ = es.eigenvectors();
  eigenvalues_ = es.eigenvalues().array() + diagonal_shift;
  projected_targets_ = eigenvectors_.transpose() * y;
}

bool RidgePath::solvable(double lambda) const {
  if (eigenvalues_.size() == 0) return false;
  const double top = eigenvalues_.cwiseAbs().maxCoeff();
  return (eigenvalues_.array() + lambda).minCoeff() > 1e-15 * std::max(top, 1e-300);
}

Eigen::VectorXd RidgePath::dual_coefficients(double lambda) const {
  return eigenvectors_ * (projected_targets_.array() / (eigenvalues_.array() + lambda)).matrix();
}

Eigen::VectorXd RidgePath::predict_projected(const Eigen::MatrixXd& projected, double lambda) const {
  return projected * (projected_targets_.array() / (eigenvalues_.array() + lambda)).matrix();
}

void write_kernel_cache(const std::filesystem::path& path, const KernelMatrix& k) {
  std::vector<unsigned char> bytes{'Q', 'K', 'R', 'N'};
  bytes.reserve(4 + 4 + 1 + 16 + static_cast<std::size_t>(k.values.size()) * 8);
  put_le<std::uint32_t>(bytes, 1u);
  put_le<std::uint8_t>(bytes, static_cast<std::uint8_t>(k.kind));
  put_le<std::uint64_t>(bytes, static_cast<std::uint64_t>(k.rows()));
  put_le<std::uint64_t>(bytes, static_cast<std::uint64_t>(k.cols()));
  for (Eigen::Index i = 0; i < k.rows(); ++i)
    for (Eigen::Index j = 0; j < k.cols(); ++j) put_le<double>(bytes, k.values(i, j));

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

KernelMatrix read_kernel_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  constexpr std::size_t header = 4 + 4 + 1 + 8 + 8;
  if (bytes.size() < header || bytes[0] != 'Q' || bytes[1] != 'K' || bytes[2] != 'R' || bytes[3] != 'N') {
    throw Error(ErrorCode::CacheCorrupt, path.string() + ": bad magic");
  }
  std::size_t pos = 4;
  if (get_le<std::uint32_t>(bytes, pos) != 1u) throw Error(ErrorCode::CacheCorrupt, path.string() + ": unsupported version");
  const auto kind = get_le<std::uint8_t>(bytes, pos);
  if (kind > 1) throw Error(ErrorCode::CacheCorrupt, path.string() + ": unknown matrix kind");
  const auto rows = get_le<std::uint64_t>(bytes, pos);
  const auto cols = get_le<std::uint64_t>(bytes, pos);
  if (rows > (1u << 24) || cols > (1u << 24) || bytes.size() != header + rows * cols * 8) {
    throw Error(ErrorCode::CacheCorrupt, path.string() + ": size does not match header");
  }
  KernelMatrix k;
  k.kind = static_cast<MatrixKind>(kind);
  k.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < k.values.rows(); ++i)
    for (Eigen::Index j = 0; j < k.values.cols(); ++j) k.values(i, j) = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
  return k;
}

}  // namespace qftk
