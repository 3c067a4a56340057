#include "fixtures.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace tngd::testing {

DenseMatrix gaussian_matrix(RngStream& rng, Eigen::Index rows, Eigen::Index cols) {
  DenseMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

DenseMatrix random_orthogonal(RngStream& rng, Eigen::Index n) {
  const Eigen::MatrixXd g = gaussian_matrix(rng, n, n);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return Eigen::MatrixXd(qr.householderQ());
}

namespace {

DenseVector log_spaced(Eigen::Index n, double high, double low) {
  DenseVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double frac = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    v[i] = high * std::pow(low / high, frac);
  }
  return v;
}

}  // namespace

DenseMatrix random_spd(RngStream& rng, Eigen::Index n, double condition) {
  const DenseMatrix q = random_orthogonal(rng, n);
  const DenseVector e = log_spaced(n, 1.0, 1.0 / condition);
  return numerics::symmetrized(q * e.asDiagonal() * q.transpose());
}

thermo::DampedLowRankSystem conditioned_system(RngStream& rng, Eigen::Index n, Eigen::Index rank,
                                               double condition, double lambda_max) {
  const double lambda = lambda_max / condition;
  const DenseMatrix q = random_orthogonal(rng, n);
  DenseVector eig = log_spaced(n, lambda_max, lambda);
  thermo::DampedLowRankSystem s;
  s.damping = lambda;
  s.jacobian.resize(rank, n);
  // Rank-limited systems keep the top `rank` eigenvalues; the rest sit at lambda.
  for (Eigen::Index i = 0; i < rank; ++i) {
    const double gain = std::sqrt(std::max(0.0, eig[i] - lambda));
    s.jacobian.row(i) = gain * q.col(i).transpose();
  }
  s.loss_hessian = DenseMatrix::Identity(rank, rank);
  s.block_size = 1;
  s.rhs = DenseVector(n);
  for (Eigen::Index i = 0; i < n; ++i) s.rhs[i] = rng.normal();
  return s;
}

thermo::DampedLowRankSystem softmax_system(RngStream& rng, Eigen::Index n, Eigen::Index batch,
                                           Eigen::Index outputs, double damping) {
  thermo::DampedLowRankSystem s;
  const Eigen::Index rows = batch * outputs;
  s.jacobian = gaussian_matrix(rng, rows, n) / std::sqrt(static_cast<double>(batch));
  s.loss_hessian = DenseMatrix::Zero(rows, rows);
  for (Eigen::Index b = 0; b < batch; ++b) {
    DenseVector logits(outputs);
    for (Eigen::Index j = 0; j < outputs; ++j) logits[j] = rng.normal();
    DenseVector p = (logits.array() - logits.maxCoeff()).exp();
    p /= p.sum();
    s.loss_hessian.block(b * outputs, b * outputs, outputs, outputs) =
        DenseMatrix(p.asDiagonal()) - p * p.transpose();
  }
  s.block_size = outputs;
  s.damping = damping;
  s.rhs = DenseVector(n);
  for (Eigen::Index i = 0; i < n; ++i) s.rhs[i] = rng.normal();
  return s;
}

Spectrum spectrum(const thermo::DampedLowRankSystem& system) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(system.explicit_matrix()),
                                                          Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

curvature::ModelSpec mlp(std::vector<Eigen::Index> widths, curvature::Activation activation,
                         curvature::LossHead loss) {
  curvature::ModelSpec spec;
  spec.loss = loss;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool last = i + 2 == widths.size();
    spec.layers.push_back({widths[i], widths[i + 1], last ? curvature::Activation::Identity : activation});
  }
  return spec;
}

curvature::Batch random_batch(RngStream& rng, Eigen::Index size, Eigen::Index inputs,
                              Eigen::Index outputs, curvature::LossHead loss) {
  curvature::Batch batch;
  batch.inputs = gaussian_matrix(rng, size, inputs);
  if (loss == curvature::LossHead::SoftmaxCrossEntropy) {
    for (Eigen::Index i = 0; i < size; ++i) {
      batch.labels.push_back(static_cast<std::size_t>(rng.uniform_index(static_cast<std::uint64_t>(outputs))));
    }
  } else {
    batch.targets = gaussian_matrix(rng, size, outputs);
  }
  return batch;
}

DenseVector numeric_gradient(const std::function<double(const DenseVector&)>& f, const DenseVector& x,
                             double h) {
  DenseVector g(x.size());
  DenseVector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

DenseMatrix numeric_jacobian(const std::function<DenseVector(const DenseVector&)>& f,
                             const DenseVector& x, double h) {
  DenseVector probe = x;
  DenseMatrix jac;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const DenseVector up = f(probe);
    probe[i] = x[i] - h;
    const DenseVector down = f(probe);
    probe[i] = x[i];
    if (i == 0) jac.resize(up.size(), x.size());
    jac.col(i) = (up - down) / (2.0 * h);
  }
  return jac;
}

double max_relative_difference(const DenseMatrix& a, const DenseMatrix& b, double floor) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / std::max(std::abs(b(i, j)), floor));
    }
  }
  return worst;
}

void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

namespace {

void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

}  // namespace

std::vector<unsigned char> idx_images(std::uint32_t magic, std::uint32_t count, std::uint32_t rows,
                                      std::uint32_t cols, const std::vector<unsigned char>& pixels) {
  std::vector<unsigned char> out;
  put_be32(out, magic);
  put_be32(out, count);
  put_be32(out, rows);
  put_be32(out, cols);
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

std::vector<unsigned char> idx_labels(std::uint32_t magic, std::uint32_t count,
                                      const std::vector<unsigned char>& labels) {
  std::vector<unsigned char> out;
  put_be32(out, magic);
  put_be32(out, count);
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("tngd-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace tngd::testing
