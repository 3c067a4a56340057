#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tngd/curvature.hpp"
#include "tngd/thermo_solver.hpp"

namespace tngd::testing {

using numerics::DenseMatrix;
using numerics::DenseVector;
using numerics::RngStream;

/// Standard-normal matrix.
DenseMatrix gaussian_matrix(RngStream& rng, Eigen::Index rows, Eigen::Index cols);

/// Haar-ish orthogonal matrix from the QR factor of a Gaussian matrix.
DenseMatrix random_orthogonal(RngStream& rng, Eigen::Index n);

/// Q diag(eigs) Q^T with eigenvalues log-spaced from 1 down to 1/condition.
DenseMatrix random_spd(RngStream& rng, Eigen::Index n, double condition);

/// Damped system with prescribed spectrum: A has eigenvalues log-spaced in
/// [lambda_max / condition, lambda_max]. J has `rank` rows (rank <= n) and
/// H = I, so A = J^T J + lambda I with lambda = lambda_max / condition.
thermo::DampedLowRankSystem conditioned_system(RngStream& rng, Eigen::Index n, Eigen::Index rank,
                                               double condition, double lambda_max = 1.0);

/// Random system with softmax-CE-style blocks: J Gaussian (b*dz x n) scaled by
/// 1/sqrt(b), H blocks diag(p) - p p^T from random logits, Gaussian rhs.
thermo::DampedLowRankSystem softmax_system(RngStream& rng, Eigen::Index n, Eigen::Index batch,
                                           Eigen::Index outputs, double damping);

/// Dense eigenvalue range of the explicit drift matrix.
struct Spectrum {
  double min = 0.0;
  double max = 0.0;
};
Spectrum spectrum(const thermo::DampedLowRankSystem& system);

/// in -> hidden (activation) ... -> out (identity) with the given loss head.
curvature::ModelSpec mlp(std::vector<Eigen::Index> widths, curvature::Activation activation,
                         curvature::LossHead loss);

/// Gaussian inputs; labels uniform in [0, classes) or Gaussian targets.
curvature::Batch random_batch(RngStream& rng, Eigen::Index size, Eigen::Index inputs,
                              Eigen::Index outputs, curvature::LossHead loss);

/// Central differences of a scalar function, step h.
DenseVector numeric_gradient(const std::function<double(const DenseVector&)>& f,
                             const DenseVector& x, double h = 1e-5);

/// Central differences of a vector function; row i is d f / d x_i transposed
/// into the usual (outputs x inputs) layout.
DenseMatrix numeric_jacobian(const std::function<DenseVector(const DenseVector&)>& f,
                             const DenseVector& x, double h = 1e-5);

/// Max over entries of |a - b| / max(|b|, floor).
double max_relative_difference(const DenseMatrix& a, const DenseMatrix& b, double floor = 1e-3);

/// IDX writers used to build byte-exact fixtures.
void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes);
std::vector<unsigned char> idx_images(std::uint32_t magic, std::uint32_t count, std::uint32_t rows,
                                      std::uint32_t cols, const std::vector<unsigned char>& pixels);
std::vector<unsigned char> idx_labels(std::uint32_t magic, std::uint32_t count,
                                      const std::vector<unsigned char>& labels);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);

}  // namespace tngd::testing
