// Core data model: a collection of K symmetric p x p matrices addressed both
// block-wise (per class) and group-wise (the K-vector of (i,j)-th entries).
#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ggl/common.hpp"

namespace ggl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Largest tolerated input asymmetry; below it blocks are symmetrized by
// averaging, above it construction is rejected.
inline constexpr double kSymmetrizeTol = 1e-8;

class Ensemble {
public:
  Ensemble() = default;

  // k zero blocks of size p x p.
  Ensemble(int k, int p) {
    if (k <= 0 || p <= 0) throw std::invalid_argument("Ensemble: k and p must be positive");
    blocks_.assign(static_cast<size_t>(k), Matrix::Zero(p, p));
  }

  static Ensemble identity(int k, int p) {
    Ensemble e(k, p);
    for (auto& b : e.blocks_) b = Matrix::Identity(p, p);
    return e;
  }

  // Takes ownership of the blocks; near-symmetric inputs are symmetrized,
  // asymmetry beyond kSymmetrizeTol * (1 + max|entry|) is rejected.
  static Ensemble from_blocks(std::vector<Matrix> blocks) {
    if (blocks.empty()) throw std::invalid_argument("Ensemble: no blocks");
    const auto p = blocks.front().rows();
    for (auto& b : blocks) {
      if (b.rows() != p || b.cols() != p)
        throw std::invalid_argument("Ensemble: blocks must be square with a common dimension");
      const double scale = 1.0 + b.cwiseAbs().maxCoeff();
      const double asym = (b - b.transpose()).cwiseAbs().maxCoeff();
      if (asym > kSymmetrizeTol * scale)
        throw std::invalid_argument("Ensemble: block asymmetry " + std::to_string(asym) +
                                    " exceeds tolerance");
      if (asym > 0.0) b = ((b + b.transpose()) * 0.5).eval();
    }
    Ensemble e;
    e.blocks_ = std::move(blocks);
    return e;
  }

  int classes() const { return static_cast<int>(blocks_.size()); }
  int dim() const { return blocks_.empty() ? 0 : static_cast<int>(blocks_.front().rows()); }

  Matrix& block(int k) { return blocks_.at(static_cast<size_t>(k)); }
  const Matrix& block(int k) const { return blocks_.at(static_cast<size_t>(k)); }

  // Group view X_[ij]: the K-vector of (i,j)-th entries. Zero-based indices.
  Vector group(int i, int j) const {
    check_index(i, j);
    Vector g(classes());
    for (int k = 0; k < classes(); ++k) g[k] = blocks_[static_cast<size_t>(k)](i, j);
    return g;
  }

  // Writes the group to (i,j) and mirrors it to (j,i).
  void set_group(int i, int j, const Vector& g) {
    check_index(i, j);
    if (g.size() != classes()) throw std::invalid_argument("set_group: length mismatch");
    for (int k = 0; k < classes(); ++k) {
      blocks_[static_cast<size_t>(k)](i, j) = g[k];
      blocks_[static_cast<size_t>(k)](j, i) = g[k];
    }
  }

  bool same_shape(const Ensemble& o) const {
    return classes() == o.classes() && dim() == o.dim();
  }

  Ensemble& operator+=(const Ensemble& o) {
    check_shape(o);
    for (int k = 0; k < classes(); ++k) blocks_[static_cast<size_t>(k)] += o.blocks_[static_cast<size_t>(k)];
    return *this;
  }
  Ensemble& operator-=(const Ensemble& o) {
    check_shape(o);
    for (int k = 0; k < classes(); ++k) blocks_[static_cast<size_t>(k)] -= o.blocks_[static_cast<size_t>(k)];
    return *this;
  }
  Ensemble& operator*=(double s) {
    for (auto& b : blocks_) b *= s;
    return *this;
  }

  friend Ensemble operator+(Ensemble a, const Ensemble& b) { return a += b; }
  friend Ensemble operator-(Ensemble a, const Ensemble& b) { return a -= b; }
  friend Ensemble operator*(double s, Ensemble a) { return a *= s; }
  friend Ensemble operator*(Ensemble a, double s) { return a *= s; }

  // this += s * o, without temporaries.
  void axpy(double s, const Ensemble& o) {
    check_shape(o);
    for (int k = 0; k < classes(); ++k)
      blocks_[static_cast<size_t>(k)] += s * o.blocks_[static_cast<size_t>(k)];
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& b : blocks_) s += b.squaredNorm();
    return s;
  }
  double norm() const { return std::sqrt(squared_norm()); }

  void set_zero() {
    for (auto& b : blocks_) b.setZero();
  }

private:
  void check_index(int i, int j) const {
    if (i < 0 || j < 0 || i >= dim() || j >= dim())
      throw std::out_of_range("Ensemble: index out of range");
  }
  void check_shape(const Ensemble& o) const {
    if (!same_shape(o)) throw std::invalid_argument("Ensemble: shape mismatch");
  }

  std::vector<Matrix> blocks_;
};

// Frobenius inner product summed over blocks.
inline double inner(const Ensemble& x, const Ensemble& y) {
  if (!x.same_shape(y)) throw std::invalid_argument("inner: shape mismatch");
  double s = 0.0;
  for (int k = 0; k < x.classes(); ++k) s += x.block(k).cwiseProduct(y.block(k)).sum();
  return s;
}

// Penalty pair (lambda1, lambda2) of the group graphical Lasso regularizer.
struct GglParams {
  double lambda1 = 0.0;  // element-wise l1 weight on off-diagonals
  double lambda2 = 0.0;  // l2 weight on each cross-class off-diagonal group

  void validate() const {
    if (lambda1 < 0.0 || lambda2 < 0.0)
      throw std::invalid_argument("GglParams: weights must be nonnegative");
  }
};

// Sample covariances S^(k) plus per-class sample counts (metadata only).
struct ProblemData {
  std::vector<Matrix> covariances;
  std::vector<long> sample_counts;

  int classes() const { return static_cast<int>(covariances.size()); }
  int dim() const { return covariances.empty() ? 0 : static_cast<int>(covariances.front().rows()); }

  // Symmetry is enforced like Ensemble construction; PSD is checked up to
  // a small negative slack proportional to the norm.
  void validate() const {
    if (covariances.empty()) throw std::invalid_argument("ProblemData: no covariance blocks");
    const auto p = covariances.front().rows();
    for (const auto& s : covariances) {
      if (s.rows() != p || s.cols() != p)
        throw std::invalid_argument("ProblemData: covariance dimension mismatch");
      const double scale = 1.0 + s.cwiseAbs().maxCoeff();
      if ((s - s.transpose()).cwiseAbs().maxCoeff() > kSymmetrizeTol * scale)
        throw std::invalid_argument("ProblemData: covariance not symmetric");
      Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-10 * (1.0 + s.norm()))
        throw std::invalid_argument("ProblemData: covariance not positive semidefinite");
    }
    if (!sample_counts.empty() && sample_counts.size() != covariances.size())
      throw std::invalid_argument("ProblemData: sample count length mismatch");
  }
};

}  // namespace ggl
