// Spectral operators for the log-determinant function: symmetric
// eigendecomposition, the scalar pair phi+/phi- lifted to matrices, the
// Moreau envelope of beta*(-log det), and the derivative of phi+.
#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "ggl/ensemble.hpp"

namespace ggl {

// Eigendecomposition A = Q diag(d) Q^T with eigenvalues sorted descending.
struct EigDecomp {
  Matrix q;
  Vector d;
};

inline EigDecomp eig_sym(const Matrix& a) {
  if (!a.allFinite()) throw std::invalid_argument("eig_sym: non-finite entries");
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) throw std::runtime_error("eig_sym: eigensolver failed");
  const auto p = a.rows();
  EigDecomp out;
  out.q = es.eigenvectors().rowwise().reverse();  // Eigen sorts ascending
  out.d = es.eigenvalues().reverse();
  (void)p;
  return out;
}

// phi+_beta(x) = (sqrt(x^2+4beta)+x)/2, evaluated so that the subtraction
// branch never cancels: for x < 0 use phi+ = 2beta/(sqrt(x^2+4beta)-x).
inline double phi_plus_scalar(double beta, double x) {
  const double r = std::sqrt(x * x + 4.0 * beta);
  return x >= 0.0 ? 0.5 * (r + x) : (2.0 * beta) / (r - x);
}

// phi-_beta(x) = (sqrt(x^2+4beta)-x)/2, mirrored branch.
inline double phi_minus_scalar(double beta, double x) {
  const double r = std::sqrt(x * x + 4.0 * beta);
  return x <= 0.0 ? 0.5 * (r - x) : (2.0 * beta) / (r + x);
}

inline void check_beta(double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
}

// Q diag(f(d)) Q^T for a scalar map f.
template <typename F>
inline Matrix spectral_map(const EigDecomp& eig, F&& f) {
  Vector fd(eig.d.size());
  for (Eigen::Index i = 0; i < eig.d.size(); ++i) fd[i] = f(eig.d[i]);
  Matrix m = eig.q * fd.asDiagonal() * eig.q.transpose();
  return ((m + m.transpose()) * 0.5).eval();
}

// phi+_beta(A) = Prox_{beta h}(A), h = -log det; strictly PD for any symmetric A.
inline Matrix phi_plus(double beta, const EigDecomp& eig) {
  check_beta(beta);
  return spectral_map(eig, [beta](double x) { return phi_plus_scalar(beta, x); });
}
inline Matrix phi_plus(double beta, const Matrix& a) { return phi_plus(beta, eig_sym(a)); }

inline Matrix phi_minus(double beta, const EigDecomp& eig) {
  check_beta(beta);
  return spectral_map(eig, [beta](double x) { return phi_minus_scalar(beta, x); });
}
inline Matrix phi_minus(double beta, const Matrix& a) { return phi_minus(beta, eig_sym(a)); }

// Moreau envelope of beta*h at A:
//   Psi_{beta h}(A) = -beta log det(phi+_beta(A)) + 1/2 ||phi-_beta(A)||_F^2,
// evaluated on the eigenvalues.
inline double moreau_logdet(double beta, const EigDecomp& eig) {
  check_beta(beta);
  double v = 0.0;
  for (Eigen::Index i = 0; i < eig.d.size(); ++i) {
    const double fp = phi_plus_scalar(beta, eig.d[i]);
    const double fm = phi_minus_scalar(beta, eig.d[i]);
    v += -beta * std::log(fp) + 0.5 * fm * fm;
  }
  return v;
}
inline double moreau_logdet(double beta, const Matrix& a) { return moreau_logdet(beta, eig_sym(a)); }

// Loewner coefficient matrix of the phi+ derivative:
//   Gamma_ij = (phi+(d_i)+phi+(d_j)) / (sqrt(d_i^2+4beta)+sqrt(d_j^2+4beta)),
// all entries in (0,1).
inline Matrix loewner_gamma(double beta, const Vector& d) {
  check_beta(beta);
  const auto p = d.size();
  Vector fp(p), r(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    fp[i] = phi_plus_scalar(beta, d[i]);
    r[i] = std::sqrt(d[i] * d[i] + 4.0 * beta);
  }
  Matrix g(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) g(i, j) = (fp[i] + fp[j]) / (r[i] + r[j]);
  return g;
}

// Directional derivative (phi+_beta)'(A)[B] = Q (Gamma o (Q^T B Q)) Q^T.
// Linear, self-adjoint and positive definite in B.
inline Matrix phi_plus_dderiv(double beta, const EigDecomp& eig, const Matrix& b) {
  check_beta(beta);
  if (b.rows() != eig.q.rows() || b.cols() != eig.q.cols())
    throw std::invalid_argument("phi_plus_dderiv: dimension mismatch");
  const Matrix gamma = loewner_gamma(beta, eig.d);
  Matrix inner = eig.q.transpose() * b * eig.q;
  inner = inner.cwiseProduct(gamma);
  Matrix out = eig.q * inner * eig.q.transpose();
  return ((out + out.transpose()) * 0.5).eval();
}

// sum_i log d_i for a PD spectrum; +infinity guard is the caller's concern.
inline double log_det_from_eigs(const Vector& d) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) s += std::log(d[i]);
  return s;
}

}  // namespace ggl
