// Proximal operators of the group graphical Lasso regularizer and their
// surrogate generalized Jacobians. Off-diagonal groups carry the sparse
// group Lasso penalty phi(x) = lambda1*||x||_1 + lambda2*||x||; diagonal
// groups are unpenalized. Jacobians are stored in factored form so that an
// application costs O(K) per non-zero group (second order sparsity).
#pragma once

#include <cmath>
#include <vector>

#include "ggl/ensemble.hpp"

namespace ggl {

inline Vector soft_threshold(const Vector& u, double t) {
  if (t < 0.0) throw std::invalid_argument("soft_threshold: negative threshold");
  Vector v(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double a = std::abs(u[i]) - t;
    v[i] = a > 0.0 ? (u[i] > 0.0 ? a : -a) : 0.0;
  }
  return v;
}

inline Vector project_ball(const Vector& v, double r) {
  if (r < 0.0) throw std::invalid_argument("project_ball: negative radius");
  const double n = v.norm();
  if (n <= r) return v;
  return (r / n) * v;
}

// phi(x) = l1*||x||_1 + l2*||x||.
inline double sgl_value(const Vector& x, double l1, double l2) {
  return l1 * x.lpNorm<1>() + l2 * x.norm();
}

// Prox of phi: soft-threshold then shrink the group toward zero,
//   Prox_phi(u) = v - project_ball(v, l2),  v = soft_threshold(u, l1).
inline Vector prox_sgl(const Vector& u, double l1, double l2) {
  if (l1 < 0.0 || l2 < 0.0) throw std::invalid_argument("prox_sgl: negative weight");
  const Vector v = soft_threshold(u, l1);
  return v - project_ball(v, l2);
}

// One group's surrogate Jacobian M = (I - Sigma) Lambda with
// Lambda = diag(1{|u_i| > l1}) and Sigma in dPi_{B_l2}(v). Realized forms:
//   Zero:           ||v|| <= l2 (Sigma = I) or Lambda = 0
//   DiagScaled:     M = c * Lambda                      (l2 = 0 path, c = 1)
//   Rank1Corrected: M = s*Lambda + r*w w^T, s = 1 - l2/||v||, r = l2/||v||,
//                   w = v/||v|| (supported on the active coordinates)
struct GroupJacobian {
  enum class Kind { Zero, DiagScaled, Rank1Corrected };

  Kind kind = Kind::Zero;
  double diag_scale = 0.0;                       // s (or c)
  double rank1_scale = 0.0;                      // r
  Vector w;                                      // unit vector, Rank1 only
  Eigen::Array<bool, Eigen::Dynamic, 1> active;  // diagonal of Lambda

  Vector apply(const Vector& y) const {
    if (kind == Kind::Zero) return Vector::Zero(y.size());
    Vector out(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) out[i] = active[i] ? diag_scale * y[i] : 0.0;
    if (kind == Kind::Rank1Corrected) out += (rank1_scale * w.dot(y)) * w;
    return out;
  }

  // Dense K x K realization, for tests and small-scale assembly.
  Matrix dense(int k) const {
    Matrix m = Matrix::Zero(k, k);
    if (kind == Kind::Zero) return m;
    for (int i = 0; i < k; ++i)
      if (active[i]) m(i, i) = diag_scale;
    if (kind == Kind::Rank1Corrected) m += rank1_scale * (w * w.transpose());
    return m;
  }
};

// Tie-breaking at kinks: |u_i| = l1 exactly drops the coordinate from Lambda;
// ||v|| = l2 exactly selects Sigma = I (Zero kind). Both are valid Clarke
// selections and keep the realized operator PSD with maximal sparsity.
inline GroupJacobian jac_prox_sgl(const Vector& u, double l1, double l2) {
  if (l1 < 0.0 || l2 < 0.0) throw std::invalid_argument("jac_prox_sgl: negative weight");
  GroupJacobian j;
  j.active = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(u.size(), false);
  bool any_active = false;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    j.active[i] = std::abs(u[i]) > l1;
    any_active = any_active || j.active[i];
  }
  if (!any_active) return j;  // Lambda = 0
  const Vector v = soft_threshold(u, l1);
  const double n = v.norm();
  if (n <= l2) return j;  // inside (or on) the ball: Sigma = I
  if (l2 == 0.0) {
    j.kind = GroupJacobian::Kind::DiagScaled;
    j.diag_scale = 1.0;
    return j;
  }
  j.kind = GroupJacobian::Kind::Rank1Corrected;
  j.diag_scale = 1.0 - l2 / n;
  j.rank1_scale = l2 / n;
  j.w = v / n;
  return j;
}

// Prox of the ensemble regularizer at scale sigma: off-diagonal groups get
// prox_sgl with weights (sigma*l1, sigma*l2), diagonal groups pass through.
inline Ensemble prox_ggl(const Ensemble& x, const GglParams& params, double sigma) {
  params.validate();
  if (!(sigma > 0.0)) throw std::invalid_argument("prox_ggl: sigma must be positive");
  const double l1 = sigma * params.lambda1, l2 = sigma * params.lambda2;
  Ensemble out = x;
  const int p = x.dim();
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) out.set_group(i, j, prox_sgl(x.group(i, j), l1, l2));
  return out;
}

// P(X) = l1 * sum_{i != j} |X^(k)_ij| + l2 * sum_{i != j} ||X_[ij]||.
inline double ggl_penalty(const Ensemble& x, const GglParams& params) {
  double s = 0.0;
  const int p = x.dim();
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      s += 2.0 * sgl_value(x.group(i, j), params.lambda1, params.lambda2);
  return s;
}

// P(A) - P(B) accumulated group-by-group. The per-group differences are
// between nearby values, so the sum does not lose the small result to the
// cancellation that P(A) and P(B) computed separately would give.
inline double ggl_penalty_diff(const Ensemble& a, const Ensemble& b, const GglParams& params) {
  if (!a.same_shape(b)) throw std::invalid_argument("ggl_penalty_diff: shape mismatch");
  double s = 0.0;
  const int p = a.dim();
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      s += 2.0 * (sgl_value(a.group(i, j), params.lambda1, params.lambda2) -
                  sgl_value(b.group(i, j), params.lambda1, params.lambda2));
  return s;
}

// Surrogate generalized Jacobian of X -> Prox_{sigma P}(X): one GroupJacobian
// per off-diagonal pair, diagonal groups implicit identity. Only non-zero
// groups are stored.
struct EnsembleJacobian {
  int classes = 0;
  int dim = 0;
  struct Entry {
    int i, j;  // i < j
    GroupJacobian jac;
  };
  std::vector<Entry> groups;
};

inline EnsembleJacobian jac_prox_ggl(const Ensemble& x, const GglParams& params, double sigma) {
  params.validate();
  if (!(sigma > 0.0)) throw std::invalid_argument("jac_prox_ggl: sigma must be positive");
  const double l1 = sigma * params.lambda1, l2 = sigma * params.lambda2;
  EnsembleJacobian w;
  w.classes = x.classes();
  w.dim = x.dim();
  for (int i = 0; i < w.dim; ++i)
    for (int j = i + 1; j < w.dim; ++j) {
      GroupJacobian gj = jac_prox_sgl(x.group(i, j), l1, l2);
      if (gj.kind != GroupJacobian::Kind::Zero)
        w.groups.push_back({i, j, std::move(gj)});
    }
  return w;
}

// (W[Y])_[ij] = M^(ij) Y_[ij] for stored groups, Y_[ii] on the diagonal,
// zero for thresholded groups.
inline Ensemble jac_apply(const EnsembleJacobian& w, const Ensemble& y) {
  if (y.classes() != w.classes || y.dim() != w.dim)
    throw std::invalid_argument("jac_apply: shape mismatch");
  Ensemble out(w.classes, w.dim);
  for (int k = 0; k < w.classes; ++k)
    out.block(k).diagonal() = y.block(k).diagonal();
  for (const auto& e : w.groups) out.set_group(e.i, e.j, e.jac.apply(y.group(e.i, e.j)));
  return out;
}

}  // namespace ggl
