// Semismooth Newton solver for one proximal-point subproblem, working on the
// dual objective
//   Upsilon(X) = min_{Omega,Theta} L(Omega,Theta,X)
// whose gradient is phi+_sigma(W^(k)(X)) stacked minus Prox_{sigma P}(V(X)),
// with W^(k)(X) = Omega_t^(k) - sigma (S^(k) + X^(k)) and V(X) = Theta_t + sigma X.
// The Newton system is solved matrix-free by CG on the negated (positive
// definite) generalized Hessian.
#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "ggl/objective.hpp"

namespace ggl {

struct NewtonConfig {
  double eta_bar = 0.1;  // CG forcing cap
  double tau = 0.2;      // forcing exponent: tol = min(eta_bar, ||g||^(1+tau))
  double mu = 1e-4;      // Armijo slope
  double rho = 0.5;      // backtracking ratio
  int max_newton_iters = 200;
  int max_cg_iters = 500;
  int max_linesearch_steps = 50;

  void validate() const {
    if (!(eta_bar > 0.0 && eta_bar < 1.0)) throw std::invalid_argument("eta_bar must be in (0,1)");
    if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must be in (0,1]");
    if (!(mu > 0.0 && mu < 0.5)) throw std::invalid_argument("mu must be in (0,1/2)");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must be in (0,1)");
  }
};

// Everything derived from one dual point X.
struct PointEval {
  std::vector<EigDecomp> w_eig;  // per-block decomposition of W^(k)(X)
  Ensemble omega_tilde;          // phi+_sigma(W(X)), strictly PD
  Ensemble prox_v;               // Prox_{sigma P}(V(X))
  double upsilon = 0.0;
  double logdet_omega = 0.0;  // sum_k log det omega_tilde^(k)
};

// One subproblem's frozen data plus caches at the current dual iterate.
struct SubproblemState {
  Ensemble omega_t, theta_t;  // PPA anchors
  double sigma = 1.0;
  const ProblemData* data = nullptr;
  GglParams params;

  Ensemble x;  // current dual iterate
  // caches, consistent with x when cache_valid
  std::vector<EigDecomp> w_eig;
  Ensemble omega_tilde;
  Ensemble prox_v;
  EnsembleJacobian jac;  // element of the surrogate Jacobian of Prox_P at V(x)/sigma
  double upsilon = 0.0;
  double logdet_omega = 0.0;
  bool cache_valid = false;

  mutable long eig_count = 0;  // audit: W-eigendecompositions performed
};

inline SubproblemState make_subproblem(Ensemble omega_t, Ensemble theta_t, double sigma,
                                       const ProblemData& data, const GglParams& params,
                                       Ensemble x0) {
  if (!(sigma > 0.0)) throw std::invalid_argument("make_subproblem: sigma must be positive");
  params.validate();
  SubproblemState s;
  s.omega_t = std::move(omega_t);
  s.theta_t = std::move(theta_t);
  s.sigma = sigma;
  s.data = &data;
  s.params = params;
  s.x = std::move(x0);
  if (!s.x.same_shape(s.omega_t) || !s.omega_t.same_shape(s.theta_t))
    throw std::invalid_argument("make_subproblem: shape mismatch");
  return s;
}

// Evaluates Upsilon and its ingredients at X. Costs K eigendecompositions.
// Upsilon is computed as the Lagrangian at its analytic minimizers,
//   f(Om~) + <Om~, X> + 1/(2s)||Om~ - Om_t||^2
//     + P(P~) - <P~, X> + 1/(2s)||P~ - Th_t||^2,
// which agrees exactly with the envelope expression but avoids subtracting
// O(sigma)-sized envelope terms when sigma is large.
inline PointEval eval_dual_point(const SubproblemState& s, const Ensemble& x) {
  const int kk = s.omega_t.classes();
  const double sig = s.sigma;
  PointEval ev;
  ev.w_eig.reserve(static_cast<size_t>(kk));
  ev.omega_tilde = Ensemble(kk, s.omega_t.dim());
  Ensemble v = s.theta_t;
  v.axpy(sig, x);
  ev.prox_v = prox_ggl(v, s.params, sig);
  double f = 0.0;
  for (int k = 0; k < kk; ++k) {
    Matrix w = s.omega_t.block(k) - sig * (s.data->covariances[static_cast<size_t>(k)] + x.block(k));
    ev.w_eig.push_back(eig_sym(w));
    ++s.eig_count;
    ev.omega_tilde.block(k) = phi_plus(sig, ev.w_eig.back());
    for (Eigen::Index i = 0; i < ev.w_eig.back().d.size(); ++i)
      ev.logdet_omega += std::log(phi_plus_scalar(sig, ev.w_eig.back().d[i]));
    f += s.data->covariances[static_cast<size_t>(k)].cwiseProduct(ev.omega_tilde.block(k)).sum();
  }
  f -= ev.logdet_omega;
  ev.upsilon = f + inner(ev.omega_tilde, x) + (0.5 / sig) * (ev.omega_tilde - s.omega_t).squared_norm() +
               ggl_penalty(ev.prox_v, s.params) - inner(ev.prox_v, x) +
               (0.5 / sig) * (ev.prox_v - s.theta_t).squared_norm();
  return ev;
}

// Installs the evaluation as the state's cache and refreshes the prox
// Jacobian at V(x).
inline void adopt_point(SubproblemState& s, Ensemble x, PointEval&& ev) {
  s.x = std::move(x);
  s.w_eig = std::move(ev.w_eig);
  s.omega_tilde = std::move(ev.omega_tilde);
  s.prox_v = std::move(ev.prox_v);
  s.upsilon = ev.upsilon;
  s.logdet_omega = ev.logdet_omega;
  Ensemble v = s.theta_t;
  v.axpy(s.sigma, s.x);
  s.jac = jac_prox_ggl(v, s.params, s.sigma);
  s.cache_valid = true;
}

inline void refresh_state(SubproblemState& s) { adopt_point(s, s.x, eval_dual_point(s, s.x)); }

inline double dual_objective(const SubproblemState& s, const Ensemble& x) {
  if (s.cache_valid && &x == &s.x) return s.upsilon;
  return eval_dual_point(s, x).upsilon;
}

// grad Upsilon(X) = (phi+_sigma(W^(k)(X)))_k - Prox_{sigma P}(V(X)).
inline Ensemble dual_gradient(const SubproblemState& s, const Ensemble& x) {
  if (s.cache_valid && &x == &s.x) return s.omega_tilde - s.prox_v;
  PointEval ev = eval_dual_point(s, x);
  return ev.omega_tilde - ev.prox_v;
}

// V[D] = -sigma ((phi+)'(W^(k))[D^(k)])_k - sigma W[D]; self-adjoint and
// negative definite. Requires valid caches at the current iterate.
inline Ensemble hessian_apply(const SubproblemState& s, const Ensemble& d) {
  if (!s.cache_valid) throw std::logic_error("hessian_apply: stale subproblem cache");
  Ensemble out = jac_apply(s.jac, d);
  for (int k = 0; k < d.classes(); ++k) {
    out.block(k) += phi_plus_dderiv(s.sigma, s.w_eig[static_cast<size_t>(k)], d.block(k));
    out.block(k) *= -s.sigma;
  }
  return out;
}

namespace detail {

// (-V)[D], the positive definite system handed to CG.
inline Ensemble neg_hessian_apply(const SubproblemState& s, const Ensemble& d) {
  Ensemble out = jac_apply(s.jac, d);
  for (int k = 0; k < d.classes(); ++k) {
    out.block(k) += phi_plus_dderiv(s.sigma, s.w_eig[static_cast<size_t>(k)], d.block(k));
    out.block(k) *= s.sigma;
  }
  return out;
}

}  // namespace detail

struct NewtonDirection {
  Ensemble d;
  int cg_iters = 0;
  bool converged = true;
};

// CG from D = 0 on (-V)[D] = grad with forcing tolerance
// min(eta_bar, ||grad||^(1+tau)); the true residual is recomputed every 25
// iterations to guard against recursion drift. On cap the best iterate is
// returned with converged = false and the caller falls back to steepest
// ascent.
inline NewtonDirection newton_direction(const SubproblemState& s, const Ensemble& grad,
                                        const NewtonConfig& cfg) {
  NewtonDirection res;
  res.d = Ensemble(grad.classes(), grad.dim());
  const double gnorm = grad.norm();
  if (gnorm == 0.0) return res;
  const double tol = std::min(cfg.eta_bar, std::pow(gnorm, 1.0 + cfg.tau));
  Ensemble r = grad;
  Ensemble p = r;
  double rr = r.squared_norm();
  res.converged = false;
  for (int it = 0; it < cfg.max_cg_iters; ++it) {
    if (std::sqrt(rr) <= tol) {
      res.converged = true;
      break;
    }
    Ensemble ap = detail::neg_hessian_apply(s, p);
    const double pap = inner(p, ap);
    if (!(pap > 0.0)) break;  // numerically lost positive definiteness
    const double alpha = rr / pap;
    res.d.axpy(alpha, p);
    ++res.cg_iters;
    if (res.cg_iters % 25 == 0) {
      r = grad - detail::neg_hessian_apply(s, res.d);
    } else {
      r.axpy(-alpha, ap);
    }
    const double rr_new = r.squared_norm();
    p *= rr_new / rr;
    p += r;
    rr = rr_new;
  }
  if (!res.converged && std::sqrt(rr) <= tol) res.converged = true;
  return res;
}

struct LineSearchResult {
  double alpha = 1.0;
  int evals = 0;
  bool noise_accept = false;  // accepted at the resolution limit of Upsilon
  Ensemble x_new;
  PointEval eval;
};

// Armijo backtracking on Upsilon (ascent): smallest m with
//   Upsilon(X + rho^m D) >= Upsilon(X) + mu rho^m <grad, D>.
// Near the optimum the predicted increase mu*alpha*<g,d> falls below the
// floating-point resolution of Upsilon and the test can fail on rounding
// noise alone even though the Newton step is still directionally sound; in
// that case the best trial is accepted (flagged) as long as it does not
// decrease Upsilon beyond noise. A genuinely descending direction still
// raises an error.
inline LineSearchResult line_search(const SubproblemState& s, const Ensemble& x, const Ensemble& d,
                                    const Ensemble& grad, const NewtonConfig& cfg) {
  if (!s.cache_valid) throw std::logic_error("line_search: stale subproblem cache");
  const double gd = inner(grad, d);
  if (gd < 0.0) throw SolverError("line_search: non-ascent direction, <grad,d> = " + std::to_string(gd));
  const double ups0 = s.upsilon;
  LineSearchResult res;
  LineSearchResult best;
  best.eval.upsilon = -std::numeric_limits<double>::infinity();
  double alpha = 1.0;
  for (int m = 0; m <= cfg.max_linesearch_steps; ++m) {
    res.x_new = x;
    res.x_new.axpy(alpha, d);
    res.eval = eval_dual_point(s, res.x_new);
    ++res.evals;
    if (res.eval.upsilon >= ups0 + cfg.mu * alpha * gd) {
      res.alpha = alpha;
      return res;
    }
    if (res.eval.upsilon > best.eval.upsilon) {
      best = res;
      best.alpha = alpha;
    }
    alpha *= cfg.rho;
  }
  best.evals = res.evals;
  if (best.eval.upsilon >= ups0 - 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(ups0))) {
    best.noise_accept = true;
    return best;
  }
  std::ostringstream msg;
  msg << "line_search: no Armijo step within " << cfg.max_linesearch_steps
      << " backtracks (ups0 = " << ups0 << ", <grad,d> = " << gd << ", |d| = " << d.norm() << ")";
  throw SolverError(msg.str());
}

// Primal-dual recovery: Omega~^(k) = phi+_sigma(W^(k)(X)), Theta~ = Omega~.
inline std::pair<Ensemble, Ensemble> recover_primal(const SubproblemState& s, const Ensemble& x) {
  if (s.cache_valid && &x == &s.x) return {s.omega_tilde, s.omega_tilde};
  PointEval ev = eval_dual_point(s, x);
  return {ev.omega_tilde, ev.omega_tilde};
}

// Phi_sigma(Om~, Om~) - Upsilon(X) without forming either side: with
// G = grad Upsilon = Om~ - P~ the difference collapses to
//   P(Om~) - P(P~) - <G, X> + 1/(2s) <G, Om~ + P~ - 2 Th_t>,
// every term vanishing with G.
inline double subproblem_gap(const SubproblemState& s, const Ensemble& grad) {
  if (!s.cache_valid) throw std::logic_error("subproblem_gap: stale subproblem cache");
  Ensemble m = s.omega_tilde + s.prox_v;
  m.axpy(-2.0, s.theta_t);
  return ggl_penalty_diff(s.omega_tilde, s.prox_v, s.params) - inner(grad, s.x) +
         (0.5 / s.sigma) * inner(grad, m);
}

// What the outer loop's stopping rule sees for each inner candidate.
struct StopSample {
  const Ensemble& omega;  // candidate Omega~ (= Theta~)
  const Ensemble& x;
  double upsilon;
  double gap;        // Phi - Upsilon at the candidate
  double step_norm;  // ||(Om~, Om~) - (Om_t, Th_t)||
  double grad_norm;
  int newton_iter;
};
using StopRule = std::function<bool(const StopSample&)>;

struct SubproblemStats {
  int newton_iters = 0;  // accepted Newton steps
  long cg_iters = 0;
  int linesearch_evals = 0;
  int cg_fallbacks = 0;
  double final_grad_norm = 0.0;
  double final_gap = 0.0;
  double final_upsilon = 0.0;
  double final_logdet_omega = 0.0;
  std::vector<double> grad_norms;  // one per visited iterate, incl. the last
  long eig_count = 0;              // W-eigendecompositions
  bool stagnated = false;          // returned at the floating-point floor
};

struct SubproblemResult {
  Ensemble omega, theta, x;
  SubproblemStats stats;
};

// Iterates Newton steps on the dual until the supplied stopping rule
// accepts a primal-dual candidate. If two consecutive iterations produce no
// resolvable Upsilon increase and no gradient-norm progress, the iterate is
// at the floating-point floor: in exact arithmetic the Newton sequence
// would drive the duality gap below any positive threshold, so the
// candidate is returned with the stagnated flag instead of spinning to the
// iteration cap.
inline SubproblemResult solve_subproblem(const Ensemble& omega_t, const Ensemble& theta_t,
                                         double sigma, const ProblemData& data,
                                         const GglParams& params, const Ensemble& x0,
                                         const StopRule& stop, const NewtonConfig& cfg) {
  cfg.validate();
  SubproblemState s = make_subproblem(omega_t, theta_t, sigma, data, params, x0);
  refresh_state(s);
  SubproblemStats stats;
  Ensemble grad = s.omega_tilde - s.prox_v;
  double gnorm = grad.norm();
  stats.grad_norms.push_back(gnorm);
  double best_upsilon = s.upsilon;
  double min_gnorm = gnorm;
  int stall_count = 0;
  // the stopping conditions are evaluated on the candidate recovered from
  // X_{t,j+1}, i.e. after each direction / line-search / recovery pass
  for (int j = 0;; ++j) {
    if (j >= cfg.max_newton_iters) {
      std::ostringstream msg;
      msg << "solve_subproblem: stopping rule not met within " << cfg.max_newton_iters
          << " Newton iterations (sigma = " << sigma << ", |grad| = " << gnorm << ")";
      throw SolverError(msg.str());
    }
    NewtonDirection dir = newton_direction(s, grad, cfg);
    stats.cg_iters += dir.cg_iters;
    if (!dir.converged) {
      dir.d = grad;  // steepest ascent fallback
      ++stats.cg_fallbacks;
    }
    LineSearchResult ls = line_search(s, s.x, dir.d, grad, cfg);
    stats.linesearch_evals += ls.evals;
    adopt_point(s, std::move(ls.x_new), std::move(ls.eval));
    ++stats.newton_iters;

    grad = s.omega_tilde - s.prox_v;
    gnorm = grad.norm();
    stats.grad_norms.push_back(gnorm);
    const double gap = subproblem_gap(s, grad);
    const double step_norm = std::sqrt((s.omega_tilde - s.omega_t).squared_norm() +
                                       (s.omega_tilde - s.theta_t).squared_norm());
    const bool no_ascent = s.upsilon <= best_upsilon + 1e-15 * (1.0 + std::abs(best_upsilon));
    const bool no_grad_progress = gnorm >= 0.5 * min_gnorm;
    stall_count = (no_ascent && no_grad_progress) ? stall_count + 1 : 0;
    best_upsilon = std::max(best_upsilon, s.upsilon);
    min_gnorm = std::min(min_gnorm, gnorm);

    StopSample sample{s.omega_tilde, s.x, s.upsilon, gap, step_norm, gnorm, j};
    const bool stalled = stall_count >= 2;
    if (stop(sample) || stalled) {
      stats.final_grad_norm = gnorm;
      stats.final_gap = gap;
      stats.final_upsilon = s.upsilon;
      stats.final_logdet_omega = s.logdet_omega;
      stats.eig_count = s.eig_count;
      stats.stagnated = stalled;
      return {s.omega_tilde, s.omega_tilde, s.x, std::move(stats)};
    }
  }
}

}  // namespace ggl
