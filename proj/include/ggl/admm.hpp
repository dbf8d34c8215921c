// ADMM baseline on the dual formulation
//   min_{X,Z} sum_k h(Z^(k)) + P*(X)  s.t.  Z - X = S,
// with multiplier Theta (the primal estimate). Used standalone and as the
// warm start for the proximal point solver.
#pragma once

#include <chrono>
#include <sstream>
#include <vector>

#include "ggl/objective.hpp"

namespace ggl {

struct AdmmAdaptConfig {
  bool enabled = true;
  double ratio_threshold = 10.0;  // rebalance when residuals differ by this factor
  double scale = 1.5;
  int period = 50;
  double sigma_min = 1e-6;
  double sigma_max = 1e6;
};

struct AdmmConfig {
  double sigma = 1.0;
  double tau = 1.618;  // step length, must lie in (0, (1+sqrt(5))/2)
  double tol = 1e-6;
  int max_iters = 20000;
  AdmmAdaptConfig adapt;
  bool record_trace = true;

  void validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("AdmmConfig: sigma must be positive");
    if (!(tau > 0.0 && tau < (1.0 + std::sqrt(5.0)) / 2.0))
      throw std::invalid_argument("AdmmConfig: tau must be in (0,(1+sqrt5)/2)");
    if (tol < 0.0) throw std::invalid_argument("AdmmConfig: tol must be nonnegative");
  }
};

struct AdmmStep {
  Ensemble x, z, theta;
};

// One iteration:
//   X' = M - Prox_P(M),  M = Z + Theta/sigma - S            (X' has zero diagonal groups)
//   Z'^(k) = phi+_{1/sigma}(X'^(k) - Theta^(k)/sigma + S^(k))  (strictly PD)
//   Theta' = Theta + tau*sigma*(Z' - X' - S)
inline AdmmStep admm_step(const Ensemble& x, const Ensemble& z, const Ensemble& theta,
                          double sigma, const ProblemData& data, const GglParams& params,
                          double tau) {
  if (!(sigma > 0.0)) throw std::invalid_argument("admm_step: sigma must be positive");
  (void)x;  // the X-update depends only on (Z, Theta)
  const int kk = z.classes();
  AdmmStep out;
  Ensemble m = z;
  for (int k = 0; k < kk; ++k)
    m.block(k) += theta.block(k) / sigma - data.covariances[static_cast<size_t>(k)];
  out.x = m - prox_ggl(m, params, 1.0);
  out.z = Ensemble(kk, z.dim());
  for (int k = 0; k < kk; ++k) {
    Matrix arg = out.x.block(k) - theta.block(k) / sigma + data.covariances[static_cast<size_t>(k)];
    out.z.block(k) = phi_plus(1.0 / sigma, arg);
  }
  Ensemble resid = out.z - out.x;
  for (int k = 0; k < kk; ++k) resid.block(k) -= data.covariances[static_cast<size_t>(k)];
  out.theta = theta;
  out.theta.axpy(tau * sigma, resid);
  return out;
}

// eta_A = max of the three normalized KKT residuals of the dual formulation.
inline double kkt_residual_admm(const Ensemble& x, const Ensemble& z, const Ensemble& theta,
                                const ProblemData& data, const GglParams& params) {
  Ensemble tpx = theta + x;
  const double r1 = (theta - prox_ggl(tpx, params, 1.0)).norm() / (1.0 + theta.norm());
  Ensemble zxs = z - x;
  double snorm2 = 0.0;
  for (int k = 0; k < z.classes(); ++k) {
    zxs.block(k) -= data.covariances[static_cast<size_t>(k)];
    snorm2 += data.covariances[static_cast<size_t>(k)].squaredNorm();
  }
  const double r2 = zxs.norm() / (1.0 + std::sqrt(snorm2));
  Ensemble zmt = z - theta;
  double r3num2 = 0.0;
  for (int k = 0; k < z.classes(); ++k)
    r3num2 += (z.block(k) - phi_plus(1.0, zmt.block(k))).squaredNorm();
  const double r3 = std::sqrt(r3num2) / (1.0 + z.norm());
  return std::max({r1, r2, r3});
}

struct AdmmTraceRow {
  int iter;
  double sigma, eta_a, pfeas, dfeas, pobj, wall_ms;
};

struct AdmmResult {
  Ensemble x, z, theta;
  std::vector<AdmmTraceRow> trace;
  bool converged = false;
  int iters = 0;
  double eta_a = 0.0;
};

inline void write_admm_trace_csv(std::ostream& os, const std::vector<AdmmTraceRow>& rows) {
  os << "iter,sigma,eta_a,pfeas,dfeas,pobj,wall_ms\n";
  for (const auto& r : rows) {
    os.precision(10);
    os << r.iter << ',' << r.sigma << ',' << r.eta_a << ',' << r.pfeas << ',' << r.dfeas << ','
       << r.pobj << ',' << r.wall_ms << '\n';
  }
}

// Runs from the identity start (X = 0, Z = Theta = I) until eta_A <= tol or
// the iteration cap; hitting the cap is a flagged, normal outcome. The
// penalty is rebalanced every adapt.period iterations from the primal
// residual ||Z-X-S|| and dual residual sigma*||Z - Z_prev||.
inline AdmmResult solve_admm(const ProblemData& data, const GglParams& params,
                             const AdmmConfig& cfg) {
  cfg.validate();
  params.validate();
  data.validate();
  const int kk = data.classes();
  const int p = data.dim();
  AdmmResult res;
  res.x = Ensemble(kk, p);
  res.z = Ensemble::identity(kk, p);
  res.theta = Ensemble::identity(kk, p);
  double sigma = cfg.sigma;
  const auto t0 = std::chrono::steady_clock::now();
  double snorm2 = 0.0;
  for (int k = 0; k < kk; ++k) snorm2 += data.covariances[static_cast<size_t>(k)].squaredNorm();
  const double snorm = std::sqrt(snorm2);

  for (int it = 0; it < cfg.max_iters; ++it) {
    Ensemble z_prev = res.z;
    AdmmStep next = admm_step(res.x, res.z, res.theta, sigma, data, params, cfg.tau);
    res.x = std::move(next.x);
    res.z = std::move(next.z);
    res.theta = std::move(next.theta);
    if (!res.z.block(0).allFinite() || !res.theta.block(0).allFinite())
      throw SolverError("solve_admm: non-finite iterates at iteration " + std::to_string(it));
    res.iters = it + 1;

    Ensemble prim = res.z - res.x;
    for (int k = 0; k < kk; ++k) prim.block(k) -= data.covariances[static_cast<size_t>(k)];
    const double rp = prim.norm();
    const double rd = sigma * (res.z - z_prev).norm();
    res.eta_a = kkt_residual_admm(res.x, res.z, res.theta, data, params);

    if (cfg.record_trace) {
      const double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
      res.trace.push_back({res.iters, sigma, res.eta_a, rp / (1.0 + snorm),
                           rd / (1.0 + res.z.norm()), primal_objective(res.theta, data, params),
                           ms});
    }
    if (res.eta_a <= cfg.tol) {
      res.converged = true;
      break;
    }
    if (cfg.adapt.enabled && res.iters % cfg.adapt.period == 0) {
      if (rp > cfg.adapt.ratio_threshold * rd)
        sigma = std::min(sigma * cfg.adapt.scale, cfg.adapt.sigma_max);
      else if (rd > cfg.adapt.ratio_threshold * rp)
        sigma = std::max(sigma / cfg.adapt.scale, cfg.adapt.sigma_min);
    }
  }
  return res;
}

}  // namespace ggl
