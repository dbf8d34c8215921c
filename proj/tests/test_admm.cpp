#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace ggl;
using ggltest::random_problem;

namespace {
ProblemData identity_problem(int k, int p) {
  ProblemData d;
  d.covariances.assign(static_cast<size_t>(k), Matrix::Identity(p, p));
  d.sample_counts.assign(static_cast<size_t>(k), 100);
  return d;
}
}  // namespace

TEST_CASE("admm_step: scalar trace, zero-diagonal X, lambda = 0 short-circuit", "[admm]") {
  // p = 1, K = 1, S = 1, sigma = 1, identity start: hand-rolled iteration
  const ProblemData d1 = identity_problem(1, 1);
  const GglParams params{0.5, 0.5};
  Ensemble x0(1, 1), z0 = Ensemble::identity(1, 1), t0 = Ensemble::identity(1, 1);
  AdmmStep s1 = admm_step(x0, z0, t0, 1.0, d1, params, 1.618);
  CHECK(s1.x.block(0)(0, 0) == 0.0);                      // prox keeps diagonals
  CHECK(s1.z.block(0)(0, 0) == Catch::Approx(1.0).margin(1e-14));
  CHECK(s1.theta.block(0)(0, 0) == Catch::Approx(1.0).margin(1e-13));

  // X' always has zero diagonal groups
  std::mt19937 rng(83);
  const ProblemData d2 = random_problem(2, 4, rng);
  Ensemble z = ggltest::random_spd_ensemble(2, 4, rng);
  Ensemble th = ggltest::random_spd_ensemble(2, 4, rng);
  AdmmStep s2 = admm_step(Ensemble(2, 4), z, th, 0.7, d2, params, 1.0);
  for (int k = 0; k < 2; ++k) {
    CHECK(s2.x.block(k).diagonal().norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(s2.z.block(k));
    CHECK(es.eigenvalues().minCoeff() > 0.0);  // range of phi+
  }

  // lambda = 0 makes the X-update the zero map
  AdmmStep s3 = admm_step(Ensemble(2, 4), z, th, 0.7, d2, GglParams{0.0, 0.0}, 1.0);
  CHECK(s3.x.norm() == 0.0);
}

TEST_CASE("admm_step: theta update uses exactly tau*sigma*(Z'-X'-S)", "[admm]") {
  std::mt19937 rng(89);
  const ProblemData data = random_problem(2, 3, rng);
  const GglParams params{0.3, 0.2};
  Ensemble z = ggltest::random_spd_ensemble(2, 3, rng);
  Ensemble th = ggltest::random_spd_ensemble(2, 3, rng);
  const double sigma = 1.3, tau = 1.618;
  AdmmStep s = admm_step(Ensemble(2, 3), z, th, sigma, data, params, tau);
  // mirror the update expression bit for bit
  Ensemble resid = s.z - s.x;
  for (int k = 0; k < 2; ++k) resid.block(k) -= data.covariances[static_cast<size_t>(k)];
  Ensemble expect = th;
  expect.axpy(tau * sigma, resid);
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(s.theta.block(k)(i, j) == expect.block(k)(i, j));
}

TEST_CASE("admm_step fixed point at a converged triple", "[admm]") {
  // exact closed form: S = I, any lambda -> (X, Z, Theta) = (0, I, I)
  const ProblemData data = identity_problem(2, 5);
  const GglParams params{0.4, 0.3};
  Ensemble x(2, 5), z = Ensemble::identity(2, 5), th = Ensemble::identity(2, 5);
  AdmmStep s = admm_step(x, z, th, 1.7, data, params, 1.618);
  CHECK((s.x - x).norm() <= 1e-10);
  CHECK((s.z - z).norm() <= 1e-10);
  CHECK((s.theta - th).norm() <= 1e-10);

  // and a numerically converged triple on a random instance stays put
  std::mt19937 rng(97);
  const ProblemData rd = random_problem(2, 5, rng, 1.0);
  AdmmConfig cfg;
  cfg.tol = 1e-10;
  AdmmResult res = solve_admm(rd, params, cfg);
  REQUIRE(res.converged);
  AdmmStep again = admm_step(res.x, res.z, res.theta, 1.0, rd, params, cfg.tau);
  const double scale = 1.0 + res.z.norm() + res.theta.norm();
  CHECK((again.x - res.x).norm() <= 1e-7 * scale);
  CHECK((again.z - res.z).norm() <= 1e-7 * scale);
  CHECK((again.theta - res.theta).norm() <= 1e-7 * scale);
}

TEST_CASE("kkt_residual_admm", "[admm]") {
  // constructed KKT point for S = I, lambda = 0
  const ProblemData data = identity_problem(2, 4);
  CHECK(kkt_residual_admm(Ensemble(2, 4), Ensemble::identity(2, 4), Ensemble::identity(2, 4),
                          data, GglParams{0.0, 0.0}) <= 1e-12);

  // perturbing Z - X - S by delta moves the second term by at least its share
  Ensemble z = Ensemble::identity(2, 4);
  z.block(0)(0, 0) += 0.25;
  const double eta = kkt_residual_admm(Ensemble(2, 4), z, Ensemble::identity(2, 4), data,
                                       GglParams{0.0, 0.0});
  double snorm = std::sqrt(2.0 * Matrix::Identity(4, 4).squaredNorm());
  CHECK(eta >= 0.25 / (1.0 + snorm) - 1e-12);
}

TEST_CASE("solve_admm: closed form, termination contract, monitoring", "[admm]") {
  const GglParams params{0.2, 0.1};
  const ProblemData data = identity_problem(3, 6);
  AdmmConfig cfg;
  cfg.tol = 1e-8;
  AdmmResult res = solve_admm(data, params, cfg);
  REQUIRE(res.converged);
  CHECK(res.eta_a <= cfg.tol);
  CHECK((res.z - Ensemble::identity(3, 6)).norm() <= 1e-6);
  CHECK((res.theta - Ensemble::identity(3, 6)).norm() <= 1e-6);
  CHECK(res.x.norm() <= 1e-6);

  // trace is recorded per iteration with cumulative wall time
  REQUIRE(res.trace.size() == static_cast<size_t>(res.iters));
  for (size_t i = 1; i < res.trace.size(); ++i)
    CHECK(res.trace[i].wall_ms >= res.trace[i - 1].wall_ms);

  // tol = 0 runs to the exact iteration cap and reports non-convergence
  std::mt19937 rng(101);
  const ProblemData rd = random_problem(2, 3, rng, 1.0);
  AdmmConfig cap;
  cap.tol = 0.0;
  cap.max_iters = 200;
  cap.record_trace = false;
  AdmmResult capped = solve_admm(rd, GglParams{0.05, 0.02}, cap);
  CHECK_FALSE(capped.converged);
  CHECK(capped.iters == 200);

  // with adaptation off and tau = 1, eta_A improves over the run
  AdmmConfig plain;
  plain.tau = 1.0;
  plain.adapt.enabled = false;
  plain.tol = 1e-7;
  plain.max_iters = 5000;
  AdmmResult mono = solve_admm(rd, GglParams{0.3, 0.2}, plain);
  REQUIRE(!mono.trace.empty());
  double min_eta = mono.trace.front().eta_a;
  for (const auto& row : mono.trace) min_eta = std::min(min_eta, row.eta_a);
  CHECK(min_eta <= mono.trace.front().eta_a);
  CHECK(mono.trace.back().eta_a == Catch::Approx(mono.eta_a));
}

TEST_CASE("admm config validation", "[admm]") {
  AdmmConfig bad_tau;
  bad_tau.tau = 1.7;  // above (1+sqrt(5))/2
  CHECK_THROWS_AS(bad_tau.validate(), std::invalid_argument);
  AdmmConfig bad_sigma;
  bad_sigma.sigma = 0.0;
  CHECK_THROWS_AS(bad_sigma.validate(), std::invalid_argument);
  AdmmConfig defaults;
  CHECK(defaults.tau == 1.618);
  CHECK(defaults.max_iters == 20000);
}
