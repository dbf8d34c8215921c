#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace ggl;
using ggltest::golden_min;
using ggltest::random_symmetric;

TEST_CASE("eig_sym basics and invariants", "[spectral]") {
  EigDecomp e1 = eig_sym(Matrix::Identity(2, 2));
  CHECK(e1.d[0] == Catch::Approx(1.0));
  CHECK(e1.d[1] == Catch::Approx(1.0));
  CHECK((e1.q.transpose() * e1.q - Matrix::Identity(2, 2)).norm() < 1e-12);

  Matrix d(2, 2);
  d << 3.0, 0.0, 0.0, -1.0;
  EigDecomp e2 = eig_sym(d);
  CHECK(e2.d[0] == Catch::Approx(3.0));
  CHECK(e2.d[1] == Catch::Approx(-1.0));

  // characteristic polynomial of [[0,1],[1,0]] gives +-1
  Matrix offd(2, 2);
  offd << 0.0, 1.0, 1.0, 0.0;
  EigDecomp e3 = eig_sym(offd);
  CHECK(e3.d[0] == Catch::Approx(1.0));
  CHECK(e3.d[1] == Catch::Approx(-1.0));

  std::mt19937 rng(1);
  Matrix a = random_symmetric(8, rng);
  EigDecomp e = eig_sym(a);
  CHECK((e.q * e.d.asDiagonal() * e.q.transpose() - a).norm() <= 1e-9 * (1.0 + a.norm()));
  for (int i = 1; i < 8; ++i) CHECK(e.d[i - 1] >= e.d[i]);

  Matrix nan = Matrix::Constant(2, 2, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(eig_sym(nan), std::invalid_argument);
}

TEST_CASE("phi_plus matches the scalar formula and 1-D minimization", "[spectral]") {
  CHECK((phi_plus(1.0, Matrix::Zero(2, 2)) - Matrix::Identity(2, 2)).norm() < 1e-14);
  CHECK((phi_plus(4.0, Matrix::Zero(2, 2)) - 2.0 * Matrix::Identity(2, 2)).norm() < 1e-14);

  Matrix a(2, 2);
  a << 3.0, 0.0, 0.0, -1.0;
  const Matrix fp = phi_plus(1.0, a);
  CHECK(fp(0, 0) == Catch::Approx((3.0 + std::sqrt(13.0)) / 2.0).epsilon(1e-12));
  CHECK(fp(1, 1) == Catch::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-12));
  CHECK(std::abs(fp(0, 1)) < 1e-14);

  // each eigenvalue solves min_b beta*(-log b) + (b-a)^2/2
  for (double beta : {0.5, 1.0, 4.0}) {
    for (double x : {-3.0, -1.0, 0.0, 0.7, 5.0}) {
      auto obj = [&](double b) { return -beta * std::log(b) + 0.5 * (b - x) * (b - x); };
      const double bstar = golden_min(obj, 1e-9, std::abs(x) + 3.0 * std::sqrt(beta) + 1.0);
      CHECK(phi_plus_scalar(beta, x) == Catch::Approx(bstar).epsilon(1e-6));
    }
  }

  CHECK_THROWS_AS(phi_plus(0.0, Matrix::Zero(2, 2)), std::invalid_argument);
  CHECK_THROWS_AS(phi_plus(-1.0, Matrix::Zero(2, 2)), std::invalid_argument);
}

TEST_CASE("phi_minus and the algebraic identities", "[spectral]") {
  CHECK((phi_minus(1.0, Matrix::Zero(2, 2)) - Matrix::Identity(2, 2)).norm() < 1e-14);
  Matrix a(2, 2);
  a << 3.0, 0.0, 0.0, -1.0;
  const Matrix fm = phi_minus(1.0, a);
  CHECK(fm(0, 0) == Catch::Approx((std::sqrt(13.0) - 3.0) / 2.0).epsilon(1e-12));
  CHECK(fm(1, 1) == Catch::Approx((std::sqrt(5.0) + 1.0) / 2.0).epsilon(1e-12));

  std::mt19937 rng(2);
  for (double beta : {1e-4, 1.0, 1e4}) {
    for (int trial = 0; trial < 20; ++trial) {
      const int p = 2 + static_cast<int>(rng() % 15);
      Matrix m = random_symmetric(p, rng, trial % 3 == 0 ? 100.0 : 1.0);
      EigDecomp e = eig_sym(m);
      const Matrix fplus = phi_plus(beta, e);
      const Matrix fminus = phi_minus(beta, e);
      CHECK((fplus - fminus - m).norm() <= 1e-10 * (1.0 + m.norm()));
      CHECK((fplus * fminus - beta * Matrix::Identity(p, p)).norm() <=
            1e-9 * (1.0 + beta * std::sqrt(static_cast<double>(p))) * (1.0 + m.norm()));
      // first-order condition of the prox: B(B - A) = beta I
      CHECK((fplus * (fplus - m) - beta * Matrix::Identity(p, p)).norm() <=
            1e-8 * (1.0 + m.norm() * m.norm()));
    }
  }
}

TEST_CASE("stable evaluation survives huge eigenvalue magnitudes", "[spectral]") {
  // at x = -1e12, the naive (sqrt(x^2+4b)+x)/2 cancels to garbage
  const double x = -1e12, beta = 1.0;
  const double fp = phi_plus_scalar(beta, x);
  CHECK(fp > 0.0);
  CHECK(fp == Catch::Approx(beta / std::abs(x)).epsilon(1e-9));
  CHECK(phi_minus_scalar(beta, -x) == Catch::Approx(beta / std::abs(x)).epsilon(1e-9));
  CHECK(phi_plus_scalar(beta, x) * phi_minus_scalar(beta, x) == Catch::Approx(beta).epsilon(1e-12));
}

TEST_CASE("moreau_logdet values and envelope property", "[spectral]") {
  for (int p : {1, 3, 6}) {
    CHECK(moreau_logdet(1.0, Matrix::Zero(p, p)) == Catch::Approx(p / 2.0).epsilon(1e-12));
  }
  // scalar-formula oracle at A = I2: per eigenvalue -log(phi+(1)) + phi-(1)^2/2
  const double fp1 = (1.0 + std::sqrt(5.0)) / 2.0;
  const double fm1 = (std::sqrt(5.0) - 1.0) / 2.0;
  const double expect = 2.0 * (-std::log(fp1) + 0.5 * fm1 * fm1);
  CHECK(moreau_logdet(1.0, Matrix::Identity(2, 2)) == Catch::Approx(expect).epsilon(1e-12));

  // envelope is the minimum of beta*h(B) + ||B - A||^2/2 over PD B
  std::mt19937 rng(3);
  Matrix a = random_symmetric(4, rng);
  const double env = moreau_logdet(2.0, a);
  for (int trial = 0; trial < 25; ++trial) {
    Matrix b = ggltest::random_spd(4, rng);
    const double val =
        -2.0 * std::log(b.determinant()) + 0.5 * (b - a).squaredNorm();
    CHECK(env <= val + 1e-10);
  }
  CHECK_THROWS_AS(moreau_logdet(0.0, a), std::invalid_argument);
}

TEST_CASE("phi_plus_dderiv: closed forms, finite differences, operator properties",
          "[spectral]") {
  std::mt19937 rng(4);

  // at A = 0 the Loewner coefficients are all 1/2
  Matrix b = random_symmetric(3, rng);
  EigDecomp zero = eig_sym(Matrix::Zero(3, 3));
  CHECK((phi_plus_dderiv(1.0, zero, b) - 0.5 * b).norm() < 1e-12);
  CHECK(phi_plus_dderiv(1.0, zero, Matrix::Zero(3, 3)).norm() == 0.0);

  for (int trial = 0; trial < 10; ++trial) {
    Matrix a = random_symmetric(4, rng);
    Matrix dir = random_symmetric(4, rng);
    EigDecomp e = eig_sym(a);
    const double beta = trial % 2 == 0 ? 1.0 : 0.3;
    const Matrix deriv = phi_plus_dderiv(beta, e, dir);
    const double h = 1e-5;
    const Matrix fd = (phi_plus(beta, (a + h * dir).eval()) - phi_plus(beta, (a - h * dir).eval())) / (2.0 * h);
    CHECK((deriv - fd).norm() <= 1e-5 * (1.0 + fd.norm()));

    // Gamma strictly inside (0,1)
    const Matrix g = loewner_gamma(beta, e.d);
    CHECK(g.minCoeff() > 0.0);
    CHECK(g.maxCoeff() < 1.0);

    // self-adjointness in the Frobenius inner product
    Matrix c = random_symmetric(4, rng);
    const double lhs = (c.cwiseProduct(phi_plus_dderiv(beta, e, dir))).sum();
    const double rhs = (dir.cwiseProduct(phi_plus_dderiv(beta, e, c))).sum();
    CHECK(lhs == Catch::Approx(rhs).epsilon(1e-10));

    // positive definiteness of the operator
    if (dir.norm() > 0)
      CHECK((dir.cwiseProduct(phi_plus_dderiv(beta, e, dir))).sum() > 0.0);
  }

  EigDecomp e3 = eig_sym(Matrix::Zero(3, 3));
  CHECK_THROWS_AS(phi_plus_dderiv(1.0, e3, Matrix::Zero(2, 2)), std::invalid_argument);
}
