#include <cmath>

#include "doctest.h"
#include "tvsolid/material.hpp"
#include "tvsolid/oracles.hpp"

using namespace tvsolid;

namespace {

// independent adaptive Simpson quadrature of int_0^s max{2 sigma, p sigma^(p-1)}
double h_profile_quadrature(double p, double s) {
  auto f = [p](double x) { return std::max(2.0 * x, p * std::pow(x, p - 1.0)); };
  double acc = 0.0;
  const int panels = 20000;
  const double w = s / panels;
  for (int i = 0; i < panels; ++i) {
    const double a = i * w, b = a + w;
    acc += w / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
  }
  return acc;
}

Mat2 rotation(double phi) {
  Mat2 Q;
  Q << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  return Q;
}

}  // namespace

TEST_SUITE("material") {
  const MaterialParams mat;

  TEST_CASE("elastic energy at the reference state") {
    CHECK(eval_Wel(mat, Mat2::Identity()) == doctest::Approx(mat.gamma).epsilon(1e-14));
    // frame indifference: exact pi/2 rotation entries
    Mat2 Q;
    Q << 0.0, -1.0, 1.0, 0.0;
    CHECK(std::abs(eval_Wel(mat, Q) - eval_Wel(mat, Mat2::Identity())) <= 1e-14);
    CHECK(grad_Wel(mat, Mat2::Identity()).norm() <= 1e-14);
    Mat2 flip = Mat2::Identity();
    flip(1, 1) = -1.0;  // det = -1
    CHECK_THROWS_AS(eval_Wel(mat, flip), std::domain_error);
  }

  TEST_CASE("grad_Wel matches central differences") {
    const auto rep = fd_check_matrix_gradient(
        "t", 7, 200, [](OracleRng& rng) { return random_gl_plus(rng); },
        [&](const Mat2& F) { return eval_Wel(mat, F); },
        [&](const Mat2& F) { return grad_Wel(mat, F); });
    CHECK(rep.pass);
    CHECK(rep.max_error < 1e-6);
  }

  TEST_CASE("strain-gradient profile") {
    CHECK(h_branch_point(mat) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    // quadrature oracle freezes the value at |v| = 1 for p = 4
    const double oracle = h_profile_quadrature(mat.p, 1.0);
    CHECK(eval_h_scalar(mat, 1.0) == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(eval_h_scalar(mat, 1.0) == doctest::Approx(1.25).epsilon(1e-14));

    CHECK(eval_H(mat, Vec2::Zero()) == 0.0);
    CHECK(eval_DH(mat, Vec2::Zero()).norm() == 0.0);
    // quadratic branch: p |v|^(p-2) = 0.04 < 2
    const Vec2 dh = eval_DH(mat, Vec2(0.1, 0.0));
    CHECK(dh[0] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(dh[1] == 0.0);
    // oracle agreement on both branches
    for (double s : {0.3, 0.7, 1.3, 2.5})
      CHECK(eval_h_scalar(mat, s) == doctest::Approx(h_profile_quadrature(mat.p, s)).epsilon(1e-9));
  }

  TEST_CASE("coupling energy and its partials") {
    for (double det_shift : {0.0, 0.3, -0.2}) {
      Mat2 F = Mat2::Identity();
      F(0, 0) += det_shift;
      CHECK(eval_Wcpl(mat, F, 0.0) == 0.0);
    }
    CHECK(eval_Wcpl(mat, Mat2::Identity(), 1.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK_THROWS_AS(eval_Wcpl(mat, Mat2::Identity(), -0.1), std::domain_error);

    // heat capacity -theta d2_thetatheta W^cpl at F = Id is c_V (tanh(0) = 0)
    for (double th : {0.3, 1.0, 2.7}) {
      const auto p = eval_Wcpl_partials(mat, Mat2::Identity(), th);
      CHECK(-th * p.d2_thetatheta == doctest::Approx(mat.c_V).epsilon(1e-13));
      const double fd = (eval_Wcpl_partials(mat, Mat2::Identity(), th + 1e-5).dTheta -
                         eval_Wcpl_partials(mat, Mat2::Identity(), th - 1e-5).dTheta) /
                        2e-5;
      CHECK(p.d2_thetatheta == doctest::Approx(fd).epsilon(1e-6));
    }
  }

  TEST_CASE("internal energy and its inverse") {
    CHECK(eval_Win(mat, Mat2::Identity(), 0.0) == 0.0);
    for (double th : {0.2, 1.0, 2.5})
      CHECK(eval_Win(mat, Mat2::Identity(), th) == doctest::Approx(mat.c_V * th).epsilon(1e-14));
    CHECK(invert_Win(mat, Mat2::Identity(), mat.c_V * 2.5) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK_THROWS_AS(invert_Win(mat, Mat2::Identity(), -1.0), std::domain_error);

    for (int s = 0; s < 300; ++s) {
      OracleRng rng(42, s);
      const Mat2 F = random_gl_plus(rng);
      const double th = rng.uniform(0.0, 5.0);
      const double w = eval_Win(mat, F, th);
      CHECK(std::abs(invert_Win(mat, F, w) - th) <= 1e-10);
    }
  }

  TEST_CASE("dissipation potential") {
    Mat2 skew;
    skew << 0.0, 1.0, -1.0, 0.0;
    CHECK(eval_R(mat, Mat2::Identity(), skew, 1.0) == 0.0);

    // brute-force assembly of Cdot and the contraction, independent loops
    for (double th : {0.0, 0.7, 2.0}) {
      const Mat2 F = Mat2::Identity(), Fdot = Mat2::Identity();
      double cdot[2][2] = {{0, 0}, {0, 0}};
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          for (int i = 0; i < 2; ++i) cdot[a][b] += Fdot(i, a) * F(i, b) + F(i, a) * Fdot(i, b);
      double norm2 = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) norm2 += cdot[a][b] * cdot[a][b];
      const double expected = 0.5 * (1.0 + 1.0 / (1.0 + th)) * norm2;
      CHECK(eval_R(mat, F, Fdot, th) == doctest::Approx(expected).epsilon(1e-15));
      // the pure contraction part: |Cdot|^2/2 = |2 Id|^2/2 = 4 in d = 2
      CHECK(0.5 * norm2 == doctest::Approx(4.0).epsilon(1e-15));
    }

    for (int s = 0; s < 1000; ++s) {
      OracleRng rng(43, s);
      const Mat2 F = random_gl_plus(rng);
      Mat2 Fdot;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) Fdot(i, j) = rng.uniform(-2.0, 2.0);
      const double th = rng.uniform(0.0, 3.0);
      const double R = eval_R(mat, F, Fdot, th);
      const double xi = eval_xi(mat, F, Fdot, th);
      CHECK(std::abs(xi - 2.0 * R) <= 1e-14 * (1.0 + std::abs(R)));
    }
  }

  TEST_CASE("conductivity pullback") {
    CHECK((pullback_K(mat, Mat2::Identity(), 0.7) - eval_K(mat, 0.7)).norm() <= 1e-14);
    // F = diag(2,1) with K = Id (theta = 0, kappa0 = 1 makes K = Id)
    Mat2 F = Mat2::Zero();
    F(0, 0) = 2.0;
    F(1, 1) = 1.0;
    const Mat2 K = pullback_K(mat, F, 0.0);
    CHECK(K(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(K(1, 1) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(std::abs(K(0, 1)) <= 1e-15);
    Mat2 flip = Mat2::Identity();
    flip(0, 0) = -1.0;  // det = -1
    CHECK_THROWS_AS(pullback_K(mat, flip, 1.0), std::domain_error);

    for (int s = 0; s < 200; ++s) {
      OracleRng rng(44, s);
      const Mat2 Kr = pullback_K(mat, random_gl_plus(rng), rng.uniform(0.0, 3.0));
      CHECK((Kr - Kr.transpose()).norm() <= 1e-14);
      CHECK(Kr.determinant() > 0.0);
      CHECK(Kr(0, 0) > 0.0);
    }
    // equals K(theta) whenever F is a rotation
    for (double phi : {0.3, 1.2, 2.9}) {
      const Mat2 Kr = pullback_K(mat, rotation(phi), 1.3);
      CHECK((Kr - eval_K(mat, 1.3)).norm() <= 1e-13);
    }
  }

  TEST_CASE("frame indifference suites") {
    for (const auto& rep : symmetry_suite(2024, mat)) {
      INFO(rep.name);
      CHECK(rep.pass);
    }
    // dissipation frame indifference with explicit random rotations
    for (int s = 0; s < 500; ++s) {
      OracleRng rng(45, s);
      const Mat2 F = random_gl_plus(rng);
      const Mat2 Q = random_rotation(rng);
      Mat2 Fdot;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) Fdot(i, j) = rng.uniform(-1.5, 1.5);
      const double th = rng.uniform(0.0, 2.0);
      const double r1 = eval_R(mat, F, Fdot, th);
      const double r2 = eval_R(mat, Q * F, Q * Fdot, th);
      CHECK(std::abs(r1 - r2) <= 1e-12 * (1.0 + std::abs(r1)));
    }
  }

  TEST_CASE("structural identities and bound audits") {
    for (const auto& rep : identity_suite(77, mat)) {
      INFO(rep.name);
      CHECK(rep.pass);
    }
    for (const auto& rep : bound_audit_suite(78, mat)) {
      INFO(rep.name, " observed=", rep.observed_constant);
      CHECK(rep.pass);
    }
  }

  TEST_CASE("derivative suite") {
    for (const auto& rep : fd_gradient_suite(99, mat)) {
      INFO(rep.name, " max_error=", rep.max_error);
      CHECK(rep.pass);
    }
  }

  TEST_CASE("parameter validation") {
    MaterialParams bad = mat;
    bad.p = 2.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = mat;
    bad.q_det = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = mat;
    bad.alpha = 3.5 * bad.c_V;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_NOTHROW(mat.validate());
  }
}
