#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tvsolid {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;
using Mat4 = Eigen::Matrix4d;

/// Constitutive parameter set. The defaults satisfy every structural
/// requirement of the model (p > d, q_det >= p*d/(p-d), alpha < 3*c_V,
/// positive moduli). C0 is an audit bound only, never a modeling input.
struct MaterialParams {
  double p = 4.0;       // growth exponent of the strain-gradient potential
  double mu = 1.0;      // shear-like elastic modulus
  double gamma = 0.1;   // determinant-barrier coefficient
  double q_det = 4.0;   // determinant-barrier exponent
  double c_V = 1.0;     // heat capacity scale
  double alpha = 0.5;   // thermo-mechanical coupling strength
  double kappa0 = 1.0;  // base heat conductivity
  double C0 = 100.0;    // master bound constant (assertion checks only)

  void validate() const {
    constexpr int d = 2;
    if (!(p > d)) throw std::invalid_argument("material: p must exceed d=2");
    if (!(q_det >= p * d / (p - d)))
      throw std::invalid_argument("material: q_det must be >= p*d/(p-d)");
    if (!(alpha < 3.0 * c_V))
      throw std::invalid_argument("material: alpha must be < 3*c_V");
    if (!(mu > 0 && gamma > 0 && c_V > 0 && kappa0 > 0))
      throw std::invalid_argument("material: mu, gamma, c_V, kappa0 must be positive");
    if (!(C0 >= 1.0)) throw std::invalid_argument("material: C0 must be >= 1");
  }
};

/// One material evaluation point: deformation gradient, its rate, temperature.
struct FrameState {
  Mat2 F = Mat2::Identity();
  Mat2 Fdot = Mat2::Zero();
  double theta = 0.0;
};

inline void require_positive_det(const Mat2& F, const char* who) {
  if (!(F.determinant() > 0.0))
    throw std::domain_error(std::string(who) + ": det F must be positive");
}

inline void require_nonnegative_theta(double theta, const char* who) {
  if (!(theta >= 0.0))
    throw std::domain_error(std::string(who) + ": theta must be nonnegative");
}

// ---------------------------------------------------------------------------
// Elastic energy  W^el(F) = (mu/2)(|F|^2 - 2) + gamma det(F)^-q - (mu - q*gamma) log det(F)
// Stress-free at F = Id, frame indifferent, det-barrier makes GL+(2) open.
// ---------------------------------------------------------------------------

inline double eval_Wel(const MaterialParams& m, const Mat2& F) {
  require_positive_det(F, "eval_Wel");
  const double J = F.determinant();
  return 0.5 * m.mu * (F.squaredNorm() - 2.0) + m.gamma * std::pow(J, -m.q_det) -
         (m.mu - m.q_det * m.gamma) * std::log(J);
}

inline Mat2 cofactor2(const Mat2& F) {
  Mat2 c;
  c << F(1, 1), -F(1, 0), -F(0, 1), F(0, 0);
  return c;
}

inline Mat2 grad_Wel(const MaterialParams& m, const Mat2& F) {
  require_positive_det(F, "grad_Wel");
  const double J = F.determinant();
  const double b = m.q_det * m.gamma * std::pow(J, -m.q_det) + (m.mu - m.q_det * m.gamma);
  return m.mu * F - (b / J) * cofactor2(F);
}

/// Second derivative of W^el as a 4x4 matrix acting on vec(F) with component
/// order (00, 01, 10, 11).
inline Mat4 hess_Wel(const MaterialParams& m, const Mat2& F) {
  require_positive_det(F, "hess_Wel");
  const double J = F.determinant();
  const Mat2 cof = cofactor2(F);
  const Mat2 FinvT = cof / J;
  const double b = m.q_det * m.gamma * std::pow(J, -m.q_det) + (m.mu - m.q_det * m.gamma);
  const double bp = -m.q_det * m.q_det * m.gamma * std::pow(J, -m.q_det - 1.0);

  Mat4 H = Mat4::Zero();
  auto idx = [](int i, int a) { return 2 * i + a; };
  for (int i = 0; i < 2; ++i)
    for (int a = 0; a < 2; ++a) {
      H(idx(i, a), idx(i, a)) += m.mu;
      for (int j = 0; j < 2; ++j)
        for (int c = 0; c < 2; ++c) {
          // -(d/dF)[ b(J) F^-T ] = -b' cof:G F^-T + b F^-T G^T F^-T
          H(idx(i, a), idx(j, c)) += -bp * cof(j, c) * FinvT(i, a);
          H(idx(i, a), idx(j, c)) += b * FinvT(i, c) * FinvT(j, a);
        }
    }
  return H;
}

// ---------------------------------------------------------------------------
// Strain-gradient potential  H(v) = h(|v|),  h(s) = int_0^s max{2*sigma, p*sigma^(p-1)}.
// Uniformly convex with p-growth; the two branches cross at s* = (2/p)^(1/(p-2)).
// ---------------------------------------------------------------------------

inline double h_branch_point(const MaterialParams& m) {
  return std::pow(2.0 / m.p, 1.0 / (m.p - 2.0));
}

inline double eval_h_scalar(const MaterialParams& m, double s) {
  if (!(s >= 0.0)) throw std::domain_error("eval_h_scalar: s must be nonnegative");
  const double sb = h_branch_point(m);
  if (s <= sb) return s * s;
  return std::pow(s, m.p) + sb * sb - std::pow(sb, m.p);
}

inline double eval_H(const MaterialParams& m, const Vec2& v) {
  return eval_h_scalar(m, v.norm());
}

inline Vec2 eval_DH(const MaterialParams& m, const Vec2& v) {
  const double s = v.norm();
  const double g = std::max(2.0, m.p * std::pow(s, m.p - 2.0));
  return g * v;
}

/// d^2 H(v) = g(s) I + (g'(s)/s) v v^T with g(s) = max{2, p s^(p-2)}.
inline Mat2 hess_H(const MaterialParams& m, const Vec2& v) {
  const double s = v.norm();
  const double sb = h_branch_point(m);
  Mat2 H = Mat2::Zero();
  if (s <= sb) {
    H = 2.0 * Mat2::Identity();
  } else {
    const double g = m.p * std::pow(s, m.p - 2.0);
    const double gp_over_s = m.p * (m.p - 2.0) * std::pow(s, m.p - 4.0);
    H = g * Mat2::Identity() + gp_over_s * (v * v.transpose());
  }
  return H;
}

// ---------------------------------------------------------------------------
// Coupling energy  W^cpl(F, theta) = -c_V theta log theta + alpha tanh(|F|^2 - 2) theta/(1+theta)
// Continuously extended by 0 at theta = 0.
// ---------------------------------------------------------------------------

struct WcplPartials {
  double value = 0.0;
  Mat2 dF = Mat2::Zero();
  double dTheta = 0.0;
  double d2_thetatheta = 0.0;
  Mat2 d2_Ftheta = Mat2::Zero();
};

inline double eval_Wcpl(const MaterialParams& m, const Mat2& F, double theta) {
  require_positive_det(F, "eval_Wcpl");
  require_nonnegative_theta(theta, "eval_Wcpl");
  if (theta == 0.0) return 0.0;
  const double u = F.squaredNorm() - 2.0;
  return -m.c_V * theta * std::log(theta) + m.alpha * std::tanh(u) * theta / (1.0 + theta);
}

inline Mat2 grad_Wcpl_F(const MaterialParams& m, const Mat2& F, double theta) {
  require_positive_det(F, "grad_Wcpl_F");
  require_nonnegative_theta(theta, "grad_Wcpl_F");
  const double u = F.squaredNorm() - 2.0;
  const double sech2 = 1.0 - std::tanh(u) * std::tanh(u);
  return (2.0 * m.alpha * sech2 * theta / (1.0 + theta)) * F;
}

/// All partials at once; theta > 0 required for the theta-derivatives
/// (the theta log theta term is singular at 0).
inline WcplPartials eval_Wcpl_partials(const MaterialParams& m, const Mat2& F, double theta) {
  require_positive_det(F, "eval_Wcpl_partials");
  if (!(theta > 0.0)) throw std::domain_error("eval_Wcpl_partials: theta must be positive");
  const double u = F.squaredNorm() - 2.0;
  const double th = std::tanh(u);
  const double sech2 = 1.0 - th * th;
  const double phi = theta / (1.0 + theta);
  WcplPartials out;
  out.value = -m.c_V * theta * std::log(theta) + m.alpha * th * phi;
  out.dF = (2.0 * m.alpha * sech2 * phi) * F;
  out.dTheta = -m.c_V * (std::log(theta) + 1.0) + m.alpha * th / ((1.0 + theta) * (1.0 + theta));
  out.d2_thetatheta = -m.c_V / theta - 2.0 * m.alpha * th / std::pow(1.0 + theta, 3.0);
  out.d2_Ftheta = (2.0 * m.alpha * sech2 / ((1.0 + theta) * (1.0 + theta))) * F;
  return out;
}

/// d^2_FF W^cpl as 4x4 on vec(F).
inline Mat4 hess_Wcpl_FF(const MaterialParams& m, const Mat2& F, double theta) {
  require_positive_det(F, "hess_Wcpl_FF");
  require_nonnegative_theta(theta, "hess_Wcpl_FF");
  const double u = F.squaredNorm() - 2.0;
  const double th = std::tanh(u);
  const double sech2 = 1.0 - th * th;
  const double phi = theta / (1.0 + theta);
  Mat4 H = Mat4::Zero();
  auto idx = [](int i, int a) { return 2 * i + a; };
  const double c1 = 2.0 * m.alpha * phi * sech2;
  const double c2 = -8.0 * m.alpha * phi * sech2 * th;
  for (int i = 0; i < 2; ++i)
    for (int a = 0; a < 2; ++a) {
      H(idx(i, a), idx(i, a)) += c1;
      for (int j = 0; j < 2; ++j)
        for (int c = 0; c < 2; ++c) H(idx(i, a), idx(j, c)) += c2 * F(i, a) * F(j, c);
    }
  return H;
}

// ---------------------------------------------------------------------------
// Internal energy  W^in = W^cpl - theta d_theta W^cpl = c_V theta + alpha tanh(u) theta^2/(1+theta)^2
// and its primitive int_0^theta W^in(F, s) ds, both in closed form.
// ---------------------------------------------------------------------------

inline double eval_Win(const MaterialParams& m, const Mat2& F, double theta) {
  require_positive_det(F, "eval_Win");
  require_nonnegative_theta(theta, "eval_Win");
  const double u = F.squaredNorm() - 2.0;
  const double r = theta / (1.0 + theta);
  return m.c_V * theta + m.alpha * std::tanh(u) * r * r;
}

inline double dWin_dtheta(const MaterialParams& m, const Mat2& F, double theta) {
  const double u = F.squaredNorm() - 2.0;
  return m.c_V + 2.0 * m.alpha * std::tanh(u) * theta / std::pow(1.0 + theta, 3.0);
}

/// Closed-form primitive int_0^theta W^in(F, s) ds.
inline double eval_Win_primitive(const MaterialParams& m, const Mat2& F, double theta) {
  const double u = F.squaredNorm() - 2.0;
  return 0.5 * m.c_V * theta * theta +
         m.alpha * std::tanh(u) * (theta - 2.0 * std::log1p(theta) + theta / (1.0 + theta));
}

/// Safeguarded Newton (bisection fallback) on the strictly increasing map
/// theta -> W^in(F, theta); bracket [0, C0*w].
inline double invert_Win(const MaterialParams& m, const Mat2& F, double w) {
  require_positive_det(F, "invert_Win");
  if (!(w >= 0.0)) throw std::domain_error("invert_Win: w must be nonnegative");
  if (w == 0.0) return 0.0;
  double lo = 0.0, hi = m.C0 * w;
  while (eval_Win(m, F, hi) < w) hi *= 2.0;  // cannot trigger for compliant C0
  double x = std::min(w / m.c_V, hi);
  for (int it = 0; it < 100; ++it) {
    const double r = eval_Win(m, F, x) - w;
    if (std::abs(r) <= 1e-14 * (1.0 + std::abs(w))) break;
    if (r > 0) hi = x; else lo = x;
    const double step = r / dWin_dtheta(m, F, x);
    x -= step;
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Dissipation  R(F, Fdot, theta) = 1/2 Cdot : D(C, theta) Cdot  with
// Cdot = Fdot^T F + F^T Fdot and D = (1 + 1/(1+theta)) Id4 (eigenvalues in [1, 2]).
// ---------------------------------------------------------------------------

inline double diss_modulus(double theta) { return 1.0 + 1.0 / (1.0 + theta); }

inline Mat2 cauchy_green_rate(const Mat2& F, const Mat2& Fdot) {
  return Fdot.transpose() * F + F.transpose() * Fdot;
}

inline double eval_R(const MaterialParams& /*m*/, const Mat2& F, const Mat2& Fdot, double theta) {
  const Mat2 Cdot = cauchy_green_rate(F, Fdot);
  return 0.5 * diss_modulus(theta) * Cdot.squaredNorm();
}

inline Mat2 eval_dR_dFdot(const MaterialParams& /*m*/, const Mat2& F, const Mat2& Fdot,
                          double theta) {
  const Mat2 Cdot = cauchy_green_rate(F, Fdot);
  return 2.0 * diss_modulus(theta) * (F * Cdot);
}

/// Dissipation rate xi = dR/dFdot : Fdot (= 2R identically).
inline double eval_xi(const MaterialParams& m, const Mat2& F, const Mat2& Fdot, double theta) {
  return eval_dR_dFdot(m, F, Fdot, theta).cwiseProduct(Fdot).sum();
}

// ---------------------------------------------------------------------------
// Heat conductivity K(theta) = kappa0 (1 + theta/(1+theta)) Id and its pullback
// K(F, theta) = det(F) F^-1 K(theta) F^-T into the reference configuration.
// ---------------------------------------------------------------------------

inline Mat2 eval_K(const MaterialParams& m, double theta) {
  require_nonnegative_theta(theta, "eval_K");
  return m.kappa0 * (1.0 + theta / (1.0 + theta)) * Mat2::Identity();
}

inline Mat2 pullback_K(const MaterialParams& m, const Mat2& F, double theta) {
  require_positive_det(F, "pullback_K");
  const double J = F.determinant();
  const Mat2 Finv = F.inverse();
  Mat2 K = J * Finv * eval_K(m, theta) * Finv.transpose();
  return 0.5 * (K + K.transpose());  // exactly symmetric result
}

}  // namespace tvsolid
