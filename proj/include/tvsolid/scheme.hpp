#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "tvsolid/material.hpp"

namespace tvsolid {

/// Configuration errors (bad file, bad keys, violated invariants).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct InitialDeformationSpec {
  enum class Kind { Id, Bump } kind = Kind::Id;
  double ax = 0.0, ay = 0.0;  // bump displacement amplitudes
  int mollify_passes = 0;     // width of the initial-data regularization in dx units
};

struct InitialVelocitySpec {
  enum class Kind { Zero, Bump } kind = Kind::Zero;
  double ax = 0.0, ay = 0.0;
};

struct InitialTemperatureSpec {
  double value = 1.0;
  double bump_amp = 0.0;
};

struct ForceSpec {
  enum class Kind { Zero, Constant, Gaussian } kind = Kind::Zero;
  enum class Time { Constant, Linear, Quadratic } time = Time::Constant;  // multiplies by 1, t, t^2
  double fx = 0.0, fy = 0.0;     // constant force / Gaussian amplitude vector
  double cx = 0.5, cy = 0.5;     // Gaussian center
  double width = 0.15;           // Gaussian width
};

struct BoundaryTempSpec {
  double value = 1.0;
  double rate = 0.0;  // theta_b(t) = max(0, value + rate * t)
};

/// Full run description: the three-scale hierarchy (tau, h, eps), physics
/// constants, grid size, material, and the data specs.
struct SchemeConfig {
  double T = 0.1;
  double tau = 1.0 / 320.0;
  double h = 1.0 / 40.0;
  double eps = 1e-3;
  double rho = 1.0;
  double kappa = 1.0;
  int n = 16;
  int snapshot_every = 0;  // 0: first and last state only
  MaterialParams material;
  InitialDeformationSpec y0;
  InitialVelocitySpec v0;
  InitialTemperatureSpec theta0;
  ForceSpec force;
  BoundaryTempSpec theta_b;

  int steps() const { return static_cast<int>(std::lround(T / tau)); }
  int delay_steps() const { return static_cast<int>(std::lround(h / tau)); }

  void validate() const {
    material.validate();
    if (n < 3) throw ConfigError("scheme: n must be >= 3");
    if (!(T > 0.0)) throw ConfigError("scheme: T must be positive");
    if (!(tau > 0.0 && tau < h)) throw ConfigError("scheme: need 0 < tau < h");
    if (!(eps >= 0.0)) throw ConfigError("scheme: eps must be >= 0");
    if (!(rho > 0.0)) throw ConfigError("scheme: rho must be positive");
    if (!(kappa >= 0.0)) throw ConfigError("scheme: kappa must be >= 0");
    const double th = T / h;
    if (std::abs(th - std::lround(th)) > 1e-9 * std::max(1.0, th))
      throw ConfigError("scheme: T/h must be an integer (got T/h = " + std::to_string(th) + ")");
    const double ht = h / tau;
    if (std::abs(ht - std::lround(ht)) > 1e-9 * std::max(1.0, ht))
      throw ConfigError("scheme: h/tau must be an integer (got h/tau = " + std::to_string(ht) + ")");
    if (!(theta0.value + std::min(0.0, theta0.bump_amp) >= 0.0))
      throw ConfigError("scheme: initial temperature must be nonnegative");
    if (snapshot_every < 0) throw ConfigError("scheme: snapshot_every must be >= 0");
  }

  Vec2 force_at(double t, double x1, double x2) const {
    Vec2 f = Vec2::Zero();
    switch (force.kind) {
      case ForceSpec::Kind::Zero: break;
      case ForceSpec::Kind::Constant: f = Vec2(force.fx, force.fy); break;
      case ForceSpec::Kind::Gaussian: {
        const double r2 = (x1 - force.cx) * (x1 - force.cx) + (x2 - force.cy) * (x2 - force.cy);
        f = Vec2(force.fx, force.fy) * std::exp(-r2 / (2.0 * force.width * force.width));
        break;
      }
    }
    if (force.time == ForceSpec::Time::Linear) f *= t;
    if (force.time == ForceSpec::Time::Quadratic) f *= t * t;
    return f;
  }

  double theta_b_at(double t, double /*x1*/, double /*x2*/) const {
    return std::max(0.0, theta_b.value + theta_b.rate * t);
  }
};

}  // namespace tvsolid
