#pragma once

#include <cmath>

#include "tbp/types.hpp"

namespace tbp::refs {

// Rotating Lagrange solution: equilateral triangle of side 1, unit masses,
// unit tangential speeds.  Angular velocity sqrt(3), period 2*pi/sqrt(3).
inline constexpr double kLagrangeOmega = 1.7320508075688772;  // sqrt(3)
inline constexpr double kLagrangePeriod = 2.0 * M_PI / kLagrangeOmega;

inline SystemState lagrange_rotating() {
  SystemState s;
  const double R = 1.0 / std::sqrt(3.0);  // circumradius of a unit triangle
  for (int i = 0; i < 3; ++i) {
    const double phi = M_PI / 2.0 + 2.0 * M_PI * i / 3.0;
    s.pos[i] = {R * std::cos(phi), R * std::sin(phi)};
    s.vel[i] = {-std::sin(phi), std::cos(phi)};
  }
  return s;
}

// Analytic state of the Lagrange solution at time t (rigid rotation).
inline SystemState lagrange_at(double t) {
  SystemState s0 = lagrange_rotating();
  SystemState s;
  s.t = t;
  const double c = std::cos(kLagrangeOmega * t), sn = std::sin(kLagrangeOmega * t);
  for (int i = 0; i < 3; ++i) {
    s.pos[i] = {c * s0.pos[i].x - sn * s0.pos[i].z, sn * s0.pos[i].x + c * s0.pos[i].z};
    s.vel[i] = {c * s0.vel[i].x - sn * s0.vel[i].z, sn * s0.vel[i].x + c * s0.vel[i].z};
  }
  return s;
}

// Chenciner-Montgomery figure-eight orbit (equal masses, G = 1), standard
// initial data; all three bodies trace one lemniscate.
inline constexpr double kFigureEightPeriod = 6.32591398;

inline SystemState figure_eight() {
  SystemState s;
  s.pos[0] = {0.97000436, -0.24308753};
  s.pos[1] = {-0.97000436, 0.24308753};
  s.pos[2] = {0.0, 0.0};
  s.vel[2] = {-0.93240737, -0.86473146};
  s.vel[0] = {0.46620368, 0.43236573};
  s.vel[1] = {0.46620368, 0.43236573};
  return s;
}

}  // namespace tbp::refs
