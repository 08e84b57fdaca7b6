#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "tbp/types.hpp"

namespace tbp {

namespace detail {

inline double square(double v) { return v * v; }
inline double pow32(double v) { return v * std::sqrt(v); }  // (v)^(3/2), v >= 0
inline double scalar_value(double v) { return v; }

// Pairwise gravity kernel shared by the plain and autodiff paths.  Templated so
// both instantiations evaluate in the identical floating-point order; the
// autodiff scalar provides the same operator set plus square()/pow32().
//
// softening2 is added to every squared distance (0 for exact Newtonian gravity).
// Throws SingularityError when an unsoftened squared distance falls below floor^2.
template <class S>
void accelerations_kernel(const S* px, const S* pz, const std::array<double, 3>& m,
                          double G, double softening2, double floor, S* ax, S* az) {
  const double floor2 = floor * floor;
  S fx[3], fz[3];  // pair force directions (p_i - p_j)/r^3 for (0,1), (0,2), (1,2)
  int pair = 0;
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j, ++pair) {
      S dx = px[i] - px[j];
      S dz = pz[i] - pz[j];
      S d2 = square(dx) + square(dz);
      if (softening2 != 0.0) d2 = d2 + softening2;
      if (scalar_value(d2) < floor2 || scalar_value(d2) == 0.0)
        throw SingularityError("pairwise distance below singularity floor");
      S r3 = pow32(d2);
      fx[pair] = dx / r3;
      fz[pair] = dz / r3;
    }
  }
  ax[0] = fx[0] * (-G * m[1]) + fx[1] * (-G * m[2]);
  az[0] = fz[0] * (-G * m[1]) + fz[1] * (-G * m[2]);
  ax[1] = fx[0] * (G * m[0]) + fx[2] * (-G * m[2]);
  az[1] = fz[0] * (G * m[0]) + fz[2] * (-G * m[2]);
  ax[2] = fx[1] * (G * m[0]) + fx[2] * (G * m[1]);
  az[2] = fz[1] * (G * m[0]) + fz[2] * (G * m[1]);
}

}  // namespace detail

// Newtonian accelerations for the planar three-body configuration.
inline std::array<Vec2, 3> accelerations(const std::array<Vec2, 3>& pos, const PhysicsConfig& cfg) {
  double px[3] = {pos[0].x, pos[1].x, pos[2].x};
  double pz[3] = {pos[0].z, pos[1].z, pos[2].z};
  double ax[3], az[3];
  detail::accelerations_kernel(px, pz, cfg.masses, cfg.G, 0.0, cfg.singularity_floor, ax, az);
  return {Vec2{ax[0], az[0]}, Vec2{ax[1], az[1]}, Vec2{ax[2], az[2]}};
}

inline EnergyReport energies(const SystemState& s, const PhysicsConfig& cfg) {
  EnergyReport r;
  for (int i = 0; i < 3; ++i) {
    r.kinetic += 0.5 * cfg.masses[i] * (s.vel[i].x * s.vel[i].x + s.vel[i].z * s.vel[i].z);
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      double d = (s.pos[i] - s.pos[j]).norm();
      if (d < cfg.singularity_floor)
        throw SingularityError("pairwise distance below singularity floor");
      r.potential -= cfg.G * cfg.masses[i] * cfg.masses[j] / d;
    }
  }
  r.total = r.kinetic + r.potential;
  return r;
}

// First-order reduction of the equations of motion in the canonical ordering:
// first six entries are the velocities, last six the accelerations.
inline std::array<double, kStateDim> state_derivative(const SystemState& s, const PhysicsConfig& cfg) {
  auto acc = accelerations(s.pos, cfg);
  return {s.vel[0].x, s.vel[0].z, s.vel[1].x, s.vel[1].z, s.vel[2].x, s.vel[2].z,
          acc[0].x,   acc[0].z,   acc[1].x,   acc[1].z,   acc[2].x,   acc[2].z};
}

inline ConservedQuantities conserved_quantities(const SystemState& s, const PhysicsConfig& cfg) {
  ConservedQuantities q;
  double total_mass = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double m = cfg.masses[i];
    total_mass += m;
    q.center_of_mass += m * s.pos[i];
    q.momentum += m * s.vel[i];
    q.angular_momentum += m * (s.pos[i].x * s.vel[i].z - s.pos[i].z * s.vel[i].x);
  }
  q.center_of_mass = q.center_of_mass * (1.0 / total_mass);
  return q;
}

}  // namespace tbp
