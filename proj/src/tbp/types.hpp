#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace tbp {

struct Vec2 {
  double x = 0.0;
  double z = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, z + o.z}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, z - o.z}; }
  Vec2 operator*(double s) const { return {x * s, z * s}; }
  Vec2 operator-() const { return {-x, -z}; }
  Vec2& operator+=(Vec2 o) { x += o.x; z += o.z; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; z -= o.z; return *this; }
  double norm() const { return std::hypot(x, z); }
  bool finite() const { return std::isfinite(x) && std::isfinite(z); }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

// Canonical 12-vector layout, used everywhere a flat state appears
// (dataset rows, network inputs/outputs, residuals):
//   [p1x, p1z, p2x, p2z, p3x, p3z, v1x, v1z, v2x, v2z, v3x, v3z]
inline constexpr int kStateDim = 12;

struct SystemState {
  double t = 0.0;
  std::array<Vec2, 3> pos{};
  std::array<Vec2, 3> vel{};

  std::array<double, kStateDim> flat() const {
    return {pos[0].x, pos[0].z, pos[1].x, pos[1].z, pos[2].x, pos[2].z,
            vel[0].x, vel[0].z, vel[1].x, vel[1].z, vel[2].x, vel[2].z};
  }
  static SystemState from_flat(const double* v, double t) {
    SystemState s;
    s.t = t;
    for (int i = 0; i < 3; ++i) {
      s.pos[i] = {v[2 * i], v[2 * i + 1]};
      s.vel[i] = {v[6 + 2 * i], v[6 + 2 * i + 1]};
    }
    return s;
  }
  bool finite() const {
    return std::isfinite(t) && pos[0].finite() && pos[1].finite() && pos[2].finite() &&
           vel[0].finite() && vel[1].finite() && vel[2].finite();
  }
};

struct PhysicsConfig {
  std::array<double, 3> masses{1.0, 1.0, 1.0};
  double G = 1.0;
  double singularity_floor = 1e-12;  // pairwise distance below this is a collision
};

struct EnergyReport {
  double kinetic = 0.0;
  double potential = 0.0;
  double total = 0.0;
};

struct ConservedQuantities {
  Vec2 center_of_mass;
  Vec2 momentum;
  double angular_momentum = 0.0;
};

// Error taxonomy shared across modules.
struct SingularityError : std::runtime_error {
  explicit SingularityError(const std::string& m) : std::runtime_error(m) {}
};
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& m) : std::runtime_error(m) {}
};
struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& m) : std::runtime_error(m) {}
};
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& m) : std::runtime_error(m) {}
};
struct IoError : std::runtime_error {
  explicit IoError(const std::string& m) : std::runtime_error(m) {}
};
struct ConfigMismatchError : std::runtime_error {
  explicit ConfigMismatchError(const std::string& m) : std::runtime_error(m) {}
};
struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& m, int epoch) : std::runtime_error(m), epoch(epoch) {}
  int epoch;
};
struct EmptySplitError : std::runtime_error {
  explicit EmptySplitError(const std::string& m) : std::runtime_error(m) {}
};
struct ArgumentError : std::runtime_error {
  explicit ArgumentError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace tbp
