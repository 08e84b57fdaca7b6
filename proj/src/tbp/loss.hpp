#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>

#include "tbp/dynamics.hpp"
#include "tbp/tape.hpp"
#include "tbp/types.hpp"

namespace tbp {

enum class AlphaKind { Constant, Warmup, Linear, Exponential };

struct AlphaSchedule {
  AlphaKind kind = AlphaKind::Constant;
  double alpha0 = 0.0;
  double alpha_max = 0.0;
  int ramp_epochs = 1;
  int warmup_epochs = 0;
  void validate() const;
};

double alpha_at(const AlphaSchedule& schedule, int epoch);

struct LossConfig {
  AlphaSchedule schedule;
  std::optional<double> residual_clamp;  // upper cap on the physics loss value
  // Softening applied to squared distances inside the residual's accelerations
  // during training only; metric-mode evaluation uses 0 (exact gravity).
  double softening_delta = 1e-6;
  // Extra uniformly random collocation times per initial condition and batch
  // (non-autoregressive formulation only).
  int collocation_extra = 0;
  void validate() const;
};

struct LossBreakdown {
  double data_loss = 0.0;
  double physics_loss = 0.0;  // raw (unclamped) value
  double alpha = 0.0;
  double total = 0.0;
};

// Mean absolute componentwise error over a flat batch (multiples of 12).
double data_loss_mae(std::span<const double> predictions, std::span<const double> targets);

// ODE residual of a model output against the gravity law, evaluated at the
// PREDICTED positions:
//   r[0..5]  = d(pos)/dt - vel
//   r[6..11] = d(vel)/dt - accel(pos)
// Instantiated for double (metrics) and ad::Var (training); both run the same
// kernel so the two routes agree bit for bit.
template <class S>
std::array<S, kStateDim> physics_residual(const std::array<S, kStateDim>& output,
                                          const std::array<S, kStateDim>& time_derivative,
                                          const PhysicsConfig& cfg, double softening_delta = 0.0) {
  const S px[3] = {output[0], output[2], output[4]};
  const S pz[3] = {output[1], output[3], output[5]};
  S ax[3], az[3];
  detail::accelerations_kernel(px, pz, cfg.masses, cfg.G, softening_delta * softening_delta,
                               cfg.singularity_floor, ax, az);
  std::array<S, kStateDim> r;
  for (int k = 0; k < 6; ++k) r[k] = time_derivative[k] - output[6 + k];
  r[6] = time_derivative[6] - ax[0];
  r[7] = time_derivative[7] - az[0];
  r[8] = time_derivative[8] - ax[1];
  r[9] = time_derivative[9] - az[1];
  r[10] = time_derivative[10] - ax[2];
  r[11] = time_derivative[11] - az[2];
  return r;
}

// Mean squared residual component over a flat collocation batch (multiples of
// 12), clamped from above when a clamp is configured.
double physics_loss(std::span<const double> residuals, std::optional<double> clamp);

LossBreakdown total_loss(std::span<const double> predictions, std::span<const double> targets,
                         std::span<const double> residuals, int epoch, const LossConfig& cfg);

std::string to_string(AlphaKind k);
AlphaKind alpha_kind_from_string(const std::string& s);

}  // namespace tbp
