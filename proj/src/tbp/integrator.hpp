#pragma once

#include <optional>
#include <vector>

#include "tbp/dynamics.hpp"
#include "tbp/types.hpp"

namespace tbp {

struct IntegratorConfig {
  double tolerance = 1e-10;
  double initial_step = 1e-3;
  double min_step = 1e-14;
  int max_extrapolation_columns = 8;
  int64_t max_steps_per_interval = 10'000'000;
  double safety_factor = 0.9;
  // A step is also rejected when its total-energy jump exceeds
  // energy_guard_factor * tolerance * max(1, |E|).  The extrapolation estimate
  // cannot see error amplified by a deep pericenter passage; energy can.
  double energy_guard_factor = 4.0;
};

enum class FailureReason { StepUnderflow, StepBudgetExceeded, Singularity };

struct ConvergenceVerdict {
  bool converged = true;
  std::optional<double> failure_time;
  std::optional<FailureReason> failure_reason;
};

struct Trajectory {
  std::vector<SystemState> states;  // at t = 0, dt, 2*dt, ...
  double dt = 0.0;
  bool converged = true;
  ConvergenceVerdict verdict;
};

struct BsStepResult {
  SystemState state_out;
  double error_estimate = 0.0;  // max-norm difference of the two top tableau entries
  bool accepted = false;
  double h_next = 0.0;
  int64_t derivative_evals = 0;
};

struct IntegrateResult {
  SystemState state;  // last good state (the endpoint when converged)
  ConvergenceVerdict verdict;
  int64_t steps_taken = 0;
  int64_t derivative_evals = 0;
};

// Advances the state by H with the modified-midpoint scheme using n_substeps
// (even, >= 2), finishing with the standard smoothing combination
// 0.5*(y_n + y_{n-1} + h*f(y_n)).
SystemState modified_midpoint(const SystemState& state, double H, int n_substeps,
                              const PhysicsConfig& cfg);

// One adaptive Bulirsch-Stoer trial step of size h_try: modified-midpoint with
// the substep sequence 2, 4, 6, ... and polynomial extrapolation in h^2.
// Rejection is a normal outcome (accepted=false, smaller h_next).
BsStepResult bs_step(const SystemState& state, double h_try, const PhysicsConfig& cfg,
                     const IntegratorConfig& icfg);

// Chains accepted steps to land exactly on t_target.  Failures (step underflow,
// step budget, singularity) are reported in the verdict, never thrown.
IntegrateResult integrate_to(const SystemState& state, double t_target, const PhysicsConfig& cfg,
                             const IntegratorConfig& icfg);

// Uniformly sampled trajectory at 0, dt, ..., t_end; requires ic.t == 0 and dt
// dividing t_end.  On failure the trajectory holds the states reached so far
// and converged=false.
Trajectory sample_trajectory(const SystemState& ic, double t_end, double dt,
                             const PhysicsConfig& cfg, const IntegratorConfig& icfg,
                             int64_t* derivative_evals = nullptr);

}  // namespace tbp
