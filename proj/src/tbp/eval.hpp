#pragma once

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tbp/trainer.hpp"

namespace tbp {

struct MetricsReport {
  double mae = 0.0;
  double rmse = 0.0;
  double smape = 0.0;  // percent, in [0, 200]
};

struct EcdfSeries {
  std::vector<std::pair<double, double>> points;  // (value, cumulative fraction)
};

struct LagErrorSeries {
  std::vector<std::pair<double, double>> points;  // (t, mean abs error)
};

struct PiErrorReport {
  double mean_square_residual = 0.0;
  int64_t evaluated = 0;
  int64_t excluded = 0;  // samples whose predicted positions collide
};

MetricsReport metrics(std::span<const double> predictions, std::span<const double> targets);

EcdfSeries ecdf(std::span<const double> values);

// Throws ConfigMismatchError when the checkpoint cannot be evaluated on the
// dataset (sampling step mismatch).
void check_compatible(const Checkpoint& ck, const Dataset& ds);

// True when the loss schedule can ever produce a nonzero physics weight.
bool physics_informed(const LossConfig& cfg);
std::string model_name(const Checkpoint& ck);

struct EvalResult {
  MetricsReport metrics;
  PiErrorReport pi;
  EcdfSeries ecdf;            // of per-sample MAE
  LagErrorSeries lag_error;   // by prediction time (non-AR) or rollout step (AR)
  std::vector<double> per_sample_mae;
  int64_t n_samples = 0;
  bool used_validation_split = false;
};

// Evaluates on the checkpoint's own validation split when the dataset matches
// its training fingerprint, otherwise on every converged record.
EvalResult evaluate(const Checkpoint& ck, const Dataset& ds, int workers = 0);

void write_eval_csvs(const EvalResult& result, const Checkpoint& ck, const std::string& out_dir);

// Autoregressive rollout: feeds the model its own 12-state output with a fixed
// timestep.  Throws ConfigMismatchError for non-autoregressive checkpoints and
// DivergenceError when an output becomes non-finite.
std::vector<std::array<double, kStateDim>> rollout(const Checkpoint& ck,
                                                   const std::array<double, kStateDim>& ic,
                                                   int n_steps, double dt);

void write_rollout_csv(const std::vector<std::array<double, kStateDim>>& states, double dt,
                       const std::string& path);

// Mean squared physics residual with exact (unsoftened) gravity, no clamp.
PiErrorReport pi_error(const Checkpoint& ck, const Dataset& ds, int workers = 0);

LagErrorSeries error_vs_time(const Checkpoint& ck, const Dataset& ds, int workers = 0);

}  // namespace tbp
