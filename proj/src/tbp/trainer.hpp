#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tbp/datagen.hpp"
#include "tbp/loss.hpp"
#include "tbp/network.hpp"

namespace tbp {

struct TrainConfig {
  double learning_rate = 7.5e-4;
  int max_epochs = 500;
  int batch_size = 2048;
  int early_stop_patience = 10;
  int plateau_patience = 5;
  double plateau_factor = 0.7;
  std::optional<double> grad_clip_norm = 5.0;
  double weight_decay = 1e-5;
  double split_fraction = 0.95;
  uint64_t seed = 0;
  int workers = 0;  // 0 = hardware concurrency
  // Minimum absolute decrease of the validation total loss that counts as an
  // improvement for early stopping and plateau detection.
  double improvement_delta = 1e-6;
  void validate() const;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  int64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  explicit AdamState(size_t n) : first_moment(n, 0.0), second_moment(n, 0.0) {}
};

struct EpochRow {
  int epoch = 0;
  double train_data_loss = 0.0;
  double train_physics_loss = 0.0;  // 0 when the physics term is off this epoch
  double alpha = 0.0;
  double learning_rate = 0.0;
  double val_data_loss = 0.0;
  double val_physics_loss = 0.0;
  double val_total_loss = 0.0;
  double wall_time_seconds = 0.0;  // measured; kept out of persisted artifacts
};

enum class StopReason { EarlyStop, MaxEpochs };

struct TrainReport {
  std::vector<EpochRow> rows;
  int best_epoch = -1;
  StopReason stopped_reason = StopReason::MaxEpochs;
};

struct Checkpoint {
  NetworkConfig network;
  LossConfig loss;
  std::vector<double> parameters;
  int epoch = 0;  // epoch the parameters come from (best validation epoch)
  uint64_t seed = 0;
  uint64_t dataset_fingerprint = 0;
  double dataset_dt = 0.0;
  double split_fraction = 0.95;
  uint64_t split_seed = 0;
};

// Split by simulation (all timesteps of a simulation land on one side), over
// converged records only.  Returns (train ids, validation ids) as record
// indices, ascending.
std::pair<std::vector<int>, std::vector<int>> split_dataset(const Dataset& ds, double fraction,
                                                            uint64_t seed);

// One bias-corrected ADAM step with decoupled weight decay applied first.
void adam_update(AdamState& state, std::span<double> params, std::span<const double> grads,
                 double lr, double weight_decay);

// Scales gradients to max_norm when the global L2 norm exceeds it; returns the
// pre-clip norm.  No-op (bit-exact) when the norm is within bounds.
double clip_grad_norm(std::span<double> grads, std::optional<double> max_norm);

std::pair<Checkpoint, TrainReport> train(
    const Dataset& ds, const NetworkConfig& net_cfg, const LossConfig& loss_cfg,
    const TrainConfig& train_cfg, const std::function<void(const EpochRow&)>& progress = {});

void write_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

void write_train_report_csv(const TrainReport& report, const std::string& path);

// Flattened (input, target) pairs for one formulation.
struct AssembledData {
  int in_dim = 0;
  int64_t n_samples = 0;
  std::vector<double> inputs;   // n_samples * in_dim
  std::vector<double> targets;  // n_samples * 12
  std::vector<int32_t> sample_sim;        // local sim index per sample
  std::vector<std::array<double, 6>> sim_ic;  // initial positions per local sim
};

AssembledData assemble_pairs(const Dataset& ds, std::span<const int> record_ids,
                             Formulation formulation);

}  // namespace tbp
