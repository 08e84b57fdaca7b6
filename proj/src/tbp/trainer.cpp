#include "tbp/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>

#include "tbp/binio.hpp"
#include "tbp/csv.hpp"
#include "tbp/parallel.hpp"
#include "tbp/rng.hpp"

namespace tbp {

namespace {
constexpr char kMagic[4] = {'T', 'B', 'P', 'C'};
constexpr uint32_t kFormatVersion = 1;
constexpr int64_t kGradChunk = 256;  // fixed: gradient reduction order never depends on workers
}  // namespace

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw ArgumentError("learning_rate must be positive");
  if (max_epochs < 1) throw ArgumentError("max_epochs must be >= 1");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (early_stop_patience < 1) throw ArgumentError("early_stop_patience must be >= 1");
  if (plateau_patience < 1) throw ArgumentError("plateau_patience must be >= 1");
  if (plateau_factor <= 0.0 || plateau_factor >= 1.0)
    throw ArgumentError("plateau_factor must be in (0, 1)");
  if (grad_clip_norm && *grad_clip_norm <= 0.0)
    throw ArgumentError("grad_clip_norm must be positive when set");
  if (weight_decay < 0.0) throw ArgumentError("weight_decay must be nonnegative");
  if (split_fraction <= 0.0 || split_fraction >= 1.0)
    throw ArgumentError("split_fraction must be in (0, 1)");
}

std::pair<std::vector<int>, std::vector<int>> split_dataset(const Dataset& ds, double fraction,
                                                            uint64_t seed) {
  if (fraction <= 0.0 || fraction >= 1.0) throw ArgumentError("split fraction must be in (0, 1)");
  std::vector<int> ids = ds.converged_ids();
  if (ids.size() < 2) throw EmptySplitError("need at least 2 converged simulations to split");
  Rng rng(splitmix64_mix(seed ^ 0x5917B5EEDULL));
  rng.shuffle(ids);
  const int64_t n = static_cast<int64_t>(ids.size());
  const int64_t n_train = std::llround(fraction * static_cast<double>(n));
  if (n_train < 1 || n_train >= n)
    throw EmptySplitError("split would leave an empty side");
  std::vector<int> train(ids.begin(), ids.begin() + n_train);
  std::vector<int> val(ids.begin() + n_train, ids.end());
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  return {train, val};
}

void adam_update(AdamState& st, std::span<double> params, std::span<const double> grads,
                 double lr, double weight_decay) {
  if (params.size() != grads.size() || params.size() != st.first_moment.size())
    throw DimensionError("adam_update: length mismatch");
  st.step_count++;
  const double b1 = st.beta1, b2 = st.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(st.step_count));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(st.step_count));
  const double decay = 1.0 - lr * weight_decay;
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    st.first_moment[i] = b1 * st.first_moment[i] + (1.0 - b1) * g;
    st.second_moment[i] = b2 * st.second_moment[i] + (1.0 - b2) * g * g;
    const double mhat = st.first_moment[i] / bc1;
    const double vhat = st.second_moment[i] / bc2;
    if (weight_decay != 0.0) params[i] *= decay;
    params[i] -= lr * mhat / (std::sqrt(vhat) + st.epsilon);
  }
}

double clip_grad_norm(std::span<double> grads, std::optional<double> max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm && norm > *max_norm) {
    const double scale = *max_norm / norm;
    for (double& g : grads) g *= scale;
  }
  return norm;
}

AssembledData assemble_pairs(const Dataset& ds, std::span<const int> record_ids,
                             Formulation formulation) {
  AssembledData out;
  out.in_dim = formulation == Formulation::NonAutoregressive ? 7 : 13;
  for (size_t local = 0; local < record_ids.size(); ++local) {
    const SimulationRecord& rec = ds.records[static_cast<size_t>(record_ids[local])];
    const auto& states = rec.trajectory.states;
    if (states.size() < 2) continue;
    const auto ic_flat = states[0].flat();
    std::array<double, 6> ic6;
    std::copy_n(ic_flat.begin(), 6, ic6.begin());
    out.sim_ic.push_back(ic6);
    const int32_t sim_local = static_cast<int32_t>(out.sim_ic.size() - 1);
    if (formulation == Formulation::NonAutoregressive) {
      for (size_t k = 1; k < states.size(); ++k) {
        for (double v : ic6) out.inputs.push_back(v);
        out.inputs.push_back(states[k].t);
        for (double v : states[k].flat()) out.targets.push_back(v);
        out.sample_sim.push_back(sim_local);
      }
    } else {
      for (size_t k = 0; k + 1 < states.size(); ++k) {
        for (double v : states[k].flat()) out.inputs.push_back(v);
        out.inputs.push_back(ds.meta.dt);
        for (double v : states[k + 1].flat()) out.targets.push_back(v);
        out.sample_sim.push_back(sim_local);
      }
    }
  }
  out.n_samples = static_cast<int64_t>(out.sample_sim.size());
  return out;
}

namespace {

struct BatchScratch {
  std::vector<ad::Tape> tapes;                    // one per worker
  std::vector<std::vector<double>> chunk_grads;   // one per chunk in flight
  std::vector<double> chunk_data_sum;
  std::vector<double> chunk_phys_sum;
};

// Per-sample tape pass: builds the forward graph, seeds the per-sample data and
// physics scalars, and accumulates gradients into grad_buf.
struct SamplePass {
  const NetworkConfig* net;
  const PhysicsConfig* phys;
  double softening = 0.0;
  int time_index = 0;

  // Returns {sum |pred-target| over 12, sum residual^2 over 12 (or 0)}.
  std::pair<double, double> run(ad::Tape& tape, const double* params, double* grad_buf,
                                std::span<const double> input, const double* target,
                                double data_seed, double phys_seed) const {
    tape.reset();
    tape.bind(params, grad_buf);
    if (phys_seed == 0.0 && target != nullptr) {
      auto outs = tape_forward(tape, *net, input);
      ad::Var s = data_row(tape, outs, target);
      tape.backward_seeded({{s, data_seed}});
      return {s.value(), 0.0};
    }
    auto duo = tape_forward_with_time_derivative(tape, *net, input, time_index);
    auto residual = physics_residual<ad::Var>(duo.value, duo.time_derivative, *phys, softening);
    const int32_t sq_start = tape.size();
    for (int k = 0; k < kStateDim; ++k) tape.square(residual[static_cast<size_t>(k)]);
    ad::Var r = tape.sum_range(sq_start, kStateDim);
    if (target == nullptr) {
      tape.backward_seeded({{r, phys_seed}});
      return {0.0, r.value()};
    }
    ad::Var s = data_row(tape, duo.value, target);
    tape.backward_seeded({{s, data_seed}, {r, phys_seed}});
    return {s.value(), r.value()};
  }

 private:
  static ad::Var data_row(ad::Tape& tape, const std::array<ad::Var, kStateDim>& outs,
                          const double* target) {
    int32_t diff_start = tape.size();
    for (int k = 0; k < kStateDim; ++k) tape.add_const(outs[static_cast<size_t>(k)], -target[k]);
    int32_t abs_start = tape.size();
    for (int k = 0; k < kStateDim; ++k) tape.abs(ad::Var{&tape, diff_start + k});
    return tape.sum_range(abs_start, kStateDim);
  }
};

// Deterministic validation metrics (data MAE and softened physics MSE).
struct ValMetrics {
  double data = 0.0;
  double physics = 0.0;
};

ValMetrics validation_metrics(const AssembledData& data, const NetworkConfig& net,
                              std::span<const double> params, const PhysicsConfig& phys,
                              double softening, int workers) {
  const int64_t n = data.n_samples;
  const int64_t n_chunks = (n + kGradChunk - 1) / kGradChunk;
  std::vector<double> data_sums(static_cast<size_t>(n_chunks), 0.0);
  std::vector<double> phys_sums(static_cast<size_t>(n_chunks), 0.0);
  const int tidx = net.time_index();
  parallel_chunks(n, kGradChunk, workers, [&](int64_t chunk, int64_t b, int64_t e, int) {
    double dsum = 0.0, psum = 0.0;
    std::array<double, kStateDim> out, dout;
    for (int64_t i = b; i < e; ++i) {
      std::span<const double> in(data.inputs.data() + i * data.in_dim,
                                 static_cast<size_t>(data.in_dim));
      forward_dual(net, params, in, tidx, out, dout);
      const double* tgt = data.targets.data() + i * kStateDim;
      double row = 0.0;
      for (int k = 0; k < kStateDim; ++k) row += std::abs(out[static_cast<size_t>(k)] - tgt[k]);
      dsum += row;
      auto res = physics_residual<double>(out, dout, phys, softening);
      double prow = 0.0;
      for (double r : res) prow += r * r;
      psum += prow;
    }
    data_sums[static_cast<size_t>(chunk)] = dsum;
    phys_sums[static_cast<size_t>(chunk)] = psum;
  });
  ValMetrics m;
  for (int64_t c = 0; c < n_chunks; ++c) {
    m.data += data_sums[static_cast<size_t>(c)];
    m.physics += phys_sums[static_cast<size_t>(c)];
  }
  const double denom = 12.0 * static_cast<double>(n);
  m.data /= denom;
  m.physics /= denom;
  return m;
}

}  // namespace

std::pair<Checkpoint, TrainReport> train(const Dataset& ds, const NetworkConfig& net_cfg,
                                         const LossConfig& loss_cfg, const TrainConfig& train_cfg,
                                         const std::function<void(const EpochRow&)>& progress) {
  net_cfg.validate();
  loss_cfg.validate();
  train_cfg.validate();
  if (loss_cfg.collocation_extra > 0 && net_cfg.formulation != Formulation::NonAutoregressive)
    throw ArgumentError("extra collocation points require the non-autoregressive formulation");

  auto [train_ids, val_ids] = split_dataset(ds, train_cfg.split_fraction, train_cfg.seed);
  AssembledData train_data = assemble_pairs(ds, train_ids, net_cfg.formulation);
  AssembledData val_data = assemble_pairs(ds, val_ids, net_cfg.formulation);
  if (train_data.n_samples == 0 || val_data.n_samples == 0)
    throw EmptySplitError("assembled split contains no samples");

  ParameterStore store = init_network(net_cfg, train_cfg.seed);
  const size_t n_params = store.values.size();
  AdamState adam(n_params);
  const PhysicsConfig phys{};  // unit masses, unit G (the paper's regime)
  const int workers = resolve_workers(train_cfg.workers);
  const int tidx = net_cfg.time_index();

  BatchScratch scratch;
  scratch.tapes.resize(static_cast<size_t>(workers));

  std::vector<int64_t> order(static_cast<size_t>(train_data.n_samples));
  for (int64_t i = 0; i < train_data.n_samples; ++i) order[static_cast<size_t>(i)] = i;

  std::vector<double> grad(n_params, 0.0);
  std::vector<double> best_params = store.values;

  TrainReport report;
  double best_val = std::numeric_limits<double>::infinity();
  int epochs_since_improve = 0;
  int plateau_counter = 0;
  double lr = train_cfg.learning_rate;

  SamplePass pass{&net_cfg, &phys, loss_cfg.softening_delta, tidx};

  for (int epoch = 0; epoch < train_cfg.max_epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    const double alpha = alpha_at(loss_cfg.schedule, epoch);
    const bool physics_on = alpha > 0.0;

    Rng shuffle_rng = record_stream(splitmix64_mix(train_cfg.seed ^ 0xE950C17ULL),
                                    static_cast<uint64_t>(epoch));
    shuffle_rng.shuffle(order);

    double epoch_data_sum = 0.0, epoch_phys_sum = 0.0;
    int64_t epoch_data_n = 0, epoch_colloc_n = 0;

    const int64_t n_train = train_data.n_samples;
    for (int64_t batch_start = 0, batch_idx = 0; batch_start < n_train;
         batch_start += train_cfg.batch_size, ++batch_idx) {
      const int64_t b_count = std::min<int64_t>(train_cfg.batch_size, n_train - batch_start);

      // Optional extra collocation inputs: K random times per initial condition
      // appearing in the batch.
      std::vector<double> extra_inputs;
      int64_t extra_count = 0;
      if (physics_on && loss_cfg.collocation_extra > 0) {
        Rng colloc_rng = record_stream(splitmix64_mix(train_cfg.seed ^ 0xC0110CA7EULL),
                                       (static_cast<uint64_t>(epoch) << 32) ^
                                           static_cast<uint64_t>(batch_idx));
        std::vector<int32_t> seen;
        for (int64_t i = 0; i < b_count; ++i) {
          const int32_t sim = train_data.sample_sim[static_cast<size_t>(order[batch_start + i])];
          if (std::find(seen.begin(), seen.end(), sim) == seen.end()) seen.push_back(sim);
        }
        for (int32_t sim : seen) {
          for (int k = 0; k < loss_cfg.collocation_extra; ++k) {
            for (double v : train_data.sim_ic[static_cast<size_t>(sim)]) extra_inputs.push_back(v);
            extra_inputs.push_back(colloc_rng.uniform(0.0, 10.0));
          }
        }
        extra_count = static_cast<int64_t>(extra_inputs.size()) / train_data.in_dim;
      }

      const int64_t total_work = b_count + extra_count;
      const int64_t n_chunks = (total_work + kGradChunk - 1) / kGradChunk;
      if (static_cast<int64_t>(scratch.chunk_grads.size()) < n_chunks) {
        scratch.chunk_grads.resize(static_cast<size_t>(n_chunks));
        scratch.chunk_data_sum.resize(static_cast<size_t>(n_chunks));
        scratch.chunk_phys_sum.resize(static_cast<size_t>(n_chunks));
      }
      for (int64_t c = 0; c < n_chunks; ++c) {
        scratch.chunk_grads[static_cast<size_t>(c)].assign(n_params, 0.0);
        scratch.chunk_data_sum[static_cast<size_t>(c)] = 0.0;
        scratch.chunk_phys_sum[static_cast<size_t>(c)] = 0.0;
      }

      const double data_seed = 1.0 / (12.0 * static_cast<double>(b_count));
      double phys_seed =
          physics_on ? alpha / (12.0 * static_cast<double>(total_work)) : 0.0;

      // With a clamp configured, the gradient of the physics term vanishes when
      // the batch value sits above the cap; decide with a value-only prepass.
      double batch_phys_value = 0.0;
      if (physics_on && loss_cfg.residual_clamp) {
        const int64_t pre_chunks = n_chunks;
        std::vector<double> pre_sums(static_cast<size_t>(pre_chunks), 0.0);
        parallel_chunks(total_work, kGradChunk, workers, [&](int64_t chunk, int64_t b, int64_t e, int) {
          double psum = 0.0;
          std::array<double, kStateDim> out, dout;
          for (int64_t i = b; i < e; ++i) {
            std::span<const double> in =
                i < b_count
                    ? std::span<const double>(
                          train_data.inputs.data() + order[batch_start + i] * train_data.in_dim,
                          static_cast<size_t>(train_data.in_dim))
                    : std::span<const double>(
                          extra_inputs.data() + (i - b_count) * train_data.in_dim,
                          static_cast<size_t>(train_data.in_dim));
            forward_dual(net_cfg, store.values, in, tidx, out, dout);
            auto res = physics_residual<double>(out, dout, phys, loss_cfg.softening_delta);
            for (double r : res) psum += r * r;
          }
          pre_sums[static_cast<size_t>(chunk)] = psum;
        });
        for (double v : pre_sums) batch_phys_value += v;
        batch_phys_value /= 12.0 * static_cast<double>(total_work);
        if (batch_phys_value > *loss_cfg.residual_clamp) phys_seed = 0.0;
      }

      parallel_chunks(total_work, kGradChunk, workers, [&](int64_t chunk, int64_t b, int64_t e,
                                                           int worker) {
        ad::Tape& tape = scratch.tapes[static_cast<size_t>(worker)];
        double* grad_buf = scratch.chunk_grads[static_cast<size_t>(chunk)].data();
        double dsum = 0.0, psum = 0.0;
        for (int64_t i = b; i < e; ++i) {
          if (i < b_count) {
            const int64_t s = order[batch_start + i];
            std::span<const double> in(train_data.inputs.data() + s * train_data.in_dim,
                                       static_cast<size_t>(train_data.in_dim));
            auto [ds_, ps_] = pass.run(tape, store.values.data(), grad_buf, in,
                                       train_data.targets.data() + s * kStateDim,
                                       data_seed, physics_on ? phys_seed : 0.0);
            dsum += ds_;
            psum += ps_;
          } else {
            std::span<const double> in(extra_inputs.data() + (i - b_count) * train_data.in_dim,
                                       static_cast<size_t>(train_data.in_dim));
            auto [ds_, ps_] = pass.run(tape, store.values.data(), grad_buf, in, nullptr, 0.0,
                                       phys_seed == 0.0 ? 1e-300 : phys_seed);
            (void)ds_;
            psum += ps_;
          }
        }
        scratch.chunk_data_sum[static_cast<size_t>(chunk)] = dsum;
        scratch.chunk_phys_sum[static_cast<size_t>(chunk)] = psum;
      });

      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_data_sum = 0.0, batch_phys_sum = 0.0;
      for (int64_t c = 0; c < n_chunks; ++c) {
        const auto& cg = scratch.chunk_grads[static_cast<size_t>(c)];
        for (size_t i = 0; i < n_params; ++i) grad[i] += cg[i];
        batch_data_sum += scratch.chunk_data_sum[static_cast<size_t>(c)];
        batch_phys_sum += scratch.chunk_phys_sum[static_cast<size_t>(c)];
      }

      if (!std::isfinite(batch_data_sum) || !std::isfinite(batch_phys_sum))
        throw DivergenceError("training loss became non-finite at epoch " + std::to_string(epoch),
                              epoch);

      clip_grad_norm(grad, train_cfg.grad_clip_norm);
      adam_update(adam, store.values, grad, lr, train_cfg.weight_decay);

      epoch_data_sum += batch_data_sum;
      epoch_data_n += b_count;
      if (physics_on) {
        epoch_phys_sum += batch_phys_sum;
        epoch_colloc_n += total_work;
      }
    }

    ValMetrics val = validation_metrics(val_data, net_cfg, store.values, phys,
                                        loss_cfg.softening_delta, workers);
    const double val_phys_eff =
        loss_cfg.residual_clamp ? std::min(val.physics, *loss_cfg.residual_clamp) : val.physics;
    const double val_total = val.data + alpha * val_phys_eff;
    if (!std::isfinite(val_total))
      throw DivergenceError("validation loss became non-finite at epoch " + std::to_string(epoch),
                            epoch);

    EpochRow row;
    row.epoch = epoch;
    row.train_data_loss = epoch_data_sum / (12.0 * static_cast<double>(epoch_data_n));
    row.train_physics_loss =
        epoch_colloc_n > 0 ? epoch_phys_sum / (12.0 * static_cast<double>(epoch_colloc_n)) : 0.0;
    row.alpha = alpha;
    row.learning_rate = lr;
    row.val_data_loss = val.data;
    row.val_physics_loss = val.physics;
    row.val_total_loss = val_total;
    row.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    report.rows.push_back(row);
    if (progress) progress(row);

    if (val_total < best_val - train_cfg.improvement_delta) {
      best_val = val_total;
      report.best_epoch = epoch;
      best_params = store.values;
      epochs_since_improve = 0;
      plateau_counter = 0;
    } else {
      epochs_since_improve++;
      plateau_counter++;
      if (plateau_counter >= train_cfg.plateau_patience) {
        lr *= train_cfg.plateau_factor;
        plateau_counter = 0;
      }
      if (epochs_since_improve >= train_cfg.early_stop_patience) {
        report.stopped_reason = StopReason::EarlyStop;
        break;
      }
    }
  }
  if (report.best_epoch < 0) {
    report.best_epoch = static_cast<int>(report.rows.size()) - 1;
    best_params = store.values;
  }

  Checkpoint ck;
  ck.network = net_cfg;
  ck.loss = loss_cfg;
  ck.parameters = std::move(best_params);
  ck.epoch = report.best_epoch;
  ck.seed = train_cfg.seed;
  ck.dataset_fingerprint = ds.fingerprint();
  ck.dataset_dt = ds.meta.dt;
  ck.split_fraction = train_cfg.split_fraction;
  ck.split_seed = train_cfg.seed;
  return {std::move(ck), std::move(report)};
}

namespace {

std::string config_block(const Checkpoint& ck) {
  std::string s;
  auto kv = [&s](const std::string& k, const std::string& v) { s += k + "=" + v + "\n"; };
  kv("architecture", to_string(ck.network.architecture));
  kv("depth", std::to_string(ck.network.depth));
  kv("width", std::to_string(ck.network.width));
  kv("activation", to_string(ck.network.activation));
  kv("formulation", to_string(ck.network.formulation));
  kv("alpha_kind", to_string(ck.loss.schedule.kind));
  kv("alpha0", format_double(ck.loss.schedule.alpha0));
  kv("alpha_max", format_double(ck.loss.schedule.alpha_max));
  kv("ramp_epochs", std::to_string(ck.loss.schedule.ramp_epochs));
  kv("warmup_epochs", std::to_string(ck.loss.schedule.warmup_epochs));
  kv("residual_clamp", ck.loss.residual_clamp ? format_double(*ck.loss.residual_clamp) : "none");
  kv("softening_delta", format_double(ck.loss.softening_delta));
  kv("collocation_extra", std::to_string(ck.loss.collocation_extra));
  kv("epoch", std::to_string(ck.epoch));
  kv("seed", std::to_string(ck.seed));
  kv("dataset_fingerprint", std::to_string(ck.dataset_fingerprint));
  kv("dataset_dt", format_double(ck.dataset_dt));
  kv("split_fraction", format_double(ck.split_fraction));
  kv("split_seed", std::to_string(ck.split_seed));
  return s;
}

double parse_double(const std::string& s) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw FormatError("bad number: " + s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("bad number: " + s);
  }
}

void apply_config_line(Checkpoint& ck, const std::string& key, const std::string& value) {
  if (key == "architecture") ck.network.architecture = architecture_from_string(value);
  else if (key == "depth") ck.network.depth = static_cast<int>(parse_double(value));
  else if (key == "width") ck.network.width = static_cast<int>(parse_double(value));
  else if (key == "activation") ck.network.activation = activation_from_string(value);
  else if (key == "formulation") ck.network.formulation = formulation_from_string(value);
  else if (key == "alpha_kind") ck.loss.schedule.kind = alpha_kind_from_string(value);
  else if (key == "alpha0") ck.loss.schedule.alpha0 = parse_double(value);
  else if (key == "alpha_max") ck.loss.schedule.alpha_max = parse_double(value);
  else if (key == "ramp_epochs") ck.loss.schedule.ramp_epochs = static_cast<int>(parse_double(value));
  else if (key == "warmup_epochs") ck.loss.schedule.warmup_epochs = static_cast<int>(parse_double(value));
  else if (key == "residual_clamp") {
    if (value == "none") ck.loss.residual_clamp.reset();
    else ck.loss.residual_clamp = parse_double(value);
  } else if (key == "softening_delta") ck.loss.softening_delta = parse_double(value);
  else if (key == "collocation_extra") ck.loss.collocation_extra = static_cast<int>(parse_double(value));
  else if (key == "epoch") ck.epoch = static_cast<int>(parse_double(value));
  else if (key == "seed") ck.seed = std::stoull(value);
  else if (key == "dataset_fingerprint") ck.dataset_fingerprint = std::stoull(value);
  else if (key == "dataset_dt") ck.dataset_dt = parse_double(value);
  else if (key == "split_fraction") ck.split_fraction = parse_double(value);
  else if (key == "split_seed") ck.split_seed = std::stoull(value);
  else throw FormatError("unknown checkpoint config key: " + key);
}

}  // namespace

void write_checkpoint(const Checkpoint& ck, const std::string& path) {
  BinWriter w;
  w.bytes(kMagic, 4);
  w.u32(kFormatVersion);
  const std::string cfg = config_block(ck);
  w.u32(static_cast<uint32_t>(cfg.size()));
  w.bytes(cfg.data(), cfg.size());
  w.u64(ck.parameters.size());
  for (double v : ck.parameters) w.f64(v);
  w.u32(crc32(w.data().data(), w.data().size()));
  w.write_file(path);
}

Checkpoint read_checkpoint(const std::string& path) {
  BinReader r = BinReader::from_file(path);
  if (r.remaining() < 12) throw FormatError("checkpoint file too short");
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad checkpoint magic");
  const uint32_t version = r.u32();
  if (version != kFormatVersion)
    throw FormatError("unsupported checkpoint format version " + std::to_string(version));

  const size_t total = r.data().size();
  if (total < 4) throw FormatError("checkpoint file too short");
  const uint32_t stored_crc = [&] {
    uint32_t v;
    std::memcpy(&v, r.data().data() + total - 4, 4);
    return v;
  }();
  if (crc32(r.data().data(), total - 4) != stored_crc)
    throw FormatError("checkpoint CRC mismatch");

  Checkpoint ck;
  const uint32_t cfg_len = r.u32();
  if (r.remaining() < cfg_len) throw FormatError("checkpoint config block truncated");
  std::string cfg(cfg_len, '\0');
  r.bytes(cfg.data(), cfg_len);
  size_t pos = 0;
  while (pos < cfg.size()) {
    size_t nl = cfg.find('\n', pos);
    if (nl == std::string::npos) nl = cfg.size();
    const std::string line = cfg.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("malformed checkpoint config line: " + line);
    apply_config_line(ck, line.substr(0, eq), line.substr(eq + 1));
  }
  const uint64_t n = r.u64();
  if (r.remaining() < n * 8 + 4) throw FormatError("checkpoint parameter block truncated");
  ck.parameters.resize(n);
  for (uint64_t i = 0; i < n; ++i) ck.parameters[i] = r.f64();
  if (ck.parameters.size() != static_cast<size_t>(parameter_count(ck.network)))
    throw FormatError("checkpoint parameter count does not match its network config");
  return ck;
}

void write_train_report_csv(const TrainReport& report, const std::string& path) {
  CsvWriter csv(
      "epoch,train_data_loss,train_physics_loss,alpha,learning_rate,val_data_loss,"
      "val_physics_loss,val_total_loss");
  for (const auto& r : report.rows)
    csv.row(r.epoch, r.train_data_loss, r.train_physics_loss, r.alpha, r.learning_rate,
            r.val_data_loss, r.val_physics_loss, r.val_total_loss);
  csv.write_file(path);
}

}  // namespace tbp
