#include "tbp.h"

#include <cstdio>
#include <cstring>
#include <functional>
#include <string>

#include "tbp/datagen.hpp"
#include "tbp/eval.hpp"
#include "tbp/trainer.hpp"
#include "tbp/verify.hpp"

struct tbp_dataset {
  tbp::Dataset ds;
};
struct tbp_checkpoint {
  tbp::Checkpoint ck;
};

namespace {

thread_local std::string g_last_error;

tbp_status fail(tbp_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <class Fn>
tbp_status guarded(Fn&& fn) {
  try {
    fn();
    return TBP_OK;
  } catch (const tbp::ArgumentError& e) {
    return fail(TBP_ERR_ARGUMENT, e.what());
  } catch (const tbp::EmptySplitError& e) {
    return fail(TBP_ERR_ARGUMENT, e.what());
  } catch (const tbp::DimensionError& e) {
    return fail(TBP_ERR_ARGUMENT, e.what());
  } catch (const tbp::FormatError& e) {
    return fail(TBP_ERR_FORMAT, e.what());
  } catch (const tbp::IoError& e) {
    return fail(TBP_ERR_IO, e.what());
  } catch (const tbp::SingularityError& e) {
    return fail(TBP_ERR_SINGULARITY, e.what());
  } catch (const tbp::DivergenceError& e) {
    return fail(TBP_ERR_DIVERGENCE, e.what());
  } catch (const tbp::ConfigMismatchError& e) {
    return fail(TBP_ERR_CONFIG_MISMATCH, e.what());
  } catch (const tbp::DomainError& e) {
    return fail(TBP_ERR_DOMAIN, e.what());
  } catch (const std::exception& e) {
    return fail(TBP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(TBP_ERR_INTERNAL, "unknown error");
  }
}

}  // namespace

extern "C" {

const char* tbp_last_error(void) { return g_last_error.c_str(); }

uint32_t tbp_abi_version(void) { return 1; }

void tbp_gen_params_init(tbp_gen_params* p) {
  if (!p) return;
  p->n = 1000;
  p->master_seed = 0;
  p->tolerance = 1e-10;
  p->dt = 0.0390625;
  p->t_end = 10.0;
  p->workers = 0;
}

tbp_status tbp_generate_dataset(const tbp_gen_params* params, tbp_dataset** out) {
  if (!params || !out) return fail(TBP_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    tbp::IntegratorConfig icfg;
    icfg.tolerance = params->tolerance;
    tbp::PhysicsConfig phys;
    auto ds = tbp::generate_dataset(params->n, params->master_seed, phys, icfg, params->dt,
                                    params->t_end, params->workers);
    *out = new tbp_dataset{std::move(ds)};
  });
}

tbp_status tbp_dataset_write(const tbp_dataset* ds, const char* path) {
  if (!ds || !path) return fail(TBP_ERR_ARGUMENT, "null argument");
  return guarded([&] { tbp::write_dataset(ds->ds, path); });
}

tbp_status tbp_dataset_read(const char* path, tbp_dataset** out) {
  if (!path || !out) return fail(TBP_ERR_ARGUMENT, "null argument");
  return guarded([&] { *out = new tbp_dataset{tbp::read_dataset(path)}; });
}

tbp_status tbp_dataset_stats_get(const tbp_dataset* ds, tbp_dataset_stats* out) {
  if (!ds || !out) return fail(TBP_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    tbp::DatasetStats st = tbp::dataset_stats(ds->ds);
    out->n_requested = st.n_requested;
    out->n_converged = st.n_converged;
    out->n_near_singularity = st.n_near_singularity;
    out->n_near_singularity_failed = st.n_near_singularity_failed;
    out->global_nonconverged_rate = st.global_nonconverged_rate;
    out->near_singularity_nonconverged_rate = st.near_singularity_nonconverged_rate;
    out->dt = ds->ds.meta.dt;
    out->t_end = ds->ds.meta.t_end;
    out->tolerance = ds->ds.meta.tolerance;
    out->master_seed = ds->ds.meta.master_seed;
  });
}

tbp_status tbp_dataset_initial_state(const tbp_dataset* ds, uint64_t sim_id, double state[12],
                                     int* converged) {
  if (!ds || !state) return fail(TBP_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    if (sim_id >= ds->ds.records.size())
      throw tbp::ArgumentError("sim_id out of range: " + std::to_string(sim_id));
    const auto& rec = ds->ds.records[sim_id];
    if (rec.trajectory.states.empty()) throw tbp::ArgumentError("record has no states");
    auto flat = rec.trajectory.states[0].flat();
    std::memcpy(state, flat.data(), sizeof(double) * 12);
    if (converged) *converged = rec.trajectory.converged ? 1 : 0;
  });
}

void tbp_dataset_free(tbp_dataset* ds) { delete ds; }

void tbp_train_params_init(tbp_train_params* p) {
  if (!p) return;
  std::memset(p, 0, sizeof(*p));
  p->architecture = 1; /* resnet */
  p->formulation = 0;
  p->activation = 0;
  p->depth = 12;
  p->width = 256;
  p->physics_informed = 1;
  p->alpha_kind = 2; /* linear */
  p->alpha0 = 0.001;
  p->alpha_max = 0.75;
  p->ramp_epochs = 200;
  p->warmup_epochs = 0;
  p->residual_clamp = 0.0; /* none */
  p->collocation_extra = 0;
  p->learning_rate = 7.5e-4;
  p->weight_decay = 1e-5;
  p->plateau_factor = 0.7;
  p->grad_clip_norm = 5.0;
  p->split_fraction = 0.95;
  p->max_epochs = 500;
  p->batch_size = 2048;
  p->early_stop_patience = 10;
  p->plateau_patience = 5;
  p->seed = 0;
  p->workers = 0;
  p->verbose = 0;
}

tbp_status tbp_train(const tbp_dataset* ds, const tbp_train_params* params,
                     const char* report_csv_path_or_null, tbp_checkpoint** out) {
  if (!ds || !params || !out) return fail(TBP_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    tbp::NetworkConfig net;
    net.architecture = params->architecture == 1 ? tbp::Architecture::ResNet : tbp::Architecture::Dnn;
    net.formulation = params->formulation == 1 ? tbp::Formulation::Autoregressive
                                               : tbp::Formulation::NonAutoregressive;
    switch (params->activation) {
      case 1: net.activation = tbp::Activation::Gelu; break;
      case 2: net.activation = tbp::Activation::Tanh; break;
      case 3: net.activation = tbp::Activation::LeakyRelu; break;
      default: net.activation = tbp::Activation::Relu; break;
    }
    net.depth = params->depth;
    net.width = params->width;

    tbp::LossConfig loss;
    if (params->physics_informed) {
      switch (params->alpha_kind) {
        case 0: loss.schedule.kind = tbp::AlphaKind::Constant; break;
        case 1: loss.schedule.kind = tbp::AlphaKind::Warmup; break;
        case 3: loss.schedule.kind = tbp::AlphaKind::Exponential; break;
        default: loss.schedule.kind = tbp::AlphaKind::Linear; break;
      }
      loss.schedule.alpha0 = params->alpha0;
      loss.schedule.alpha_max = params->alpha_max;
      loss.schedule.ramp_epochs = params->ramp_epochs;
      loss.schedule.warmup_epochs = params->warmup_epochs;
    } else {
      loss.schedule.kind = tbp::AlphaKind::Constant;
      loss.schedule.alpha0 = 0.0;
      loss.schedule.alpha_max = 0.0;
    }
    if (params->residual_clamp > 0.0) loss.residual_clamp = params->residual_clamp;
    loss.collocation_extra = params->collocation_extra;

    tbp::TrainConfig tc;
    tc.learning_rate = params->learning_rate;
    tc.weight_decay = params->weight_decay;
    tc.plateau_factor = params->plateau_factor;
    if (params->grad_clip_norm > 0.0)
      tc.grad_clip_norm = params->grad_clip_norm;
    else
      tc.grad_clip_norm.reset();
    tc.split_fraction = params->split_fraction;
    tc.max_epochs = params->max_epochs;
    tc.batch_size = params->batch_size;
    tc.early_stop_patience = params->early_stop_patience;
    tc.plateau_patience = params->plateau_patience;
    tc.seed = params->seed;
    tc.workers = params->workers;

    std::function<void(const tbp::EpochRow&)> progress;
    if (params->verbose) {
      progress = [](const tbp::EpochRow& r) {
        std::fprintf(stderr,
                     "epoch %d  train_data %.6g  train_phys %.6g  alpha %.4g  lr %.3g  "
                     "val_data %.6g  val_phys %.6g  val_total %.6g  (%.1fs)\n",
                     r.epoch, r.train_data_loss, r.train_physics_loss, r.alpha, r.learning_rate,
                     r.val_data_loss, r.val_physics_loss, r.val_total_loss, r.wall_time_seconds);
      };
    }

    auto [ck, report] = tbp::train(ds->ds, net, loss, tc, progress);
    if (report_csv_path_or_null) tbp::write_train_report_csv(report, report_csv_path_or_null);
    *out = new tbp_checkpoint{std::move(ck)};
  });
}

tbp_status tbp_checkpoint_write(const tbp_checkpoint* ck, const char* path) {
  if (!ck || !path) return fail(TBP_ERR_ARGUMENT, "null argument");
  return guarded([&] { tbp::write_checkpoint(ck->ck, path); });
}

tbp_status tbp_checkpoint_read(const char* path, tbp_checkpoint** out) {
  if (!path || !out) return fail(TBP_ERR_ARGUMENT, "null argument");
  return guarded([&] { *out = new tbp_checkpoint{tbp::read_checkpoint(path)}; });
}

void tbp_checkpoint_free(tbp_checkpoint* ck) { delete ck; }

tbp_status tbp_evaluate(const tbp_checkpoint* ck, const tbp_dataset* ds, const char* out_dir,
                        int workers, tbp_metrics* out) {
  if (!ck || !ds) return fail(TBP_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    tbp::EvalResult r = tbp::evaluate(ck->ck, ds->ds, workers);
    if (out_dir) tbp::write_eval_csvs(r, ck->ck, out_dir);
    if (out) {
      out->mae = r.metrics.mae;
      out->rmse = r.metrics.rmse;
      out->smape = r.metrics.smape;
      out->pi_error = r.pi.mean_square_residual;
      out->pi_excluded = r.pi.excluded;
      out->n_samples = r.n_samples;
      out->used_validation_split = r.used_validation_split ? 1 : 0;
    }
  });
}

tbp_status tbp_rollout_csv(const tbp_checkpoint* ck, const tbp_dataset* ds, uint64_t sim_id,
                           int n_steps, const char* out_csv) {
  if (!ck || !ds || !out_csv) return fail(TBP_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    if (sim_id >= ds->ds.records.size())
      throw tbp::ArgumentError("sim_id out of range: " + std::to_string(sim_id));
    const auto& rec = ds->ds.records[sim_id];
    if (rec.trajectory.states.empty()) throw tbp::ArgumentError("record has no states");
    auto states = tbp::rollout(ck->ck, rec.trajectory.states[0].flat(), n_steps, ds->ds.meta.dt);
    tbp::write_rollout_csv(states, ds->ds.meta.dt, out_csv);
  });
}

tbp_status tbp_verify(const char* suite, tbp_log_fn log, void* user, int* failures) {
  if (!suite) return fail(TBP_ERR_ARGUMENT, "null suite");
  return guarded([&] {
    tbp::VerifyResult r = tbp::verify_suite(suite, [&](const std::string& line) {
      if (log) log(line.c_str(), user);
    });
    if (failures) *failures = r.failures;
  });
}

}  // extern "C"
