/* C API for the three-body PINN library.
 *
 * All functions return tbp_status; on failure tbp_last_error() gives a
 * thread-local message.  Objects behind opaque handles are created by the
 * library and released with the matching _free function.
 */
#ifndef TBP_H
#define TBP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tbp_status {
  TBP_OK = 0,
  TBP_ERR_ARGUMENT = 1,
  TBP_ERR_IO = 2,
  TBP_ERR_FORMAT = 3,
  TBP_ERR_SINGULARITY = 4,
  TBP_ERR_DIVERGENCE = 5,
  TBP_ERR_CONFIG_MISMATCH = 6,
  TBP_ERR_DOMAIN = 7,
  TBP_ERR_INTERNAL = 8
} tbp_status;

const char* tbp_last_error(void);
uint32_t tbp_abi_version(void);

typedef struct tbp_dataset tbp_dataset;
typedef struct tbp_checkpoint tbp_checkpoint;

/* ---- dataset generation and IO ---- */

typedef struct tbp_gen_params {
  int64_t n;
  uint64_t master_seed;
  double tolerance; /* integrator tolerance (paper: 1e-10) */
  double dt;        /* sampling step (paper: 0.0390625) */
  double t_end;     /* simulated span (paper: 10) */
  int workers;      /* 0 = hardware concurrency */
} tbp_gen_params;

void tbp_gen_params_init(tbp_gen_params* p);

typedef struct tbp_dataset_stats {
  uint64_t n_requested;
  uint64_t n_converged;
  uint64_t n_near_singularity;        /* p2 within 0.1 of (-0.5, 0) */
  uint64_t n_near_singularity_failed;
  double global_nonconverged_rate;
  double near_singularity_nonconverged_rate;
  double dt;
  double t_end;
  double tolerance;
  uint64_t master_seed;
} tbp_dataset_stats;

tbp_status tbp_generate_dataset(const tbp_gen_params* params, tbp_dataset** out);
tbp_status tbp_dataset_write(const tbp_dataset* ds, const char* path);
tbp_status tbp_dataset_read(const char* path, tbp_dataset** out);
tbp_status tbp_dataset_stats_get(const tbp_dataset* ds, tbp_dataset_stats* out);
/* Initial state (canonical 12-vector) of one record. */
tbp_status tbp_dataset_initial_state(const tbp_dataset* ds, uint64_t sim_id, double state[12],
                                     int* converged);
void tbp_dataset_free(tbp_dataset* ds);

/* ---- training ---- */

typedef struct tbp_train_params {
  /* network */
  int architecture;  /* 0 dnn, 1 resnet */
  int formulation;   /* 0 non-autoregressive, 1 autoregressive */
  int activation;    /* 0 relu, 1 gelu, 2 tanh, 3 leaky_relu */
  int depth;
  int width;
  /* loss */
  int physics_informed; /* 0: alpha forced to 0 (baseline) */
  int alpha_kind;       /* 0 constant, 1 warmup, 2 linear, 3 exponential */
  double alpha0;
  double alpha_max;
  int ramp_epochs;
  int warmup_epochs;
  double residual_clamp; /* <= 0: no clamp */
  int collocation_extra;
  /* optimizer / loop */
  double learning_rate;
  double weight_decay;
  double plateau_factor;
  double grad_clip_norm; /* <= 0: no clipping */
  double split_fraction;
  int max_epochs;
  int batch_size;
  int early_stop_patience;
  int plateau_patience;
  uint64_t seed;
  int workers;
  int verbose; /* 1: per-epoch lines on stderr */
} tbp_train_params;

void tbp_train_params_init(tbp_train_params* p);

tbp_status tbp_train(const tbp_dataset* ds, const tbp_train_params* params,
                     const char* report_csv_path_or_null, tbp_checkpoint** out);

tbp_status tbp_checkpoint_write(const tbp_checkpoint* ck, const char* path);
tbp_status tbp_checkpoint_read(const char* path, tbp_checkpoint** out);
void tbp_checkpoint_free(tbp_checkpoint* ck);

/* ---- evaluation ---- */

typedef struct tbp_metrics {
  double mae;
  double rmse;
  double smape;     /* percent */
  double pi_error;  /* mean squared physics residual, exact gravity */
  int64_t pi_excluded;
  int64_t n_samples;
  int used_validation_split;
} tbp_metrics;

/* Writes metrics.csv, ecdf.csv and lag_error.csv into out_dir (created if
 * missing) and fills *out when non-NULL. */
tbp_status tbp_evaluate(const tbp_checkpoint* ck, const tbp_dataset* ds, const char* out_dir,
                        int workers, tbp_metrics* out);

/* Rolls an autoregressive checkpoint forward from the initial state of the
 * given record and writes rollout.csv (t, 12 state columns, per-body kinetic
 * energies). */
tbp_status tbp_rollout_csv(const tbp_checkpoint* ck, const tbp_dataset* ds, uint64_t sim_id,
                           int n_steps, const char* out_csv);

/* ---- self verification ---- */

typedef void (*tbp_log_fn)(const char* line, void* user);

/* suite: "dynamics", "integrator", "autodiff" or "all".  *failures receives
 * the number of failing checks. */
tbp_status tbp_verify(const char* suite, tbp_log_fn log, void* user, int* failures);

#ifdef __cplusplus
}
#endif

#endif /* TBP_H */
