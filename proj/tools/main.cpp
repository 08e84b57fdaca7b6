// Command-line front end over the shared-library C API (tbp.h): dataset
// generation, training, evaluation, rollout and self-verification.
//
// Exit codes: 0 success, 1 verification failure, 2 argument errors,
// 3 IO/format errors, 4 training divergence, 5 checkpoint/dataset mismatch.

#include <cstdio>
#include <cstdlib>
#include <string>

#include "CLI11.hpp"
#include "tbp.h"

namespace {

int status_to_exit(tbp_status st) {
  switch (st) {
    case TBP_OK: return 0;
    case TBP_ERR_ARGUMENT: return 2;
    case TBP_ERR_IO: return 3;
    case TBP_ERR_FORMAT: return 3;
    case TBP_ERR_DIVERGENCE: return 4;
    case TBP_ERR_CONFIG_MISMATCH: return 5;
    default: return 1;
  }
}

int report(tbp_status st) {
  if (st == TBP_OK) return 0;
  std::fprintf(stderr, "error: %s\n", tbp_last_error());
  return status_to_exit(st);
}

struct DatasetHandle {
  tbp_dataset* ds = nullptr;
  ~DatasetHandle() { tbp_dataset_free(ds); }
};
struct CheckpointHandle {
  tbp_checkpoint* ck = nullptr;
  ~CheckpointHandle() { tbp_checkpoint_free(ck); }
};

void add_config_option(CLI::App* cmd) {
  cmd->set_config("--config", "", "flat key=value config file ('#' comments); flags win");
  cmd->allow_config_extras(false);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-body problem simulation, PINN training and evaluation"};
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "generate a simulation dataset");
  add_config_option(gen);
  tbp_gen_params gp;
  tbp_gen_params_init(&gp);
  std::string gen_out;
  int gen_workers = 0;
  gen->add_option("--n", gp.n, "number of simulations")->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", gp.master_seed, "master seed")->capture_default_str();
  gen->add_option("--tol", gp.tolerance, "integrator tolerance")->capture_default_str();
  gen->add_option("--dt", gp.dt, "sampling step")->capture_default_str();
  gen->add_option("--t-end", gp.t_end, "simulated time span")->capture_default_str();
  gen->add_option("--out", gen_out, "output dataset file")->required();
  gen->add_option("--workers", gen_workers, "worker threads (0 = all cores)")
      ->envname("TBP_WORKERS")->capture_default_str();

  // ---- train ----
  auto* train = app.add_subcommand("train", "train a model on a dataset");
  add_config_option(train);
  tbp_train_params tp;
  tbp_train_params_init(&tp);
  std::string train_dataset, train_out, train_report;
  std::string arch = "resnet", formulation = "non_autoregressive", activation = "relu";
  std::string alpha_schedule = "linear";
  bool pi = true;
  bool verbose = false;
  train->add_option("--dataset", train_dataset, "dataset file")->required();
  train->add_option("--out", train_out, "output checkpoint file")->required();
  train->add_option("--report", train_report, "training report CSV path");
  train->add_option("--arch", arch, "architecture: dnn | resnet")->capture_default_str();
  train->add_option("--formulation", formulation,
                    "non_autoregressive | autoregressive")->capture_default_str();
  train->add_option("--activation", activation, "relu | gelu | tanh | leaky_relu")
      ->capture_default_str();
  train->add_option("--depth", tp.depth, "hidden layers (resnet: 2 per block)")
      ->capture_default_str();
  train->add_option("--width", tp.width, "hidden width")->capture_default_str();
  train->add_option("--pi", pi, "enable the physics-informed loss term")->capture_default_str();
  train->add_option("--alpha-schedule", alpha_schedule,
                    "constant | warmup | linear | exponential")->capture_default_str();
  train->add_option("--alpha0", tp.alpha0, "initial alpha")->capture_default_str();
  train->add_option("--alpha-max", tp.alpha_max, "final alpha")->capture_default_str();
  train->add_option("--ramp-epochs", tp.ramp_epochs, "ramp length in epochs")
      ->capture_default_str();
  train->add_option("--warmup-epochs", tp.warmup_epochs, "warmup length in epochs")
      ->capture_default_str();
  train->add_option("--clamp", tp.residual_clamp, "physics loss clamp (0 = none)")
      ->capture_default_str();
  train->add_option("--collocation-extra", tp.collocation_extra,
                    "extra random collocation times per initial condition")->capture_default_str();
  train->add_option("--lr", tp.learning_rate, "learning rate")->capture_default_str();
  train->add_option("--weight-decay", tp.weight_decay, "decoupled weight decay")
      ->capture_default_str();
  train->add_option("--grad-clip", tp.grad_clip_norm, "gradient norm clip (0 = none)")
      ->capture_default_str();
  train->add_option("--batch-size", tp.batch_size, "mini-batch size")->capture_default_str();
  train->add_option("--epochs", tp.max_epochs, "maximum epochs")->capture_default_str();
  train->add_option("--early-stop-patience", tp.early_stop_patience,
                    "epochs without improvement before stopping")->capture_default_str();
  train->add_option("--plateau-patience", tp.plateau_patience,
                    "epochs without improvement before decaying the learning rate")
      ->capture_default_str();
  train->add_option("--plateau-factor", tp.plateau_factor, "learning-rate decay factor")
      ->capture_default_str();
  train->add_option("--split-fraction", tp.split_fraction, "training split fraction")
      ->capture_default_str();
  train->add_option("--seed", tp.seed, "training seed")->capture_default_str();
  train->add_option("--workers", tp.workers, "worker threads (0 = all cores)")
      ->envname("TBP_WORKERS")->capture_default_str();
  train->add_flag("--verbose", verbose, "per-epoch progress on stderr");

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint against a dataset");
  add_config_option(eval);
  std::string eval_ck, eval_dataset, eval_out_dir = "eval_out";
  int eval_workers = 0;
  eval->add_option("--checkpoint", eval_ck, "checkpoint file")->required();
  eval->add_option("--dataset", eval_dataset, "dataset file")->required();
  eval->add_option("--out-dir", eval_out_dir, "output directory for CSV reports")
      ->capture_default_str();
  eval->add_option("--workers", eval_workers, "worker threads (0 = all cores)")
      ->envname("TBP_WORKERS")->capture_default_str();

  // ---- rollout ----
  auto* roll = app.add_subcommand("rollout", "roll an autoregressive model forward");
  add_config_option(roll);
  std::string roll_ck, roll_dataset, roll_out = "rollout.csv";
  uint64_t roll_sim = 0;
  int roll_steps = 256;
  roll->add_option("--checkpoint", roll_ck, "autoregressive checkpoint")->required();
  roll->add_option("--dataset", roll_dataset, "dataset providing the initial state")->required();
  roll->add_option("--sim", roll_sim, "record id supplying the initial state")
      ->capture_default_str();
  roll->add_option("--steps", roll_steps, "rollout steps")->capture_default_str();
  roll->add_option("--out", roll_out, "output CSV path")->capture_default_str();

  // ---- verify ----
  auto* verify = app.add_subcommand("verify", "run the built-in property suites");
  std::string suite = "all";
  verify->add_option("--suite", suite, "dynamics | integrator | autodiff | all")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    std::fprintf(stderr, "run with --help for usage\n");
    return 2;
  }

  if (gen->parsed()) {
    gp.workers = gen_workers;
    DatasetHandle ds;
    if (int rc = report(tbp_generate_dataset(&gp, &ds.ds))) return rc;
    if (int rc = report(tbp_dataset_write(ds.ds, gen_out.c_str()))) return rc;
    tbp_dataset_stats st;
    if (int rc = report(tbp_dataset_stats_get(ds.ds, &st))) return rc;
    std::printf("converged: %llu/%llu\n", static_cast<unsigned long long>(st.n_converged),
                static_cast<unsigned long long>(st.n_requested));
    std::printf("non-converged rate: global %.4f, near singularity (r<0.1 of (-0.5,0)) %.4f "
                "(%llu/%llu records)\n",
                st.global_nonconverged_rate, st.near_singularity_nonconverged_rate,
                static_cast<unsigned long long>(st.n_near_singularity_failed),
                static_cast<unsigned long long>(st.n_near_singularity));
    std::printf("wrote %s\n", gen_out.c_str());
    return 0;
  }

  if (train->parsed()) {
    tp.physics_informed = pi ? 1 : 0;
    tp.verbose = verbose ? 1 : 0;
    if (arch == "dnn") tp.architecture = 0;
    else if (arch == "resnet") tp.architecture = 1;
    else { std::fprintf(stderr, "unknown --arch: %s\n", arch.c_str()); return 2; }
    if (formulation == "non_autoregressive") tp.formulation = 0;
    else if (formulation == "autoregressive") tp.formulation = 1;
    else { std::fprintf(stderr, "unknown --formulation: %s\n", formulation.c_str()); return 2; }
    if (activation == "relu") tp.activation = 0;
    else if (activation == "gelu") tp.activation = 1;
    else if (activation == "tanh") tp.activation = 2;
    else if (activation == "leaky_relu") tp.activation = 3;
    else { std::fprintf(stderr, "unknown --activation: %s\n", activation.c_str()); return 2; }
    if (alpha_schedule == "constant") tp.alpha_kind = 0;
    else if (alpha_schedule == "warmup") tp.alpha_kind = 1;
    else if (alpha_schedule == "linear") tp.alpha_kind = 2;
    else if (alpha_schedule == "exponential") tp.alpha_kind = 3;
    else { std::fprintf(stderr, "unknown --alpha-schedule: %s\n", alpha_schedule.c_str()); return 2; }

    DatasetHandle ds;
    if (int rc = report(tbp_dataset_read(train_dataset.c_str(), &ds.ds))) return rc;
    CheckpointHandle ck;
    if (int rc = report(tbp_train(ds.ds, &tp, train_report.empty() ? nullptr : train_report.c_str(),
                                  &ck.ck)))
      return rc;
    if (int rc = report(tbp_checkpoint_write(ck.ck, train_out.c_str()))) return rc;
    std::printf("wrote %s\n", train_out.c_str());
    if (!train_report.empty()) std::printf("wrote %s\n", train_report.c_str());
    return 0;
  }

  if (eval->parsed()) {
    CheckpointHandle ck;
    if (int rc = report(tbp_checkpoint_read(eval_ck.c_str(), &ck.ck))) return rc;
    DatasetHandle ds;
    if (int rc = report(tbp_dataset_read(eval_dataset.c_str(), &ds.ds))) return rc;
    tbp_metrics m;
    if (int rc = report(tbp_evaluate(ck.ck, ds.ds, eval_out_dir.c_str(), eval_workers, &m)))
      return rc;
    std::printf("samples: %lld%s\n", static_cast<long long>(m.n_samples),
                m.used_validation_split ? " (validation split)" : " (all converged records)");
    std::printf("mae: %.6g\nrmse: %.6g\nsmape: %.6g%%\npi_error: %.6g (excluded %lld)\n", m.mae,
                m.rmse, m.smape, m.pi_error, static_cast<long long>(m.pi_excluded));
    std::printf("wrote %s/{metrics,ecdf,lag_error}.csv\n", eval_out_dir.c_str());
    return 0;
  }

  if (roll->parsed()) {
    CheckpointHandle ck;
    if (int rc = report(tbp_checkpoint_read(roll_ck.c_str(), &ck.ck))) return rc;
    DatasetHandle ds;
    if (int rc = report(tbp_dataset_read(roll_dataset.c_str(), &ds.ds))) return rc;
    if (int rc = report(tbp_rollout_csv(ck.ck, ds.ds, roll_sim, roll_steps, roll_out.c_str())))
      return rc;
    std::printf("wrote %s\n", roll_out.c_str());
    return 0;
  }

  if (verify->parsed()) {
    int failures = 0;
    tbp_status st = tbp_verify(
        suite.c_str(), [](const char* line, void*) { std::printf("%s\n", line); }, nullptr,
        &failures);
    if (int rc = report(st)) return rc;
    std::printf(failures == 0 ? "verify: all checks passed\n" : "verify: %d check(s) FAILED\n",
                failures);
    return failures == 0 ? 0 : 1;
  }

  return 2;
}
