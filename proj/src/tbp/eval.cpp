#include "tbp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "tbp/csv.hpp"
#include "tbp/parallel.hpp"

namespace tbp {

namespace {
constexpr int64_t kChunk = 256;
}

MetricsReport metrics(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size())
    throw DimensionError("metrics: prediction/target shapes differ");
  if (predictions.empty()) throw DimensionError("metrics: empty input");
  double abs_sum = 0.0, sq_sum = 0.0, smape_sum = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
    const double denom = std::abs(targets[i]) + std::abs(predictions[i]);
    if (denom != 0.0) smape_sum += 2.0 * std::abs(d) / denom;
  }
  const double n = static_cast<double>(predictions.size());
  return {abs_sum / n, std::sqrt(sq_sum / n), 100.0 * smape_sum / n};
}

EcdfSeries ecdf(std::span<const double> values) {
  if (values.empty()) throw DimensionError("ecdf: empty input");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  EcdfSeries out;
  const double n = static_cast<double>(sorted.size());
  size_t i = 0;
  while (i < sorted.size()) {
    size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    out.points.emplace_back(sorted[i], static_cast<double>(j + 1) / n);
    i = j + 1;
  }
  return out;
}

bool physics_informed(const LossConfig& cfg) {
  const auto& s = cfg.schedule;
  switch (s.kind) {
    case AlphaKind::Constant: return s.alpha_max > 0.0;
    case AlphaKind::Warmup: return s.alpha_max > 0.0;
    case AlphaKind::Linear: return s.alpha_max > 0.0 || s.alpha0 > 0.0;
    case AlphaKind::Exponential: return true;  // requires alpha0 > 0
  }
  return false;
}

std::string model_name(const Checkpoint& ck) {
  std::string name = physics_informed(ck.loss) ? "pi-" : "";
  name += to_string(ck.network.architecture);
  return name;
}

void check_compatible(const Checkpoint& ck, const Dataset& ds) {
  if (ck.dataset_dt != ds.meta.dt)
    throw ConfigMismatchError("checkpoint was trained with dt " + format_double(ck.dataset_dt) +
                              " but the dataset uses dt " + format_double(ds.meta.dt));
}

namespace {

struct SampleAccum {
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  double smape_sum = 0.0;
  double phys_sum = 0.0;
  int64_t phys_evaluated = 0;
  int64_t phys_excluded = 0;
};

std::vector<int> eval_record_ids(const Checkpoint& ck, const Dataset& ds, bool* used_split) {
  if (ck.dataset_fingerprint == ds.fingerprint()) {
    try {
      auto [train_ids, val_ids] = split_dataset(ds, ck.split_fraction, ck.split_seed);
      if (used_split) *used_split = true;
      return val_ids;
    } catch (const EmptySplitError&) {
      // fall through to evaluating everything
    }
  }
  if (used_split) *used_split = false;
  return ds.converged_ids();
}

}  // namespace

EvalResult evaluate(const Checkpoint& ck, const Dataset& ds, int workers) {
  check_compatible(ck, ds);
  EvalResult result;
  const std::vector<int> ids = eval_record_ids(ck, ds, &result.used_validation_split);
  if (ids.empty()) throw ArgumentError("no converged records to evaluate");
  AssembledData data = assemble_pairs(ds, ids, ck.network.formulation);
  if (data.n_samples == 0) throw ArgumentError("no evaluation samples could be assembled");

  const int64_t n = data.n_samples;
  const int64_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<SampleAccum> acc(static_cast<size_t>(n_chunks));
  result.per_sample_mae.assign(static_cast<size_t>(n), 0.0);
  const int tidx = ck.network.time_index();
  const PhysicsConfig phys{};

  parallel_chunks(n, kChunk, workers, [&](int64_t chunk, int64_t b, int64_t e, int) {
    SampleAccum a;
    std::array<double, kStateDim> out, dout;
    for (int64_t i = b; i < e; ++i) {
      std::span<const double> in(data.inputs.data() + i * data.in_dim,
                                 static_cast<size_t>(data.in_dim));
      forward_dual(ck.network, ck.parameters, in, tidx, out, dout);
      const double* tgt = data.targets.data() + i * kStateDim;
      double abs_row = 0.0;
      for (int k = 0; k < kStateDim; ++k) {
        const double d = out[static_cast<size_t>(k)] - tgt[k];
        a.abs_sum += std::abs(d);
        a.sq_sum += d * d;
        const double denom = std::abs(tgt[k]) + std::abs(out[static_cast<size_t>(k)]);
        if (denom != 0.0) a.smape_sum += 2.0 * std::abs(d) / denom;
        abs_row += std::abs(d);
      }
      result.per_sample_mae[static_cast<size_t>(i)] = abs_row / 12.0;
      try {
        auto res = physics_residual<double>(out, dout, phys, 0.0);
        double prow = 0.0;
        for (double r : res) prow += r * r;
        a.phys_sum += prow;
        a.phys_evaluated++;
      } catch (const SingularityError&) {
        a.phys_excluded++;
      }
    }
    acc[static_cast<size_t>(chunk)] = a;
  });

  SampleAccum total;
  for (const auto& a : acc) {
    total.abs_sum += a.abs_sum;
    total.sq_sum += a.sq_sum;
    total.smape_sum += a.smape_sum;
    total.phys_sum += a.phys_sum;
    total.phys_evaluated += a.phys_evaluated;
    total.phys_excluded += a.phys_excluded;
  }
  const double n_elems = static_cast<double>(n) * 12.0;
  result.metrics.mae = total.abs_sum / n_elems;
  result.metrics.rmse = std::sqrt(total.sq_sum / n_elems);
  result.metrics.smape = 100.0 * total.smape_sum / n_elems;
  result.pi.mean_square_residual =
      total.phys_evaluated > 0
          ? total.phys_sum / (12.0 * static_cast<double>(total.phys_evaluated))
          : 0.0;
  result.pi.evaluated = total.phys_evaluated;
  result.pi.excluded = total.phys_excluded;
  result.n_samples = n;
  result.ecdf = ecdf(result.per_sample_mae);

  // Error by prediction lag.
  if (ck.network.formulation == Formulation::NonAutoregressive) {
    // Samples are ordered k = 1..N within each simulation.
    const int64_t steps = static_cast<int64_t>(
        ds.records[static_cast<size_t>(ids[0])].trajectory.states.size() - 1);
    std::vector<double> sums(static_cast<size_t>(steps), 0.0);
    std::vector<int64_t> counts(static_cast<size_t>(steps), 0);
    for (int64_t i = 0; i < n; ++i) {
      const int64_t k = i % steps;
      sums[static_cast<size_t>(k)] += result.per_sample_mae[static_cast<size_t>(i)];
      counts[static_cast<size_t>(k)]++;
    }
    for (int64_t k = 0; k < steps; ++k)
      result.lag_error.points.emplace_back(
          static_cast<double>(k + 1) * ds.meta.dt,
          counts[static_cast<size_t>(k)] > 0
              ? sums[static_cast<size_t>(k)] / static_cast<double>(counts[static_cast<size_t>(k)])
              : 0.0);
  } else {
    result.lag_error = error_vs_time(ck, ds, workers);
  }
  return result;
}

std::vector<std::array<double, kStateDim>> rollout(const Checkpoint& ck,
                                                   const std::array<double, kStateDim>& ic,
                                                   int n_steps, double dt) {
  if (ck.network.formulation != Formulation::Autoregressive)
    throw ConfigMismatchError("rollout requires an autoregressive checkpoint");
  if (n_steps < 0) throw ArgumentError("rollout steps must be nonnegative");
  std::vector<std::array<double, kStateDim>> states;
  states.reserve(static_cast<size_t>(n_steps) + 1);
  states.push_back(ic);
  std::array<double, 13> input;
  std::array<double, kStateDim> out;
  for (int k = 0; k < n_steps; ++k) {
    std::copy(states.back().begin(), states.back().end(), input.begin());
    input[12] = dt;
    forward(ck.network, ck.parameters, input, out);
    for (double v : out)
      if (!std::isfinite(v))
        throw DivergenceError("rollout output became non-finite at step " + std::to_string(k + 1),
                              k + 1);
    states.push_back(out);
  }
  return states;
}

PiErrorReport pi_error(const Checkpoint& ck, const Dataset& ds, int workers) {
  EvalResult r = evaluate(ck, ds, workers);
  return r.pi;
}

LagErrorSeries error_vs_time(const Checkpoint& ck, const Dataset& ds, int workers) {
  bool used_split = false;
  const std::vector<int> ids = eval_record_ids(ck, ds, &used_split);
  if (ids.empty()) throw ArgumentError("no converged records to evaluate");

  if (ck.network.formulation == Formulation::NonAutoregressive) {
    EvalResult r = evaluate(ck, ds, workers);
    return r.lag_error;
  }

  // Autoregressive: roll each simulation forward from its initial state and
  // group errors by step index.
  const int64_t n_sims = static_cast<int64_t>(ids.size());
  const int64_t steps = static_cast<int64_t>(
      ds.records[static_cast<size_t>(ids[0])].trajectory.states.size() - 1);
  const int64_t n_chunks = (n_sims + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> chunk_sums(static_cast<size_t>(n_chunks));
  std::vector<std::vector<int64_t>> chunk_counts(static_cast<size_t>(n_chunks));

  parallel_chunks(n_sims, kChunk, workers, [&](int64_t chunk, int64_t b, int64_t e, int) {
    auto& sums = chunk_sums[static_cast<size_t>(chunk)];
    auto& counts = chunk_counts[static_cast<size_t>(chunk)];
    sums.assign(static_cast<size_t>(steps), 0.0);
    counts.assign(static_cast<size_t>(steps), 0);
    for (int64_t si = b; si < e; ++si) {
      const auto& rec = ds.records[static_cast<size_t>(ids[static_cast<size_t>(si)])];
      const auto& truth = rec.trajectory.states;
      std::vector<std::array<double, kStateDim>> pred;
      try {
        pred = rollout(ck, truth[0].flat(), static_cast<int>(steps), ds.meta.dt);
      } catch (const DivergenceError&) {
        continue;  // diverged rollouts contribute nothing past their failure
      }
      for (int64_t k = 1; k <= steps && k < static_cast<int64_t>(truth.size()); ++k) {
        const auto t_flat = truth[static_cast<size_t>(k)].flat();
        double row = 0.0;
        for (int c = 0; c < kStateDim; ++c)
          row += std::abs(pred[static_cast<size_t>(k)][static_cast<size_t>(c)] -
                          t_flat[static_cast<size_t>(c)]);
        sums[static_cast<size_t>(k - 1)] += row / 12.0;
        counts[static_cast<size_t>(k - 1)]++;
      }
    }
  });

  LagErrorSeries series;
  for (int64_t k = 0; k < steps; ++k) {
    double sum = 0.0;
    int64_t count = 0;
    for (int64_t c = 0; c < n_chunks; ++c) {
      sum += chunk_sums[static_cast<size_t>(c)][static_cast<size_t>(k)];
      count += chunk_counts[static_cast<size_t>(c)][static_cast<size_t>(k)];
    }
    series.points.emplace_back(static_cast<double>(k + 1) * ds.meta.dt,
                               count > 0 ? sum / static_cast<double>(count) : 0.0);
  }
  return series;
}

void write_eval_csvs(const EvalResult& result, const Checkpoint& ck, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir);

  CsvWriter m("model,seed,mae,rmse,smape,pi_error");
  m.row(model_name(ck), static_cast<unsigned long long>(ck.seed), result.metrics.mae,
        result.metrics.rmse, result.metrics.smape, result.pi.mean_square_residual);
  m.write_file(out_dir + "/metrics.csv");

  CsvWriter e("value,fraction");
  for (const auto& [v, f] : result.ecdf.points) e.row(v, f);
  e.write_file(out_dir + "/ecdf.csv");

  CsvWriter l("t,mean_abs_error");
  for (const auto& [t, v] : result.lag_error.points) l.row(t, v);
  l.write_file(out_dir + "/lag_error.csv");
}

void write_rollout_csv(const std::vector<std::array<double, kStateDim>>& states, double dt,
                       const std::string& path) {
  CsvWriter csv("t,p1x,p1z,p2x,p2z,p3x,p3z,v1x,v1z,v2x,v2z,v3x,v3z,ke1,ke2,ke3");
  for (size_t k = 0; k < states.size(); ++k) {
    const auto& s = states[k];
    const double t = static_cast<double>(k) * dt;
    std::string line = format_double(t);
    for (double v : s) line += "," + format_double(v);
    for (int b = 0; b < 3; ++b) {
      const double vx = s[static_cast<size_t>(6 + 2 * b)];
      const double vz = s[static_cast<size_t>(7 + 2 * b)];
      line += "," + format_double(0.5 * (vx * vx + vz * vz));
    }
    csv.row(line);
  }
  csv.write_file(path);
}

}  // namespace tbp
