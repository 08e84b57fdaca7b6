#include "tbp/datagen.hpp"

#include <algorithm>
#include <cmath>

#include "tbp/binio.hpp"
#include "tbp/parallel.hpp"
#include "tbp/rng.hpp"

namespace tbp {

namespace {
constexpr char kMagic[4] = {'T', 'B', 'P', 'D'};
constexpr uint32_t kFormatVersion = 1;
}  // namespace

InitialCondition sample_initial_condition(uint64_t master_seed, uint64_t index) {
  Rng rng = record_stream(master_seed, index);
  InitialCondition ic;
  ic.seed_index = index;
  ic.theta = rng.uniform01() * (M_PI / 2.0);
  double px = -std::min(0.5, std::cos(ic.theta));
  double pz = std::sin(ic.theta);
  ic.s = rng.uniform01();
  ic.p1 = {1.0, 0.0};
  ic.p2 = {ic.s * px, ic.s * pz};
  ic.p3 = -(ic.p1 + ic.p2);
  return ic;
}

Dataset generate_dataset(int64_t n, uint64_t master_seed, const PhysicsConfig& phys_cfg,
                         const IntegratorConfig& int_cfg, double dt, double t_end,
                         int workers) {
  if (n < 1) throw ArgumentError("generate_dataset: n must be >= 1");
  Dataset ds;
  ds.meta.n_requested = static_cast<uint64_t>(n);
  ds.meta.dt = dt;
  ds.meta.t_end = t_end;
  ds.meta.tolerance = int_cfg.tolerance;
  ds.meta.master_seed = master_seed;
  ds.meta.format_version = kFormatVersion;
  ds.records.resize(static_cast<size_t>(n));

  parallel_chunks(n, 4, workers, [&](int64_t, int64_t begin, int64_t end, int) {
    for (int64_t i = begin; i < end; ++i) {
      SimulationRecord& rec = ds.records[static_cast<size_t>(i)];
      rec.sim_id = static_cast<uint64_t>(i);
      rec.ic = sample_initial_condition(master_seed, static_cast<uint64_t>(i));
      IntegratorConfig icfg = int_cfg;
      int64_t evals = 0;
      rec.trajectory = sample_trajectory(rec.ic.state(), t_end, dt, phys_cfg, icfg, &evals);
      rec.cost_evals = static_cast<double>(evals);
    }
  });

  ds.meta.n_converged = 0;
  for (const auto& r : ds.records)
    if (r.trajectory.converged) ds.meta.n_converged++;
  return ds;
}

uint64_t Dataset::fingerprint() const {
  // FNV-1a over the identifying meta fields.
  auto mix = [](uint64_t h, uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xFF;
      h *= 0x100000001B3ULL;
    }
    return h;
  };
  auto bits = [](double d) {
    uint64_t u;
    std::memcpy(&u, &d, 8);
    return u;
  };
  uint64_t h = 0xCBF29CE484222325ULL;
  h = mix(h, meta.n_requested);
  h = mix(h, bits(meta.dt));
  h = mix(h, bits(meta.t_end));
  h = mix(h, bits(meta.tolerance));
  h = mix(h, meta.master_seed);
  return h;
}

void write_dataset(const Dataset& ds, const std::string& path) {
  BinWriter w;
  w.bytes(kMagic, 4);
  w.u32(ds.meta.format_version);
  w.u64(ds.meta.n_requested);
  w.u64(ds.meta.n_converged);
  w.f64(ds.meta.dt);
  w.f64(ds.meta.t_end);
  w.f64(ds.meta.tolerance);
  w.u64(ds.meta.master_seed);
  for (const auto& rec : ds.records) {
    w.u64(rec.sim_id);
    w.f64(rec.ic.theta);
    w.f64(rec.ic.s);
    w.u8(rec.trajectory.converged ? 1 : 0);
    w.f64(rec.cost_evals);
    w.u32(static_cast<uint32_t>(rec.trajectory.states.size()));
    for (const auto& st : rec.trajectory.states) {
      w.f64(st.t);
      auto flat = st.flat();
      for (double v : flat) w.f64(v);
    }
  }
  w.write_file(path);
}

Dataset read_dataset(const std::string& path) {
  BinReader r = BinReader::from_file(path);
  char magic[4];
  if (r.remaining() < 4) throw FormatError("dataset file too short");
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad dataset magic");
  Dataset ds;
  ds.meta.format_version = r.u32();
  if (ds.meta.format_version != kFormatVersion)
    throw FormatError("unsupported dataset format version " + std::to_string(ds.meta.format_version));
  ds.meta.n_requested = r.u64();
  ds.meta.n_converged = r.u64();
  ds.meta.dt = r.f64();
  ds.meta.t_end = r.f64();
  ds.meta.tolerance = r.f64();
  ds.meta.master_seed = r.u64();
  ds.records.reserve(ds.meta.n_requested);
  for (uint64_t i = 0; i < ds.meta.n_requested; ++i) {
    try {
      SimulationRecord rec;
      rec.sim_id = r.u64();
      rec.ic.theta = r.f64();
      rec.ic.s = r.f64();
      rec.ic.seed_index = rec.sim_id;
      double px = -std::min(0.5, std::cos(rec.ic.theta));
      double pz = std::sin(rec.ic.theta);
      rec.ic.p1 = {1.0, 0.0};
      rec.ic.p2 = {rec.ic.s * px, rec.ic.s * pz};
      rec.ic.p3 = -(rec.ic.p1 + rec.ic.p2);
      rec.trajectory.converged = r.u8() != 0;
      rec.trajectory.dt = ds.meta.dt;
      rec.cost_evals = r.f64();
      uint32_t n_states = r.u32();
      rec.trajectory.states.reserve(n_states);
      for (uint32_t k = 0; k < n_states; ++k) {
        double t = r.f64();
        double flat[kStateDim];
        for (double& v : flat) v = r.f64();
        rec.trajectory.states.push_back(SystemState::from_flat(flat, t));
      }
      ds.records.push_back(std::move(rec));
    } catch (const FormatError&) {
      throw FormatError("dataset truncated in record for sim_id " + std::to_string(i));
    }
  }
  return ds;
}

DatasetStats dataset_stats(const Dataset& ds) {
  DatasetStats st;
  st.n_requested = ds.meta.n_requested;
  for (const auto& rec : ds.records) {
    const bool ok = rec.trajectory.converged;
    if (ok) st.n_converged++;
    const double dx = rec.ic.p2.x - (-0.5);
    const double dz = rec.ic.p2.z;
    if (std::sqrt(dx * dx + dz * dz) < 0.1) {
      st.n_near_singularity++;
      if (!ok) st.n_near_singularity_failed++;
    }
  }
  if (st.n_requested > 0)
    st.global_nonconverged_rate =
        1.0 - static_cast<double>(st.n_converged) / static_cast<double>(st.n_requested);
  if (st.n_near_singularity > 0)
    st.near_singularity_nonconverged_rate = static_cast<double>(st.n_near_singularity_failed) /
                                            static_cast<double>(st.n_near_singularity);
  return st;
}

}  // namespace tbp
