#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tbp/integrator.hpp"
#include "tbp/types.hpp"

namespace tbp {

struct InitialCondition {
  double theta = 0.0;  // in [0, pi/2]
  double s = 0.0;      // in [0, 1]
  Vec2 p1{1.0, 0.0};
  Vec2 p2{};
  Vec2 p3{};
  uint64_t seed_index = 0;

  SystemState state() const {
    SystemState st;
    st.pos = {p1, p2, p3};
    return st;  // velocities zero, t = 0
  }
};

struct SimulationRecord {
  uint64_t sim_id = 0;
  InitialCondition ic;
  Trajectory trajectory;
  // Deterministic integration cost: derivative evaluations spent on this record.
  // Stands in for wall time so that regeneration is byte-identical.
  double cost_evals = 0.0;
};

struct DatasetMeta {
  uint64_t n_requested = 0;
  uint64_t n_converged = 0;
  double dt = 0.0390625;
  double t_end = 10.0;
  double tolerance = 1e-10;
  uint64_t master_seed = 0;
  uint32_t format_version = 1;
};

struct Dataset {
  DatasetMeta meta;
  std::vector<SimulationRecord> records;  // ordered by sim_id

  std::vector<int> converged_ids() const {
    std::vector<int> ids;
    for (size_t i = 0; i < records.size(); ++i)
      if (records[i].trajectory.converged) ids.push_back(static_cast<int>(i));
    return ids;
  }
  uint64_t fingerprint() const;
};

// One draw of Algorithm-1: p1 = (1,0), p2 = s * (-min(0.5, cos theta), sin theta),
// p3 = -(p1 + p2), all velocities zero.
InitialCondition sample_initial_condition(uint64_t master_seed, uint64_t index);

Dataset generate_dataset(int64_t n, uint64_t master_seed, const PhysicsConfig& phys_cfg,
                         const IntegratorConfig& int_cfg, double dt, double t_end,
                         int workers = 0);

void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path);

struct DatasetStats {
  uint64_t n_requested = 0;
  uint64_t n_converged = 0;
  uint64_t n_near_singularity = 0;            // p2 within radius 0.1 of (-0.5, 0)
  uint64_t n_near_singularity_failed = 0;
  double global_nonconverged_rate = 0.0;
  double near_singularity_nonconverged_rate = 0.0;
};

DatasetStats dataset_stats(const Dataset& ds);

}  // namespace tbp
