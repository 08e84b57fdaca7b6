#include "tbp/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "tbp/csv.hpp"
#include "tbp/datagen.hpp"
#include "tbp/dynamics.hpp"
#include "tbp/integrator.hpp"
#include "tbp/loss.hpp"
#include "tbp/network.hpp"
#include "tbp/reference_orbits.hpp"
#include "tbp/rng.hpp"
#include "tbp/tape.hpp"

namespace tbp {

namespace {

struct Suite {
  const VerifyLog& log;
  VerifyResult result;

  void check(const std::string& name, double measured, double tol) {
    const bool ok = measured <= tol;
    result.checks++;
    if (!ok) result.failures++;
    log((ok ? "ok   " : "FAIL ") + name + "  measured=" + format_double(measured) +
        "  tol=" + format_double(tol));
  }
  void check_bool(const std::string& name, bool ok) {
    result.checks++;
    if (!ok) result.failures++;
    log((ok ? "ok   " : "FAIL ") + name);
  }
};

std::array<Vec2, 3> random_positions(Rng& rng) {
  // Rejection-sample until all pairs are at least 0.2 apart.
  for (;;) {
    std::array<Vec2, 3> pos;
    for (auto& p : pos) p = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    double dmin = 1e30;
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) dmin = std::min(dmin, (pos[i] - pos[j]).norm());
    if (dmin > 0.2) return pos;
  }
}

void dynamics_suite(Suite& s) {
  const PhysicsConfig cfg{};
  Rng rng(20240901);

  double max_third_law = 0.0, max_translation = 0.0, max_rotation = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    auto pos = random_positions(rng);
    auto acc = accelerations(pos, cfg);
    Vec2 sum{};
    for (int i = 0; i < 3; ++i) sum += cfg.masses[i] * acc[i];
    max_third_law = std::max({max_third_law, std::abs(sum.x), std::abs(sum.z)});

    const Vec2 shift{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
    std::array<Vec2, 3> shifted = pos;
    for (auto& p : shifted) p += shift;
    auto acc2 = accelerations(shifted, cfg);
    for (int i = 0; i < 3; ++i) {
      max_translation = std::max(max_translation, std::abs(acc2[i].x - acc[i].x));
      max_translation = std::max(max_translation, std::abs(acc2[i].z - acc[i].z));
    }

    SystemState st;
    st.pos = pos;
    for (auto& v : st.vel) v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const double e0 = energies(st, cfg).total;
    const double ang = rng.uniform(0.0, 2.0 * M_PI);
    const double c = std::cos(ang), sn = std::sin(ang);
    SystemState rot;
    for (int i = 0; i < 3; ++i) {
      rot.pos[i] = {c * st.pos[i].x - sn * st.pos[i].z, sn * st.pos[i].x + c * st.pos[i].z};
      rot.vel[i] = {c * st.vel[i].x - sn * st.vel[i].z, sn * st.vel[i].x + c * st.vel[i].z};
    }
    max_rotation = std::max(max_rotation, std::abs(energies(rot, cfg).total - e0));
  }
  s.check("dynamics.newton_third_law_max_abs_sum", max_third_law, 1e-12);
  s.check("dynamics.translation_invariance_max_diff", max_translation, 1e-12);
  s.check("dynamics.rotation_energy_invariance_max_diff", max_rotation, 1e-12);

  // state_derivative velocities vs central differences of an integrated orbit.
  IntegratorConfig icfg;
  icfg.tolerance = 1e-12;
  const SystemState base = integrate_to(refs::figure_eight(), 2.0, cfg, icfg).state;
  auto fd_error = [&](double h) {
    SystemState plus = integrate_to(base, base.t + h, cfg, icfg).state;
    SystemState base_minus = refs::figure_eight();
    SystemState minus = integrate_to(base_minus, base.t - h, cfg, icfg).state;
    auto deriv = state_derivative(base, cfg);
    double max_err = 0.0;
    auto pf = plus.flat(), mf = minus.flat();
    for (int k = 0; k < 6; ++k) {
      const double fd = (pf[k] - mf[k]) / (2.0 * h);
      max_err = std::max(max_err, std::abs(fd - deriv[k]));
    }
    return max_err;
  };
  const double err_h = fd_error(5e-3);
  const double err_h2 = fd_error(2.5e-3);
  s.check("dynamics.state_derivative_central_diff", err_h, 1e-4);
  s.check_bool("dynamics.state_derivative_second_order (ratio in [3,5]): ratio=" +
                   format_double(err_h / err_h2),
               err_h / err_h2 > 3.0 && err_h / err_h2 < 5.0);
}

void integrator_suite(Suite& s) {
  const PhysicsConfig cfg{};
  IntegratorConfig icfg;  // tolerance 1e-10

  {
    auto r = integrate_to(refs::lagrange_rotating(), refs::kLagrangePeriod, cfg, icfg);
    double err = 0.0;
    auto f0 = refs::lagrange_rotating().flat(), f1 = r.state.flat();
    for (int k = 0; k < kStateDim; ++k) err = std::max(err, std::abs(f1[k] - f0[k]));
    s.check("integrator.lagrange_period_closure", r.verdict.converged ? err : 1e30, 1e-8);
  }
  {
    auto r = integrate_to(refs::figure_eight(), refs::kFigureEightPeriod, cfg, icfg);
    double err = 0.0;
    auto f0 = refs::figure_eight().flat(), f1 = r.state.flat();
    for (int k = 0; k < kStateDim; ++k) err = std::max(err, std::abs(f1[k] - f0[k]));
    s.check("integrator.figure_eight_period_closure", r.verdict.converged ? err : 1e30, 1e-6);
  }
  {
    // Forward to t=10, negate velocities, integrate another 10 units back.
    auto fwd = integrate_to(refs::figure_eight(), 10.0, cfg, icfg);
    SystemState back = fwd.state;
    back.t = 0.0;
    for (auto& v : back.vel) v = -v;
    auto rev = integrate_to(back, 10.0, cfg, icfg);
    auto f0 = refs::figure_eight().flat(), f1 = rev.state.flat();
    double err = 0.0;
    for (int k = 0; k < 6; ++k) err = std::max(err, std::abs(f1[k] - f0[k]));
    s.check("integrator.time_reversal_position_error", err, 1e-6);
  }

  // Conservation and tolerance monotonicity over converged Algorithm-1 draws.
  std::vector<SystemState> ics;
  std::vector<Trajectory> trajectories;
  for (uint64_t idx = 0; ics.size() < 20 && idx < 200; ++idx) {
    SystemState ic = sample_initial_condition(4242, idx).state();
    Trajectory tr = sample_trajectory(ic, 10.0, 0.0390625, cfg, icfg);
    if (tr.converged) {
      ics.push_back(ic);
      trajectories.push_back(std::move(tr));
    }
  }
  s.check_bool("integrator.found_20_converged_samples", ics.size() == 20);

  double max_drift = 0.0, max_momentum = 0.0, max_com = 0.0;
  for (const auto& tr : trajectories) {
    const double e0 = energies(tr.states[0], cfg).total;
    for (const auto& st : tr.states) {
      max_drift = std::max(max_drift, std::abs(energies(st, cfg).total - e0) / std::abs(e0));
      auto q = conserved_quantities(st, cfg);
      max_momentum = std::max({max_momentum, std::abs(q.momentum.x), std::abs(q.momentum.z)});
      max_com = std::max({max_com, std::abs(q.center_of_mass.x), std::abs(q.center_of_mass.z)});
    }
  }
  s.check("integrator.energy_drift_relative", max_drift, 1e-8);
  s.check("integrator.momentum_conservation", max_momentum, 1e-9);
  s.check("integrator.center_of_mass_conservation", max_com, 1e-9);

  {
    IntegratorConfig ref_cfg = icfg, lo = icfg, hi = icfg;
    ref_cfg.tolerance = 1e-13;
    lo.tolerance = 1e-8;
    hi.tolerance = 1e-10;
    bool monotone = true;
    for (const auto& ic : ics) {
      auto rr = integrate_to(ic, 10.0, cfg, ref_cfg);
      auto rl = integrate_to(ic, 10.0, cfg, lo);
      auto rh = integrate_to(ic, 10.0, cfg, hi);
      if (!rr.verdict.converged || !rl.verdict.converged || !rh.verdict.converged) continue;
      auto rf = rr.state.flat(), lf = rl.state.flat(), hf = rh.state.flat();
      double el = 0.0, eh = 0.0;
      for (int k = 0; k < kStateDim; ++k) {
        el = std::max(el, std::abs(lf[k] - rf[k]));
        eh = std::max(eh, std::abs(hf[k] - rf[k]));
      }
      if (eh > el) monotone = false;
    }
    s.check_bool("integrator.tolerance_monotonicity_1e8_vs_1e10", monotone);
  }
}

// Shared by the autodiff suite and gradient tests: the total loss for a tiny
// network on fixed inputs, evaluated from plain parameter values.
struct TinyNetLoss {
  NetworkConfig net;
  std::vector<std::array<double, 7>> inputs;   // non-autoregressive
  std::vector<std::array<double, kStateDim>> targets;
  double alpha = 0.0;
  double softening = 1e-3;
  PhysicsConfig phys{};

  double value(std::span<const double> params) const {
    double data_sum = 0.0, phys_sum = 0.0;
    std::array<double, kStateDim> out, dout;
    for (size_t i = 0; i < inputs.size(); ++i) {
      forward_dual(net, params, inputs[i], net.time_index(), out, dout);
      for (int k = 0; k < kStateDim; ++k)
        data_sum += std::abs(out[static_cast<size_t>(k)] - targets[i][static_cast<size_t>(k)]);
      if (alpha > 0.0) {
        auto res = physics_residual<double>(out, dout, phys, softening);
        for (double r : res) phys_sum += r * r;
      }
    }
    const double denom = 12.0 * static_cast<double>(inputs.size());
    return data_sum / denom + alpha * phys_sum / denom;
  }

  void gradient(std::span<const double> params, std::span<double> grad) const {
    std::fill(grad.begin(), grad.end(), 0.0);
    ad::Tape tape;
    const double denom = 12.0 * static_cast<double>(inputs.size());
    for (size_t i = 0; i < inputs.size(); ++i) {
      tape.reset();
      tape.bind(params.data(), grad.data());
      if (alpha > 0.0) {
        auto duo = tape_forward_with_time_derivative(tape, net, inputs[i], net.time_index());
        auto res = physics_residual<ad::Var>(duo.value, duo.time_derivative, phys, softening);
        const int32_t sq_start = tape.size();
        for (int k = 0; k < kStateDim; ++k) tape.square(res[static_cast<size_t>(k)]);
        ad::Var r = tape.sum_range(sq_start, kStateDim);
        const int32_t diff_start = tape.size();
        for (int k = 0; k < kStateDim; ++k)
          tape.add_const(duo.value[static_cast<size_t>(k)], -targets[i][static_cast<size_t>(k)]);
        const int32_t abs_start = tape.size();
        for (int k = 0; k < kStateDim; ++k) tape.abs(ad::Var{&tape, diff_start + k});
        ad::Var d = tape.sum_range(abs_start, kStateDim);
        tape.backward_seeded({{d, 1.0 / denom}, {r, alpha / denom}});
      } else {
        auto outs = tape_forward(tape, net, inputs[i]);
        const int32_t diff_start = tape.size();
        for (int k = 0; k < kStateDim; ++k)
          tape.add_const(outs[static_cast<size_t>(k)], -targets[i][static_cast<size_t>(k)]);
        const int32_t abs_start = tape.size();
        for (int k = 0; k < kStateDim; ++k) tape.abs(ad::Var{&tape, diff_start + k});
        ad::Var d = tape.sum_range(abs_start, kStateDim);
        tape.backward_seeded({{d, 1.0 / denom}});
      }
    }
  }

  double max_fd_rel_error(std::span<const double> params, double eps) const {
    std::vector<double> grad(params.size(), 0.0);
    gradient(params, grad);
    std::vector<double> shifted(params.begin(), params.end());
    double max_rel = 0.0;
    for (size_t i = 0; i < params.size(); ++i) {
      shifted[i] = params[i] + eps;
      const double fp = value(shifted);
      shifted[i] = params[i] - eps;
      const double fm = value(shifted);
      shifted[i] = params[i];
      const double fd = (fp - fm) / (2.0 * eps);
      max_rel = std::max(max_rel, std::abs(fd - grad[i]) / std::max(1.0, std::abs(grad[i])));
    }
    return max_rel;
  }
};

TinyNetLoss make_tiny_net(uint64_t seed, Activation act, bool physics) {
  TinyNetLoss t;
  t.net.architecture = Architecture::Dnn;
  t.net.depth = 2;
  t.net.width = 8;
  t.net.activation = act;
  t.net.formulation = Formulation::NonAutoregressive;
  t.alpha = physics ? 0.5 : 0.0;
  Rng rng(splitmix64_mix(seed));
  const int n_samples = 3;
  for (int i = 0; i < n_samples; ++i) {
    std::array<double, 7> in{};
    in[0] = 1.0;
    in[1] = 0.0;
    in[2] = rng.uniform(-0.5, 0.0);
    in[3] = rng.uniform(0.2, 1.0);
    in[4] = -(1.0 + in[2]);
    in[5] = -in[3];
    in[6] = rng.uniform(0.5, 9.5);
    t.inputs.push_back(in);
    std::array<double, kStateDim> tgt;
    for (auto& v : tgt) v = rng.uniform(-1.0, 1.0);
    t.targets.push_back(tgt);
  }
  return t;
}

// Anchor predictions at a well-separated configuration so the residual's
// accelerations are evaluated away from collisions.
void anchor_output_bias(const NetworkConfig& net, std::vector<double>& params) {
  auto layout = network_layout(net);
  const auto& out_layer = layout.back();
  const auto anchor = refs::lagrange_rotating().flat();
  for (int k = 0; k < kStateDim; ++k)
    params[static_cast<size_t>(out_layer.b_offset + k)] = anchor[static_cast<size_t>(k)];
}

void autodiff_suite(Suite& s) {
  double max_data_err = 0.0, max_phys_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const uint64_t seed = 1000 + static_cast<uint64_t>(trial);
    const Activation act = static_cast<Activation>(trial % 4);
    TinyNetLoss data_net = make_tiny_net(seed, act, false);
    ParameterStore ps = init_network(data_net.net, seed);
    max_data_err = std::max(max_data_err, data_net.max_fd_rel_error(ps.values, 1e-6));

    TinyNetLoss phys_net = make_tiny_net(seed, act, true);
    std::vector<double> params = ps.values;
    anchor_output_bias(phys_net.net, params);
    max_phys_err = std::max(max_phys_err, phys_net.max_fd_rel_error(params, 1e-6));
  }
  s.check("autodiff.data_loss_gradient_fd_rel_error", max_data_err, 1e-5);
  s.check("autodiff.physics_loss_gradient_fd_rel_error", max_phys_err, 1e-4);

  {
    // Random compositions of the supported elementary ops, depth <= 6.
    double max_err = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      Rng rng(7000 + static_cast<uint64_t>(trial));
      const int n_leaves = 4;
      std::vector<double> x(n_leaves);
      for (auto& v : x) v = rng.uniform(0.6, 1.6);
      std::vector<uint64_t> ops;
      for (int d = 0; d < 6; ++d) ops.push_back(rng.next());
      auto f = [&ops, n_leaves](ad::Tape& t, std::span<const ad::Var> leaves) {
        std::vector<ad::Var> pool(leaves.begin(), leaves.end());
        for (uint64_t code : ops) {
          const ad::Var a = pool[code % pool.size()];
          const ad::Var b = pool[(code >> 8) % pool.size()];
          ad::Var v;
          switch ((code >> 16) % 12) {
            case 0: v = a + b; break;
            case 1: v = a - b; break;
            case 2: v = a * b; break;
            case 3: v = a / t.add_const(t.abs(b), 1.0); break;
            case 4: v = t.sqrt(t.add_const(t.square(a), 1.0)); break;
            case 5: v = t.square(a); break;
            case 6: v = t.relu(a); break;
            case 7: v = t.leaky_relu(a); break;
            case 8: v = t.tanh(a); break;
            case 9: v = t.gelu(a); break;
            case 10: v = t.min_const(a, 0.75); break;
            default: v = t.max_const(a, -0.25); break;
          }
          pool.push_back(v);
        }
        return t.mean(std::span<const ad::Var>(pool.data() + n_leaves, ops.size()));
      };
      max_err = std::max(max_err, ad::gradient_check(f, x, 1e-6));
    }
    s.check("autodiff.random_composition_fd_rel_error", max_err, 1e-5);
  }

  {
    // Second-order path: d/dw of the t-tangent of tanh(w*t).
    double max_err = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      Rng rng(9000 + static_cast<uint64_t>(trial));
      const double w = rng.uniform(-1.5, 1.5);
      const double tv = rng.uniform(0.3, 2.0);
      double grad = 0.0;
      ad::Tape tape;
      tape.bind(&w, &grad);
      ad::DualVar t_in{tape.constant(tv), tape.constant(1.0)};
      ad::DualVar w_dual{tape.param(0), tape.constant(0.0)};
      ad::DualVar y = tanh(w_dual * t_in);
      tape.backward(y.tangent);
      auto dfdt = [tv](double wv) {
        const double u = std::tanh(wv * tv);
        return wv * (1.0 - u * u);
      };
      const double eps = 1e-6;
      const double fd = (dfdt(w + eps) - dfdt(w - eps)) / (2.0 * eps);
      max_err = std::max(max_err, std::abs(fd - grad) / std::max(1.0, std::abs(grad)));
    }
    s.check("autodiff.second_order_tanh_path_rel_error", max_err, 1e-4);
  }

  {
    // Determinism: two identical gradient passes must agree bit for bit.
    TinyNetLoss net = make_tiny_net(31337, Activation::Gelu, true);
    ParameterStore ps = init_network(net.net, 31337);
    anchor_output_bias(net.net, ps.values);
    std::vector<double> g1(ps.values.size()), g2(ps.values.size());
    net.gradient(ps.values, g1);
    net.gradient(ps.values, g2);
    s.check_bool("autodiff.gradient_determinism_bit_identical",
                 std::memcmp(g1.data(), g2.data(), g1.size() * sizeof(double)) == 0);
  }
}

}  // namespace

VerifyResult verify_suite(const std::string& suite, const VerifyLog& log) {
  Suite s{log, {}};
  const bool all = suite == "all";
  if (suite == "dynamics" || all) dynamics_suite(s);
  if (suite == "integrator" || all) integrator_suite(s);
  if (suite == "autodiff" || all) autodiff_suite(s);
  if (s.result.checks == 0) throw ArgumentError("unknown verify suite: " + suite);
  return s.result;
}

}  // namespace tbp
