#include "tbp/tape.hpp"

#include <algorithm>

namespace tbp::ad {

void Tape::sweep() {
  const Node* nodes = nodes_.data();
  const double* vals = vals_.data();
  double* adj = adj_.data();
  for (int32_t i = size() - 1; i >= 0; --i) {
    const double g = adj[i];
    if (g == 0.0) continue;
    const Node& n = nodes[i];
    switch (n.kind) {
      case OpKind::Const:
        break;
      case OpKind::Param:
        grad_[n.a] += g;
        break;
      case OpKind::Add:
        adj[n.a] += g;
        adj[n.b] += g;
        break;
      case OpKind::Sub:
        adj[n.a] += g;
        adj[n.b] -= g;
        break;
      case OpKind::Mul:
        adj[n.a] += g * vals[n.b];
        adj[n.b] += g * vals[n.a];
        break;
      case OpKind::Div: {
        const double inv = 1.0 / vals[n.b];
        adj[n.a] += g * inv;
        adj[n.b] -= g * vals[i] * inv;
        break;
      }
      case OpKind::Neg:
        adj[n.a] -= g;
        break;
      case OpKind::AddConst:
        adj[n.a] += g;
        break;
      case OpKind::MulConst:
        adj[n.a] += g * n.c;
        break;
      case OpKind::SubFromConst:
        adj[n.a] -= g;
        break;
      case OpKind::Abs: {
        const double v = vals[n.a];
        if (v > 0.0)
          adj[n.a] += g;
        else if (v < 0.0)
          adj[n.a] -= g;
        break;
      }
      case OpKind::Sqrt:
        adj[n.a] += g * 0.5 / vals[i];
        break;
      case OpKind::Square:
        adj[n.a] += g * 2.0 * vals[n.a];
        break;
      case OpKind::Pow32:
        adj[n.a] += g * 1.5 * std::sqrt(vals[n.a]);
        break;
      case OpKind::MinConst:
        if (vals[n.a] < n.c) adj[n.a] += g;
        break;
      case OpKind::MaxConst:
        if (vals[n.a] > n.c) adj[n.a] += g;
        break;
      case OpKind::Relu:
        if (vals[n.a] > 0.0) adj[n.a] += g;
        break;
      case OpKind::LeakyRelu:
        adj[n.a] += g * (vals[n.a] > 0.0 ? 1.0 : n.c);
        break;
      case OpKind::Tanh:
        adj[n.a] += g * (1.0 - vals[i] * vals[i]);
        break;
      case OpKind::Gelu:
        adj[n.a] += g * gelu_derivative(vals[n.a]);
        break;
      case OpKind::SignMul: {
        const double v = vals[n.a];
        if (v > 0.0)
          adj[n.b] += g;
        else if (v < 0.0)
          adj[n.b] -= g;
        break;
      }
      case OpKind::StepMul:
        if (vals[n.a] > 0.0) adj[n.b] += g;
        break;
      case OpKind::LeakyStepMul:
        adj[n.b] += g * (vals[n.a] > 0.0 ? 1.0 : n.c);
        break;
      case OpKind::MinGate:
        if (vals[n.a] < n.c) adj[n.b] += g;
        break;
      case OpKind::MaxGate:
        if (vals[n.a] > n.c) adj[n.b] += g;
        break;
      case OpKind::SumRange: {
        double* base = adj + n.a;
        for (int32_t k = 0; k < n.b; ++k) base[k] += g;
        break;
      }
      case OpKind::SumList: {
        const int32_t* ids = list_aux_.data() + n.a;
        for (int32_t k = 0; k < n.b; ++k) adj[ids[k]] += g;
        break;
      }
      case OpKind::Affine:
      case OpKind::Dot: {
        const LinSpec& spec = lin_aux_[n.a];
        const double* w = params_ + spec.w_start;
        const double* x = vals + spec.in_start;
        double* gw = grad_ + spec.w_start;
        double* gx = adj + spec.in_start;
        for (int32_t k = 0; k < spec.len; ++k) {
          gw[k] += g * x[k];
          gx[k] += g * w[k];
        }
        if (spec.bias >= 0) grad_[spec.bias] += g;
        break;
      }
    }
  }
}

double gradient_check(const std::function<Var(Tape&, std::span<const Var>)>& f,
                      std::span<const double> x, double eps) {
  const size_t n = x.size();
  std::vector<double> params(x.begin(), x.end());
  std::vector<double> grad(n, 0.0);

  auto eval = [&](const std::vector<double>& p) {
    Tape t;
    t.bind(p.data(), nullptr);
    std::vector<Var> leaves(n);
    for (size_t i = 0; i < n; ++i) leaves[i] = t.param(static_cast<int32_t>(i));
    return f(t, leaves).value();
  };

  {
    Tape t;
    t.bind(params.data(), grad.data());
    std::vector<Var> leaves(n);
    for (size_t i = 0; i < n; ++i) leaves[i] = t.param(static_cast<int32_t>(i));
    Var loss = f(t, leaves);
    t.backward(loss);
  }

  double max_rel = 0.0;
  std::vector<double> shifted(params);
  for (size_t i = 0; i < n; ++i) {
    shifted[i] = params[i] + eps;
    const double fp = eval(shifted);
    shifted[i] = params[i] - eps;
    const double fm = eval(shifted);
    shifted[i] = params[i];
    const double numeric = (fp - fm) / (2.0 * eps);
    const double rel = std::abs(numeric - grad[i]) / std::max(1.0, std::abs(grad[i]));
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace tbp::ad
