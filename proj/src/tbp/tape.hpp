#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "tbp/types.hpp"

namespace tbp::ad {

// Reverse-mode scalar tape with eager evaluation.  Parameters live outside the
// tape in a flat array; gradients accumulate into a caller-owned buffer of the
// same length, so a tape pass costs O(active nodes), not O(parameters).
//
// The hot path for dense layers is the fused Affine/Dot node: one node per
// output neuron, reading a contiguous parameter row and a contiguous range of
// earlier node values.

enum class OpKind : uint8_t {
  Const,
  Param,         // a = parameter index
  Add, Sub, Mul, Div, Neg,
  AddConst,      // val[a] + c
  MulConst,      // val[a] * c
  SubFromConst,  // c - val[a]
  Abs, Sqrt, Square,
  Pow32,         // val[a]^(3/2), requires val[a] >= 0
  MinConst,      // min(val[a], c)
  MaxConst,      // max(val[a], c)
  Relu,
  LeakyRelu,     // slope c on the negative side
  Tanh,
  Gelu,          // tanh approximation (fused; primal-only paths)
  SignMul,       // sign(val[a]) * val[b], sign(0) = 0   (abs tangent)
  StepMul,       // val[a] > 0 ? val[b] : 0              (relu tangent)
  LeakyStepMul,  // val[a] > 0 ? val[b] : c * val[b]     (leaky relu tangent)
  MinGate,       // val[a] < c ? val[b] : 0              (min-const tangent)
  MaxGate,       // val[a] > c ? val[b] : 0              (max-const tangent)
  SumRange,      // sum of val[a .. a+b)
  SumList,       // sum over list_aux[a .. a+b)
  Affine,        // lin_aux[a]: bias + dot(params row, contiguous node range)
  Dot,           // lin_aux[a]: dot(params row, contiguous node range)
};

struct Node {
  OpKind kind;
  int32_t a = -1;
  int32_t b = -1;
  double c = 0.0;
};

struct LinSpec {
  int32_t w_start;   // first parameter index of the weight row
  int32_t in_start;  // first input node id (contiguous range)
  int32_t len;
  int32_t bias;      // parameter index of the bias, -1 for Dot
};

class Tape;

struct Var {
  Tape* tape = nullptr;
  int32_t id = -1;
  double value() const;
};

class Tape {
 public:
  void bind(const double* params, double* grad) {
    params_ = params;
    grad_ = grad;
  }
  const double* params() const { return params_; }

  void reset() {
    nodes_.clear();
    vals_.clear();
    list_aux_.clear();
    lin_aux_.clear();
  }
  int32_t size() const { return static_cast<int32_t>(nodes_.size()); }
  double value(int32_t id) const { return vals_[static_cast<size_t>(id)]; }

  Var constant(double v) { return mk(OpKind::Const, -1, -1, 0.0, v); }

  Var param(int32_t index) { return mk(OpKind::Param, index, -1, 0.0, params_[index]); }

  Var add(Var a, Var b) { return mk(OpKind::Add, a.id, b.id, 0.0, vals_[a.id] + vals_[b.id]); }
  Var sub(Var a, Var b) { return mk(OpKind::Sub, a.id, b.id, 0.0, vals_[a.id] - vals_[b.id]); }
  Var mul(Var a, Var b) { return mk(OpKind::Mul, a.id, b.id, 0.0, vals_[a.id] * vals_[b.id]); }
  Var div(Var a, Var b) {
    if (vals_[b.id] == 0.0) throw DomainError("division by zero");
    return mk(OpKind::Div, a.id, b.id, 0.0, vals_[a.id] / vals_[b.id]);
  }
  Var neg(Var a) { return mk(OpKind::Neg, a.id, -1, 0.0, -vals_[a.id]); }
  Var add_const(Var a, double c) { return mk(OpKind::AddConst, a.id, -1, c, vals_[a.id] + c); }
  Var mul_const(Var a, double c) { return mk(OpKind::MulConst, a.id, -1, c, vals_[a.id] * c); }
  Var sub_from_const(double c, Var a) { return mk(OpKind::SubFromConst, a.id, -1, c, c - vals_[a.id]); }
  Var abs(Var a) { return mk(OpKind::Abs, a.id, -1, 0.0, std::abs(vals_[a.id])); }
  Var sqrt(Var a) {
    if (vals_[a.id] < 0.0) throw DomainError("sqrt of negative value");
    return mk(OpKind::Sqrt, a.id, -1, 0.0, std::sqrt(vals_[a.id]));
  }
  Var square(Var a) { return mk(OpKind::Square, a.id, -1, 0.0, vals_[a.id] * vals_[a.id]); }
  Var pow32(Var a) {
    if (vals_[a.id] < 0.0) throw DomainError("pow32 of negative value");
    return mk(OpKind::Pow32, a.id, -1, 0.0, vals_[a.id] * std::sqrt(vals_[a.id]));
  }
  Var min_const(Var a, double c) { return mk(OpKind::MinConst, a.id, -1, c, std::min(vals_[a.id], c)); }
  Var max_const(Var a, double c) { return mk(OpKind::MaxConst, a.id, -1, c, std::max(vals_[a.id], c)); }
  Var relu(Var a) { return mk(OpKind::Relu, a.id, -1, 0.0, vals_[a.id] > 0.0 ? vals_[a.id] : 0.0); }
  Var leaky_relu(Var a, double slope = 0.01) {
    double v = vals_[a.id];
    return mk(OpKind::LeakyRelu, a.id, -1, slope, v > 0.0 ? v : slope * v);
  }
  Var tanh(Var a) { return mk(OpKind::Tanh, a.id, -1, 0.0, std::tanh(vals_[a.id])); }
  Var gelu(Var a) { return mk(OpKind::Gelu, a.id, -1, 0.0, gelu_value(vals_[a.id])); }
  Var sign_mul(Var a, Var b) {
    double s = vals_[a.id] > 0.0 ? 1.0 : (vals_[a.id] < 0.0 ? -1.0 : 0.0);
    return mk(OpKind::SignMul, a.id, b.id, 0.0, s * vals_[b.id]);
  }
  Var step_mul(Var a, Var b) {
    return mk(OpKind::StepMul, a.id, b.id, 0.0, vals_[a.id] > 0.0 ? vals_[b.id] : 0.0);
  }
  Var leaky_step_mul(Var a, Var b, double slope = 0.01) {
    return mk(OpKind::LeakyStepMul, a.id, b.id, slope,
              vals_[a.id] > 0.0 ? vals_[b.id] : slope * vals_[b.id]);
  }
  Var min_gate(Var a, Var b, double c) {
    return mk(OpKind::MinGate, a.id, b.id, c, vals_[a.id] < c ? vals_[b.id] : 0.0);
  }
  Var max_gate(Var a, Var b, double c) {
    return mk(OpKind::MaxGate, a.id, b.id, c, vals_[a.id] > c ? vals_[b.id] : 0.0);
  }

  // Sum of a contiguous id range [start, start+len).
  Var sum_range(int32_t start, int32_t len) {
    double acc = 0.0;
    for (int32_t k = 0; k < len; ++k) acc += vals_[start + k];
    return mk(OpKind::SumRange, start, len, 0.0, acc);
  }

  Var sum(std::span<const Var> xs) {
    if (xs.empty()) throw DimensionError("sum of empty list");
    int32_t start = static_cast<int32_t>(list_aux_.size());
    double acc = 0.0;
    for (const Var& v : xs) {
      list_aux_.push_back(v.id);
      acc += vals_[v.id];
    }
    return mk(OpKind::SumList, start, static_cast<int32_t>(xs.size()), 0.0, acc);
  }

  Var mean(std::span<const Var> xs) {
    return mul_const(sum(xs), 1.0 / static_cast<double>(xs.size()));
  }

  // bias + sum_k params[w_start + k] * val[in_start + k], one fused node.
  Var affine(int32_t w_start, int32_t in_start, int32_t len, int32_t bias_index) {
    double acc = params_[bias_index];
    const double* w = params_ + w_start;
    const double* x = vals_.data() + in_start;
    for (int32_t k = 0; k < len; ++k) acc += w[k] * x[k];
    int32_t spec = static_cast<int32_t>(lin_aux_.size());
    lin_aux_.push_back({w_start, in_start, len, bias_index});
    return mk(OpKind::Affine, spec, -1, 0.0, acc);
  }

  // sum_k params[w_start + k] * val[in_start + k] (no bias).
  Var dot(int32_t w_start, int32_t in_start, int32_t len) {
    double acc = 0.0;
    const double* w = params_ + w_start;
    const double* x = vals_.data() + in_start;
    for (int32_t k = 0; k < len; ++k) acc += w[k] * x[k];
    int32_t spec = static_cast<int32_t>(lin_aux_.size());
    lin_aux_.push_back({w_start, in_start, len, -1});
    return mk(OpKind::Dot, spec, -1, 0.0, acc);
  }

  // Reverse sweep from a single scalar, seed 1.  Accumulates into the bound
  // gradient buffer (callers zero it when they want a fresh gradient).
  void backward(Var loss) { backward_seeded({{loss, 1.0}}); }

  void backward_seeded(std::initializer_list<std::pair<Var, double>> seeds) {
    adj_.assign(vals_.size(), 0.0);
    for (const auto& [v, s] : seeds) adj_[v.id] += s;
    sweep();
  }

  static double gelu_value(double x) {
    constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
    double inner = kC * (x + 0.044715 * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(inner));
  }
  static double gelu_derivative(double x) {
    constexpr double kC = 0.7978845608028654;
    double inner = kC * (x + 0.044715 * x * x * x);
    double th = std::tanh(inner);
    double sech2 = 1.0 - th * th;
    double dinner = kC * (1.0 + 3.0 * 0.044715 * x * x);
    return 0.5 * (1.0 + th) + 0.5 * x * sech2 * dinner;
  }

 private:
  friend struct Var;

  // Non-finite values are not rejected here; the defined error cases (div by
  // zero, sqrt of negative) throw in their ops, everything else surfaces via
  // the trainer's divergence check.
  Var mk(OpKind kind, int32_t a, int32_t b, double c, double value) {
    nodes_.push_back({kind, a, b, c});
    vals_.push_back(value);
    return Var{this, static_cast<int32_t>(nodes_.size() - 1)};
  }

  void sweep();

  std::vector<Node> nodes_;
  std::vector<double> vals_;
  std::vector<double> adj_;
  std::vector<int32_t> list_aux_;
  std::vector<LinSpec> lin_aux_;
  const double* params_ = nullptr;
  double* grad_ = nullptr;
};

inline double Var::value() const { return tape->value(id); }

// Operator sugar so numeric kernels can be written once and instantiated for
// both double and Var.
inline Var operator+(Var a, Var b) { return a.tape->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape->sub(a, b); }
inline Var operator*(Var a, Var b) { return a.tape->mul(a, b); }
inline Var operator/(Var a, Var b) { return a.tape->div(a, b); }
inline Var operator-(Var a) { return a.tape->neg(a); }
inline Var operator+(Var a, double c) { return a.tape->add_const(a, c); }
inline Var operator+(double c, Var a) { return a.tape->add_const(a, c); }
inline Var operator-(Var a, double c) { return a.tape->add_const(a, -c); }
inline Var operator-(double c, Var a) { return a.tape->sub_from_const(c, a); }
inline Var operator*(Var a, double c) { return a.tape->mul_const(a, c); }
inline Var operator*(double c, Var a) { return a.tape->mul_const(a, c); }
inline Var operator/(Var a, double c) { return a.tape->mul_const(a, 1.0 / c); }
inline Var& operator+=(Var& a, Var b) { a = a + b; return a; }
inline Var& operator-=(Var& a, Var b) { a = a - b; return a; }
inline Var square(Var a) { return a.tape->square(a); }
inline Var pow32(Var a) { return a.tape->pow32(a); }
inline Var sqrt(Var a) { return a.tape->sqrt(a); }
inline Var abs(Var a) { return a.tape->abs(a); }
inline double scalar_value(Var v) { return v.value(); }

// First-order dual number whose tangent tracks d/dt of every intermediate.
// Both components are tape nodes, so a scalar built from tangents can itself
// be differentiated in reverse (forward-over-reverse).
struct DualVar {
  Var primal;
  Var tangent;
};

inline DualVar d_const(Tape& t, double v, double tv = 0.0) {
  return {t.constant(v), t.constant(tv)};
}
inline DualVar operator+(DualVar a, DualVar b) { return {a.primal + b.primal, a.tangent + b.tangent}; }
inline DualVar operator-(DualVar a, DualVar b) { return {a.primal - b.primal, a.tangent - b.tangent}; }
inline DualVar operator-(DualVar a) { return {-a.primal, -a.tangent}; }
inline DualVar operator*(DualVar a, DualVar b) {
  return {a.primal * b.primal, a.primal * b.tangent + a.tangent * b.primal};
}
inline DualVar operator*(DualVar a, double c) { return {a.primal * c, a.tangent * c}; }
inline DualVar operator*(double c, DualVar a) { return a * c; }
inline DualVar operator+(DualVar a, double c) { return {a.primal + c, a.tangent}; }
inline DualVar operator-(DualVar a, double c) { return {a.primal - c, a.tangent}; }
inline DualVar operator/(DualVar a, DualVar b) {
  Var q = a.primal / b.primal;
  return {q, (a.tangent - q * b.tangent) / b.primal};
}
inline DualVar square(DualVar a) {
  return {square(a.primal), (a.primal * a.tangent) * 2.0};
}
inline DualVar sqrt(DualVar a) {
  Var s = sqrt(a.primal);
  return {s, (a.tangent / s) * 0.5};
}
inline DualVar pow32(DualVar a) {
  Var p = pow32(a.primal);
  Var ds = sqrt(a.primal);
  return {p, (ds * a.tangent) * 1.5};
}
inline DualVar abs(DualVar a) {
  return {abs(a.primal), a.primal.tape->sign_mul(a.primal, a.tangent)};
}
inline DualVar relu(DualVar a) {
  Tape& t = *a.primal.tape;
  return {t.relu(a.primal), t.step_mul(a.primal, a.tangent)};
}
inline DualVar leaky_relu(DualVar a, double slope = 0.01) {
  Tape& t = *a.primal.tape;
  return {t.leaky_relu(a.primal, slope), t.leaky_step_mul(a.primal, a.tangent, slope)};
}
inline DualVar tanh(DualVar a) {
  Tape& t = *a.primal.tape;
  Var u = t.tanh(a.primal);
  Var one_minus = t.sub_from_const(1.0, t.square(u));
  return {u, one_minus * a.tangent};
}
inline DualVar min_const(DualVar a, double c) {
  Tape& t = *a.primal.tape;
  return {t.min_const(a.primal, c), t.min_gate(a.primal, a.tangent, c)};
}
inline DualVar max_const(DualVar a, double c) {
  Tape& t = *a.primal.tape;
  return {t.max_const(a.primal, c), t.max_gate(a.primal, a.tangent, c)};
}
// GELU composed from elementary dual ops so the reverse pass differentiates the
// tangent exactly (second derivative comes out of the chain rule, not a formula).
inline DualVar gelu(DualVar x) {
  constexpr double kC = 0.7978845608028654;
  DualVar x3 = square(x) * x;
  DualVar inner = (x + x3 * 0.044715) * kC;
  DualVar th = tanh(inner);
  DualVar y = x * (th + 1.0) * 0.5;
  return y;
}
inline DualVar d_sum(Tape& t, std::span<const DualVar> xs) {
  std::vector<Var> p(xs.size()), g(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    p[i] = xs[i].primal;
    g[i] = xs[i].tangent;
  }
  return {t.sum(p), t.sum(g)};
}
inline DualVar d_mean(Tape& t, std::span<const DualVar> xs) {
  DualVar s = d_sum(t, xs);
  double inv = 1.0 / static_cast<double>(xs.size());
  return {t.mul_const(s.primal, inv), t.mul_const(s.tangent, inv)};
}

// Analytic-vs-central-difference comparison harness.  f evaluates a scalar
// from parameter leaves on a fresh tape; returns the max relative error with
// denominator max(1, |analytic|).
double gradient_check(const std::function<Var(Tape&, std::span<const Var>)>& f,
                      std::span<const double> x, double eps);

}  // namespace tbp::ad
