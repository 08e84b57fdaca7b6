#include "tbp/network.hpp"

#include <cmath>

#include "tbp/rng.hpp"

namespace tbp {

void NetworkConfig::validate() const {
  if (depth < 1) throw ArgumentError("network depth must be >= 1");
  if (width < 1) throw ArgumentError("network width must be >= 1");
  if (architecture == Architecture::ResNet && depth % 2 != 0)
    throw ArgumentError("resnet depth must be even (two hidden layers per block)");
}

std::vector<LayerInfo> network_layout(const NetworkConfig& cfg) {
  cfg.validate();
  std::vector<LayerInfo> layers;
  int64_t off = 0;
  auto push = [&](int in, int out, bool block_first, bool skip_add, bool activated) {
    LayerInfo L;
    L.in_dim = in;
    L.out_dim = out;
    L.w_offset = off;
    L.b_offset = off + static_cast<int64_t>(in) * out;
    L.block_first = block_first;
    L.skip_add = skip_add;
    L.activated = activated;
    off = L.b_offset + out;
    layers.push_back(L);
  };

  const int in = cfg.input_dim();
  const int w = cfg.width;
  if (cfg.architecture == Architecture::Dnn) {
    push(in, w, false, false, true);
    for (int i = 1; i < cfg.depth; ++i) push(w, w, false, false, true);
  } else {
    push(in, w, false, false, true);  // input projection
    const int blocks = cfg.depth / 2;
    for (int b = 0; b < blocks; ++b) {
      push(w, w, true, false, true);
      push(w, w, false, true, true);
    }
  }
  push(w, NetworkConfig::kOutputDim, false, false, false);
  return layers;
}

int64_t parameter_count(const NetworkConfig& cfg) {
  int64_t total = 0;
  for (const auto& L : network_layout(cfg))
    total += static_cast<int64_t>(L.in_dim) * L.out_dim + L.out_dim;
  return total;
}

ParameterStore init_network(const NetworkConfig& cfg, uint64_t seed) {
  ParameterStore store;
  store.layout = network_layout(cfg);
  store.values.assign(static_cast<size_t>(parameter_count(cfg)), 0.0);
  const bool relu_family = cfg.activation != Activation::Tanh;
  Rng rng(splitmix64_mix(seed ^ 0xA24BAED4963EE407ULL));
  for (const auto& L : store.layout) {
    const double bound = relu_family
                             ? std::sqrt(6.0 / L.in_dim)
                             : std::sqrt(6.0 / (L.in_dim + L.out_dim));
    double* w = store.values.data() + L.w_offset;
    const int64_t n = static_cast<int64_t>(L.in_dim) * L.out_dim;
    for (int64_t i = 0; i < n; ++i) w[i] = rng.symmetric(bound);
    // biases stay zero
  }
  return store;
}

namespace {

// The four evaluation engines share this walker, so every path applies layers,
// skip connections and activations in the same order.
template <class Engine>
typename Engine::Vec run_layers(Engine& eng, const NetworkConfig& cfg) {
  const auto layers = network_layout(cfg);
  typename Engine::Vec cur = eng.input(cfg);
  typename Engine::Vec block_in{};
  for (const auto& L : layers) {
    if (L.block_first) block_in = cur;
    typename Engine::Vec pre = eng.affine(L, cur);
    if (L.skip_add) pre = eng.add(pre, block_in);
    cur = L.activated ? eng.activation(cfg.activation, pre) : std::move(pre);
  }
  return cur;
}

void check_input(const NetworkConfig& cfg, size_t got) {
  if (static_cast<int>(got) != cfg.input_dim())
    throw DimensionError("network input has length " + std::to_string(got) + ", expected " +
                         std::to_string(cfg.input_dim()));
}

struct PlainEngine {
  using Vec = std::vector<double>;
  std::span<const double> params;
  std::span<const double> in;

  Vec input(const NetworkConfig& cfg) {
    check_input(cfg, in.size());
    return Vec(in.begin(), in.end());
  }
  Vec affine(const LayerInfo& L, const Vec& x) {
    Vec out(static_cast<size_t>(L.out_dim));
    for (int j = 0; j < L.out_dim; ++j) {
      const double* w = params.data() + L.w_offset + static_cast<int64_t>(j) * L.in_dim;
      double acc = params[static_cast<size_t>(L.b_offset + j)];
      for (int k = 0; k < L.in_dim; ++k) acc += w[k] * x[static_cast<size_t>(k)];
      out[static_cast<size_t>(j)] = acc;
    }
    return out;
  }
  Vec add(const Vec& a, const Vec& b) {
    Vec out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
  }
  Vec activation(Activation act, const Vec& x) {
    Vec out(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
      const double v = x[i];
      switch (act) {
        case Activation::Relu: out[i] = v > 0.0 ? v : 0.0; break;
        case Activation::LeakyRelu: out[i] = v > 0.0 ? v : 0.01 * v; break;
        case Activation::Tanh: out[i] = std::tanh(v); break;
        case Activation::Gelu: out[i] = ad::Tape::gelu_value(v); break;
      }
    }
    return out;
  }
};

// Scalar pair (value, d/dt value).  The composition of every op mirrors the
// tape dual engine exactly, so the two paths agree bit for bit.
struct PD {
  double v = 0.0;
  double tv = 0.0;
};

struct PlainDualEngine {
  using Vec = std::vector<PD>;
  std::span<const double> params;
  std::span<const double> in;
  int time_index;

  Vec input(const NetworkConfig& cfg) {
    check_input(cfg, in.size());
    Vec out(in.size());
    for (size_t i = 0; i < in.size(); ++i)
      out[i] = {in[i], static_cast<int>(i) == time_index ? 1.0 : 0.0};
    return out;
  }
  Vec affine(const LayerInfo& L, const Vec& x) {
    Vec out(static_cast<size_t>(L.out_dim));
    for (int j = 0; j < L.out_dim; ++j) {
      const double* w = params.data() + L.w_offset + static_cast<int64_t>(j) * L.in_dim;
      double acc = params[static_cast<size_t>(L.b_offset + j)];
      for (int k = 0; k < L.in_dim; ++k) acc += w[k] * x[static_cast<size_t>(k)].v;
      double tacc = 0.0;
      for (int k = 0; k < L.in_dim; ++k) tacc += w[k] * x[static_cast<size_t>(k)].tv;
      out[static_cast<size_t>(j)] = {acc, tacc};
    }
    return out;
  }
  Vec add(const Vec& a, const Vec& b) {
    Vec out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = {a[i].v + b[i].v, a[i].tv + b[i].tv};
    return out;
  }
  Vec activation(Activation act, const Vec& x) {
    Vec out(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
      const PD a = x[i];
      switch (act) {
        case Activation::Relu:
          out[i] = {a.v > 0.0 ? a.v : 0.0, a.v > 0.0 ? a.tv : 0.0};
          break;
        case Activation::LeakyRelu:
          out[i] = {a.v > 0.0 ? a.v : 0.01 * a.v, a.v > 0.0 ? a.tv : 0.01 * a.tv};
          break;
        case Activation::Tanh: {
          const double u = std::tanh(a.v);
          out[i] = {u, (1.0 - u * u) * a.tv};
          break;
        }
        case Activation::Gelu: {
          // Mirrors the composed dual gelu: square, mul, tanh, final *0.5.
          constexpr double kC = 0.7978845608028654;
          const PD x2{a.v * a.v, (a.v * a.tv) * 2.0};
          const PD x3{x2.v * a.v, x2.v * a.tv + x2.tv * a.v};
          const PD q{x3.v * 0.044715, x3.tv * 0.044715};
          const PD sumv{a.v + q.v, a.tv + q.tv};
          const PD inner{sumv.v * kC, sumv.tv * kC};
          const double th = std::tanh(inner.v);
          const PD thd{th, (1.0 - th * th) * inner.tv};
          const PD opv{thd.v + 1.0, thd.tv};
          const PD m{a.v * opv.v, a.v * opv.tv + a.tv * opv.v};
          out[i] = {m.v * 0.5, m.tv * 0.5};
          break;
        }
      }
    }
    return out;
  }
};

// Contiguous range of node ids on the tape.
struct IdRange {
  int32_t start = -1;
  int32_t len = 0;
};

struct TapePrimalEngine {
  using Vec = IdRange;
  ad::Tape& tape;
  std::span<const double> in;

  Vec input(const NetworkConfig& cfg) {
    check_input(cfg, in.size());
    Vec r{tape.size(), static_cast<int32_t>(in.size())};
    for (double v : in) tape.constant(v);
    return r;
  }
  Vec affine(const LayerInfo& L, const Vec& x) {
    Vec r{tape.size(), L.out_dim};
    for (int j = 0; j < L.out_dim; ++j)
      tape.affine(static_cast<int32_t>(L.w_offset + static_cast<int64_t>(j) * L.in_dim), x.start,
                  L.in_dim, static_cast<int32_t>(L.b_offset + j));
    return r;
  }
  Vec add(const Vec& a, const Vec& b) {
    Vec r{tape.size(), a.len};
    for (int32_t j = 0; j < a.len; ++j)
      tape.add(ad::Var{&tape, a.start + j}, ad::Var{&tape, b.start + j});
    return r;
  }
  Vec activation(Activation act, const Vec& x) {
    Vec r{tape.size(), x.len};
    for (int32_t j = 0; j < x.len; ++j) {
      ad::Var v{&tape, x.start + j};
      switch (act) {
        case Activation::Relu: tape.relu(v); break;
        case Activation::LeakyRelu: tape.leaky_relu(v); break;
        case Activation::Tanh: tape.tanh(v); break;
        case Activation::Gelu: tape.gelu(v); break;
      }
    }
    return r;
  }
};

struct TapeDualEngine {
  struct Vec {
    IdRange primal;
    IdRange tangent;
  };
  ad::Tape& tape;
  std::span<const double> in;
  int time_index;

  ad::Var pv(const IdRange& r, int32_t j) { return ad::Var{&tape, r.start + j}; }

  Vec input(const NetworkConfig& cfg) {
    check_input(cfg, in.size());
    Vec r;
    r.primal = {tape.size(), static_cast<int32_t>(in.size())};
    for (double v : in) tape.constant(v);
    r.tangent = {tape.size(), static_cast<int32_t>(in.size())};
    for (size_t i = 0; i < in.size(); ++i)
      tape.constant(static_cast<int>(i) == time_index ? 1.0 : 0.0);
    return r;
  }
  Vec affine(const LayerInfo& L, const Vec& x) {
    Vec r;
    r.primal = {tape.size(), L.out_dim};
    for (int j = 0; j < L.out_dim; ++j)
      tape.affine(static_cast<int32_t>(L.w_offset + static_cast<int64_t>(j) * L.in_dim),
                  x.primal.start, L.in_dim, static_cast<int32_t>(L.b_offset + j));
    r.tangent = {tape.size(), L.out_dim};
    for (int j = 0; j < L.out_dim; ++j)
      tape.dot(static_cast<int32_t>(L.w_offset + static_cast<int64_t>(j) * L.in_dim),
               x.tangent.start, L.in_dim);
    return r;
  }
  Vec add(const Vec& a, const Vec& b) {
    Vec r;
    r.primal = {tape.size(), a.primal.len};
    for (int32_t j = 0; j < a.primal.len; ++j) tape.add(pv(a.primal, j), pv(b.primal, j));
    r.tangent = {tape.size(), a.tangent.len};
    for (int32_t j = 0; j < a.tangent.len; ++j) tape.add(pv(a.tangent, j), pv(b.tangent, j));
    return r;
  }
  // Stage every intermediate across the whole layer so the final primal and
  // tangent nodes land in contiguous runs (the next affine/dot needs ranges).
  Vec activation(Activation act, const Vec& x) {
    const int32_t n = x.primal.len;
    Vec r;
    switch (act) {
      case Activation::Relu: {
        r.primal = {tape.size(), n};
        for (int32_t j = 0; j < n; ++j) tape.relu(pv(x.primal, j));
        r.tangent = {tape.size(), n};
        for (int32_t j = 0; j < n; ++j) tape.step_mul(pv(x.primal, j), pv(x.tangent, j));
        return r;
      }
      case Activation::LeakyRelu: {
        r.primal = {tape.size(), n};
        for (int32_t j = 0; j < n; ++j) tape.leaky_relu(pv(x.primal, j));
        r.tangent = {tape.size(), n};
        for (int32_t j = 0; j < n; ++j) tape.leaky_step_mul(pv(x.primal, j), pv(x.tangent, j));
        return r;
      }
      case Activation::Tanh: {
        r.primal = {tape.size(), n};
        for (int32_t j = 0; j < n; ++j) tape.tanh(pv(x.primal, j));
        IdRange sq{tape.size(), n};
        for (int32_t j = 0; j < n; ++j) tape.square(pv(r.primal, j));
        IdRange om{tape.size(), n};
        for (int32_t j = 0; j < n; ++j) tape.sub_from_const(1.0, pv(sq, j));
        r.tangent = {tape.size(), n};
        for (int32_t j = 0; j < n; ++j) tape.mul(pv(om, j), pv(x.tangent, j));
        return r;
      }
      case Activation::Gelu: {
        constexpr double kC = 0.7978845608028654;
        std::vector<ad::DualVar> y(static_cast<size_t>(n));
        for (int32_t j = 0; j < n; ++j) {
          ad::DualVar a{pv(x.primal, j), pv(x.tangent, j)};
          ad::DualVar x2 = square(a);
          ad::DualVar x3 = x2 * a;
          ad::DualVar inner = (a + x3 * 0.044715) * kC;
          ad::DualVar th = tanh(inner);
          y[static_cast<size_t>(j)] = a * (th + 1.0);
        }
        r.primal = {tape.size(), n};
        for (int32_t j = 0; j < n; ++j) tape.mul_const(y[static_cast<size_t>(j)].primal, 0.5);
        r.tangent = {tape.size(), n};
        for (int32_t j = 0; j < n; ++j) tape.mul_const(y[static_cast<size_t>(j)].tangent, 0.5);
        return r;
      }
    }
    throw ArgumentError("unknown activation");
  }
};

}  // namespace

void forward(const NetworkConfig& cfg, std::span<const double> params,
             std::span<const double> input, std::span<double> out) {
  if (out.size() != static_cast<size_t>(NetworkConfig::kOutputDim))
    throw DimensionError("network output span must have length 12");
  PlainEngine eng{params, input};
  auto o = run_layers(eng, cfg);
  for (size_t i = 0; i < out.size(); ++i) out[i] = o[i];
}

void forward_dual(const NetworkConfig& cfg, std::span<const double> params,
                  std::span<const double> input, int time_index, std::span<double> out,
                  std::span<double> dout) {
  if (out.size() != static_cast<size_t>(NetworkConfig::kOutputDim) || dout.size() != out.size())
    throw DimensionError("network output spans must have length 12");
  if (time_index < 0 || time_index >= cfg.input_dim())
    throw DimensionError("time_index out of range");
  PlainDualEngine eng{params, input, time_index};
  auto o = run_layers(eng, cfg);
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = o[i].v;
    dout[i] = o[i].tv;
  }
}

std::array<ad::Var, kStateDim> tape_forward(ad::Tape& tape, const NetworkConfig& cfg,
                                            std::span<const double> input) {
  TapePrimalEngine eng{tape, input};
  IdRange o = run_layers(eng, cfg);
  std::array<ad::Var, kStateDim> out;
  for (int i = 0; i < kStateDim; ++i) out[i] = ad::Var{&tape, o.start + i};
  return out;
}

TapeDualOutput tape_forward_with_time_derivative(ad::Tape& tape, const NetworkConfig& cfg,
                                                 std::span<const double> input, int time_index) {
  if (time_index < 0 || time_index >= cfg.input_dim())
    throw DimensionError("time_index out of range");
  TapeDualEngine eng{tape, input, time_index};
  TapeDualEngine::Vec o = run_layers(eng, cfg);
  TapeDualOutput out;
  for (int i = 0; i < kStateDim; ++i) {
    out.value[i] = ad::Var{&tape, o.primal.start + i};
    out.time_derivative[i] = ad::Var{&tape, o.tangent.start + i};
  }
  return out;
}

std::string to_string(Architecture a) { return a == Architecture::Dnn ? "dnn" : "resnet"; }
std::string to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Gelu: return "gelu";
    case Activation::Tanh: return "tanh";
    case Activation::LeakyRelu: return "leaky_relu";
  }
  return "relu";
}
std::string to_string(Formulation f) {
  return f == Formulation::NonAutoregressive ? "non_autoregressive" : "autoregressive";
}
Architecture architecture_from_string(const std::string& s) {
  if (s == "dnn") return Architecture::Dnn;
  if (s == "resnet") return Architecture::ResNet;
  throw ArgumentError("unknown architecture: " + s);
}
Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "gelu") return Activation::Gelu;
  if (s == "tanh") return Activation::Tanh;
  if (s == "leaky_relu") return Activation::LeakyRelu;
  throw ArgumentError("unknown activation: " + s);
}
Formulation formulation_from_string(const std::string& s) {
  if (s == "non_autoregressive") return Formulation::NonAutoregressive;
  if (s == "autoregressive") return Formulation::Autoregressive;
  throw ArgumentError("unknown formulation: " + s);
}

}  // namespace tbp
