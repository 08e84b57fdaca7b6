#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tbp/tape.hpp"
#include "tbp/types.hpp"

namespace tbp {

enum class Architecture { Dnn, ResNet };
enum class Activation { Relu, Gelu, Tanh, LeakyRelu };
enum class Formulation { NonAutoregressive, Autoregressive };

// Non-autoregressive input: [p1x, p1z, p2x, p2z, p3x, p3z, t]       (7)
// Autoregressive input:     [canonical 12-state, dt]                (13)
// Output is always the canonical 12-state.
struct NetworkConfig {
  Architecture architecture = Architecture::Dnn;
  int depth = 10;  // hidden layers; for ResNet this is 2 * blocks
  int width = 128;
  Activation activation = Activation::Relu;
  Formulation formulation = Formulation::NonAutoregressive;

  static constexpr int kOutputDim = kStateDim;
  int input_dim() const { return formulation == Formulation::NonAutoregressive ? 7 : 13; }
  int time_index() const { return input_dim() - 1; }  // t (or dt) is the last input
  void validate() const;
};

struct LayerInfo {
  int in_dim = 0;
  int out_dim = 0;
  int64_t w_offset = 0;  // row-major weights, out_dim rows of in_dim
  int64_t b_offset = 0;
  bool block_first = false;  // remember the running vector as the skip source
  bool skip_add = false;     // add the remembered vector to the pre-activation
  bool activated = true;
};

std::vector<LayerInfo> network_layout(const NetworkConfig& cfg);
int64_t parameter_count(const NetworkConfig& cfg);

struct ParameterStore {
  std::vector<double> values;
  std::vector<LayerInfo> layout;
};

// He-uniform (relu family) / Xavier-uniform (tanh) weights, zero biases;
// deterministic in (config, seed).
ParameterStore init_network(const NetworkConfig& cfg, uint64_t seed);

void forward(const NetworkConfig& cfg, std::span<const double> params,
             std::span<const double> input, std::span<double> out);

// Plain dual-number pass: out plus d(out)/d(input[time_index]).  Matches the
// tape dual path bit for bit.
void forward_dual(const NetworkConfig& cfg, std::span<const double> params,
                  std::span<const double> input, int time_index, std::span<double> out,
                  std::span<double> dout);

// Tape passes (params must be bound to the tape beforehand).
std::array<ad::Var, kStateDim> tape_forward(ad::Tape& tape, const NetworkConfig& cfg,
                                            std::span<const double> input);

struct TapeDualOutput {
  std::array<ad::Var, kStateDim> value;
  std::array<ad::Var, kStateDim> time_derivative;
};
TapeDualOutput tape_forward_with_time_derivative(ad::Tape& tape, const NetworkConfig& cfg,
                                                 std::span<const double> input, int time_index);

// Enum <-> string helpers shared by the checkpoint format and the CLI.
std::string to_string(Architecture a);
std::string to_string(Activation a);
std::string to_string(Formulation f);
Architecture architecture_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);
Formulation formulation_from_string(const std::string& s);

}  // namespace tbp
