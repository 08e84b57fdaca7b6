#include "tbp/loss.hpp"

#include <algorithm>
#include <cmath>

namespace tbp {

void AlphaSchedule::validate() const {
  if (alpha0 < 0.0 || alpha_max < 0.0) throw ArgumentError("alpha values must be nonnegative");
  if (ramp_epochs < 1) throw ArgumentError("ramp_epochs must be >= 1");
  if (warmup_epochs < 0) throw ArgumentError("warmup_epochs must be nonnegative");
  if ((kind == AlphaKind::Linear || kind == AlphaKind::Exponential) && alpha0 > alpha_max)
    throw ArgumentError("ramping schedules require alpha0 <= alpha_max");
  if (kind == AlphaKind::Exponential && alpha0 <= 0.0)
    throw ArgumentError("exponential schedule requires alpha0 > 0");
}

double alpha_at(const AlphaSchedule& s, int epoch) {
  if (epoch < 0) throw ArgumentError("epoch must be nonnegative");
  switch (s.kind) {
    case AlphaKind::Constant:
      return s.alpha_max;
    case AlphaKind::Warmup:
      return epoch < s.warmup_epochs ? 0.0 : s.alpha_max;
    case AlphaKind::Linear: {
      const double u = std::min(1.0, static_cast<double>(epoch) / s.ramp_epochs);
      return s.alpha0 + (s.alpha_max - s.alpha0) * u;
    }
    case AlphaKind::Exponential: {
      const double u = std::min(1.0, static_cast<double>(epoch) / s.ramp_epochs);
      return s.alpha0 * std::pow(s.alpha_max / s.alpha0, u);
    }
  }
  return 0.0;
}

void LossConfig::validate() const {
  schedule.validate();
  if (residual_clamp && *residual_clamp <= 0.0)
    throw ArgumentError("residual_clamp must be positive when set");
  if (softening_delta < 0.0) throw ArgumentError("softening_delta must be nonnegative");
  if (collocation_extra < 0) throw ArgumentError("collocation_extra must be nonnegative");
}

double data_loss_mae(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size())
    throw DimensionError("prediction/target batch shapes differ");
  if (predictions.empty() || predictions.size() % kStateDim != 0)
    throw DimensionError("batch must be a nonempty multiple of 12 elements");
  const size_t n_samples = predictions.size() / kStateDim;
  double acc = 0.0;
  for (size_t s = 0; s < n_samples; ++s) {
    double row = 0.0;
    for (int k = 0; k < kStateDim; ++k) {
      const size_t i = s * kStateDim + static_cast<size_t>(k);
      row += std::abs(predictions[i] - targets[i]);
    }
    acc += row;
  }
  return acc / static_cast<double>(predictions.size());
}

double physics_loss(std::span<const double> residuals, std::optional<double> clamp) {
  if (residuals.empty() || residuals.size() % kStateDim != 0)
    throw DimensionError("residual batch must be a nonempty multiple of 12 elements");
  const size_t n_samples = residuals.size() / kStateDim;
  double acc = 0.0;
  for (size_t s = 0; s < n_samples; ++s) {
    double row = 0.0;
    for (int k = 0; k < kStateDim; ++k) {
      const double r = residuals[s * kStateDim + static_cast<size_t>(k)];
      row += r * r;
    }
    acc += row;
  }
  double value = acc / static_cast<double>(residuals.size());
  if (clamp) value = std::min(value, *clamp);
  return value;
}

LossBreakdown total_loss(std::span<const double> predictions, std::span<const double> targets,
                         std::span<const double> residuals, int epoch, const LossConfig& cfg) {
  LossBreakdown b;
  b.alpha = alpha_at(cfg.schedule, epoch);
  b.data_loss = data_loss_mae(predictions, targets);
  b.physics_loss = physics_loss(residuals, std::nullopt);
  const double effective =
      cfg.residual_clamp ? std::min(b.physics_loss, *cfg.residual_clamp) : b.physics_loss;
  b.total = b.data_loss + b.alpha * effective;
  return b;
}

std::string to_string(AlphaKind k) {
  switch (k) {
    case AlphaKind::Constant: return "constant";
    case AlphaKind::Warmup: return "warmup";
    case AlphaKind::Linear: return "linear";
    case AlphaKind::Exponential: return "exponential";
  }
  return "constant";
}

AlphaKind alpha_kind_from_string(const std::string& s) {
  if (s == "constant") return AlphaKind::Constant;
  if (s == "warmup") return AlphaKind::Warmup;
  if (s == "linear") return AlphaKind::Linear;
  if (s == "exponential") return AlphaKind::Exponential;
  throw ArgumentError("unknown alpha schedule: " + s);
}

}  // namespace tbp
