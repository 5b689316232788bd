#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ggsa/tape.hpp"

namespace ggsa {

struct RmsPropConfig {
  double learning_rate = 1e-4;
  double decay = 0.9;     // rho
  double momentum = 0.9;  // mu
  double epsilon = 1e-8;
};

// acc <- rho acc + (1 - rho) g^2; step <- mu step + eta g / sqrt(acc + eps);
// theta <- theta - step. Buffers are created on the first step and keyed by
// position in the parameter list, which must stay fixed.
template <typename T>
class RmsPropMomentum {
 public:
  explicit RmsPropMomentum(RmsPropConfig config = {}) : config_(config) {}

  // Applies one update from Parameter::grad to every trainable parameter.
  // A non-finite gradient raises TrainingDivergedError before any parameter
  // is modified.
  void step(std::span<Parameter<T>* const> params);

  const RmsPropConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  const std::vector<Tensor<T>>& accumulators() const { return acc_; }
  const std::vector<Tensor<T>>& steps() const { return step_; }

 private:
  RmsPropConfig config_;
  std::vector<Tensor<T>> acc_;
  std::vector<Tensor<T>> step_;
};

}  // namespace ggsa
