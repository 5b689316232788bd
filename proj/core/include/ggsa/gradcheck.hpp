#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ggsa/config.hpp"
#include "ggsa/train.hpp"

namespace ggsa {

inline constexpr double kGradcheckStep = 1e-5;
inline constexpr double kGradcheckTolerance = 1e-4;
// Magnitude below which differences are measured absolutely: both gradients
// are compared relative to max(|analytic|, |numeric|, floor).
inline constexpr double kGradcheckFloor = 1e-6;

struct GradcheckOptions {
  ModelConfig model;  // precision is forced to double
  LossKind loss = LossKind::kPairwise;
  std::size_t question_len = 4;
  std::size_t answer_len = 4;
  double step = kGradcheckStep;
  double floor = kGradcheckFloor;
  std::uint64_t seed = 1;

  // D=8, n=2, l=2, length 4, iGGSA, max-pooling, no dropout.
  static GradcheckOptions toy();
};

struct ParamGradError {
  std::string name;
  std::size_t elements = 0;
  std::size_t worst_index = 0;
  double max_rel_error = 0.0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradcheckReport {
  std::vector<ParamGradError> params;
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t elements = 0;
  double loss = 0.0;
  bool passed(double tolerance = kGradcheckTolerance) const { return max_rel_error <= tolerance; }
};

// Central differences for every element of every parameter of a random model
// on one random (question, positive, negative) example. Inputs are redrawn
// until the loss is strictly positive so the hinge branch is exercised.
GradcheckReport gradcheck(const GradcheckOptions& opt);

double relative_error(double analytic, double numeric, double floor);

}  // namespace ggsa
