#include "ggsa/optimizer.hpp"

#include <cmath>
#include <string>

#include "ggsa/error.hpp"

namespace ggsa {

template <typename T>
void RmsPropMomentum<T>::step(std::span<Parameter<T>* const> params) {
  if (acc_.empty()) {
    for (const Parameter<T>* p : params) {
      acc_.emplace_back(p->value.shape());
      step_.emplace_back(p->value.shape());
    }
  }
  if (acc_.size() != params.size()) throw ContractError("optimizer: parameter list changed between steps");
  for (const Parameter<T>* p : params) {
    if (!p->trainable) continue;
    for (std::size_t i = 0; i < p->grad.size(); ++i)
      if (!std::isfinite(p->grad[i]))
        throw TrainingDivergedError("non-finite gradient in parameter '" + p->name + "' at element " +
                                    std::to_string(i));
  }
  const T rho = static_cast<T>(config_.decay);
  const T mu = static_cast<T>(config_.momentum);
  const T eta = static_cast<T>(config_.learning_rate);
  const T eps = static_cast<T>(config_.epsilon);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter<T>& p = *params[k];
    if (!p.trainable) continue;
    Tensor<T>& acc = acc_[k];
    Tensor<T>& stp = step_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const T g = p.grad[i];
      acc[i] = rho * acc[i] + (T{1} - rho) * g * g;
      stp[i] = mu * stp[i] + eta * g / std::sqrt(acc[i] + eps);
      p.value[i] -= stp[i];
    }
  }
}

template class RmsPropMomentum<float>;
template class RmsPropMomentum<double>;

}  // namespace ggsa
