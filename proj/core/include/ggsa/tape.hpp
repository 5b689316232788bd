#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>

#include "ggsa/tensor.hpp"

namespace ggsa {

// A named learnable array. Gradients from every tape that references the
// parameter accumulate into `grad` until zero_grad() is called.
template <typename T>
struct Parameter {
  Parameter() = default;
  Parameter(std::string param_name, Tensor<T> initial)
      : name(std::move(param_name)), value(std::move(initial)), grad(value.shape()) {}

  void zero_grad() { grad.fill(T{0}); }

  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;
};

template <typename T>
class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape<T>& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  explicit operator bool() const { return tape_ != nullptr; }

  const Tensor<T>& value() const { return tape_->value(id_); }
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const { return tape_->requires_grad(id_); }

 private:
  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode gradient tape. Forward values are computed eagerly as ops are
// recorded; backward() replays the recorded rules in reverse order.
template <typename T>
class Tape {
 public:
  // Receives the gradient flowing into the node's output and accumulates
  // into its inputs through grad_sink().
  using BackwardFn = std::function<void(Tape&, const Tensor<T>&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value);
  // Differentiable input; its gradient is read back with grad().
  Var<T> leaf(Tensor<T> value);
  // The node reads the parameter in place and accumulates into Parameter::grad.
  // Non-trainable parameters enter as constants.
  Var<T> param(Parameter<T>& p);

  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn backward);
  Var<T> record(Tensor<T> value, std::span<const Var<T>> inputs, BackwardFn backward);

  const Tensor<T>& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  // Accumulator for node `id`, zero-initialised on first use. nullptr when
  // the node does not require a gradient.
  Tensor<T>* grad_sink(std::size_t id);

  // Gradient of a leaf or intermediate after backward(). Empty if none flowed.
  const Tensor<T>& grad(Var<T> v) const;

  // Seeds d(loss)/d(loss) = 1 and runs every backward rule. The loss must be
  // a single-element tensor. Intermediate gradients from a previous call are
  // discarded; parameter gradients keep accumulating.
  void backward(Var<T> loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Parameter<T>* param = nullptr;
    Tensor<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var<T> push(Node node);

  std::deque<Node> nodes_;
};

}  // namespace ggsa
