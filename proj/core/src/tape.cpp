#include "ggsa/tape.hpp"

namespace ggsa {

template <typename T>
Var<T> Tape<T>::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var<T>(this, nodes_.size() - 1);
}

template <typename T>
Var<T> Tape<T>::constant(Tensor<T> value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

template <typename T>
Var<T> Tape<T>::leaf(Tensor<T> value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

template <typename T>
Var<T> Tape<T>::param(Parameter<T>& p) {
  Node n;
  n.param = &p;
  n.requires_grad = p.trainable;
  return push(std::move(n));
}

template <typename T>
Var<T> Tape<T>::record(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn backward) {
  return record(std::move(value), std::span<const Var<T>>(inputs.begin(), inputs.size()),
                std::move(backward));
}

template <typename T>
Var<T> Tape<T>::record(Tensor<T> value, std::span<const Var<T>> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (const Var<T>& in : inputs) {
    if (&in.tape() != this) throw ContractError("op inputs live on different tapes");
    n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

template <typename T>
const Tensor<T>& Tape<T>::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.param ? n.param->value : n.value;
}

template <typename T>
Tensor<T>* Tape<T>::grad_sink(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return nullptr;
  if (n.param) {
    if (!(n.param->grad.shape() == n.param->value.shape())) n.param->grad = Tensor<T>(n.param->value.shape());
    return &n.param->grad;
  }
  if (n.grad.empty()) n.grad = Tensor<T>(n.value.shape());
  return &n.grad;
}

template <typename T>
const Tensor<T>& Tape<T>::grad(Var<T> v) const {
  const Node& n = nodes_[v.id()];
  return n.param ? n.param->grad : n.grad;
}

template <typename T>
void Tape<T>::backward(Var<T> loss) {
  if (&loss.tape() != this) throw ContractError("backward: loss belongs to another tape");
  if (value(loss.id()).size() != 1)
    throw ContractError("backward: loss must be a scalar, got shape " + value(loss.id()).shape().str());
  for (Node& n : nodes_)
    if (!n.param) n.grad = Tensor<T>();
  if (!nodes_[loss.id()].requires_grad) return;

  Tensor<T>* seed = grad_sink(loss.id());
  (*seed)[0] += T{1};
  // Leaves read back through grad() get zeros even when nothing reaches them.
  for (std::size_t id = 0; id < loss.id(); ++id)
    if (!nodes_[id].backward) grad_sink(id);
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, n.grad);
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace ggsa
