#include "dddm/tape.hpp"

#include <algorithm>

#include "dddm/errors.hpp"

namespace dddm {

const Tensor& Var::value() const {
  if (!tape_) throw ContractError("use of an unbound Var");
  return tape_->value(id_);
}

Var Tape::constant(Tensor v) {
  v.require_finite("tape constant");
  Node n;
  n.value = std::move(v);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::param(Parameter& p) {
  p.value.require_finite("parameter " + p.name);
  Node n;
  n.value = p.value;
  n.param = &p;
  n.needs_grad = record_;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::push(Tensor value, std::vector<int> inputs, BackwardFn fn) {
  value.require_finite("op output");
  Node n;
  n.value = std::move(value);
  if (record_) {
    n.needs_grad = std::any_of(inputs.begin(), inputs.end(), [&](int i) { return needs_grad(i); });
    if (n.needs_grad) {
      n.inputs = std::move(inputs);
      n.backward = std::move(fn);
    }
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Tensor& Tape::grad_ref(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() != n.value.size() || !n.grad.same_shape(n.value)) n.grad = Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

const Tensor& Tape::grad(Var v) const {
  if (v.tape() != this) throw ContractError("Var belongs to a different tape");
  return nodes_[static_cast<std::size_t>(v.id())].grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ContractError("loss belongs to a different tape");
  if (loss.value().size() != 1) throw ContractError("backward requires a scalar loss, got " + loss.value().shape_str());
  if (!record_) throw ContractError("backward on a non-recording tape");
  if (backward_done_) throw ContractError("backward called twice on the same tape");
  backward_done_ = true;
  grad_ref(loss.id())[0] = 1.0;
  for (int i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param) {
      Tensor& pg = n.param->grad;
      if (!pg.same_shape(n.value)) pg = Tensor(n.value.rows(), n.value.cols());
      for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += n.grad[k];
    }
  }
}

}  // namespace dddm
