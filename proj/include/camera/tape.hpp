#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "camera/tensor.hpp"

namespace camera {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Eager reverse-mode tape. Ops compute values immediately and record a
// backward closure; backward() runs the closures in reverse order. The tape
// is reset per sequence with clear().
class Tape {
 public:
  Tape() : serial_(nextSerial()++) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor v) { return push(std::move(v), {}, nullptr, false); }
  Var leaf(Tensor v) { return push(std::move(v), {}, nullptr, true); }

  Var make(Tensor v, std::vector<int> parents,
           std::function<void(Tape&, int)> backward) {
    bool ng = false;
    for (int p : parents)
      if (nodes_[static_cast<size_t>(p)].needs_grad) ng = true;
    return push(std::move(v), std::move(parents),
                ng ? std::move(backward) : nullptr, ng);
  }

  Tensor& val(Var v) { return nodes_[static_cast<size_t>(v.id)].value; }
  const Tensor& val(Var v) const {
    return nodes_[static_cast<size_t>(v.id)].value;
  }

  bool needsGrad(Var v) const {
    return nodes_[static_cast<size_t>(v.id)].needs_grad;
  }

  // Gradient buffer, zero-initialized on first touch.
  Tensor& grad(Var v) {
    Node& n = nodes_[static_cast<size_t>(v.id)];
    if (!n.grad_live) {
      n.grad = Tensor(n.value.shape());
      n.grad_live = true;
    }
    return n.grad;
  }

  bool gradLive(Var v) const {
    return nodes_[static_cast<size_t>(v.id)].grad_live;
  }

  // Seeds d(out)/d(out) = 1 and propagates. out must be scalar.
  void backward(Var out) {
    if (val(out).size() != 1)
      throw DimensionError("backward() requires a scalar output");
    grad(out)[0] = 1.0;
    for (int i = out.id; i >= 0; --i) {
      Node& n = nodes_[static_cast<size_t>(i)];
      if (n.needs_grad && n.grad_live && n.backward) n.backward(*this, i);
    }
  }

  void clear() { nodes_.clear(); }
  size_t size() const { return nodes_.size(); }

  // Process-unique identity; distinguishes tapes that reuse a stack address.
  uint64_t serial() const { return serial_; }

  const std::vector<int>& parents(int id) const {
    return nodes_[static_cast<size_t>(id)].parents;
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<int> parents;
    std::function<void(Tape&, int)> backward;
    bool needs_grad = false;
    bool grad_live = false;
  };

  Var push(Tensor v, std::vector<int> parents,
           std::function<void(Tape&, int)> backward, bool needs_grad) {
    Node n;
    n.value = std::move(v);
    n.parents = std::move(parents);
    n.backward = std::move(backward);
    n.needs_grad = needs_grad;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  static uint64_t& nextSerial() {
    static uint64_t counter = 1;
    return counter;
  }

  std::deque<Node> nodes_;
  uint64_t serial_ = 0;
};

}  // namespace camera
