#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tgc/core/tensor.hpp"

namespace tgc {

/// One node of the reverse-mode graph.
///
/// `backward_fn` receives the node itself (for its value and parents), the
/// gradient flowing into it, and one accumulator per parent (nullptr for
/// parents that do not require grad).
/// Implementations must add into the accumulators, never assign: a parent may
/// appear twice in `parents`.
template <typename T>
struct DiffNode {
  using BackwardFn =
      std::function<void(const DiffNode& self, const Tensor<T>& out_grad,
                         std::span<Tensor<T>* const> parent_grads)>;

  Tensor<T> value;
  Tensor<T> grad;  // empty until first accumulation; same shape as value afterwards
  std::string_view op_tag = "leaf";
  std::vector<std::shared_ptr<DiffNode>> parents;
  bool requires_grad = false;
  BackwardFn backward_fn;

  void accumulate(Tensor<T>&& g) {
    if (grad.empty()) {
      grad = std::move(g);
    } else {
      grad += g;
    }
  }
};

/// Shared handle to a DiffNode. Copying a Var aliases the same node.
template <typename T>
class Var {
 public:
  using Node = DiffNode<T>;

  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var leaf(Tensor<T> value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return Var(std::move(n));
  }

  static Var constant(Tensor<T> value) { return leaf(std::move(value), false); }

  [[nodiscard]] bool defined() const noexcept { return static_cast<bool>(node_); }
  [[nodiscard]] const Tensor<T>& value() const { return node_->value; }
  [[nodiscard]] Tensor<T>& mutable_value() { return node_->value; }
  [[nodiscard]] const Shape& shape() const { return node_->value.shape(); }
  [[nodiscard]] std::size_t size() const { return node_->value.size(); }
  [[nodiscard]] bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  [[nodiscard]] std::string_view op_tag() const { return node_->op_tag; }
  [[nodiscard]] bool is_leaf() const { return node_->parents.empty() && !node_->backward_fn; }

  /// Gradient accumulated so far; zeros of the value's shape if none yet.
  [[nodiscard]] const Tensor<T>& grad() const {
    if (node_->grad.empty()) node_->grad = Tensor<T>(node_->value.shape());
    return node_->grad;
  }
  [[nodiscard]] bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad() { node_->grad = Tensor<T>(); }

  /// Constant copy of the current value, cut from the graph.
  [[nodiscard]] Var detach() const { return constant(node_->value); }

  [[nodiscard]] Node* node() const noexcept { return node_.get(); }
  [[nodiscard]] const std::shared_ptr<Node>& node_ptr() const noexcept { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Builds an op node. When no parent requires grad the node is a constant and
/// keeps no references to its inputs.
template <typename T>
Var<T> make_op(Tensor<T> value, std::string_view tag, std::vector<Var<T>> parents,
               typename DiffNode<T>::BackwardFn fn) {
  auto n = std::make_shared<DiffNode<T>>();
  n->value = std::move(value);
  n->op_tag = tag;
  bool any = false;
  for (const auto& p : parents) any = any || p.requires_grad();
  if (any) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.node_ptr());
    n->backward_fn = std::move(fn);
  }
  return Var<T>(std::move(n));
}

/// Reverse sweep from a scalar root. Gradients are added into every reachable
/// node's `grad`, so repeated calls without zeroing are additive.
template <typename T>
void backward(const Var<T>& root) {
  if (root.size() != 1) {
    throw ContractError("backward() requires a scalar root, got shape " + shape_str(root.shape()));
  }
  if (!root.requires_grad()) return;

  using Node = DiffNode<T>;
  std::vector<Node*> order;
  {
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.node(), 0);
    visited.insert(root.node());
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->parents.size()) {
        Node* p = node->parents[next++].get();
        if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
  }

  std::unordered_map<Node*, Tensor<T>> pending;
  pending.emplace(root.node(), Tensor<T>(root.shape(), T{1}));
  std::vector<Tensor<T>*> slots;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    auto found = pending.find(node);
    if (found == pending.end()) continue;
    Tensor<T> g = std::move(found->second);
    pending.erase(found);
    if (node->backward_fn) {
      slots.assign(node->parents.size(), nullptr);
      for (std::size_t i = 0; i < node->parents.size(); ++i) {
        Node* p = node->parents[i].get();
        if (!p->requires_grad) continue;
        auto [slot, inserted] = pending.try_emplace(p);
        if (inserted) slot->second = Tensor<T>(p->value.shape());
        slots[i] = &slot->second;
      }
      node->backward_fn(*node, g, slots);
    }
    node->accumulate(std::move(g));
  }
}

}  // namespace tgc
