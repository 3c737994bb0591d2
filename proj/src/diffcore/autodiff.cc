#include "mprs/diffcore/autodiff.h"

#include <unordered_set>
#include <utility>

#include "mprs/errors.h"

namespace mprs {

bool Gradients::Has(const Tensor& leaf) const { return grads_.count(leaf.id()) > 0; }

Tensor Gradients::Of(const Tensor& leaf) const {
  auto it = grads_.find(leaf.id());
  if (it == grads_.end()) return Tensor(leaf.rows(), leaf.cols(), 0.0);
  return Tensor(leaf.rows(), leaf.cols(), it->second);
}

std::span<const double> Gradients::Raw(const Tensor& leaf) const {
  auto it = grads_.find(leaf.id());
  if (it == grads_.end()) return {};
  return it->second;
}

Gradients Backward(const Tensor& root) {
  if (root.size() != 1) {
    throw ContractError("backward requires a scalar root, got " + root.ShapeString());
  }
  if (!root.requires_grad()) {
    throw ContractError("backward root is not recorded on a tape");
  }

  // Iterative post-order DFS; inputs are visited in declaration order so the
  // sweep order, and hence the accumulated bytes, are deterministic.
  std::vector<internal::Node*> order;
  std::unordered_set<internal::Node*> visited;
  std::vector<std::pair<internal::Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      internal::Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  std::unordered_map<internal::Node*, std::vector<double>> buffers;
  buffers[root.node().get()] = {1.0};
  Gradients result;
  std::vector<double*> input_grads;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    internal::Node* node = *it;
    auto found = buffers.find(node);
    if (found == buffers.end()) continue;
    if (node->inputs.empty()) {
      result.grads_[node] = std::move(found->second);
      buffers.erase(found);
      continue;
    }
    input_grads.assign(node->inputs.size(), nullptr);
    for (std::size_t k = 0; k < node->inputs.size(); ++k) {
      internal::Node* in = node->inputs[k].get();
      if (!in->requires_grad) continue;
      auto& buf = buffers[in];
      if (buf.empty()) buf.assign(in->value.size(), 0.0);
      input_grads[k] = buf.data();
    }
    // The grad buffer of `node` stays valid: unordered_map never relocates
    // mapped values on insert.
    if (node->backward) node->backward(found->second, input_grads);
    buffers.erase(node);
  }
  return result;
}

Tensor Jvp(const DualMap& f, const Tensor& z, const Tensor& v) {
  if (z.rows() != v.rows() || z.cols() != v.cols()) {
    throw DimensionError("jvp: direction " + v.ShapeString() + " does not match point " +
                         z.ShapeString());
  }
  Dual out = f(Dual{z, {v}});
  return out.tangents.at(0);
}

Tensor Jacobian(const DualMap& f, const Tensor& z) {
  if (z.rows() != 1) throw DimensionError("jacobian expects a single 1 x d point");
  const std::size_t d = z.cols();
  Dual seeded = SeedCoordinates(z);
  Dual out = f(seeded);
  const std::size_t m = out.value.cols();
  std::vector<double> jac(m * d);
  for (std::size_t i = 0; i < d; ++i) {
    auto col = out.tangents[i].data();
    for (std::size_t r = 0; r < m; ++r) jac[r * d + i] = col[r];
  }
  return Tensor(m, d, std::move(jac));
}

}  // namespace mprs
