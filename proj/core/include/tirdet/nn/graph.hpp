#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tirdet/nn/layers.hpp"
#include "tirdet/nn/tensor.hpp"

namespace tirdet::nn {

/// A named learnable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;

  void zero_grad();
};

/// Index of a value recorded on a Graph.
struct Node {
  int id = -1;
};

/// Reverse-mode tape over the layer set in layers.hpp. Values are computed
/// eagerly as ops are recorded; backward() walks the tape in reverse order.
/// One Graph per forward pass; not thread-safe.
class Graph {
 public:
  Node constant(Tensor value);
  Node parameter(Parameter& p);

  Node conv2d(Node x, Node weight, std::optional<Node> bias, const ConvGeometry& g);
  Node relu(Node x);
  Node add(Node a, Node b);
  Node concat_channels(const std::vector<Node>& parts);
  Node avg_pool_global(Node x);
  Node upsample_nearest(Node x, int factor);

  /// Scalar (1,1,1,1) loss node.
  Node softmax_bce(Node logits, Tensor labels, double pos_weight);

  const Tensor& value(Node n) const { return entries_.at(n.id).value; }
  /// Gradient of the last backward() root w.r.t. this node; empty if unreached.
  const Tensor& grad(Node n) const { return entries_.at(n.id).grad; }

  /// Seeds d(root)/d(root) = 1 and accumulates into every Parameter reached.
  void backward(Node root);

  std::size_t size() const noexcept { return entries_.size(); }

 private:
  struct Entry {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    Parameter* param = nullptr;
    std::function<void(Graph&, int)> backward;
  };

  Node push(Tensor value, bool needs_grad, std::function<void(Graph&, int)> backward);
  bool needs_grad(Node n) const { return entries_[n.id].needs_grad; }
  void accumulate(Node n, const Tensor& g);

  std::vector<Entry> entries_;
};

}  // namespace tirdet::nn
