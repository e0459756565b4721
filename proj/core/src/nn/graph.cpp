#include "tirdet/nn/graph.hpp"

#include "tirdet/error.hpp"

namespace tirdet::nn {

void Parameter::zero_grad() {
  if (grad.shape() == value.shape()) {
    grad.fill(0.0);
  } else {
    grad = Tensor(value.shape());
  }
}

Node Graph::push(Tensor value, bool needs_grad, std::function<void(Graph&, int)> backward) {
  require_finite(value, "graph value");
  Entry e;
  e.value = std::move(value);
  e.needs_grad = needs_grad;
  e.backward = std::move(backward);
  entries_.push_back(std::move(e));
  return Node{static_cast<int>(entries_.size()) - 1};
}

void Graph::accumulate(Node n, const Tensor& g) {
  Entry& e = entries_[n.id];
  if (!e.needs_grad) return;
  if (e.grad.empty()) {
    e.grad = g;
  } else {
    e.grad += g;
  }
}

Node Graph::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Node Graph::parameter(Parameter& p) {
  Node n = push(p.value, p.trainable, nullptr);
  entries_[n.id].param = &p;
  return n;
}

Node Graph::conv2d(Node x, Node weight, std::optional<Node> bias, const ConvGeometry& g) {
  Tensor y = nn::conv2d(value(x), value(weight), bias ? &value(*bias) : nullptr, g);
  const bool ng = needs_grad(x) || needs_grad(weight) || (bias && needs_grad(*bias));
  return push(std::move(y), ng, [x, weight, bias, g](Graph& G, int self) {
    const bool want_dx = G.needs_grad(x);
    ConvGrads d = conv2d_backward(G.value(x), G.value(weight), g, G.entries_[self].grad, want_dx);
    if (want_dx) G.accumulate(x, d.input);
    G.accumulate(weight, d.weight);
    if (bias) G.accumulate(*bias, d.bias);
  });
}

Node Graph::relu(Node x) {
  return push(nn::relu(value(x)), needs_grad(x), [x](Graph& G, int self) {
    G.accumulate(x, relu_backward(G.value(x), G.entries_[self].grad));
  });
}

Node Graph::add(Node a, Node b) {
  return push(nn::add(value(a), value(b)), needs_grad(a) || needs_grad(b),
              [a, b](Graph& G, int self) {
                const Tensor& g = G.entries_[self].grad;
                G.accumulate(a, g);
                G.accumulate(b, g);
              });
}

Node Graph::concat_channels(const std::vector<Node>& parts) {
  std::vector<Tensor> values;
  std::vector<int> channels;
  bool ng = false;
  values.reserve(parts.size());
  for (Node p : parts) {
    values.push_back(value(p));
    channels.push_back(value(p).shape().c);
    ng = ng || needs_grad(p);
  }
  return push(nn::concat_channels(values), ng, [parts, channels](Graph& G, int self) {
    auto grads = split_channels(G.entries_[self].grad, channels);
    for (std::size_t k = 0; k < parts.size(); ++k) G.accumulate(parts[k], grads[k]);
  });
}

Node Graph::avg_pool_global(Node x) {
  return push(nn::avg_pool_global(value(x)), needs_grad(x), [x](Graph& G, int self) {
    G.accumulate(x, avg_pool_global_backward(G.entries_[self].grad));
  });
}

Node Graph::upsample_nearest(Node x, int factor) {
  return push(nn::upsample_nearest(value(x), factor), needs_grad(x),
              [x, factor](Graph& G, int self) {
                G.accumulate(x, upsample_nearest_backward(G.entries_[self].grad, factor));
              });
}

Node Graph::softmax_bce(Node logits, Tensor labels, double pos_weight) {
  Tensor grad;
  const bool ng = needs_grad(logits);
  const double loss = nn::softmax_bce(value(logits), labels, pos_weight, ng ? &grad : nullptr);
  return push(Tensor({1, 1, 1, 1}, loss), ng,
              [logits, grad = std::move(grad)](Graph& G, int self) {
                Tensor scaled = grad;
                const double upstream = G.entries_[self].grad.values()[0];
                for (double& v : scaled.values()) v *= upstream;
                G.accumulate(logits, scaled);
              });
}

void Graph::backward(Node root) {
  if (value(root).size() != 1) throw ShapeError("backward: root must be a scalar");
  for (auto& e : entries_) e.grad = Tensor();
  if (!entries_[root.id].needs_grad) return;
  entries_[root.id].grad = Tensor({1, 1, 1, 1}, 1.0);
  for (int id = root.id; id >= 0; --id) {
    Entry& e = entries_[id];
    if (!e.needs_grad || e.grad.empty()) continue;
    if (e.backward) e.backward(*this, id);
    if (e.param != nullptr) {
      if (e.param->grad.shape() == e.grad.shape()) {
        e.param->grad += e.grad;
      } else {
        e.param->grad = e.grad;
      }
    }
  }
}

}  // namespace tirdet::nn
