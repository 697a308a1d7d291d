#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "naon/tensor.hpp"

namespace naon {

class Rng;
class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::uint32_t id() const noexcept { return id_; }
  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

// Reverse-mode gradient tape, rebuilt for every forward pass.
//
// Nodes are appended in evaluation order; backward() walks them in reverse.
// Leaves created with param() write their gradients into the bound Tensor's
// grad buffer, adding to whatever is already there.
class Tape {
 public:
  using Backprop = std::function<void(Tape&, std::uint32_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Leaf bound to a trainable tensor. Repeated calls with the same tensor
  // return the same node.
  Var param(Tensor& tensor);

  void backward(Var loss);

  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  // Gradient accumulated on an intermediate node by the last backward().
  std::span<const double> grad(Var v) const { return nodes_[v.id()].grad.data(); }
  bool needs_grad(Var v) const { return nodes_[v.id()].needs_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Op-author interface.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backprop backprop);
  Var record(Tensor value, std::span<const Var> inputs, Backprop backprop);
  // Zero-initialized on first access.
  Tensor& grad_buffer(std::uint32_t id);
  const Tensor& grad_of(std::uint32_t id) const { return nodes_[id].grad; }
  const Tensor& value_of(std::uint32_t id) const { return nodes_[id].value; }
  bool needs_grad_of(std::uint32_t id) const { return nodes_[id].needs_grad; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Tensor* param = nullptr;
    bool needs_grad = false;
    Backprop backprop;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, std::uint32_t> param_ids_;
};

// ---- Differentiable ops. All operands must live on the same tape. ----

Var matmul(Var a, Var b);
// a * b^T
Var matmul_nt(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
// x[m x n] + bias[1 x n] broadcast over rows.
Var add_row(Var x, Var bias);
Var scale(Var a, double s);
Var mul(Var a, Var b);
Var sum(Var a);
Var mean(Var a);
Var tanh_map(Var a);
Var relu(Var a);
Var row_softmax(Var x);
Var row_log_softmax(Var x);
Var col_log_softmax(Var x);
// Normalizes each row, then applies gain[1 x n] and bias[1 x n].
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
// Inverted dropout. Identity when !training or p == 0.
Var dropout(Var x, double p, bool training, Rng& rng);
Var slice_cols(Var x, std::size_t begin, std::size_t count);
Var concat_cols(std::span<const Var> parts);
// Row k is the mean of table rows listed in tokens[k].
Var embedding_bag_mean(Var table, const std::vector<std::vector<std::int32_t>>& tokens);
// out[i][j] = sum_k u[k] * tanh(a[i][k] + b[j][k]); u is [k x 1].
Var additive_scores(Var a, Var b, Var u);
// out[i] = x[i][index[i]], shape [m x 1].
Var pick_per_row(Var x, std::span<const std::size_t> index);

}  // namespace naon
