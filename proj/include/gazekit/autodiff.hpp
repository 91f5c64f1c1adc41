// Copyright 2026 The gazekit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gazekit/types.hpp"

/// Minimal reverse-mode differentiation over dense double matrices.
///
/// Every operation records its inputs and a closure that pushes the output
/// gradient back into them. A graph is built per forward pass and released
/// when its root goes out of scope; parameters are long-lived leaves.
namespace gazekit::ad {

class Node;
using Var = std::shared_ptr<Node>;

class Node {
 public:
  Matrix value;
  Matrix grad;  ///< empty until a gradient reaches this node
  bool requires_grad = false;

  void accumulate(const Matrix& g);
  void zero_grad() { grad.resize(0, 0); }

 private:
  friend Var make_node(Matrix value, std::vector<Var> inputs, std::function<void(Node&)> backward);
  friend void backward(const Var& root);

  std::vector<Var> inputs_;
  std::function<void(Node&)> backward_;
};

Var constant(Matrix value);
Var leaf(Matrix value, bool requires_grad);

/// Runs back-propagation from a 1x1 root.
void backward(const Var& root);

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
/// a + row broadcast over every row of a; row is 1 x a.cols().
Var add_row(const Var& a, const Var& row);
Var scale(const Var& a, double s);
Var transpose(const Var& a);
Var relu(const Var& a);
/// tanh approximation of GELU.
Var gelu(const Var& a);
/// Row-wise softmax.
Var softmax_rows(const Var& a);
/// Row-wise layer normalization with learned gain and bias (both 1 x n).
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-12);
Var cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var hcat(const std::vector<Var>& parts);
/// Rows of `table` selected by index; repeated indices accumulate gradients.
Var gather_rows(const Var& table, std::span<const int> rows);
/// a * diag(scale) + shift, with constant 1 x n scale and shift.
Var affine_const(const Var& a, const RowVector& scale, const RowVector& shift);
/// Sum of squared differences over rows where row_mask is true. Returns 1x1.
Var masked_sse(const Var& pred, const Matrix& target, const Mask& row_mask);
/// Sum of 1x1 nodes.
Var sum(const std::vector<Var>& scalars);

/// Named trainable tensor.
struct Parameter {
  std::string name;
  Var var;
  bool decay = true;  ///< subject to weight decay

  const Matrix& value() const { return var->value; }
  Matrix& value() { return var->value; }
};

}  // namespace gazekit::ad
