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

#include "gazekit/autodiff.hpp"

#include <cmath>
#include <numbers>
#include <unordered_set>

#include "gazekit/error.hpp"

namespace gazekit::ad {

void Node::accumulate(const Matrix& g) {
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

Var make_node(Matrix value, std::vector<Var> inputs, std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  for (const auto& in : inputs) n->requires_grad = n->requires_grad || in->requires_grad;
  if (n->requires_grad) {
    n->inputs_ = std::move(inputs);
    n->backward_ = std::move(backward);
  }
  return n;
}

Var constant(Matrix value) { return make_node(std::move(value), {}, {}); }

Var leaf(Matrix value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

void backward(const Var& root) {
  if (root->value.size() != 1) throw UsageError("backward: root must be a scalar");
  if (!root->requires_grad) return;
  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs_.size()) {
      Node* child = node->inputs_[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_ && n->grad.size() != 0) n->backward_(*n);
  }
}

namespace {

void push(Node* in, const Matrix& g) {
  if (in->requires_grad) in->accumulate(g);
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  if (a->value.cols() != b->value.rows()) throw UsageError("matmul: shape mismatch");
  Node* pa = a.get();
  Node* pb = b.get();
  return make_node(a->value * b->value, {a, b}, [pa, pb](Node& self) {
    if (pa->requires_grad) pa->accumulate(self.grad * pb->value.transpose());
    if (pb->requires_grad) pb->accumulate(pa->value.transpose() * self.grad);
  });
}

Var add(const Var& a, const Var& b) {
  if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols()) {
    throw UsageError("add: shape mismatch");
  }
  Node* pa = a.get();
  Node* pb = b.get();
  return make_node(a->value + b->value, {a, b}, [pa, pb](Node& self) {
    push(pa, self.grad);
    push(pb, self.grad);
  });
}

Var add_row(const Var& a, const Var& row) {
  if (row->value.rows() != 1 || row->value.cols() != a->value.cols()) throw UsageError("add_row: shape mismatch");
  Node* pa = a.get();
  Node* pr = row.get();
  Matrix out = a->value.rowwise() + row->value.row(0);
  return make_node(std::move(out), {a, row}, [pa, pr](Node& self) {
    push(pa, self.grad);
    if (pr->requires_grad) pr->accumulate(self.grad.colwise().sum());
  });
}

Var scale(const Var& a, double s) {
  Node* pa = a.get();
  return make_node(a->value * s, {a}, [pa, s](Node& self) { push(pa, self.grad * s); });
}

Var transpose(const Var& a) {
  Node* pa = a.get();
  return make_node(a->value.transpose(), {a}, [pa](Node& self) { push(pa, self.grad.transpose()); });
}

Var relu(const Var& a) {
  Node* pa = a.get();
  return make_node(a->value.cwiseMax(0.0), {a}, [pa](Node& self) {
    push(pa, (pa->value.array() > 0.0).cast<double>().matrix().cwiseProduct(self.grad));
  });
}

Var gelu(const Var& a) {
  static constexpr double c = 0.7978845608028654;  // sqrt(2 / pi)
  static constexpr double k = 0.044715;
  Node* pa = a.get();
  const auto& x = a->value.array();
  Eigen::ArrayXXd t = (c * (x + k * x.cube())).tanh();
  Matrix out = (0.5 * x * (1.0 + t)).matrix();
  return make_node(std::move(out), {a}, [pa, t](Node& self) {
    const auto& x = pa->value.array();
    Eigen::ArrayXXd d = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t.square()) * c * (1.0 + 3.0 * k * x.square());
    push(pa, (d * self.grad.array()).matrix());
  });
}

Var softmax_rows(const Var& a) {
  Node* pa = a.get();
  Matrix y = a->value;
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const double m = y.row(r).maxCoeff();
    y.row(r) = (y.row(r).array() - m).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  Matrix yc = y;
  return make_node(std::move(y), {a}, [pa, yc](Node& self) {
    if (!pa->requires_grad) return;
    const Eigen::VectorXd dots = (self.grad.cwiseProduct(yc)).rowwise().sum();
    Matrix g = yc.cwiseProduct(self.grad.colwise() - dots);
    pa->accumulate(g);
  });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const Eigen::Index n = x->value.cols();
  if (gamma->value.rows() != 1 || gamma->value.cols() != n || beta->value.rows() != 1 || beta->value.cols() != n) {
    throw UsageError("layer_norm: parameter shape mismatch");
  }
  const Eigen::VectorXd mean = x->value.rowwise().mean();
  Matrix centered = x->value.colwise() - mean;
  const Eigen::VectorXd inv_std =
      ((centered.array().square().rowwise().sum() / static_cast<double>(n)) + eps).rsqrt().matrix();
  Matrix xhat = inv_std.asDiagonal() * centered;
  Matrix out = (xhat.array().rowwise() * gamma->value.row(0).array()).matrix();
  out.rowwise() += beta->value.row(0);
  Node* px = x.get();
  Node* pg = gamma.get();
  Node* pb = beta.get();
  return make_node(std::move(out), {x, gamma, beta}, [px, pg, pb, xhat, inv_std, n](Node& self) {
    if (pg->requires_grad) pg->accumulate(self.grad.cwiseProduct(xhat).colwise().sum());
    if (pb->requires_grad) pb->accumulate(self.grad.colwise().sum());
    if (!px->requires_grad) return;
    Matrix dxhat = (self.grad.array().rowwise() * pg->value.row(0).array()).matrix();
    const Eigen::VectorXd m1 = dxhat.rowwise().mean();
    const Eigen::VectorXd m2 = dxhat.cwiseProduct(xhat).rowwise().sum() / static_cast<double>(n);
    Matrix dx = dxhat.colwise() - m1;
    dx -= xhat.cwiseProduct(m2.replicate(1, n));
    px->accumulate(inv_std.asDiagonal() * dx);
  });
}

Var cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a->value.cols()) throw UsageError("cols: out of range");
  Node* pa = a.get();
  const Eigen::Index total = a->value.cols();
  return make_node(a->value.middleCols(start, count), {a}, [pa, start, count, total](Node& self) {
    if (!pa->requires_grad) return;
    Matrix g = Matrix::Zero(self.grad.rows(), total);
    g.middleCols(start, count) = self.grad;
    pa->accumulate(g);
  });
}

Var hcat(const std::vector<Var>& parts) {
  if (parts.empty()) throw UsageError("hcat: no inputs");
  const Eigen::Index rows = parts.front()->value.rows();
  Eigen::Index total = 0;
  for (const auto& p : parts) {
    if (p->value.rows() != rows) throw UsageError("hcat: row mismatch");
    total += p->value.cols();
  }
  Matrix out(rows, total);
  std::vector<Node*> raw;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p->value.cols()) = p->value;
    at += p->value.cols();
    raw.push_back(p.get());
  }
  return make_node(std::move(out), parts, [raw](Node& self) {
    Eigen::Index at = 0;
    for (Node* p : raw) {
      const Eigen::Index c = p->value.cols();
      if (p->requires_grad) p->accumulate(self.grad.middleCols(at, c));
      at += c;
    }
  });
}

Var gather_rows(const Var& table, std::span<const int> rows) {
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  Matrix out(n, table->value.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const int r = rows[static_cast<std::size_t>(i)];
    if (r < 0 || r >= table->value.rows()) throw UsageError("gather_rows: index out of range");
    out.row(i) = table->value.row(r);
  }
  Node* pt = table.get();
  std::vector<int> idx(rows.begin(), rows.end());
  return make_node(std::move(out), {table}, [pt, idx](Node& self) {
    if (!pt->requires_grad) return;
    if (pt->grad.size() == 0) pt->grad = Matrix::Zero(pt->value.rows(), pt->value.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) pt->grad.row(idx[i]) += self.grad.row(static_cast<Eigen::Index>(i));
  });
}

Var affine_const(const Var& a, const RowVector& s, const RowVector& shift) {
  if (s.size() != a->value.cols() || shift.size() != a->value.cols()) throw UsageError("affine_const: shape mismatch");
  Matrix out = (a->value.array().rowwise() * s.array()).matrix();
  out.rowwise() += shift;
  Node* pa = a.get();
  return make_node(std::move(out), {a}, [pa, s](Node& self) {
    push(pa, (self.grad.array().rowwise() * s.array()).matrix());
  });
}

Var masked_sse(const Var& pred, const Matrix& target, const Mask& row_mask) {
  if (pred->value.rows() != target.rows() || pred->value.cols() != target.cols() ||
      row_mask.size() != target.rows()) {
    throw UsageError("masked_sse: shape mismatch");
  }
  Matrix diff = pred->value - target;
  for (Eigen::Index r = 0; r < diff.rows(); ++r) {
    if (!row_mask(r)) diff.row(r).setZero();
  }
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm();
  Node* pp = pred.get();
  return make_node(std::move(out), {pred}, [pp, diff](Node& self) { push(pp, 2.0 * self.grad(0, 0) * diff); });
}

Var sum(const std::vector<Var>& scalars) {
  Matrix out = Matrix::Zero(1, 1);
  std::vector<Node*> raw;
  for (const auto& s : scalars) {
    if (s->value.size() != 1) throw UsageError("sum: inputs must be scalars");
    out(0, 0) += s->value(0, 0);
    raw.push_back(s.get());
  }
  return make_node(std::move(out), scalars, [raw](Node& self) {
    for (Node* p : raw) push(p, self.grad);
  });
}

}  // namespace gazekit::ad
