// Copyright 2026 The lapboot Authors.
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

#include "autodiff.hpp"

#include <algorithm>
#include <string>

#include "error.hpp"

namespace lapboot::ad {

namespace {

void require_shape(bool ok, const char* op, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (!ok) {
    fail(ErrorKind::kStructural, std::string(op) + ": shape mismatch (" +
                                     std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                     " vs " + std::to_string(b.rows()) + "x" +
                                     std::to_string(b.cols()) + ")");
  }
}

}  // namespace

const Tape::Node& Tape::node(Var v) const {
  require(v.id < nodes_.size(), ErrorKind::kStructural, "variable does not belong to this tape");
  return nodes_[v.id];
}

const Eigen::MatrixXd& Tape::value(Var v) const { return node(v).value; }

Eigen::MatrixXd Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.has_grad) return n.grad;
  return Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols());
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

Var Tape::leaf(Eigen::MatrixXd value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1};
}

Var Tape::record(std::vector<std::size_t> parents, std::function<Eigen::MatrixXd()> forward,
                 std::function<void(const Eigen::MatrixXd&)> backward) {
  Node n;
  n.value = forward();
  for (auto p : parents) n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
  n.parents = std::move(parents);
  n.forward = std::move(forward);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1};
}

void Tape::accumulate(std::size_t id, const Eigen::MatrixXd& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.has_grad) {
    n.grad += g;
  } else {
    n.grad = g;
    n.has_grad = true;
  }
}

Var Tape::matmul(Var a, Var b) {
  const auto& av = value(a);
  const auto& bv = value(b);
  require_shape(av.cols() == bv.rows(), "matmul", av, bv);
  const std::size_t ia = a.id, ib = b.id;
  return record(
      {ia, ib}, [this, ia, ib] { return Eigen::MatrixXd(nodes_[ia].value * nodes_[ib].value); },
      [this, ia, ib](const Eigen::MatrixXd& g) {
        if (nodes_[ia].requires_grad) accumulate(ia, g * nodes_[ib].value.transpose());
        if (nodes_[ib].requires_grad) accumulate(ib, nodes_[ia].value.transpose() * g);
      });
}

Var Tape::sparse_matmul(const SparseSym& s, Var x) {
  const auto& xv = value(x);
  require(static_cast<std::size_t>(xv.rows()) == s.n(), ErrorKind::kStructural,
          "sparse_matmul: operator is " + std::to_string(s.n()) + "x" + std::to_string(s.n()) +
              ", input has " + std::to_string(xv.rows()) + " rows");
  const SparseSym* op = &s;
  const std::size_t ix = x.id;
  return record(
      {ix}, [this, op, ix] { return (*op) * nodes_[ix].value; },
      [this, op, ix](const Eigen::MatrixXd& g) { accumulate(ix, (*op) * g); });
}

Var Tape::add(Var a, Var b) {
  const auto& av = value(a);
  const auto& bv = value(b);
  require_shape(av.rows() == bv.rows() && av.cols() == bv.cols(), "add", av, bv);
  const std::size_t ia = a.id, ib = b.id;
  return record(
      {ia, ib}, [this, ia, ib] { return Eigen::MatrixXd(nodes_[ia].value + nodes_[ib].value); },
      [this, ia, ib](const Eigen::MatrixXd& g) {
        accumulate(ia, g);
        accumulate(ib, g);
      });
}

Var Tape::add_row(Var a, Var row) {
  const auto& av = value(a);
  const auto& rv = value(row);
  require_shape(rv.rows() == 1 && rv.cols() == av.cols(), "add_row", av, rv);
  const std::size_t ia = a.id, ir = row.id;
  return record(
      {ia, ir},
      [this, ia, ir] {
        return Eigen::MatrixXd(nodes_[ia].value.rowwise() + nodes_[ir].value.row(0));
      },
      [this, ia, ir](const Eigen::MatrixXd& g) {
        accumulate(ia, g);
        if (nodes_[ir].requires_grad) accumulate(ir, g.colwise().sum());
      });
}

Var Tape::scale(Var a, double factor) {
  value(a);
  const std::size_t ia = a.id;
  return record(
      {ia}, [this, ia, factor] { return Eigen::MatrixXd(factor * nodes_[ia].value); },
      [this, ia, factor](const Eigen::MatrixXd& g) { accumulate(ia, factor * g); });
}

Var Tape::relu(Var a) {
  value(a);
  const std::size_t ia = a.id;
  return record(
      {ia}, [this, ia] { return Eigen::MatrixXd(nodes_[ia].value.cwiseMax(0.0)); },
      [this, ia](const Eigen::MatrixXd& g) {
        accumulate(ia, (nodes_[ia].value.array() > 0.0).select(g, 0.0));
      });
}

Var Tape::prelu(Var a, Var slope) {
  value(a);
  const auto& sv = value(slope);
  require(sv.rows() == 1 && sv.cols() == 1, ErrorKind::kStructural, "prelu: slope must be 1x1");
  const std::size_t ia = a.id, is = slope.id;
  return record(
      {ia, is},
      [this, ia, is] {
        const double s = nodes_[is].value(0, 0);
        const auto& x = nodes_[ia].value;
        return Eigen::MatrixXd((x.array() > 0.0).select(x, s * x));
      },
      [this, ia, is](const Eigen::MatrixXd& g) {
        const double s = nodes_[is].value(0, 0);
        const auto& x = nodes_[ia].value;
        const auto positive = (x.array() > 0.0);
        if (nodes_[ia].requires_grad) accumulate(ia, positive.select(g, s * g));
        if (nodes_[is].requires_grad) {
          const double ds = positive.select(0.0, g.array() * x.array()).sum();
          accumulate(is, Eigen::MatrixXd::Constant(1, 1, ds));
        }
      });
}

Var Tape::row_l2_normalize(Var a) {
  value(a);
  const std::size_t ia = a.id;
  return record(
      {ia},
      [this, ia] {
        const auto& x = nodes_[ia].value;
        const Eigen::VectorXd norms = x.rowwise().norm().cwiseMax(kNormGuard);
        return Eigen::MatrixXd(norms.cwiseInverse().asDiagonal() * x);
      },
      [this, ia](const Eigen::MatrixXd& g) {
        const auto& x = nodes_[ia].value;
        Eigen::MatrixXd dx(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
          const double norm = x.row(i).norm();
          if (norm <= kNormGuard) {
            dx.row(i) = g.row(i) / kNormGuard;
            continue;
          }
          const Eigen::RowVectorXd y = x.row(i) / norm;
          dx.row(i) = (g.row(i) - y * g.row(i).dot(y)) / norm;
        }
        accumulate(ia, dx);
      });
}

Var Tape::mean_reduce(Var a) {
  const auto& av = value(a);
  require(av.size() > 0, ErrorKind::kStructural, "mean_reduce: empty input");
  const std::size_t ia = a.id;
  return record(
      {ia}, [this, ia] { return Eigen::MatrixXd::Constant(1, 1, nodes_[ia].value.mean()); },
      [this, ia](const Eigen::MatrixXd& g) {
        const auto& x = nodes_[ia].value;
        accumulate(ia, Eigen::MatrixXd::Constant(x.rows(), x.cols(),
                                                 g(0, 0) / static_cast<double>(x.size())));
      });
}

Var Tape::sum_rows(Var a) {
  value(a);
  const std::size_t ia = a.id;
  return record(
      {ia}, [this, ia] { return Eigen::MatrixXd(nodes_[ia].value.colwise().sum()); },
      [this, ia](const Eigen::MatrixXd& g) {
        const auto rows = nodes_[ia].value.rows();
        accumulate(ia, g.row(0).replicate(rows, 1));
      });
}

Var Tape::cosine_rows(Var a, Var b) {
  const auto& av = value(a);
  const auto& bv = value(b);
  require_shape(av.rows() == bv.rows() && av.cols() == bv.cols(), "cosine_rows", av, bv);
  const std::size_t ia = a.id, ib = b.id;
  return record(
      {ia, ib},
      [this, ia, ib] {
        const auto& x = nodes_[ia].value;
        const auto& y = nodes_[ib].value;
        Eigen::MatrixXd out(x.rows(), 1);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
          const double nx = std::max(x.row(i).norm(), kNormGuard);
          const double ny = std::max(y.row(i).norm(), kNormGuard);
          out(i, 0) = x.row(i).dot(y.row(i)) / (nx * ny);
        }
        return out;
      },
      [this, ia, ib](const Eigen::MatrixXd& g) {
        const auto& x = nodes_[ia].value;
        const auto& y = nodes_[ib].value;
        Eigen::MatrixXd dx(x.rows(), x.cols()), dy(y.rows(), y.cols());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
          const double rx = x.row(i).norm();
          const double ry = y.row(i).norm();
          const double nx = std::max(rx, kNormGuard);
          const double ny = std::max(ry, kNormGuard);
          const double c = x.row(i).dot(y.row(i)) / (nx * ny);
          Eigen::RowVectorXd gx = y.row(i) / (nx * ny);
          Eigen::RowVectorXd gy = x.row(i) / (nx * ny);
          if (rx > kNormGuard) gx -= c * x.row(i) / (rx * rx);
          if (ry > kNormGuard) gy -= c * y.row(i) / (ry * ry);
          dx.row(i) = g(i, 0) * gx;
          dy.row(i) = g(i, 0) * gy;
        }
        accumulate(ia, dx);
        accumulate(ib, dy);
      });
}

Var Tape::vstack(std::span<const Var> parts) {
  require(!parts.empty(), ErrorKind::kStructural, "vstack: no inputs");
  std::vector<std::size_t> ids;
  const auto cols = value(parts[0]).cols();
  for (Var p : parts) {
    require(value(p).cols() == cols, ErrorKind::kStructural, "vstack: column mismatch");
    ids.push_back(p.id);
  }
  return record(
      ids,
      [this, ids, cols] {
        Eigen::Index rows = 0;
        for (auto id : ids) rows += nodes_[id].value.rows();
        Eigen::MatrixXd out(rows, cols);
        Eigen::Index at = 0;
        for (auto id : ids) {
          out.middleRows(at, nodes_[id].value.rows()) = nodes_[id].value;
          at += nodes_[id].value.rows();
        }
        return out;
      },
      [this, ids](const Eigen::MatrixXd& g) {
        Eigen::Index at = 0;
        for (auto id : ids) {
          const auto rows = nodes_[id].value.rows();
          accumulate(id, g.middleRows(at, rows));
          at += rows;
        }
      });
}

void Tape::backward(Var loss) {
  const Node& l = node(loss);
  require(l.value.rows() == 1 && l.value.cols() == 1, ErrorKind::kStructural,
          "backward: loss must be a scalar");
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  accumulate(loss.id, Eigen::MatrixXd::Ones(1, 1));
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.backward) continue;
    for (auto p : n.parents) {
      if (p >= id) fail(ErrorKind::kStructural, "tape cycle detected at node " + std::to_string(id));
    }
    const Eigen::MatrixXd g = n.grad;
    n.backward(g);
  }
}

void Tape::replay() {
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    Node& n = nodes_[id];
    if (!n.forward) continue;
    for (auto p : n.parents) {
      if (p >= id) fail(ErrorKind::kStructural, "tape cycle detected at node " + std::to_string(id));
    }
    n.value = n.forward();
  }
}

}  // namespace lapboot::ad
