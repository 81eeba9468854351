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

#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "graph.hpp"

namespace lapboot::ad {

// Handle to a value recorded on a Tape.
struct Var {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::size_t id = kNone;
};

inline constexpr double kNormGuard = 1e-12;

// Reverse-mode tape over dense matrices. Operations are recorded in call
// order, so parents always precede children and backward() is a single
// reverse sweep. Gradients accumulate by summation in tape order.
//
// sparse_matmul keeps a pointer to its operator: the SparseSym must outlive
// the tape.
class Tape {
 public:
  Tape() = default;
  // Recorded closures refer back to the tape.
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Eigen::MatrixXd value, bool requires_grad = false);

  Var matmul(Var a, Var b);
  Var sparse_matmul(const SparseSym& s, Var x);
  Var add(Var a, Var b);
  Var add_row(Var a, Var row);  // row is 1 x cols, broadcast over rows
  Var scale(Var a, double factor);
  Var relu(Var a);
  Var prelu(Var a, Var slope);  // slope is 1 x 1
  Var row_l2_normalize(Var a);
  Var mean_reduce(Var a);       // 1 x 1
  Var sum_rows(Var a);          // 1 x cols
  Var cosine_rows(Var a, Var b);  // rows x 1
  Var vstack(std::span<const Var> parts);

  const Eigen::MatrixXd& value(Var v) const;
  // Zero matrix for nodes that received no gradient.
  Eigen::MatrixXd grad(Var v) const;
  bool requires_grad(Var v) const;

  // Seeds d loss = 1 and propagates to every node that requires grad.
  void backward(Var loss);
  // Recomputes every non-leaf value from its parents in tape order.
  void replay();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    bool requires_grad = false;
    bool has_grad = false;
    std::vector<std::size_t> parents;
    std::function<Eigen::MatrixXd()> forward;
    std::function<void(const Eigen::MatrixXd&)> backward;
  };

  const Node& node(Var v) const;
  Var record(std::vector<std::size_t> parents, std::function<Eigen::MatrixXd()> forward,
             std::function<void(const Eigen::MatrixXd&)> backward);
  void accumulate(std::size_t id, const Eigen::MatrixXd& g);

  std::vector<Node> nodes_;
};

}  // namespace lapboot::ad
