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
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace lapboot {

using NodeId = std::int32_t;

// Undirected edge stored canonically with lo < hi.
struct Edge {
  NodeId lo = 0;
  NodeId hi = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Sparse undirected graph with dense node features and optional labels.
// Immutable after construction.
class Graph {
 public:
  Graph() = default;

  // Canonicalizes (min, max), sorts and drops duplicate pairs. Self-loops and
  // out-of-range endpoints are structural errors. `duplicates_dropped`, when
  // given, receives the number of repeated pairs removed.
  Graph(std::size_t n_nodes, std::vector<Edge> edges,
        Eigen::MatrixXd features = {}, std::vector<int> labels = {},
        std::size_t* duplicates_dropped = nullptr);

  std::size_t num_nodes() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Eigen::MatrixXd& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  bool has_labels() const { return !labels_.empty(); }

  std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
  std::span<const NodeId> neighbors(NodeId v) const {
    return {adjacency_.data() + offsets_[v], degree(v)};
  }
  bool has_edge(NodeId u, NodeId v) const;

  Graph with_edges(std::vector<Edge> edges) const;
  Graph with_features(Eigen::MatrixXd features) const;

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_ && a.labels_ == b.labels_ &&
           a.features_.rows() == b.features_.rows() &&
           a.features_.cols() == b.features_.cols() &&
           a.features_ == b.features_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  Eigen::MatrixXd features_;
  std::vector<int> labels_;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> adjacency_;
};

struct SymEntry {
  NodeId row = 0;  // row >= col
  NodeId col = 0;
  double value = 0.0;
};

// Symmetric real matrix stored as its lower triangle plus diagonal. Entries are
// sorted row-major and unique; the mirrored upper triangle is implicit, so the
// materialized matrix equals its transpose exactly.
class SparseSym {
 public:
  explicit SparseSym(std::size_t n = 0) : n_(n) {}

  // Entries may come in any order and may repeat (repeats are summed). Entries
  // above the diagonal are a structural error.
  static SparseSym from_lower(std::size_t n, std::vector<SymEntry> entries);

  // Reads the lower triangle of `dense`; entries with |x| <= drop_tol are
  // skipped.
  static SparseSym from_dense_lower(const Eigen::MatrixXd& dense,
                                    double drop_tol = 0.0);

  static SparseSym identity(std::size_t n);

  std::size_t n() const { return n_; }
  const std::vector<SymEntry>& entries() const { return entries_; }
  std::size_t stored_nonzeros() const { return entries_.size(); }
  // Nonzeros of the full materialized matrix.
  std::size_t nonzeros() const;
  std::size_t bytes() const { return entries_.size() * sizeof(SymEntry); }

  void multiply(std::span<const double> x, std::span<double> y) const;
  Eigen::VectorXd operator*(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd operator*(const Eigen::MatrixXd& x) const;

  Eigen::MatrixXd to_dense() const;
  Eigen::SparseMatrix<double> to_eigen() const;

  // Returns I - this, dropping exact zeros.
  SparseSym identity_minus() const;

 private:
  std::size_t n_;
  std::vector<SymEntry> entries_;
};

struct NormalizedLaplacian {
  SparseSym matrix;                 // I - D^{-1/2} A D^{-1/2}
  Eigen::VectorXd degree_root_inv;  // 0 for isolated nodes
};

SparseSym build_adjacency(const Graph& g);

// Isolated nodes get D^{-1/2}_ii = 0, hence a unit diagonal and empty
// off-diagonal row.
NormalizedLaplacian normalized_laplacian(const SparseSym& adjacency);

inline NormalizedLaplacian normalized_laplacian(const Graph& g) {
  return normalized_laplacian(build_adjacency(g));
}

}  // namespace lapboot
