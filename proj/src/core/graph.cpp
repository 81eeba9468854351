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

#include "graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"

namespace lapboot {

Graph::Graph(std::size_t n_nodes, std::vector<Edge> edges,
             Eigen::MatrixXd features, std::vector<int> labels,
             std::size_t* duplicates_dropped)
    : n_(n_nodes), features_(std::move(features)), labels_(std::move(labels)) {
  for (auto& e : edges) {
    if (e.lo < 0 || e.hi < 0 || static_cast<std::size_t>(e.lo) >= n_ ||
        static_cast<std::size_t>(e.hi) >= n_) {
      fail(ErrorKind::kStructural,
           "edge (" + std::to_string(e.lo) + ", " + std::to_string(e.hi) +
               ") out of range for " + std::to_string(n_) + " nodes");
    }
    if (e.lo == e.hi) {
      fail(ErrorKind::kStructural,
           "self-loop on node " + std::to_string(e.lo));
    }
    if (e.lo > e.hi) std::swap(e.lo, e.hi);
  }
  std::sort(edges.begin(), edges.end());
  const auto before = edges.size();
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  if (duplicates_dropped) *duplicates_dropped = before - edges.size();
  edges_ = std::move(edges);

  if (features_.size() != 0 &&
      static_cast<std::size_t>(features_.rows()) != n_) {
    fail(ErrorKind::kStructural,
         "feature matrix has " + std::to_string(features_.rows()) +
             " rows for " + std::to_string(n_) + " nodes");
  }

  offsets_.assign(n_ + 1, 0);
  for (const auto& e : edges_) {
    ++offsets_[e.lo + 1];
    ++offsets_[e.hi + 1];
  }
  for (std::size_t i = 0; i < n_; ++i) offsets_[i + 1] += offsets_[i];
  adjacency_.resize(offsets_[n_]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges_) {
    adjacency_[fill[e.lo]++] = e.hi;
    adjacency_[fill[e.hi]++] = e.lo;
  }
  for (std::size_t i = 0; i < n_; ++i) {
    std::sort(adjacency_.begin() + offsets_[i], adjacency_.begin() + offsets_[i + 1]);
  }
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

Graph Graph::with_edges(std::vector<Edge> edges) const {
  return Graph(n_, std::move(edges), features_, labels_);
}

Graph Graph::with_features(Eigen::MatrixXd features) const {
  return Graph(n_, edges_, std::move(features), labels_);
}

SparseSym SparseSym::from_lower(std::size_t n, std::vector<SymEntry> entries) {
  for (const auto& e : entries) {
    if (e.row < 0 || e.col < 0 || static_cast<std::size_t>(e.row) >= n) {
      fail(ErrorKind::kStructural, "sparse entry out of range");
    }
    if (e.col > e.row) {
      fail(ErrorKind::kStructural, "sparse entry above the diagonal");
    }
  }
  std::sort(entries.begin(), entries.end(), [](const SymEntry& a, const SymEntry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseSym out(n);
  out.entries_.reserve(entries.size());
  for (const auto& e : entries) {
    if (!out.entries_.empty() && out.entries_.back().row == e.row &&
        out.entries_.back().col == e.col) {
      out.entries_.back().value += e.value;
    } else {
      out.entries_.push_back(e);
    }
  }
  return out;
}

SparseSym SparseSym::from_dense_lower(const Eigen::MatrixXd& dense, double drop_tol) {
  require(dense.rows() == dense.cols(), ErrorKind::kStructural,
          "dense matrix is not square");
  SparseSym out(static_cast<std::size_t>(dense.rows()));
  for (Eigen::Index i = 0; i < dense.rows(); ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = dense(i, j);
      if (std::abs(v) > drop_tol) {
        out.entries_.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j), v});
      }
    }
  }
  return out;
}

SparseSym SparseSym::identity(std::size_t n) {
  SparseSym out(n);
  out.entries_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.entries_.push_back({static_cast<NodeId>(i), static_cast<NodeId>(i), 1.0});
  }
  return out;
}

std::size_t SparseSym::nonzeros() const {
  std::size_t count = 0;
  for (const auto& e : entries_) {
    if (e.value != 0.0) count += e.row == e.col ? 1 : 2;
  }
  return count;
}

void SparseSym::multiply(std::span<const double> x, std::span<double> y) const {
  require(x.size() == n_ && y.size() == n_, ErrorKind::kStructural,
          "sparse multiply: dimension mismatch");
  std::fill(y.begin(), y.end(), 0.0);
  for (const auto& e : entries_) {
    y[e.row] += e.value * x[e.col];
    if (e.row != e.col) y[e.col] += e.value * x[e.row];
  }
}

Eigen::VectorXd SparseSym::operator*(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(n_));
  multiply({x.data(), static_cast<std::size_t>(x.size())},
           {y.data(), static_cast<std::size_t>(y.size())});
  return y;
}

Eigen::MatrixXd SparseSym::operator*(const Eigen::MatrixXd& x) const {
  require(static_cast<std::size_t>(x.rows()) == n_, ErrorKind::kStructural,
          "sparse multiply: dimension mismatch");
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  for (const auto& e : entries_) {
    y.row(e.row) += e.value * x.row(e.col);
    if (e.row != e.col) y.row(e.col) += e.value * x.row(e.row);
  }
  return y;
}

Eigen::MatrixXd SparseSym::to_dense() const {
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : entries_) {
    out(e.row, e.col) = e.value;
    out(e.col, e.row) = e.value;
  }
  return out;
}

Eigen::SparseMatrix<double> SparseSym::to_eigen() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * entries_.size());
  for (const auto& e : entries_) {
    triplets.emplace_back(e.row, e.col, e.value);
    if (e.row != e.col) triplets.emplace_back(e.col, e.row, e.value);
  }
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::SparseMatrix<double> out(n, n);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

SparseSym SparseSym::identity_minus() const {
  std::vector<SymEntry> entries;
  entries.reserve(entries_.size() + n_);
  for (const auto& e : entries_) entries.push_back({e.row, e.col, -e.value});
  for (std::size_t i = 0; i < n_; ++i) {
    entries.push_back({static_cast<NodeId>(i), static_cast<NodeId>(i), 1.0});
  }
  SparseSym out = from_lower(n_, std::move(entries));
  std::erase_if(out.entries_, [](const SymEntry& e) { return e.value == 0.0; });
  return out;
}

SparseSym build_adjacency(const Graph& g) {
  std::vector<SymEntry> entries;
  entries.reserve(g.num_edges());
  for (const auto& e : g.edges()) entries.push_back({e.hi, e.lo, 1.0});
  return SparseSym::from_lower(g.num_nodes(), std::move(entries));
}

NormalizedLaplacian normalized_laplacian(const SparseSym& adjacency) {
  const std::size_t n = adjacency.n();
  Eigen::VectorXd degree = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (const auto& e : adjacency.entries()) {
    require(e.row != e.col, ErrorKind::kStructural,
            "adjacency has a nonzero diagonal");
    degree[e.row] += e.value;
    degree[e.col] += e.value;
  }
  NormalizedLaplacian out;
  out.degree_root_inv = degree.unaryExpr(
      [](double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0; });
  std::vector<SymEntry> entries;
  entries.reserve(adjacency.entries().size() + n);
  for (std::size_t i = 0; i < n; ++i) {
    entries.push_back({static_cast<NodeId>(i), static_cast<NodeId>(i), 1.0});
  }
  for (const auto& e : adjacency.entries()) {
    entries.push_back({e.row, e.col,
                       -e.value * out.degree_root_inv[e.row] * out.degree_root_inv[e.col]});
  }
  out.matrix = SparseSym::from_lower(n, std::move(entries));
  return out;
}

}  // namespace lapboot
