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
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "graph.hpp"

namespace lapboot {

// K algebraically smallest and K largest eigenpairs of a symmetric operator.
struct SpectralSummary {
  std::size_t k = 0;
  Eigen::VectorXd eigenvalues;   // ascending, length 2k
  Eigen::MatrixXd eigenvectors;  // n x 2k, orthonormal columns
};

struct EigenSolverOptions {
  double tol = 1e-10;            // residual <= tol * max(1, |lambda|)
  std::size_t max_iter = 0;      // matvec budget; 0 means 20 * n
  std::uint64_t seed = 0x1a2c05;
  std::size_t max_restarts = 3;  // per Lanczos pass, on breakdown
  std::size_t dense_fallback_limit = 2048;
};

struct EigenSolverStats {
  std::size_t matvecs = 0;
  std::size_t restarts = 0;
  std::size_t passes = 0;
  bool dense = false;
};

// Lanczos with full reorthogonalization. After the first pass the found
// vectors are locked and further passes search their orthogonal complement,
// which recovers eigenvalues of multiplicity > 1 that a single Krylov space
// cannot see. Uses a dense decomposition when 2k >= n, and as a fallback
// after repeated breakdowns for n <= dense_fallback_limit.
SpectralSummary extremal_eigs(const SparseSym& m, std::size_t k,
                              const EigenSolverOptions& opts = {},
                              EigenSolverStats* stats = nullptr);

SpectralSummary dense_extremal_eigs(const Eigen::MatrixXd& m, std::size_t k);

// Max residual ||M v - lambda v|| / max(1, |lambda|) over the summary.
double max_scaled_residual(const SparseSym& m, const SpectralSummary& s);

struct NodePair {
  NodeId row = 0;  // row > col
  NodeId col = 0;

  friend bool operator==(const NodePair&, const NodePair&) = default;
};

// Strictly lower-triangular matrix with values on a fixed support. Used for
// augmentation probabilities, their gradients and Bernoulli samples.
class LowerTriangular {
 public:
  LowerTriangular() = default;
  LowerTriangular(std::size_t n, std::vector<NodePair> support,
                  std::vector<double> values);

  // Every pair i > j, zero values. Row-major order.
  static LowerTriangular full_support(std::size_t n);
  static LowerTriangular zeros_like(const LowerTriangular& other);

  std::size_t n() const { return n_; }
  std::size_t size() const { return support_.size(); }
  const std::vector<NodePair>& support() const { return support_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  double sum() const;
  double min() const;
  double max() const;
  std::size_t count_nonzero() const;
  // Delta + Delta^T.
  Eigen::MatrixXd symmetric_dense() const;
  // Storage footprint of the nonzero entries as (row, col, value) triplets.
  std::size_t nonzero_bytes() const;

  friend bool operator==(const LowerTriangular&, const LowerTriangular&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<NodePair> support_;
  std::vector<double> values_;
};

// Returns sym(L + L * diag(c) (Delta + Delta^T) diag(c)), i.e.
// L + (L S + S L) / 2 with S = diag(c) Delta_sym diag(c).
SparseSym build_modified_laplacian(const NormalizedLaplacian& lap,
                                   const Eigen::VectorXd& c,
                                   const LowerTriangular& delta);

enum class SpectralObjective {
  kSquaredDifference,  // sign / 2K * sum (lambda_mod - lambda_orig)^2
  kSquaredNorm,        // sign / 2K * sum lambda_mod^2
};

double spectral_loss(const SpectralSummary& orig, const SpectralSummary& mod,
                     int sign,
                     SpectralObjective objective = SpectralObjective::kSquaredDifference);

struct GradientDiagnostics {
  std::size_t degenerate_clusters = 0;  // clusters with gap < 1e-8
  std::vector<std::size_t> flagged;     // eigen-indices inside such clusters
};

// d loss / d Delta on the support of `delta`, by first-order eigenvalue
// perturbation (d lambda_k = v_k^T dM v_k). Eigenvalues closer than 1e-8 are
// treated as a cluster whose members share the averaged weight, which is the
// derivative of the cluster's averaged projector.
LowerTriangular spectral_loss_grad(
    const NormalizedLaplacian& lap, const Eigen::VectorXd& c,
    const LowerTriangular& delta, const SpectralSummary& mod_summary,
    const SpectralSummary& orig_summary, int sign,
    SpectralObjective objective = SpectralObjective::kSquaredDifference,
    GradientDiagnostics* diagnostics = nullptr);

}  // namespace lapboot
