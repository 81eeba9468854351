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
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "graph.hpp"

namespace lapboot {

enum class CentralityMeasure { kDegree, kPageRank, kKatz };

std::string_view to_string(CentralityMeasure m);
CentralityMeasure parse_centrality_measure(std::string_view name);

// Result of an iterative centrality solve. Non-convergence is reported, not
// thrown: the last iterate is still returned.
struct IterativeScores {
  Eigen::VectorXd scores;
  bool converged = true;
  std::size_t iterations = 0;
  double residual = 0.0;
};

// deg(i) / max(1, n - 1).
Eigen::VectorXd degree_centrality(const Graph& g);

// Power iteration on damping * row-normalized A + (1 - damping) / n with
// dangling mass spread uniformly. Stops when the L1 change is <= tol.
IterativeScores pagerank(const Graph& g, double damping = 0.85,
                         double tol = 1e-12, std::size_t max_iter = 1000);

// Power-iteration estimate of lambda_max(A) (shifted by I so bipartite graphs
// converge).
double adjacency_spectral_radius(const Graph& g, double tol = 1e-12,
                                 std::size_t max_iter = 5000);

// Solves x = alpha * A x + 1 by fixed-point iteration. Throws
// kInvalidArgument when alpha * lambda_max(A) >= 1.
IterativeScores katz_centrality(const Graph& g, double alpha,
                                double tol = 1e-12,
                                std::size_t max_iter = 10000);

// Weighted sum over measure rows then min-max normalization to [0, 1].
// A constant combined vector maps to 0.5 everywhere.
Eigen::VectorXd combine_and_normalize(const Eigen::MatrixXd& scores,
                                      const Eigen::VectorXd& weights);

struct CentralityOptions {
  std::vector<CentralityMeasure> measures{CentralityMeasure::kDegree,
                                          CentralityMeasure::kPageRank,
                                          CentralityMeasure::kKatz};
  Eigen::VectorXd weights;  // empty: uniform 1/K
  double pagerank_damping = 0.85;
  double katz_scale = 0.9;  // alpha = katz_scale / lambda_max estimate
  double tol = 1e-12;
  std::size_t max_iter = 10000;
};

struct CentralityProfile {
  std::vector<CentralityMeasure> measures;
  Eigen::MatrixXd scores;    // measures x nodes
  Eigen::VectorXd weights;   // one per measure
  Eigen::VectorXd combined;  // normalized to [0, 1]
  bool converged = true;
};

CentralityProfile compute_centrality(const Graph& g,
                                     const CentralityOptions& opts = {});

CentralityProfile reweighted(const CentralityProfile& profile,
                             const Eigen::VectorXd& weights);

// All weight vectors on the probability simplex with coordinates in
// {0, 1/steps, ..., 1}.
std::vector<Eigen::VectorXd> simplex_grid(std::size_t dims, std::size_t steps);

struct WeightSearchResult {
  Eigen::VectorXd weights;
  double score = 0.0;
  std::vector<double> scores;  // one per grid point, grid order
};

// Optional mixing-weight search: evaluates `score` (higher is better, e.g.
// downstream probe accuracy) on every simplex grid point. Ties keep the
// earliest grid point.
WeightSearchResult search_weights(
    const CentralityProfile& profile, std::size_t steps,
    const std::function<double(const Eigen::VectorXd& combined)>& score);

}  // namespace lapboot
