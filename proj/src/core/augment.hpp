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
#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "graph.hpp"
#include "spectral.hpp"

namespace lapboot {

struct AugmentConfig {
  double budget_ratio = 0.5;      // r
  double step = 2.0;              // eta (eta_0 when decaying)
  std::size_t iterations = 50;    // T
  std::size_t k = 100;            // extremal eigenpairs per side, clamped to n/2
  bool decay = true;              // eta_t = eta_0 / sqrt(t)
  int ascent_sign = 1;            // +1: Delta1 ascends, Delta2 descends
  SpectralObjective objective = SpectralObjective::kSquaredDifference;
  std::size_t full_support_limit = 2000;  // above this n the support is restricted
  double support_ratio = 0.01;    // fraction of non-edges kept when restricted
  EigenSolverOptions eigen;
};

struct AugmentationPlan {
  std::size_t n = 0;
  std::size_t k = 0;  // effective K after clamping
  double budget_ratio = 0.0;
  double budget = 0.0;
  std::size_t iterations = 0;
  double step = 0.0;
  Eigen::VectorXd centrality;
  LowerTriangular delta_max;  // Delta1
  LowerTriangular delta_min;  // Delta2
  std::vector<double> loss_max_trace;  // divergence at each iterate before its step
  std::vector<double> loss_min_trace;
  double final_loss_max = 0.0;
  double final_loss_min = 0.0;
};

struct AugmentedViews {
  NormalizedLaplacian view1;  // from the max-view sample
  NormalizedLaplacian view2;  // from the min-view sample
  LowerTriangular sample1;    // binary P1
  LowerTriangular sample2;    // binary P2
  std::uint64_t sample_seed = 0;
};

// B = r * |E|; sum_ij A_ij double-counts each undirected edge.
double compute_budget(const Graph& g, double r);

// Delta_ij = c_i c_j on every strictly lower pair, for both views.
std::pair<LowerTriangular, LowerTriangular> init_deltas(const Eigen::VectorXd& c);
LowerTriangular init_delta(const Eigen::VectorXd& c, std::vector<NodePair> support);

// Clip to [0, 1], then scale uniformly by budget / sum when the sum exceeds
// the budget.
void project_box_budget(LowerTriangular& delta, double budget);
LowerTriangular projected_box_budget(LowerTriangular delta, double budget);

// All pairs for n <= full_support_limit; otherwise the existing edges plus the
// support_ratio fraction of non-edges with the largest c_i * c_j.
std::vector<NodePair> augmentation_support(const Graph& g, const Eigen::VectorXd& c,
                                           const AugmentConfig& cfg);

using AugmentObserver = std::function<void(std::size_t iteration,
                                           const LowerTriangular& delta_max,
                                           const LowerTriangular& delta_min)>;

// Alternating max/min spectral optimization of the two augmentation matrices.
AugmentationPlan optimize_views(const Graph& g, const NormalizedLaplacian& lap,
                                const Eigen::VectorXd& c, const AugmentConfig& cfg,
                                const AugmentObserver& observer = {});

// Spectral divergence of the expected view built from `delta`.
double view_divergence(const NormalizedLaplacian& lap, const Eigen::VectorXd& c,
                       const LowerTriangular& delta, const SpectralSummary& orig,
                       const EigenSolverOptions& eigen = {});

// Bernoulli sampling P ~ B(Delta) on each support entry. For n above
// `subsample_threshold` each entry is first kept with probability rho.
AugmentedViews sample_views(const NormalizedLaplacian& lap, const AugmentationPlan& plan,
                            std::uint64_t seed, double rho = 1.0,
                            std::size_t subsample_threshold = 2000);

LowerTriangular sample_bernoulli(const LowerTriangular& delta, std::uint64_t seed,
                                 double rho = 1.0, bool subsample = false);

// Versioned text format; values use shortest round-trip decimal so a
// save/load/save cycle is byte-identical.
void save_plan(std::ostream& out, const AugmentationPlan& plan);
AugmentationPlan load_plan(std::istream& in);
void save_plan_file(const std::string& path, const AugmentationPlan& plan);
AugmentationPlan load_plan_file(const std::string& path);

}  // namespace lapboot
