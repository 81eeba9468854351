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

#include "centrality.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"

namespace lapboot {

std::string_view to_string(CentralityMeasure m) {
  switch (m) {
    case CentralityMeasure::kDegree: return "degree";
    case CentralityMeasure::kPageRank: return "pagerank";
    case CentralityMeasure::kKatz: return "katz";
  }
  return "unknown";
}

CentralityMeasure parse_centrality_measure(std::string_view name) {
  if (name == "degree") return CentralityMeasure::kDegree;
  if (name == "pagerank") return CentralityMeasure::kPageRank;
  if (name == "katz") return CentralityMeasure::kKatz;
  fail(ErrorKind::kInvalidArgument,
       "unknown centrality measure '" + std::string(name) + "'");
}

Eigen::VectorXd degree_centrality(const Graph& g) {
  const std::size_t n = g.num_nodes();
  const double denom = static_cast<double>(std::max<std::size_t>(1, n > 0 ? n - 1 : 0));
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    out[static_cast<Eigen::Index>(i)] =
        static_cast<double>(g.degree(static_cast<NodeId>(i))) / denom;
  }
  return out;
}

IterativeScores pagerank(const Graph& g, double damping, double tol,
                         std::size_t max_iter) {
  require(damping > 0.0 && damping < 1.0, ErrorKind::kInvalidArgument,
          "pagerank damping must lie in (0, 1)");
  require(tol > 0.0, ErrorKind::kInvalidArgument, "pagerank tol must be positive");
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  IterativeScores out;
  if (n == 0) {
    out.scores.resize(0);
    return out;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, inv_n);
  Eigen::VectorXd next(n);
  out.converged = false;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    double dangling = 0.0;
    next.setZero();
    for (Eigen::Index v = 0; v < n; ++v) {
      const auto deg = g.degree(static_cast<NodeId>(v));
      if (deg == 0) {
        dangling += x[v];
        continue;
      }
      const double share = x[v] / static_cast<double>(deg);
      for (NodeId u : g.neighbors(static_cast<NodeId>(v))) next[u] += share;
    }
    next = damping * next;
    next.array() += (damping * dangling + (1.0 - damping)) * inv_n;
    // Renormalize away accumulated rounding so the sum stays at 1.
    next /= next.sum();
    out.residual = (next - x).lpNorm<1>();
    x.swap(next);
    out.iterations = it;
    if (out.residual <= tol) {
      out.converged = true;
      break;
    }
  }
  out.scores = std::move(x);
  return out;
}

double adjacency_spectral_radius(const Graph& g, double tol, std::size_t max_iter) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  if (n == 0 || g.num_edges() == 0) return 0.0;
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  Eigen::VectorXd y(n);
  double estimate = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    y = x;  // shift by I
    for (const auto& e : g.edges()) {
      y[e.lo] += x[e.hi];
      y[e.hi] += x[e.lo];
    }
    const double rayleigh = x.dot(y) - 1.0;
    const double norm = y.norm();
    x = y / norm;
    if (std::abs(rayleigh - estimate) <= tol * std::max(1.0, std::abs(rayleigh))) {
      estimate = rayleigh;
      break;
    }
    estimate = rayleigh;
  }
  return estimate;
}

IterativeScores katz_centrality(const Graph& g, double alpha, double tol,
                                std::size_t max_iter) {
  require(alpha >= 0.0, ErrorKind::kInvalidArgument, "katz alpha must be non-negative");
  require(tol > 0.0, ErrorKind::kInvalidArgument, "katz tol must be positive");
  const double radius = adjacency_spectral_radius(g);
  if (alpha * radius >= 1.0) {
    fail(ErrorKind::kInvalidArgument,
         "katz alpha " + std::to_string(alpha) + " >= 1/lambda_max (lambda_max ~ " +
             std::to_string(radius) + "): series diverges");
  }
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  IterativeScores out;
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd next(n);
  out.converged = n == 0;
  for (std::size_t it = 1; it <= max_iter && n > 0; ++it) {
    next.setZero();
    for (const auto& e : g.edges()) {
      next[e.lo] += x[e.hi];
      next[e.hi] += x[e.lo];
    }
    next = alpha * next;
    next.array() += 1.0;
    out.residual = (next - x).lpNorm<Eigen::Infinity>();
    x.swap(next);
    out.iterations = it;
    if (out.residual <= tol) {
      out.converged = true;
      break;
    }
  }
  out.scores = std::move(x);
  return out;
}

Eigen::VectorXd combine_and_normalize(const Eigen::MatrixXd& scores,
                                      const Eigen::VectorXd& weights) {
  require(scores.rows() == weights.size(), ErrorKind::kStructural,
          "centrality weights do not match the number of measures");
  require(weights.allFinite(), ErrorKind::kInvalidArgument,
          "centrality weights must be finite");
  require((weights.array() != 0.0).any() || weights.size() == 0,
          ErrorKind::kInvalidArgument, "at least one centrality weight must be nonzero");
  Eigen::VectorXd combined = scores.transpose() * weights;
  if (combined.size() == 0) return combined;
  const double lo = combined.minCoeff();
  const double hi = combined.maxCoeff();
  if (!(hi > lo)) return Eigen::VectorXd::Constant(combined.size(), 0.5);
  return (combined.array() - lo) / (hi - lo);
}

CentralityProfile compute_centrality(const Graph& g, const CentralityOptions& opts) {
  require(!opts.measures.empty(), ErrorKind::kInvalidArgument,
          "at least one centrality measure is required");
  const auto k = static_cast<Eigen::Index>(opts.measures.size());
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  CentralityProfile profile;
  profile.measures = opts.measures;
  profile.scores.resize(k, n);
  for (Eigen::Index m = 0; m < k; ++m) {
    switch (opts.measures[static_cast<std::size_t>(m)]) {
      case CentralityMeasure::kDegree:
        profile.scores.row(m) = degree_centrality(g).transpose();
        break;
      case CentralityMeasure::kPageRank: {
        auto pr = pagerank(g, opts.pagerank_damping, opts.tol, opts.max_iter);
        profile.converged = profile.converged && pr.converged;
        profile.scores.row(m) = pr.scores.transpose();
        break;
      }
      case CentralityMeasure::kKatz: {
        const double radius = adjacency_spectral_radius(g);
        const double alpha = radius > 0.0 ? opts.katz_scale / radius : 0.0;
        auto katz = katz_centrality(g, alpha, opts.tol, opts.max_iter);
        profile.converged = profile.converged && katz.converged;
        profile.scores.row(m) = katz.scores.transpose();
        break;
      }
    }
  }
  if (opts.weights.size() == 0) {
    profile.weights = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  } else {
    profile.weights = opts.weights;
  }
  profile.combined = combine_and_normalize(profile.scores, profile.weights);
  return profile;
}

CentralityProfile reweighted(const CentralityProfile& profile,
                             const Eigen::VectorXd& weights) {
  CentralityProfile out = profile;
  out.weights = weights;
  out.combined = combine_and_normalize(out.scores, weights);
  return out;
}

namespace {

void grid_recurse(std::size_t dims, std::size_t steps, std::size_t remaining,
                  std::vector<std::size_t>& current,
                  std::vector<Eigen::VectorXd>& out) {
  if (current.size() + 1 == dims) {
    current.push_back(remaining);
    Eigen::VectorXd w(static_cast<Eigen::Index>(dims));
    for (std::size_t i = 0; i < dims; ++i) {
      w[static_cast<Eigen::Index>(i)] =
          static_cast<double>(current[i]) / static_cast<double>(steps);
    }
    out.push_back(std::move(w));
    current.pop_back();
    return;
  }
  for (std::size_t take = 0; take <= remaining; ++take) {
    current.push_back(take);
    grid_recurse(dims, steps, remaining - take, current, out);
    current.pop_back();
  }
}

}  // namespace

std::vector<Eigen::VectorXd> simplex_grid(std::size_t dims, std::size_t steps) {
  require(dims > 0 && steps > 0, ErrorKind::kInvalidArgument,
          "simplex grid needs positive dims and steps");
  std::vector<Eigen::VectorXd> out;
  std::vector<std::size_t> current;
  grid_recurse(dims, steps, steps, current, out);
  return out;
}

WeightSearchResult search_weights(
    const CentralityProfile& profile, std::size_t steps,
    const std::function<double(const Eigen::VectorXd& combined)>& score) {
  WeightSearchResult result;
  bool first = true;
  for (auto& w : simplex_grid(profile.measures.size(), steps)) {
    const double s = score(combine_and_normalize(profile.scores, w));
    result.scores.push_back(s);
    if (first || s > result.score) {
      result.score = s;
      result.weights = w;
      first = false;
    }
  }
  return result;
}

}  // namespace lapboot
