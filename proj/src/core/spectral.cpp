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

#include "spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "error.hpp"
#include "rng.hpp"

namespace lapboot {
namespace {

struct RitzSet {
  std::vector<double> values;
  std::vector<Eigen::VectorXd> vectors;
};

struct PassResult {
  bool ok = false;
  RitzSet low;   // ascending
  RitzSet high;  // ascending
};

void orthogonalize(Eigen::VectorXd& w, const Eigen::MatrixXd& locked,
                   const Eigen::MatrixXd& basis, Eigen::Index used) {
  // Two rounds of classical Gram-Schmidt ("twice is enough").
  for (int round = 0; round < 2; ++round) {
    if (locked.cols() > 0) w -= locked * (locked.transpose() * w);
    if (used > 0) {
      auto v = basis.leftCols(used);
      w -= v * (v.transpose() * w);
    }
  }
}

// One Lanczos run restricted to the orthogonal complement of `locked`.
PassResult lanczos_pass(const SparseSym& a, const Eigen::MatrixXd& locked,
                        std::size_t want_low, std::size_t want_high,
                        const EigenSolverOptions& opts, Rng& rng,
                        std::size_t matvec_budget, EigenSolverStats& stats) {
  PassResult result;
  const auto n = static_cast<Eigen::Index>(a.n());
  const Eigen::Index dim = n - locked.cols();
  const auto want = static_cast<Eigen::Index>(want_low + want_high);
  if (want == 0 || want > dim) return result;

  Eigen::MatrixXd basis(n, std::min<Eigen::Index>(dim, std::max<Eigen::Index>(2 * want + 16, 32)));
  std::vector<double> alpha;
  std::vector<double> beta;  // beta[j] couples basis j and j + 1

  auto random_start = [&](Eigen::Index used, Eigen::VectorXd& out) {
    for (int attempt = 0; attempt < 4; ++attempt) {
      out.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) out[i] = rng.normal();
      orthogonalize(out, locked, basis, used);
      const double norm = out.norm();
      if (norm > 1e-8) {
        out /= norm;
        return true;
      }
    }
    return false;
  };

  Eigen::VectorXd v;
  if (!random_start(0, v)) return result;
  Eigen::VectorXd w(n);
  std::size_t restarts = 0;
  double anorm = 0.0;
  Eigen::Index m = 0;
  Eigen::Index next_check = want;
  const Eigen::Index stride = std::max<Eigen::Index>(4, want / 2);

  while (true) {
    if (m == basis.cols()) {
      basis.conservativeResize(Eigen::NoChange, std::min<Eigen::Index>(dim, 2 * basis.cols()));
    }
    basis.col(m) = v;
    ++m;
    a.multiply({v.data(), static_cast<std::size_t>(n)},
               {w.data(), static_cast<std::size_t>(n)});
    ++stats.matvecs;
    const double a_j = v.dot(w);
    w -= a_j * v;
    if (m > 1) w -= beta.back() * basis.col(m - 2);
    orthogonalize(w, locked, basis, m);
    const double b = w.norm();
    alpha.push_back(a_j);
    anorm = std::max(anorm, std::abs(a_j) + b + (beta.empty() ? 0.0 : beta.back()));

    const bool exhausted = m == dim;
    const bool breakdown = !exhausted && b <= 1e-12 * std::max(1.0, anorm);
    if (m >= want && (m >= next_check || breakdown || exhausted)) {
      next_check = m + stride;
      Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
      Eigen::VectorXd sub = Eigen::Map<Eigen::VectorXd>(beta.data(), m - 1);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
      tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      const auto& theta = tri.eigenvalues();
      const auto& s = tri.eigenvectors();
      const double last = exhausted ? 0.0 : b;
      bool converged = true;
      auto check = [&](Eigen::Index i) {
        const double res = last * std::abs(s(m - 1, i));
        if (res > opts.tol * std::max(1.0, std::abs(theta[i]))) converged = false;
      };
      for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(want_low); ++i) check(i);
      for (Eigen::Index i = m - static_cast<Eigen::Index>(want_high); i < m; ++i) check(i);
      if (converged || exhausted) {
        auto ritz = [&](Eigen::Index i, RitzSet& into) {
          Eigen::VectorXd y = basis.leftCols(m) * s.col(i);
          y.normalize();
          into.values.push_back(theta[i]);
          into.vectors.push_back(std::move(y));
        };
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(want_low); ++i) ritz(i, result.low);
        for (Eigen::Index i = m - static_cast<Eigen::Index>(want_high); i < m; ++i) ritz(i, result.high);
        result.ok = true;
        return result;
      }
    }
    if (stats.matvecs >= matvec_budget) return result;
    if (breakdown) {
      if (restarts == opts.max_restarts) return result;
      ++restarts;
      ++stats.restarts;
      if (!random_start(m, v)) return result;
      beta.push_back(0.0);
    } else {
      beta.push_back(b);
      v = w / b;
    }
  }
}

SpectralSummary assemble(std::size_t k, std::vector<std::pair<double, Eigen::VectorXd>> low,
                         std::vector<std::pair<double, Eigen::VectorXd>> high,
                         Eigen::Index n) {
  auto by_value = [](const auto& a, const auto& b) { return a.first < b.first; };
  std::sort(low.begin(), low.end(), by_value);
  std::sort(high.begin(), high.end(), by_value);
  SpectralSummary out;
  out.k = k;
  out.eigenvalues.resize(static_cast<Eigen::Index>(2 * k));
  out.eigenvectors.resize(n, static_cast<Eigen::Index>(2 * k));
  Eigen::Index col = 0;
  for (auto* side : {&low, &high}) {
    for (auto& [value, vec] : *side) {
      out.eigenvalues[col] = value;
      out.eigenvectors.col(col) = vec;
      ++col;
    }
  }
  return out;
}

}  // namespace

SpectralSummary dense_extremal_eigs(const Eigen::MatrixXd& m, std::size_t k) {
  const Eigen::Index n = m.rows();
  require(m.cols() == n, ErrorKind::kStructural, "dense eigensolve: matrix not square");
  require(k >= 1 && 2 * k <= static_cast<std::size_t>(n), ErrorKind::kInvalidArgument,
          "extremal_eigs: need 1 <= k <= n/2");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) {
    fail(ErrorKind::kNumerical, "dense eigensolve did not converge");
  }
  const auto kk = static_cast<Eigen::Index>(k);
  SpectralSummary out;
  out.k = k;
  out.eigenvalues.resize(2 * kk);
  out.eigenvectors.resize(n, 2 * kk);
  out.eigenvalues.head(kk) = es.eigenvalues().head(kk);
  out.eigenvalues.tail(kk) = es.eigenvalues().tail(kk);
  out.eigenvectors.leftCols(kk) = es.eigenvectors().leftCols(kk);
  out.eigenvectors.rightCols(kk) = es.eigenvectors().rightCols(kk);
  return out;
}

SpectralSummary extremal_eigs(const SparseSym& m, std::size_t k,
                              const EigenSolverOptions& opts,
                              EigenSolverStats* stats_out) {
  const std::size_t n = m.n();
  require(k >= 1 && 2 * k <= n, ErrorKind::kInvalidArgument,
          "extremal_eigs: need 1 <= k <= n/2 (k=" + std::to_string(k) +
              ", n=" + std::to_string(n) + ")");
  EigenSolverStats stats;
  auto finish = [&](SpectralSummary s) {
    if (stats_out) *stats_out = stats;
    return s;
  };
  auto dense = [&]() {
    stats.dense = true;
    return finish(dense_extremal_eigs(m.to_dense(), k));
  };
  if (2 * k >= n) return dense();

  const std::size_t budget = opts.max_iter > 0 ? opts.max_iter : 20 * n;
  Rng rng(opts.seed);
  auto fallback = [&]() {
    if (n <= opts.dense_fallback_limit) return dense();
    fail(ErrorKind::kNumerical,
         "Lanczos failed after " + std::to_string(stats.restarts) +
             " restarts and no dense fallback for n=" + std::to_string(n));
  };

  const auto nn = static_cast<Eigen::Index>(n);
  ++stats.passes;
  PassResult first = lanczos_pass(m, Eigen::MatrixXd(nn, 0), k, k, opts, rng, budget, stats);
  if (!first.ok) return fallback();

  std::vector<std::pair<double, Eigen::VectorXd>> low, high;
  std::vector<Eigen::VectorXd> locked_cols;
  for (std::size_t i = 0; i < k; ++i) {
    low.emplace_back(first.low.values[i], first.low.vectors[i]);
    high.emplace_back(first.high.values[i], first.high.vectors[i]);
    locked_cols.push_back(first.low.vectors[i]);
    locked_cols.push_back(first.high.vectors[i]);
  }

  // Deflated passes: look for eigenvalues hidden by multiplicity.
  while (locked_cols.size() < n) {
    Eigen::MatrixXd locked(nn, static_cast<Eigen::Index>(locked_cols.size()));
    for (std::size_t i = 0; i < locked_cols.size(); ++i) {
      locked.col(static_cast<Eigen::Index>(i)) = locked_cols[i];
    }
    const std::size_t left = n - locked_cols.size();
    ++stats.passes;
    PassResult pass = lanczos_pass(m, locked, 1, left >= 2 ? 1 : 0, opts, rng, budget, stats);
    if (!pass.ok) return fallback();

    bool improved = false;
    auto consider_low = [&](double value, const Eigen::VectorXd& vec) {
      auto worst = std::max_element(low.begin(), low.end(), [](const auto& a, const auto& b) {
        return a.first < b.first;
      });
      if (value < worst->first - opts.tol * std::max(1.0, std::abs(value))) {
        *worst = {value, vec};
        improved = true;
      }
    };
    auto consider_high = [&](double value, const Eigen::VectorXd& vec) {
      auto worst = std::min_element(high.begin(), high.end(), [](const auto& a, const auto& b) {
        return a.first < b.first;
      });
      if (value > worst->first + opts.tol * std::max(1.0, std::abs(value))) {
        *worst = {value, vec};
        improved = true;
      }
    };
    for (std::size_t i = 0; i < pass.low.values.size(); ++i) {
      consider_low(pass.low.values[i], pass.low.vectors[i]);
      consider_high(pass.low.values[i], pass.low.vectors[i]);
      locked_cols.push_back(pass.low.vectors[i]);
    }
    for (std::size_t i = 0; i < pass.high.values.size(); ++i) {
      consider_high(pass.high.values[i], pass.high.vectors[i]);
      locked_cols.push_back(pass.high.vectors[i]);
    }
    if (!improved) break;
  }

  SpectralSummary out = assemble(k, std::move(low), std::move(high), nn);
  if (max_scaled_residual(m, out) > 100.0 * opts.tol) return fallback();
  return finish(std::move(out));
}

double max_scaled_residual(const SparseSym& m, const SpectralSummary& s) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) {
    const Eigen::VectorXd v = s.eigenvectors.col(i);
    const double lambda = s.eigenvalues[i];
    const double res = (m * v - lambda * v).norm() / std::max(1.0, std::abs(lambda));
    worst = std::max(worst, res);
  }
  return worst;
}

LowerTriangular::LowerTriangular(std::size_t n, std::vector<NodePair> support,
                                 std::vector<double> values)
    : n_(n), support_(std::move(support)), values_(std::move(values)) {
  require(support_.size() == values_.size(), ErrorKind::kStructural,
          "lower-triangular support and values differ in length");
  for (const auto& p : support_) {
    if (p.col < 0 || p.row <= p.col || static_cast<std::size_t>(p.row) >= n_) {
      fail(ErrorKind::kStructural, "pair (" + std::to_string(p.row) + ", " +
                                       std::to_string(p.col) +
                                       ") is not strictly lower-triangular in range");
    }
  }
}

LowerTriangular LowerTriangular::full_support(std::size_t n) {
  std::vector<NodePair> support;
  support.reserve(n > 1 ? n * (n - 1) / 2 : 0);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      support.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j)});
    }
  }
  std::vector<double> values(support.size(), 0.0);
  return LowerTriangular(n, std::move(support), std::move(values));
}

LowerTriangular LowerTriangular::zeros_like(const LowerTriangular& other) {
  LowerTriangular out = other;
  std::fill(out.values_.begin(), out.values_.end(), 0.0);
  return out;
}

double LowerTriangular::sum() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0);
}

double LowerTriangular::min() const {
  return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double LowerTriangular::max() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

std::size_t LowerTriangular::count_nonzero() const {
  return static_cast<std::size_t>(
      std::count_if(values_.begin(), values_.end(), [](double v) { return v != 0.0; }));
}

Eigen::MatrixXd LowerTriangular::symmetric_dense() const {
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t e = 0; e < support_.size(); ++e) {
    out(support_[e].row, support_[e].col) += values_[e];
    out(support_[e].col, support_[e].row) += values_[e];
  }
  return out;
}

std::size_t LowerTriangular::nonzero_bytes() const {
  return count_nonzero() * (2 * sizeof(NodeId) + sizeof(double));
}

SparseSym build_modified_laplacian(const NormalizedLaplacian& lap,
                                   const Eigen::VectorXd& c,
                                   const LowerTriangular& delta) {
  const std::size_t n = lap.matrix.n();
  require(static_cast<std::size_t>(c.size()) == n && delta.n() == n,
          ErrorKind::kStructural, "modified Laplacian: dimension mismatch");
  std::vector<Eigen::Triplet<double>> s_triplets;
  for (std::size_t e = 0; e < delta.size(); ++e) {
    const auto [i, j] = delta.support()[e];
    const double s = c[i] * c[j] * delta.values()[e];
    if (s == 0.0) continue;
    s_triplets.emplace_back(i, j, s);
    s_triplets.emplace_back(j, i, s);
  }
  if (s_triplets.empty()) return lap.matrix;

  const auto nn = static_cast<Eigen::Index>(n);
  const Eigen::SparseMatrix<double> l = lap.matrix.to_eigen();
  const double density =
      static_cast<double>(s_triplets.size()) / std::max(1.0, static_cast<double>(nn) * nn);
  if (density > 0.1) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(nn, nn);
    for (const auto& t : s_triplets) s(t.row(), t.col()) = t.value();
    const Eigen::MatrixXd ls = l * s;
    Eigen::MatrixXd m = lap.matrix.to_dense();
    m += 0.5 * (ls + ls.transpose());
    return SparseSym::from_dense_lower(m, 0.0);
  }

  Eigen::SparseMatrix<double> s(nn, nn);
  s.setFromTriplets(s_triplets.begin(), s_triplets.end());
  const Eigen::SparseMatrix<double> ls = (l * s).pruned();
  const Eigen::SparseMatrix<double> sl = ls.transpose();
  const Eigen::SparseMatrix<double> m = l + 0.5 * (ls + sl);
  std::vector<SymEntry> entries;
  entries.reserve(static_cast<std::size_t>(m.nonZeros() / 2 + nn));
  for (Eigen::Index col = 0; col < m.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, col); it; ++it) {
      if (it.row() >= it.col() && it.value() != 0.0) {
        entries.push_back({static_cast<NodeId>(it.row()), static_cast<NodeId>(it.col()),
                           it.value()});
      }
    }
  }
  return SparseSym::from_lower(n, std::move(entries));
}

namespace {

void check_pair(const SpectralSummary& orig, const SpectralSummary& mod, int sign) {
  require(sign == 1 || sign == -1, ErrorKind::kInvalidArgument,
          "spectral loss sign must be +1 or -1");
  require(orig.k == mod.k && orig.eigenvalues.size() == mod.eigenvalues.size() &&
              orig.eigenvalues.size() == static_cast<Eigen::Index>(2 * orig.k),
          ErrorKind::kStructural, "spectral summaries have different K");
  require(orig.k > 0, ErrorKind::kInvalidArgument, "spectral summaries are empty");
}

}  // namespace

double spectral_loss(const SpectralSummary& orig, const SpectralSummary& mod,
                     int sign, SpectralObjective objective) {
  check_pair(orig, mod, sign);
  const double scale = static_cast<double>(sign) / static_cast<double>(2 * orig.k);
  if (objective == SpectralObjective::kSquaredNorm) {
    return scale * mod.eigenvalues.squaredNorm();
  }
  return scale * (mod.eigenvalues - orig.eigenvalues).squaredNorm();
}

LowerTriangular spectral_loss_grad(const NormalizedLaplacian& lap,
                                   const Eigen::VectorXd& c,
                                   const LowerTriangular& delta,
                                   const SpectralSummary& mod_summary,
                                   const SpectralSummary& orig_summary, int sign,
                                   SpectralObjective objective,
                                   GradientDiagnostics* diagnostics) {
  check_pair(orig_summary, mod_summary, sign);
  const std::size_t n = lap.matrix.n();
  require(static_cast<std::size_t>(c.size()) == n && delta.n() == n &&
              static_cast<std::size_t>(mod_summary.eigenvectors.rows()) == n,
          ErrorKind::kStructural, "spectral gradient: dimension mismatch");

  const Eigen::Index count = mod_summary.eigenvalues.size();
  const double k = static_cast<double>(mod_summary.k);
  Eigen::VectorXd weight(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    const double lm = mod_summary.eigenvalues[i];
    weight[i] = objective == SpectralObjective::kSquaredNorm
                    ? sign * lm / k
                    : sign * (lm - orig_summary.eigenvalues[i]) / k;
  }

  GradientDiagnostics diag;
  for (Eigen::Index start = 0; start < count;) {
    Eigen::Index end = start + 1;
    while (end < count &&
           mod_summary.eigenvalues[end] - mod_summary.eigenvalues[end - 1] < 1e-8) {
      ++end;
    }
    if (end - start > 1) {
      ++diag.degenerate_clusters;
      const double mean = weight.segment(start, end - start).mean();
      weight.segment(start, end - start).setConstant(mean);
      for (Eigen::Index i = start; i < end; ++i) diag.flagged.push_back(static_cast<std::size_t>(i));
    }
    start = end;
  }
  if (diagnostics) *diagnostics = diag;

  const Eigen::MatrixXd& v = mod_summary.eigenvectors;
  const Eigen::MatrixXd u = lap.matrix * v;
  // Row-major copies so the per-pair dot products are contiguous.
  const Eigen::MatrixXd uw_t = (u * weight.asDiagonal()).transpose();
  const Eigen::MatrixXd v_t = v.transpose();

  LowerTriangular grad = LowerTriangular::zeros_like(delta);
  for (std::size_t e = 0; e < delta.size(); ++e) {
    const auto [i, j] = delta.support()[e];
    const double cc = c[i] * c[j];
    if (cc == 0.0) continue;
    grad.values()[e] = cc * (uw_t.col(i).dot(v_t.col(j)) + uw_t.col(j).dot(v_t.col(i)));
  }
  return grad;
}

}  // namespace lapboot
