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

#include "augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>

#include "error.hpp"
#include "rng.hpp"
#include "textio.hpp"

namespace lapboot {

double compute_budget(const Graph& g, double r) {
  require(r > 0.0 && r <= 1.0, ErrorKind::kInvalidArgument,
          "budget ratio must lie in (0, 1]");
  return r * static_cast<double>(g.num_edges());
}

LowerTriangular init_delta(const Eigen::VectorXd& c, std::vector<NodePair> support) {
  std::vector<double> values;
  values.reserve(support.size());
  for (const auto& p : support) values.push_back(c[p.row] * c[p.col]);
  return LowerTriangular(static_cast<std::size_t>(c.size()), std::move(support),
                         std::move(values));
}

std::pair<LowerTriangular, LowerTriangular> init_deltas(const Eigen::VectorXd& c) {
  LowerTriangular d = init_delta(
      c, LowerTriangular::full_support(static_cast<std::size_t>(c.size())).support());
  return {d, d};
}

void project_box_budget(LowerTriangular& delta, double budget) {
  require(budget >= 0.0, ErrorKind::kInvalidArgument, "budget must be non-negative");
  auto& values = delta.values();
  double total = 0.0;
  for (double& v : values) {
    v = std::clamp(v, 0.0, 1.0);
    total += v;
  }
  if (total > budget) {
    const double scale = budget / total;
    for (double& v : values) v *= scale;
  }
}

LowerTriangular projected_box_budget(LowerTriangular delta, double budget) {
  project_box_budget(delta, budget);
  return delta;
}

std::vector<NodePair> augmentation_support(const Graph& g, const Eigen::VectorXd& c,
                                           const AugmentConfig& cfg) {
  const std::size_t n = g.num_nodes();
  if (n <= cfg.full_support_limit) return LowerTriangular::full_support(n).support();

  std::vector<NodePair> support;
  for (const auto& e : g.edges()) support.push_back({e.hi, e.lo});
  const double total_pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const auto target = static_cast<std::size_t>(
      std::llround(cfg.support_ratio * (total_pairs - static_cast<double>(g.num_edges()))));

  // Enumerate pairs by decreasing c_a * c_b: nodes sorted by centrality, one
  // heap cursor per row.
  std::vector<NodeId> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<NodeId>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](NodeId a, NodeId b) { return c[a] > c[b]; });
  struct Cursor {
    double product;
    std::size_t a;
    std::size_t b;
    bool operator<(const Cursor& o) const {
      if (product != o.product) return product < o.product;
      if (a != o.a) return a > o.a;
      return b > o.b;
    }
  };
  std::priority_queue<Cursor> heap;
  for (std::size_t a = 0; a + 1 < n; ++a) {
    heap.push({c[order[a]] * c[order[a + 1]], a, a + 1});
  }
  std::size_t added = 0;
  while (added < target && !heap.empty()) {
    Cursor cur = heap.top();
    heap.pop();
    const NodeId u = order[cur.a];
    const NodeId v = order[cur.b];
    if (!g.has_edge(u, v)) {
      support.push_back({std::max(u, v), std::min(u, v)});
      ++added;
    }
    if (cur.b + 1 < n) heap.push({c[u] * c[order[cur.b + 1]], cur.a, cur.b + 1});
  }
  std::sort(support.begin(), support.end(), [](const NodePair& x, const NodePair& y) {
    return x.row != y.row ? x.row < y.row : x.col < y.col;
  });
  return support;
}

double view_divergence(const NormalizedLaplacian& lap, const Eigen::VectorXd& c,
                       const LowerTriangular& delta, const SpectralSummary& orig,
                       const EigenSolverOptions& eigen) {
  const SparseSym m = build_modified_laplacian(lap, c, delta);
  return spectral_loss(orig, extremal_eigs(m, orig.k, eigen), 1);
}

AugmentationPlan optimize_views(const Graph& g, const NormalizedLaplacian& lap,
                                const Eigen::VectorXd& c, const AugmentConfig& cfg,
                                const AugmentObserver& observer) {
  const std::size_t n = g.num_nodes();
  require(lap.matrix.n() == n && static_cast<std::size_t>(c.size()) == n,
          ErrorKind::kStructural, "optimize_views: dimension mismatch");
  require(cfg.step >= 0.0, ErrorKind::kInvalidArgument, "augment step must be non-negative");
  require(cfg.ascent_sign == 1 || cfg.ascent_sign == -1, ErrorKind::kInvalidArgument,
          "ascent sign must be +1 or -1");
  require(cfg.k >= 1, ErrorKind::kInvalidArgument, "augment k must be positive");

  AugmentationPlan plan;
  plan.n = n;
  plan.k = std::min(cfg.k, n / 2);
  plan.budget_ratio = cfg.budget_ratio;
  plan.budget = compute_budget(g, cfg.budget_ratio);
  plan.iterations = cfg.iterations;
  plan.step = cfg.step;
  plan.centrality = c;

  LowerTriangular start = init_delta(c, augmentation_support(g, c, cfg));
  project_box_budget(start, plan.budget);
  plan.delta_max = start;
  plan.delta_min = std::move(start);
  if (plan.k == 0) {
    plan.iterations = 0;
    return plan;
  }

  std::size_t iteration = 0;
  try {
    const SpectralSummary orig = extremal_eigs(lap.matrix, plan.k, cfg.eigen);
    auto evaluate = [&](const LowerTriangular& delta, LowerTriangular* grad) {
      const SparseSym m = build_modified_laplacian(lap, c, delta);
      const SpectralSummary mod = extremal_eigs(m, plan.k, cfg.eigen);
      if (grad) *grad = spectral_loss_grad(lap, c, delta, mod, orig, 1, cfg.objective);
      return spectral_loss(orig, mod, 1, cfg.objective);
    };

    LowerTriangular grad;
    for (iteration = 1; iteration <= cfg.iterations; ++iteration) {
      const double eta = cfg.decay ? cfg.step / std::sqrt(static_cast<double>(iteration))
                                   : cfg.step;
      const double ascent = cfg.ascent_sign * eta;

      plan.loss_max_trace.push_back(evaluate(plan.delta_max, &grad));
      for (std::size_t e = 0; e < grad.size(); ++e) {
        plan.delta_max.values()[e] += ascent * grad.values()[e];
      }
      project_box_budget(plan.delta_max, plan.budget);

      plan.loss_min_trace.push_back(evaluate(plan.delta_min, &grad));
      for (std::size_t e = 0; e < grad.size(); ++e) {
        plan.delta_min.values()[e] -= ascent * grad.values()[e];
      }
      project_box_budget(plan.delta_min, plan.budget);

      if (observer) observer(iteration, plan.delta_max, plan.delta_min);
    }
    iteration = 0;
    plan.final_loss_max = evaluate(plan.delta_max, nullptr);
    plan.final_loss_min = evaluate(plan.delta_min, nullptr);
  } catch (const Error& err) {
    if (err.kind() != ErrorKind::kNumerical) throw;
    fail(ErrorKind::kNumerical, "augmentation eigensolve failed at iteration " +
                                    std::to_string(iteration) + ": " + err.what());
  }
  return plan;
}

LowerTriangular sample_bernoulli(const LowerTriangular& delta, std::uint64_t seed,
                                 double rho, bool subsample) {
  require(rho > 0.0 && rho <= 1.0, ErrorKind::kInvalidArgument,
          "sampling ratio rho must lie in (0, 1]");
  Rng rng(seed);
  LowerTriangular out = LowerTriangular::zeros_like(delta);
  for (std::size_t e = 0; e < delta.size(); ++e) {
    if (subsample && !rng.bernoulli(rho)) continue;
    out.values()[e] = rng.bernoulli(delta.values()[e]) ? 1.0 : 0.0;
  }
  return out;
}

AugmentedViews sample_views(const NormalizedLaplacian& lap, const AugmentationPlan& plan,
                            std::uint64_t seed, double rho, std::size_t subsample_threshold) {
  require(lap.matrix.n() == plan.n, ErrorKind::kStructural,
          "plan does not match the Laplacian dimension");
  const bool subsample = plan.n > subsample_threshold;
  AugmentedViews views;
  views.sample_seed = seed;
  views.sample1 = sample_bernoulli(plan.delta_max, derive_seed(seed, 1), rho, subsample);
  views.sample2 = sample_bernoulli(plan.delta_min, derive_seed(seed, 2), rho, subsample);
  views.view1 = {build_modified_laplacian(lap, plan.centrality, views.sample1),
                 lap.degree_root_inv};
  views.view2 = {build_modified_laplacian(lap, plan.centrality, views.sample2),
                 lap.degree_root_inv};
  return views;
}

namespace {

constexpr std::string_view kPlanMagic = "lapboot-plan";
constexpr int kPlanVersion = 1;

void write_delta(std::ostream& out, std::string_view name, const LowerTriangular& d) {
  out << name << ' ' << d.count_nonzero() << '\n';
  for (std::size_t e = 0; e < d.size(); ++e) {
    if (d.values()[e] == 0.0) continue;
    out << d.support()[e].row << ' ' << d.support()[e].col << ' '
        << text::format_double(d.values()[e]) << '\n';
  }
}

class PlanReader {
 public:
  explicit PlanReader(std::istream& in) : in_(in) {}

  std::vector<std::string_view> fields(std::string_view expect_key, std::size_t min_fields) {
    if (!std::getline(in_, line_)) {
      fail(ErrorKind::kParse, "plan: unexpected end of file, expected '" +
                                  std::string(expect_key) + "'");
    }
    ++line_no_;
    auto f = text::split(line_);
    if (!expect_key.empty() && (f.empty() || f[0] != expect_key)) {
      fail(ErrorKind::kParse, where() + ": expected '" + std::string(expect_key) + "'");
    }
    if (f.size() < min_fields) fail(ErrorKind::kParse, where() + ": too few fields");
    return f;
  }

  std::string where() const { return "plan line " + std::to_string(line_no_); }

 private:
  std::istream& in_;
  std::string line_;
  std::size_t line_no_ = 0;
};

LowerTriangular read_delta(PlanReader& r, std::string_view name, std::size_t n) {
  const auto header = r.fields(name, 2);
  const auto count = text::parse_int(header[1], r.where());
  require(count >= 0, ErrorKind::kParse, r.where() + ": negative entry count");
  std::vector<NodePair> support;
  std::vector<double> values;
  for (std::int64_t i = 0; i < count; ++i) {
    const auto f = r.fields("", 3);
    support.push_back({static_cast<NodeId>(text::parse_int(f[0], r.where())),
                       static_cast<NodeId>(text::parse_int(f[1], r.where()))});
    values.push_back(text::parse_double(f[2], r.where()));
  }
  return LowerTriangular(n, std::move(support), std::move(values));
}

}  // namespace

void save_plan(std::ostream& out, const AugmentationPlan& plan) {
  out << kPlanMagic << ' ' << kPlanVersion << '\n';
  out << "n " << plan.n << '\n';
  out << "k " << plan.k << '\n';
  out << "budget_ratio " << text::format_double(plan.budget_ratio) << '\n';
  out << "budget " << text::format_double(plan.budget) << '\n';
  out << "iterations " << plan.iterations << '\n';
  out << "step " << text::format_double(plan.step) << '\n';
  out << "centrality";
  for (Eigen::Index i = 0; i < plan.centrality.size(); ++i) {
    out << ' ' << text::format_double(plan.centrality[i]);
  }
  out << '\n';
  write_delta(out, "delta_max", plan.delta_max);
  write_delta(out, "delta_min", plan.delta_min);
  out << "trace " << plan.loss_max_trace.size() << '\n';
  for (std::size_t t = 0; t < plan.loss_max_trace.size(); ++t) {
    out << text::format_double(plan.loss_max_trace[t]) << ' '
        << text::format_double(plan.loss_min_trace[t]) << '\n';
  }
  out << "final " << text::format_double(plan.final_loss_max) << ' '
      << text::format_double(plan.final_loss_min) << '\n';
}

AugmentationPlan load_plan(std::istream& in) {
  PlanReader r(in);
  const auto magic = r.fields(kPlanMagic, 2);
  const auto version = text::parse_int(magic[1], r.where());
  require(version == kPlanVersion, ErrorKind::kParse,
          "unsupported plan version " + std::to_string(version));
  AugmentationPlan plan;
  plan.n = static_cast<std::size_t>(text::parse_int(r.fields("n", 2)[1], r.where()));
  plan.k = static_cast<std::size_t>(text::parse_int(r.fields("k", 2)[1], r.where()));
  plan.budget_ratio = text::parse_double(r.fields("budget_ratio", 2)[1], r.where());
  plan.budget = text::parse_double(r.fields("budget", 2)[1], r.where());
  plan.iterations = static_cast<std::size_t>(text::parse_int(r.fields("iterations", 2)[1], r.where()));
  plan.step = text::parse_double(r.fields("step", 2)[1], r.where());
  const auto cent = r.fields("centrality", 1);
  require(cent.size() == plan.n + 1, ErrorKind::kParse,
          r.where() + ": centrality has " + std::to_string(cent.size() - 1) +
              " values for n=" + std::to_string(plan.n));
  plan.centrality.resize(static_cast<Eigen::Index>(plan.n));
  for (std::size_t i = 0; i < plan.n; ++i) {
    plan.centrality[static_cast<Eigen::Index>(i)] = text::parse_double(cent[i + 1], r.where());
  }
  plan.delta_max = read_delta(r, "delta_max", plan.n);
  plan.delta_min = read_delta(r, "delta_min", plan.n);
  const auto trace = text::parse_int(r.fields("trace", 2)[1], r.where());
  for (std::int64_t t = 0; t < trace; ++t) {
    const auto f = r.fields("", 2);
    plan.loss_max_trace.push_back(text::parse_double(f[0], r.where()));
    plan.loss_min_trace.push_back(text::parse_double(f[1], r.where()));
  }
  const auto fin = r.fields("final", 3);
  plan.final_loss_max = text::parse_double(fin[1], r.where());
  plan.final_loss_min = text::parse_double(fin[2], r.where());
  return plan;
}

void save_plan_file(const std::string& path, const AugmentationPlan& plan) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write plan file " + path);
  save_plan(out, plan);
  require(static_cast<bool>(out), ErrorKind::kIo, "failed writing plan file " + path);
}

AugmentationPlan load_plan_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open plan file " + path);
  return load_plan(in);
}

}  // namespace lapboot
