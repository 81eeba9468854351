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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "augment.hpp"
#include "autodiff.hpp"
#include "centrality.hpp"
#include "data_io.hpp"
#include "pipeline.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "textio.hpp"
#include "trainer.hpp"

using namespace lapboot;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

Eigen::MatrixXd random_symmetric(Eigen::Index n, Rng& rng) {
  const Eigen::MatrixXd a = gaussian(n, n, rng);
  return 0.5 * (a + a.transpose());
}

// 1 -------------------------------------------------------------------------

Outcome eigensolver_oracle() {
  const auto t0 = Clock::now();
  Rng rng(1001);
  double worst = 0.0;
  std::size_t solves = 0;
  for (int m = 0; m < 50; ++m) {
    const auto n = static_cast<Eigen::Index>(10 + rng.below(55));  // 10..64
    const Eigen::MatrixXd dense = random_symmetric(n, rng);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dense, Eigen::EigenvaluesOnly).eigenvalues();
    const auto op = SparseSym::from_dense_lower(dense);
    for (std::size_t k : {1, 2, 5}) {
      const auto s = extremal_eigs(op, k);
      const auto kk = static_cast<Eigen::Index>(k);
      worst = std::max({worst, (s.eigenvalues.head(kk) - ev.head(kk)).lpNorm<Eigen::Infinity>(),
                        (s.eigenvalues.tail(kk) - ev.tail(kk)).lpNorm<Eigen::Infinity>()});
      ++solves;
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-8 && secs < 10.0,
          fmt("%zu solves, max |lambda - dense| = %.2e (<= 1e-8), %.2f s (< 10 s)", solves, worst, secs)};
}

// 2 -------------------------------------------------------------------------

Eigen::MatrixXd dense_modified(const Eigen::MatrixXd& l, const Eigen::VectorXd& c, const LowerTriangular& d) {
  const Eigen::MatrixXd s = c.asDiagonal() * d.symmetric_dense() * c.asDiagonal();
  const Eigen::MatrixXd raw = l + l * s;
  return 0.5 * (raw + raw.transpose());
}

double dense_loss(const Eigen::MatrixXd& l, const Eigen::VectorXd& c, const LowerTriangular& d,
                  const Eigen::VectorXd& orig, std::size_t k, int sign) {
  const Eigen::VectorXd ev =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dense_modified(l, c, d), Eigen::EigenvaluesOnly).eigenvalues();
  const auto kk = static_cast<Eigen::Index>(k);
  double total = 0.0;
  for (Eigen::Index i = 0; i < kk; ++i) {
    total += std::pow(ev[i] - orig[i], 2) + std::pow(ev[ev.size() - kk + i] - orig[kk + i], 2);
  }
  return sign * total / static_cast<double>(2 * k);
}

Outcome spectral_gradient() {
  const auto t0 = Clock::now();
  Rng rng(2002);
  double worst = 0.0;
  std::size_t used = 0;
  std::size_t flagged = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 6 + rng.below(11);  // 6..16
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (rng.bernoulli(0.35)) edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j)});
      }
    }
    const Graph g(n, edges);
    Eigen::VectorXd c(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = rng.uniform();
    auto delta = LowerTriangular::full_support(n);
    for (double& v : delta.values()) v = rng.uniform();
    const std::size_t k = 1 + rng.below(3);
    const int sign = trial % 2 == 0 ? 1 : -1;

    const auto lap = normalized_laplacian(g);
    const Eigen::MatrixXd l = lap.matrix.to_dense();
    const auto orig = extremal_eigs(lap.matrix, k);
    const auto mod = extremal_eigs(build_modified_laplacian(lap, c, delta), k);
    GradientDiagnostics diag;
    const auto grad = spectral_loss_grad(lap, c, delta, mod, orig, sign, SpectralObjective::kSquaredDifference, &diag);
    if (diag.degenerate_clusters > 0) {
      ++flagged;
      continue;
    }
    const double h = 1e-6;
    double err = 0.0;
    double scale = 0.0;
    for (std::size_t e = 0; e < delta.size(); ++e) {
      LowerTriangular plus = delta, minus = delta;
      plus.values()[e] += h;
      minus.values()[e] -= h;
      const double fd = (dense_loss(l, c, plus, orig.eigenvalues, k, sign) -
                         dense_loss(l, c, minus, orig.eigenvalues, k, sign)) / (2 * h);
      err = std::max(err, std::abs(fd - grad.values()[e]));
      scale = std::max(scale, std::abs(fd));
    }
    worst = std::max(worst, err / std::max(scale, 1e-12));
    ++used;
  }
  const double secs = seconds_since(t0);
  return {used > 0 && worst <= 1e-4 && secs < 30.0,
          fmt("%zu instances checked, %zu flagged degenerate, max rel error %.2e (<= 1e-4), %.2f s (< 30 s)", used,
              flagged, worst, secs)};
}

// 3 -------------------------------------------------------------------------

using Builder = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

double vjp_error(const Builder& f, const std::vector<Eigen::MatrixXd>& inputs, Rng& rng) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& m : inputs) vars.push_back(tape.leaf(m, true));
  const ad::Var out = f(tape, vars);
  const Eigen::MatrixXd u = gaussian(1, tape.value(out).rows(), rng);
  const Eigen::MatrixXd w = gaussian(tape.value(out).cols(), 1, rng);
  tape.backward(tape.matmul(tape.matmul(tape.leaf(u), out), tape.leaf(w)));

  auto scalar = [&](const std::vector<Eigen::MatrixXd>& xs) {
    ad::Tape t;
    std::vector<ad::Var> vs;
    for (const auto& m : xs) vs.push_back(t.leaf(m));
    return (u * t.value(f(t, vs)) * w)(0, 0);
  };
  const double h = 1e-6;
  double err = 0.0;
  double scale = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Eigen::MatrixXd g = tape.grad(vars[k]);
    for (Eigen::Index i = 0; i < inputs[k].size(); ++i) {
      auto plus = inputs, minus = inputs;
      plus[k].data()[i] += h;
      minus[k].data()[i] -= h;
      const double fd = (scalar(plus) - scalar(minus)) / (2 * h);
      err = std::max(err, std::abs(fd - g.data()[i]));
      scale = std::max(scale, std::abs(fd));
    }
  }
  return err / std::max(scale, 1e-12);
}

Outcome autodiff_primitives() {
  const auto t0 = Clock::now();
  Rng rng(3003);
  const SparseSym s = SparseSym::from_dense_lower(random_symmetric(5, rng), 0.3);
  struct Prim {
    const char* name;
    Builder f;
    std::vector<std::pair<int, int>> shapes;
  };
  const std::vector<Prim> prims{
      {"matmul", [](ad::Tape& t, const auto& v) { return t.matmul(v[0], v[1]); }, {{3, 4}, {4, 2}}},
      {"sparse_matmul", [&s](ad::Tape& t, const auto& v) { return t.sparse_matmul(s, v[0]); }, {{5, 3}}},
      {"add", [](ad::Tape& t, const auto& v) { return t.add(v[0], v[1]); }, {{3, 4}, {3, 4}}},
      {"add_row", [](ad::Tape& t, const auto& v) { return t.add_row(v[0], v[1]); }, {{3, 4}, {1, 4}}},
      {"scale", [](ad::Tape& t, const auto& v) { return t.scale(v[0], 0.37); }, {{3, 4}}},
      {"relu", [](ad::Tape& t, const auto& v) { return t.relu(v[0]); }, {{4, 4}}},
      {"prelu", [](ad::Tape& t, const auto& v) { return t.prelu(v[0], v[1]); }, {{4, 3}, {1, 1}}},
      {"row_l2_normalize", [](ad::Tape& t, const auto& v) { return t.row_l2_normalize(v[0]); }, {{4, 3}}},
      {"mean_reduce", [](ad::Tape& t, const auto& v) { return t.mean_reduce(v[0]); }, {{4, 3}}},
      {"sum_rows", [](ad::Tape& t, const auto& v) { return t.sum_rows(v[0]); }, {{4, 3}}},
      {"cosine_rows", [](ad::Tape& t, const auto& v) { return t.cosine_rows(v[0], v[1]); }, {{4, 3}, {4, 3}}},
      {"vstack", [](ad::Tape& t, const auto& v) { return t.vstack(std::vector<ad::Var>{v[0], v[1]}); }, {{2, 3}, {3, 3}}},
  };
  double worst = 0.0;
  std::string worst_name = prims.front().name;
  for (const auto& p : prims) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Eigen::MatrixXd> inputs;
      for (auto [r, c] : p.shapes) inputs.push_back(gaussian(r, c, rng));
      const double e = vjp_error(p.f, inputs, rng);
      if (e > worst) {
        worst = e;
        worst_name = p.name;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 10.0,
          fmt("%zu primitives x 20 trials, max rel error %.2e (%s) (<= 1e-4), %.2f s (< 10 s)", prims.size(), worst,
              worst_name.c_str(), secs)};
}

// 4 and 5 -------------------------------------------------------------------

Graph sbm_graph(std::size_t n, std::uint64_t seed) {
  SbmOptions o;
  o.n = n;
  o.p_in = 0.3;
  o.p_out = 0.03;
  o.seed = seed;
  return generate_sbm(o).graphs.front();
}

Outcome budget_box() {
  const Graph g = sbm_graph(64, 4004);
  const auto lap = normalized_laplacian(g);
  const auto c = compute_centrality(g).combined;
  AugmentConfig cfg;
  cfg.iterations = 50;
  const double expected_budget = 0.5 * static_cast<double>(g.num_edges());
  const bool formula = compute_budget(g, 0.5) == expected_budget;
  std::size_t checks = 0;
  std::size_t violations = 0;
  double worst_excess = -std::numeric_limits<double>::infinity();
  const auto plan = optimize_views(g, lap, c, cfg, [&](std::size_t, const LowerTriangular& d1, const LowerTriangular& d2) {
    for (const auto* d : {&d1, &d2}) {
      ++checks;
      worst_excess = std::max(worst_excess, d->sum() - expected_budget);
      if (d->sum() > expected_budget + 1e-9 || d->min() < 0.0 || d->max() > 1.0) ++violations;
    }
  });
  const bool plan_budget = plan.budget == expected_budget && plan.iterations == 50;
  return {formula && plan_budget && violations == 0 && checks == 100,
          fmt("|E| = %zu, B = %.1f (= 0.5|E| exactly: %s), %zu iterate checks, %zu violations, max sum - B = %.3g",
              g.num_edges(), plan.budget, formula && plan_budget ? "yes" : "no", checks, violations, worst_excess)};
}

Outcome max_min_separation() {
  std::size_t wins = 0;
  std::string losses;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Graph g = sbm_graph(64, 5000 + seed);
    const auto lap = normalized_laplacian(g);
    const auto c = compute_centrality(g).combined;
    AugmentConfig cfg;
    const auto plan = optimize_views(g, lap, c, cfg);
    const auto orig = extremal_eigs(lap.matrix, plan.k);
    const double l1 = view_divergence(lap, c, plan.delta_max, orig);
    const double l2 = view_divergence(lap, c, plan.delta_min, orig);
    if (l1 > l2) ++wins;
    losses += fmt("%s%.3g/%.3g", seed ? " " : "", l1, l2);
  }
  return {wins >= 9, fmt("%zu/10 runs with loss(D1) > loss(D2) (>= 9); D1/D2: %s", wins, losses.c_str())};
}

// Shared training setup for 6, 7, 9, 10 -------------------------------------

PipelineConfig sbm_task(std::uint64_t seed) {
  PipelineConfig cfg;
  cfg.dataset = "sbm";
  cfg.sbm.n = 200;
  cfg.sbm.p_in = 0.1;
  cfg.sbm.p_out = 0.01;
  cfg.sbm.feature_dim = 1024;
  cfg.sbm.margin = 2.0;
  cfg.sbm.noise = 1.0;
  cfg.sbm.seed = seed;
  cfg.seed = seed;
  cfg.shape.hidden = {32, 16};
  cfg.shape.projector_hidden = 32;
  cfg.shape.projection_dim = 16;
  cfg.shape.predictor_hidden = 32;
  cfg.train.lr = 1e-2;
  cfg.epochs = 200;
  cfg.probe_seeds = 10;
  return cfg;
}

// 6 -------------------------------------------------------------------------

Outcome loss_range_and_reductions() {
  auto cfg = sbm_task(6006);
  cfg.epochs = 50;
  const auto data = load_dataset(cfg);
  const auto set = training_set(data, augment_dataset(data, cfg));
  std::size_t steps = 0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  train_model(set, cfg, std::nullopt, {}, [&](std::uint64_t, std::size_t, const auto&, double loss) {
    ++steps;
    lo = std::min(lo, loss);
    hi = std::max(hi, loss);
  });
  const bool in_range = steps == 150 && lo >= -2.0 && hi <= 2.0;

  Rng rng(66);
  bool aligned = true;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd t = gaussian(50, 16, rng);
    for (Eigen::Index i = 0; i < t.rows(); ++i) t.row(i) *= std::pow(10.0, rng.uniform(-3, 3));
    ad::Tape tape;
    const double taped = tape.value(boot_loss(tape, tape.leaf(t), tape.leaf(t)))(0, 0);
    aligned = aligned && boot_loss(t, t) == -2.0 && taped == -2.0;
  }

  auto zero = cfg;
  zero.train.eps = 0.0;
  std::size_t zero_steps = 0;
  std::size_t nonzero = 0;
  const auto st = train_model(set, zero, std::nullopt, {}, [&](std::uint64_t, std::size_t, const auto& delta, double) {
    ++zero_steps;
    for (const auto& d : delta) {
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (d.data()[i] != 0.0) ++nonzero;
      }
    }
  });
  for (const auto& d : st.delta) {
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (d.data()[i] != 0.0) ++nonzero;
    }
  }
  return {in_range && aligned && nonzero == 0 && zero_steps == 150,
          fmt("%zu logged losses in [%.4f, %.4f] (within [-2, 2]); T = Z gives -2 exactly: %s; eps = 0 run: %zu steps, "
              "%zu nonzero delta entries",
              steps, lo, hi, aligned ? "yes" : "no", zero_steps, nonzero)};
}

// 7 -------------------------------------------------------------------------

Outcome pgd_bound() {
  auto cfg = sbm_task(7007);
  cfg.epochs = 50;
  const double eps = cfg.train.eps;
  const auto data = load_dataset(cfg);
  const auto set = training_set(data, augment_dataset(data, cfg));
  std::size_t steps = 0;
  std::size_t violations = 0;
  double worst = 0.0;
  train_model(set, cfg, std::nullopt, {}, [&](std::uint64_t, std::size_t, const auto& delta, double) {
    ++steps;
    for (const auto& d : delta) {
      const double m = d.cwiseAbs().maxCoeff();
      worst = std::max(worst, m);
      if (m > eps) ++violations;
    }
  });
  return {eps == 0.008 && steps == 150 && violations == 0,
          fmt("eps = %.3g, %zu inner steps over 50 epochs, max |delta| = %.6g, %zu violations", eps, steps, worst,
              violations)};
}

// 8 -------------------------------------------------------------------------

Outcome ema_contract() {
  const double beta = TrainConfig{}.ema_decay;
  Rng rng(8008);
  auto make = [&](bool random) {
    EncoderParams p;
    p.encoder.push_back({"scalar", random ? gaussian(1, 1, rng) : Eigen::MatrixXd::Zero(1, 1)});
    p.encoder.push_back({"tensor", random ? gaussian(6, 5, rng) : Eigen::MatrixXd::Zero(6, 5)});
    p.projector.push_back({"proj", random ? gaussian(5, 3, rng) : Eigen::MatrixXd::Zero(5, 3)});
    return p;
  };
  const EncoderParams xi = make(true);
  EncoderParams theta = make(true);
  const EncoderParams theta0 = theta;
  double worst = 0.0;
  const double unit = std::numeric_limits<double>::epsilon();
  for (int k = 1; k <= 1000; ++k) {
    ema_step(theta, xi, beta);
    const double bk = std::pow(beta, k);
    const auto cur = theta.shared();
    const auto ref = xi.shared();
    const auto ini = theta0.shared();
    for (std::size_t b = 0; b < cur.size(); ++b) {
      for (Eigen::Index i = 0; i < cur[b]->value.size(); ++i) {
        const double gap0 = std::abs(ini[b]->value.data()[i] - ref[b]->value.data()[i]);
        const double gap = std::abs(cur[b]->value.data()[i] - ref[b]->value.data()[i]);
        const double scale = std::max({std::abs(ini[b]->value.data()[i]), std::abs(ref[b]->value.data()[i]), gap0});
        worst = std::max(worst, std::abs(gap - bk * gap0) / (k * unit * scale));
      }
    }
  }
  // Each step adds at most a few roundings of the operand magnitude.
  return {beta == 0.998 && worst <= 4.0,
          fmt("beta = %.3f, k <= 1000, scalar + tensor blocks: max | |theta_k - xi| - beta^k |theta_0 - xi| | = %.2f "
              "k*u*scale (<= 4)",
              beta, worst)};
}

// 9 and 10 ------------------------------------------------------------------

struct SeedRun {
  DatasetBundle data;
  std::vector<AugmentationPlan> plans;
  TrainState trained;
  double untrained = 0.0;
  double clean = 0.0;
};

std::vector<SeedRun>& seed_runs() {
  static std::vector<SeedRun> runs;
  return runs;
}

Outcome learning_signal() {
  const auto t0 = Clock::now();
  auto& runs = seed_runs();
  runs.clear();
  double diff = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto cfg = sbm_task(seed);
    SeedRun r;
    r.data = load_dataset(cfg);
    r.plans = augment_dataset(r.data, cfg);
    const auto set = training_set(r.data, r.plans);
    const auto fresh = init_train_state(resolved_shape(cfg, r.data), cfg.train, cfg.seed);
    r.untrained = probe_embeddings(student_embeddings(fresh, set), r.data, cfg).mean;
    r.trained = train_model(set, cfg);
    r.clean = probe_embeddings(student_embeddings(r.trained, set), r.data, cfg).mean;
    diff += r.clean - r.untrained;
    per_seed += fmt("%s%.3f->%.3f", seed ? " " : "", r.untrained, r.clean);
    runs.push_back(std::move(r));
  }
  diff /= 5.0;
  const double secs = seconds_since(t0);
  return {diff >= 0.05 && secs < 300.0,
          fmt("mean gain %+.1f points (>= +5), untrained->trained per seed: %s, %.0f s (< 300 s)", 100 * diff,
              per_seed.c_str(), secs)};
}

Outcome robustness_direction() {
  auto& runs = seed_runs();
  if (runs.size() != 5) return {false, "learning-signal runs unavailable"};
  double adv_drop = 0.0;
  double base_drop = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto cfg = sbm_task(seed);
    cfg.attack = AttackKind::kRandom;
    cfg.attack_mode = AttackMode::kPoison;
    cfg.attack_sigmas = {0.2};
    const auto& r = runs[seed];
    const auto adv = evaluate(r.trained, r.data, cfg);

    auto base_cfg = cfg;
    base_cfg.train.eps = 0.0;
    const auto base_state = train_model(training_set(r.data, r.plans), base_cfg);
    const auto base = evaluate(base_state, r.data, base_cfg);

    const double a = adv.clean.mean - adv.rows.front().result.mean;
    const double b = base.clean.mean - base.rows.front().result.mean;
    adv_drop += a;
    base_drop += b;
    per_seed += fmt("%s%+.3f/%+.3f", seed ? " " : "", a, b);
  }
  adv_drop /= 5.0;
  base_drop /= 5.0;
  return {adv_drop <= base_drop,
          fmt("random poisoning sigma = 0.2: mean drop adversarial %.2f points vs eps = 0 %.2f points; per seed "
              "adv/base: %s",
              100 * adv_drop, 100 * base_drop, per_seed.c_str())};
}

// 11 ------------------------------------------------------------------------

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const auto dir = fs::temp_directory_path() / "lapboot_acceptance_determinism";
  fs::remove_all(dir);
  auto cfg = sbm_task(1111);
  cfg.sbm.n = 80;
  cfg.sbm.feature_dim = 32;
  cfg.epochs = 20;
  std::uint64_t plan_hash[2];
  std::uint64_t ckpt_hash[2];
  std::vector<double> losses[2];
  for (int run = 0; run < 2; ++run) {
    const auto data = load_dataset(cfg);
    const auto plans = augment_dataset(data, cfg);
    const auto plan_dir = (dir / ("plans" + std::to_string(run))).string();
    write_plans(plan_dir, plans);
    plan_hash[run] = text::fnv1a(read_bytes(plan_path(plan_dir, 0)));
    const auto state = train_model(training_set(data, read_plans(plan_dir, 1)), cfg, std::nullopt,
                                   [&](const EpochMetrics& m, const TrainState&) {
                                     losses[run].insert(losses[run].end(), m.inner_losses.begin(), m.inner_losses.end());
                                   });
    const auto ckpt = (dir / ("model" + std::to_string(run) + ".ckpt")).string();
    save_checkpoint(ckpt, state);
    ckpt_hash[run] = text::fnv1a(read_bytes(ckpt));
  }
  fs::remove_all(dir);
  std::string trace0, trace1;
  for (double v : losses[0]) trace0 += text::format_double(v) + "\n";
  for (double v : losses[1]) trace1 += text::format_double(v) + "\n";
  const bool ok = plan_hash[0] == plan_hash[1] && ckpt_hash[0] == ckpt_hash[1] && trace0 == trace1 && !losses[0].empty();
  return {ok, fmt("plan %s/%s, loss trace %s/%s (%zu values), checkpoint %s/%s",
                  text::hex64(plan_hash[0]).c_str(), text::hex64(plan_hash[1]).c_str(),
                  text::hex64(text::fnv1a(trace0)).c_str(), text::hex64(text::fnv1a(trace1)).c_str(), losses[0].size(),
                  text::hex64(ckpt_hash[0]).c_str(), text::hex64(ckpt_hash[1]).c_str())};
}

// 12 ------------------------------------------------------------------------

Outcome complexity() {
  PipelineConfig cfg;
  cfg.bench_n = {500, 1000, 2000};
  cfg.bench_k = {25, 50, 100};
  cfg.bench_degree = 20.0;
  cfg.bench_repeats = 3;
  const auto r = run_bench(cfg);
  auto time_of = [&](std::size_t n, std::size_t k) {
    for (const auto& row : r.eig) {
      if (row.n == n && row.k == k) return row.seconds;
    }
    return std::numeric_limits<double>::quiet_NaN();
  };
  auto geomean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::log(x);
    return std::exp(s / static_cast<double>(v.size()));
  };
  std::vector<double> k_ratios;
  std::vector<double> n_ratios;
  std::string ks, ns;
  for (std::size_t n : cfg.bench_n) {
    std::vector<double> per;
    for (std::size_t k : {25, 50}) per.push_back(time_of(n, 2 * k) / time_of(n, k));
    k_ratios.push_back(geomean(per));
    ks += fmt("%s%zu:%.2f", ks.empty() ? "" : " ", n, k_ratios.back());
  }
  for (std::size_t k : cfg.bench_k) {
    std::vector<double> per;
    for (std::size_t n : {500, 1000}) per.push_back(time_of(2 * n, k) / time_of(n, k));
    n_ratios.push_back(geomean(per));
    ns += fmt("%s%zu:%.2f", ns.empty() ? "" : " ", k, n_ratios.back());
  }
  const double k_ratio = geomean(k_ratios);
  const double n_ratio = geomean(n_ratios);
  const bool k_ok = k_ratio >= 1.5 && k_ratio <= 3.0;
  const bool n_ok = n_ratio > 2.0 && n_ratio <= 6.0;

  bool bytes_ok = !r.updates.empty();
  std::size_t prev = 0;
  for (const auto& u : r.updates) {
    bytes_ok = bytes_ok && u.delta_nnz > prev && u.delta_bytes == 16 * u.delta_nnz &&
               u.modified_bytes * r.updates.front().modified_nnz == r.updates.front().modified_bytes * u.modified_nnz;
    prev = u.delta_nnz;
  }
  return {k_ok && n_ok && bytes_ok,
          fmt("K-doubling time ratio %.2f (in [1.5, 3]; per n %s); n-doubling ratio %.2f (superlinear: in (2, 6]; per K "
              "%s); update bytes proportional to nnz: %s",
              k_ratio, ks.c_str(), n_ratio, ns.c_str(), bytes_ok ? "yes" : "no")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"eigensolver matches dense oracle", eigensolver_oracle},
      {"spectral gradient matches finite differences", spectral_gradient},
      {"autodiff primitives match finite differences", autodiff_primitives},
      {"budget and box invariant", budget_box},
      {"max/min view separation", max_min_separation},
      {"bootstrap loss range and reductions", loss_range_and_reductions},
      {"PGD l-inf bound", pgd_bound},
      {"EMA contract", ema_contract},
      {"end-to-end learning signal", learning_signal},
      {"robustness direction under poisoning", robustness_direction},
      {"determinism", determinism},
      {"complexity sanity", complexity},
  };
  int failed = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s [%2d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
