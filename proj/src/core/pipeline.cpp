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

#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <future>
#include <sstream>
#include <thread>

#include "error.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "textio.hpp"

namespace lapboot {

namespace fs = std::filesystem;

DatasetBundle load_dataset(const PipelineConfig& cfg) {
  require(!cfg.dataset.empty(), ErrorKind::kInvalidArgument, "config key 'dataset' is not set");
  if (cfg.dataset == "sbm") return generate_sbm(cfg.sbm);
  return load_manifest(cfg.dataset);
}

ModelShape resolved_shape(const PipelineConfig& cfg, const DatasetBundle& bundle) {
  ModelShape shape = cfg.shape;
  const auto dim = static_cast<std::size_t>(bundle.graphs.front().features().cols());
  require(dim > 0, ErrorKind::kStructural, "dataset has no node features");
  if (shape.input_dim == 0) shape.input_dim = dim;
  require(shape.input_dim == dim, ErrorKind::kStructural,
          "config input_dim " + std::to_string(shape.input_dim) + " does not match feature width " +
              std::to_string(dim));
  return shape;
}

std::vector<AugmentationPlan> augment_dataset(const DatasetBundle& bundle, const PipelineConfig& cfg) {
  auto one = [&cfg](const Graph& g) {
    const auto lap = normalized_laplacian(g);
    const auto profile = compute_centrality(g, cfg.centrality);
    return optimize_views(g, lap, profile.combined, cfg.augment);
  };
  std::vector<AugmentationPlan> plans(bundle.graphs.size());
  if (bundle.graphs.size() == 1) {
    plans[0] = one(bundle.graphs[0]);
    return plans;
  }
  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t start = 0; start < plans.size(); start += workers) {
    std::vector<std::future<AugmentationPlan>> jobs;
    const std::size_t stop = std::min(plans.size(), start + workers);
    for (std::size_t i = start; i < stop; ++i) {
      jobs.push_back(std::async(std::launch::async, one, std::cref(bundle.graphs[i])));
    }
    for (std::size_t i = start; i < stop; ++i) plans[i] = jobs[i - start].get();
  }
  return plans;
}

std::string plan_path(const std::string& dir, std::size_t index) {
  return (fs::path(dir) / ("plan_" + std::to_string(index) + ".txt")).string();
}

void write_plans(const std::string& dir, const std::vector<AugmentationPlan>& plans) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < plans.size(); ++i) save_plan_file(plan_path(dir, i), plans[i]);
}

std::vector<AugmentationPlan> read_plans(const std::string& dir, std::size_t count) {
  std::vector<AugmentationPlan> plans;
  for (std::size_t i = 0; i < count; ++i) plans.push_back(load_plan_file(plan_path(dir, i)));
  return plans;
}

std::vector<TrainGraph> training_set(const DatasetBundle& bundle,
                                     const std::vector<AugmentationPlan>& plans) {
  require(plans.size() == bundle.graphs.size(), ErrorKind::kStructural,
          "expected " + std::to_string(bundle.graphs.size()) + " plans, got " +
              std::to_string(plans.size()));
  std::vector<TrainGraph> data;
  for (std::size_t i = 0; i < plans.size(); ++i) data.push_back(make_train_graph(bundle.graphs[i], plans[i]));
  return data;
}

TrainState train_model(const std::vector<TrainGraph>& data, const PipelineConfig& cfg,
                       std::optional<TrainState> resume, const EpochCallback& on_epoch,
                       const PgdObserver& on_pgd, const std::string& abort_snapshot) {
  TrainState state;
  if (resume) {
    state = std::move(*resume);
    ModelShape shape = cfg.shape;
    if (shape.input_dim == 0) shape.input_dim = state.teacher.shape.input_dim;
    require(checkpoint_config_hash(state) == text::fnv1a(describe(cfg.train, shape)),
            ErrorKind::kInvalidArgument, "checkpoint was written with a different training config");
    require(state.seed == cfg.seed, ErrorKind::kInvalidArgument,
            "checkpoint seed " + std::to_string(state.seed) + " differs from config seed " +
                std::to_string(cfg.seed));
  } else {
    ModelShape shape = cfg.shape;
    if (shape.input_dim == 0) shape.input_dim = static_cast<std::size_t>(data.front().graph.features().cols());
    state = init_train_state(shape, cfg.train, cfg.seed);
  }
  while (state.epoch < cfg.epochs) {
    const bool last = state.epoch + 1 == cfg.epochs;
    EpochMetrics m;
    try {
      m = train_epoch(data, state, last, on_pgd);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kNumerical && !abort_snapshot.empty()) {
        save_checkpoint(abort_snapshot, state);
        fail(ErrorKind::kNumerical, std::string(e.what()) + "; state saved to " + abort_snapshot);
      }
      throw;
    }
    if (on_epoch) on_epoch(m, state);
  }
  return state;
}

ProbeResult probe_embeddings(const Eigen::MatrixXd& embeddings, const DatasetBundle& bundle,
                             const PipelineConfig& cfg) {
  const auto labels = sample_labels(bundle);
  if (bundle.task == TaskKind::kGraphClassification) {
    return kfold_eval(embeddings, labels, cfg.kfold, cfg.kfold_repeats, derive_seed(cfg.seed, 0xf01d), cfg.probe);
  }
  if (cfg.use_dataset_split) {
    require(bundle.splits.contains("train") && bundle.splits.contains("test"), ErrorKind::kInvalidArgument,
            "use_dataset_split needs train and test splits in the dataset");
    Split s{bundle.splits.at("train"), {}, bundle.splits.at("test")};
    return linear_probe(embeddings, labels, s, cfg.probe);
  }
  return linear_probe_repeated(embeddings, labels, cfg.train_ratio, cfg.val_ratio, cfg.probe_seeds,
                               derive_seed(cfg.seed, 0x5b11), cfg.probe);
}

AttackedBundle attack_bundle(const DatasetBundle& bundle, AttackKind kind, double sigma,
                             std::uint64_t seed) {
  AttackedBundle out{bundle, 0};
  if (kind == AttackKind::kNone) return out;
  for (std::size_t i = 0; i < bundle.graphs.size(); ++i) {
    const Graph& g = bundle.graphs[i];
    const std::uint64_t s = derive_seed(seed, i);
    AttackResult r = [&] {
      if (kind == AttackKind::kRandom) return random_attack(g, sigma, s);
      require(g.has_labels(), ErrorKind::kInvalidArgument, "DICE needs node labels");
      return dice_attack(g, g.labels(), sigma, s);
    }();
    out.flips += r.added.size() + r.removed.size();
    out.bundle.graphs[i] = std::move(r.graph);
  }
  return out;
}

EvalReport evaluate(const TrainState& state, const DatasetBundle& bundle, const PipelineConfig& cfg) {
  EvalReport report;
  report.epoch = state.epoch;
  auto embeddings_of = [](const EncoderParams& params, const DatasetBundle& b) {
    std::vector<Eigen::MatrixXd> rows;
    Eigen::Index total = 0;
    for (const auto& g : b.graphs) {
      rows.push_back(embed(params, normalized_laplacian(g), g.features()));
      total += rows.back().rows();
    }
    Eigen::MatrixXd out(total, rows.front().cols());
    Eigen::Index r = 0;
    for (const auto& m : rows) {
      out.middleRows(r, m.rows()) = m;
      r += m.rows();
    }
    return out;
  };
  report.clean = probe_embeddings(embeddings_of(state.student, bundle), bundle, cfg);
  if (cfg.attack == AttackKind::kNone) return report;

  report.attack = cfg.attack == AttackKind::kRandom ? "random" : "dice";
  report.mode = cfg.attack_mode == AttackMode::kPoison ? "poison" : "evasion";
  for (double sigma : cfg.attack_sigmas) {
    AttackRow row;
    row.sigma = sigma;
    if (sigma == 0.0) {
      row.result = report.clean;
      report.rows.push_back(std::move(row));
      continue;
    }
    const auto attacked = attack_bundle(bundle, cfg.attack, sigma, derive_seed(cfg.seed, 0xa77ac));
    row.flips = attacked.flips;
    if (cfg.attack_mode == AttackMode::kEvasion) {
      row.result = probe_embeddings(embeddings_of(state.student, attacked.bundle), attacked.bundle, cfg);
    } else {
      PipelineConfig retrain = cfg;
      retrain.train = state.cfg;
      retrain.shape = state.teacher.shape;
      retrain.epochs = state.epoch;
      retrain.seed = state.seed;
      const auto plans = augment_dataset(attacked.bundle, retrain);
      const auto retrained = train_model(training_set(attacked.bundle, plans), retrain);
      row.result = probe_embeddings(embeddings_of(retrained.student, attacked.bundle), attacked.bundle, cfg);
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

nlohmann::json to_json(const ProbeResult& r) {
  return {{"protocol", r.protocol}, {"mean", r.mean}, {"std", r.std}, {"values", r.values}};
}

ProbeResult probe_from_json(const nlohmann::json& j) {
  ProbeResult r;
  r.protocol = j.at("protocol").get<std::string>();
  r.mean = j.at("mean").get<double>();
  r.std = j.at("std").get<double>();
  r.values = j.at("values").get<std::vector<double>>();
  return r;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"sigma", row.sigma}, {"flips", row.flips}, {"result", to_json(row.result)}});
  }
  return {{"epoch", r.epoch}, {"clean", to_json(r.clean)}, {"attack", r.attack}, {"mode", r.mode}, {"rows", rows}};
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.epoch = j.at("epoch").get<std::uint64_t>();
  r.clean = probe_from_json(j.at("clean"));
  r.attack = j.at("attack").get<std::string>();
  r.mode = j.at("mode").get<std::string>();
  for (const auto& row : j.at("rows")) {
    r.rows.push_back({row.at("sigma").get<double>(), row.at("flips").get<std::size_t>(),
                      probe_from_json(row.at("result"))});
  }
  return r;
}

namespace {

std::string pm(const ProbeResult& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f +- %.4f", r.mean, r.std);
  return buf;
}

}  // namespace

std::string to_text(const EvalReport& r) {
  std::ostringstream out;
  out << "epoch     " << r.epoch << '\n'
      << "protocol  " << r.clean.protocol << '\n'
      << "accuracy  " << pm(r.clean) << '\n';
  if (!r.rows.empty()) {
    out << "attack    " << r.attack << " (" << r.mode << ")\n"
        << "sigma     flips     accuracy\n";
    for (const auto& row : r.rows) {
      char buf[48];
      std::snprintf(buf, sizeof buf, "%-9s %-9zu ", text::format_double(row.sigma).c_str(), row.flips);
      out << buf << pm(row.result) << '\n';
    }
  }
  return out.str();
}

namespace {

Graph bench_graph(std::size_t n, double degree, std::uint64_t seed) {
  Rng rng(seed);
  const double p = n > 1 ? std::min(1.0, degree / static_cast<double>(n - 1)) : 0.0;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng.bernoulli(p)) edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j)});
    }
  }
  return Graph(n, std::move(edges));
}

}  // namespace

BenchReport run_bench(const PipelineConfig& cfg) {
  BenchReport report;
  std::size_t largest = 0;
  for (std::size_t n : cfg.bench_n) {
    if (n == 0) continue;
    largest = std::max(largest, n);
    const Graph g = bench_graph(n, cfg.bench_degree, derive_seed(cfg.seed, n));
    const auto lap = normalized_laplacian(g);
    for (std::size_t k : cfg.bench_k) {
      if (k == 0 || 2 * k > n) continue;
      std::vector<double> times;
      EigBenchRow row{n, k, lap.matrix.nonzeros(), 0.0, 0, false};
      for (std::size_t rep = 0; rep < cfg.bench_repeats; ++rep) {
        EigenSolverStats stats;
        const auto t0 = std::chrono::steady_clock::now();
        extremal_eigs(lap.matrix, k, cfg.augment.eigen, &stats);
        times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        row.matvecs = stats.matvecs;
        row.dense = stats.dense;
      }
      std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2), times.end());
      row.seconds = times[times.size() / 2];
      report.eig.push_back(row);
    }
  }
  if (largest < 2) return report;

  const Graph g = bench_graph(largest, cfg.bench_degree, derive_seed(cfg.seed, largest));
  const auto lap = normalized_laplacian(g);
  const Eigen::VectorXd c = compute_centrality(g, cfg.centrality).combined;
  const std::size_t pairs = largest * (largest - 1) / 2;
  for (double frac : {0.001, 0.002, 0.004, 0.008}) {
    const auto support_size = std::max<std::size_t>(1, static_cast<std::size_t>(frac * static_cast<double>(pairs)));
    Rng rng(derive_seed(cfg.seed, support_size));
    std::vector<NodePair> support;
    std::vector<double> values;
    std::vector<bool> used(pairs, false);
    while (support.size() < support_size) {
      const std::size_t idx = rng.below(pairs);
      if (used[idx]) continue;
      used[idx] = true;
      // Row-major decode of the strictly lower pair index.
      std::size_t row = static_cast<std::size_t>((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(idx))) / 2.0);
      while (row * (row - 1) / 2 > idx) --row;
      while ((row + 1) * row / 2 <= idx) ++row;
      const std::size_t col = idx - row * (row - 1) / 2;
      support.push_back({static_cast<NodeId>(row), static_cast<NodeId>(col)});
      values.push_back(0.5);
    }
    std::vector<std::size_t> order(support.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::pair(support[a].row, support[a].col) < std::pair(support[b].row, support[b].col);
    });
    std::vector<NodePair> sorted_support;
    std::vector<double> sorted_values;
    for (auto i : order) {
      sorted_support.push_back(support[i]);
      sorted_values.push_back(values[i]);
    }
    const LowerTriangular delta(largest, std::move(sorted_support), std::move(sorted_values));
    const SparseSym mod = build_modified_laplacian(lap, c, delta);
    report.updates.push_back({support_size, delta.count_nonzero(), delta.nonzero_bytes(),
                              mod.stored_nonzeros(), mod.bytes()});
  }
  return report;
}

nlohmann::json to_json(const BenchReport& r) {
  nlohmann::json eig = nlohmann::json::array();
  for (const auto& row : r.eig) {
    eig.push_back({{"n", row.n}, {"k", row.k}, {"nnz", row.nnz}, {"seconds", row.seconds},
                   {"matvecs", row.matvecs}, {"dense", row.dense}});
  }
  nlohmann::json updates = nlohmann::json::array();
  for (const auto& row : r.updates) {
    updates.push_back({{"support", row.support}, {"delta_nnz", row.delta_nnz},
                       {"delta_bytes", row.delta_bytes}, {"modified_nnz", row.modified_nnz},
                       {"modified_bytes", row.modified_bytes}});
  }
  return {{"eigensolve", eig}, {"sparse_update", updates}};
}

std::string to_text(const BenchReport& r) {
  std::ostringstream out;
  out << "eigensolve\n      n      k        nnz    seconds   matvecs\n";
  for (const auto& row : r.eig) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%7zu %6zu %10zu %10.5f %9zu%s\n", row.n, row.k, row.nnz,
                  row.seconds, row.matvecs, row.dense ? "  dense" : "");
    out << buf;
  }
  out << "sparse update\n  support  delta_nnz  delta_bytes  mod_nnz  mod_bytes\n";
  for (const auto& row : r.updates) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%9zu %10zu %12zu %8zu %10zu\n", row.support, row.delta_nnz,
                  row.delta_bytes, row.modified_nnz, row.modified_bytes);
    out << buf;
  }
  return out.str();
}

}  // namespace lapboot
