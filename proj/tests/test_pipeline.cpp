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

#include <filesystem>
#include <functional>
#include <limits>
#include <sstream>
#include <string>

#include "doctest.h"
#include "error.hpp"
#include "pipeline.hpp"
#include "rng.hpp"
#include "test_support.hpp"

using namespace lapboot;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.dataset = "sbm";
  cfg.sbm.n = 40;
  cfg.sbm.feature_dim = 6;
  cfg.sbm.p_in = 0.3;
  cfg.sbm.p_out = 0.03;
  cfg.augment.k = 3;
  cfg.augment.iterations = 3;
  cfg.shape.hidden = {8, 4};
  cfg.shape.projector_hidden = 6;
  cfg.shape.projection_dim = 4;
  cfg.shape.predictor_hidden = 6;
  cfg.train.lr = 1e-2;
  cfg.epochs = 3;
  cfg.probe_seeds = 3;
  return cfg;
}

std::string scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("lapboot_pl_" + name);
  fs::remove_all(p);
  return p.string();
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kProtocol;
}

}  // namespace

TEST_CASE("config text parses comments, blanks and lists") {
  const auto cfg = parse_config(
      "# comment\n\n"
      "dataset = sbm\n"
      "eps=0.01  # trailing\n"
      "hidden=16,8\n"
      "attack=dice\n"
      "attack_mode=evasion\n"
      "attack_sigmas=0,0.1\n"
      "optimizer=sgd\n"
      "symmetric_loss=true\n");
  CHECK(cfg.dataset == "sbm");
  CHECK(cfg.train.eps == 0.01);
  CHECK(cfg.shape.hidden == std::vector<std::size_t>{16, 8});
  CHECK(cfg.attack == AttackKind::kDice);
  CHECK(cfg.attack_mode == AttackMode::kEvasion);
  CHECK(cfg.attack_sigmas == std::vector<double>{0.0, 0.1});
  CHECK(cfg.train.optimizer == OptimizerKind::kSgd);
  CHECK(cfg.train.symmetric_loss);
}

TEST_CASE("config errors name the key") {
  PipelineConfig cfg;
  try {
    apply_setting(cfg, "no_such_key", "1");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("no_such_key") != std::string::npos);
  }
  CHECK_THROWS_AS(apply_setting(cfg, "epochs", "many"), Error);
  CHECK_THROWS_AS(apply_setting(cfg, "attack", "nuke"), Error);
  CHECK_THROWS_AS(parse_config("just words\n"), Error);
  cfg.augment.budget_ratio = 2.0;
  try {
    validate(cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("budget_ratio") != std::string::npos);
  }
  CHECK(kind_of([] { load_config_file("/nonexistent/lapboot.cfg"); }) == ErrorKind::kIo);
}

TEST_CASE("config text round trips") {
  auto cfg = small_config();
  cfg.train.site = PerturbSite::kLastHidden;
  cfg.attack = AttackKind::kRandom;
  cfg.augment.objective = SpectralObjective::kSquaredNorm;
  cfg.train.weight_decay = 1.0 / 3.0;
  const auto text = to_text(cfg);
  const auto back = parse_config(text);
  CHECK(to_text(back) == text);
  CHECK(back.train.weight_decay == cfg.train.weight_decay);
  validate(back);
}

TEST_CASE("overrides apply in order") {
  auto cfg = small_config();
  apply_overrides(cfg, {"epochs=7", "epochs=9", "seed=3"});
  CHECK(cfg.epochs == 9);
  CHECK(cfg.seed == 3);
  CHECK_THROWS_AS(apply_overrides(cfg, {"epochs"}), Error);
}

TEST_CASE("default config validates") {
  validate(PipelineConfig{});
}

TEST_CASE("plans round trip through the plan directory") {
  const auto cfg = small_config();
  const auto data = load_dataset(cfg);
  const auto plans = augment_dataset(data, cfg);
  REQUIRE(plans.size() == 1);
  const auto dir = scratch("plans");
  write_plans(dir, plans);
  CHECK(fs::exists(plan_path(dir, 0)));
  const auto back = read_plans(dir, 1);
  std::ostringstream a;
  std::ostringstream b;
  save_plan(a, plans[0]);
  save_plan(b, back[0]);
  CHECK(a.str() == b.str());
  CHECK(kind_of([&] { read_plans(dir, 2); }) == ErrorKind::kIo);
  fs::remove_all(dir);
}

TEST_CASE("augmentation is deterministic") {
  const auto cfg = small_config();
  const auto data = load_dataset(cfg);
  std::ostringstream a;
  std::ostringstream b;
  save_plan(a, augment_dataset(data, cfg)[0]);
  save_plan(b, augment_dataset(data, cfg)[0]);
  CHECK(a.str() == b.str());
}

TEST_CASE("resumed training matches a straight run") {
  auto cfg = small_config();
  cfg.epochs = 5;
  const auto data = load_dataset(cfg);
  const auto set = training_set(data, augment_dataset(data, cfg));
  std::vector<double> straight_losses;
  const auto straight = train_model(set, cfg, std::nullopt,
                                    [&](const EpochMetrics& m, const TrainState&) { straight_losses.push_back(m.loss); });
  CHECK(straight.epoch == 5);

  auto half = cfg;
  half.epochs = 2;
  const auto partial = train_model(set, half);
  std::vector<double> resumed_losses(straight_losses.begin(), straight_losses.begin() + 2);
  // A run stopped early flushed its buffer on its own last epoch, so it
  // resumes from a different teacher: only compare against an unflushed copy.
  auto unflushed = init_train_state(resolved_shape(cfg, data), cfg.train, cfg.seed);
  for (int e = 0; e < 2; ++e) train_epoch(set, unflushed);
  const auto resumed = train_model(set, cfg, unflushed,
                                   [&](const EpochMetrics& m, const TrainState&) { resumed_losses.push_back(m.loss); });
  CHECK(resumed_losses == straight_losses);
  CHECK(resumed.epoch == 5);
  CHECK(partial.epoch == 2);

  auto other = cfg;
  other.train.eps = 0.5;
  CHECK(kind_of([&] { train_model(set, other, unflushed); }) == ErrorKind::kInvalidArgument);
  auto reseeded = cfg;
  reseeded.seed = 99;
  CHECK(kind_of([&] { train_model(set, reseeded, unflushed); }) == ErrorKind::kInvalidArgument);
}

TEST_CASE("numerical failure writes the abort snapshot") {
  auto cfg = small_config();
  auto data = load_dataset(cfg);
  Eigen::MatrixXd x = data.graphs[0].features();
  x(3, 1) = std::numeric_limits<double>::infinity();
  const Graph& g = data.graphs[0];
  data.graphs[0] = Graph(g.num_nodes(), g.edges(), x, g.labels());
  const auto set = training_set(data, augment_dataset(data, cfg));
  const auto snap = scratch("abort.ckpt");
  CHECK(kind_of([&] { train_model(set, cfg, std::nullopt, {}, {}, snap); }) == ErrorKind::kNumerical);
  CHECK(fs::exists(snap));
  CHECK(load_checkpoint(snap).epoch == 0);
  fs::remove(snap);
}

TEST_CASE("evaluation rows, sigma zero and report round trip") {
  auto cfg = small_config();
  cfg.attack = AttackKind::kRandom;
  cfg.attack_mode = AttackMode::kEvasion;
  cfg.attack_sigmas = {0.0, 0.2};
  const auto data = load_dataset(cfg);
  const auto state = train_model(training_set(data, augment_dataset(data, cfg)), cfg);
  const auto report = evaluate(state, data, cfg);
  CHECK(report.epoch == 3);
  CHECK(report.clean.values.size() == 3);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].flips == 0);
  CHECK(report.rows[0].result.values == report.clean.values);
  CHECK(report.rows[1].flips == attack_budget(data.graphs[0], 0.2));
  CHECK(report.mode == "evasion");

  const auto back = report_from_json(nlohmann::json::parse(to_json(report).dump()));
  CHECK(to_json(back) == to_json(report));
  CHECK(to_text(back) == to_text(report));
  CHECK(to_text(report).find("random") != std::string::npos);

  cfg.attack_mode = AttackMode::kPoison;
  const auto poisoned = evaluate(state, data, cfg);
  CHECK(poisoned.rows[0].result.values == report.clean.values);
  CHECK(poisoned.rows[1].result.values.size() == 3);
}

TEST_CASE("dataset split protocol") {
  auto cfg = small_config();
  cfg.use_dataset_split = true;
  cfg.sbm.train_ratio = 0.4;
  const auto data = load_dataset(cfg);
  const auto r = probe_embeddings(data.graphs[0].features(), data, cfg);
  CHECK(r.values.size() == 1);
  auto stripped = data;
  stripped.splits.clear();
  CHECK_THROWS_AS(probe_embeddings(data.graphs[0].features(), stripped, cfg), Error);
}

TEST_CASE("graph classification runs end to end with k-fold probing") {
  DatasetBundle b;
  b.task = TaskKind::kGraphClassification;
  for (int i = 0; i < 12; ++i) {
    const bool dense = i % 2 == 0;
    Graph g = testing::random_graph(8, dense ? 0.6 : 0.2, static_cast<std::uint64_t>(i));
    b.graphs.emplace_back(g.num_nodes(), g.edges(), testing::random_matrix(8, 3, static_cast<std::uint64_t>(100 + i)));
    b.graph_labels.push_back(dense ? 1 : 0);
  }
  auto cfg = small_config();
  cfg.shape.kind = EncoderKind::kGin;
  cfg.shape.hidden = {4, 4};
  cfg.kfold = 3;
  cfg.kfold_repeats = 2;
  cfg.attack = AttackKind::kRandom;
  cfg.attack_mode = AttackMode::kEvasion;
  cfg.attack_sigmas = {0.1};
  const auto state = train_model(training_set(b, augment_dataset(b, cfg)), cfg);
  const auto report = evaluate(state, b, cfg);
  CHECK(report.clean.values.size() == 2);
  CHECK(report.rows.size() == 1);
  cfg.kfold = 13;
  CHECK(kind_of([&] { evaluate(state, b, cfg); }) == ErrorKind::kProtocol);
}

TEST_CASE("mismatched plans are rejected") {
  const auto cfg = small_config();
  const auto data = load_dataset(cfg);
  auto plans = augment_dataset(data, cfg);
  plans.push_back(plans.front());
  CHECK_THROWS_AS(training_set(data, plans), Error);
}

TEST_CASE("bench with no sizes is empty") {
  PipelineConfig cfg;
  cfg.bench_n = {};
  const auto r = run_bench(cfg);
  CHECK(r.eig.empty());
  CHECK(r.updates.empty());
  CHECK(to_json(r)["eigensolve"].empty());
}

TEST_CASE("bench rows and sparse update bytes") {
  PipelineConfig cfg;
  cfg.bench_n = {60, 120};
  cfg.bench_k = {3, 100};
  cfg.bench_repeats = 1;
  cfg.bench_degree = 6;
  const auto r = run_bench(cfg);
  CHECK(r.eig.size() == 2);  // K = 100 is skipped for both sizes
  for (const auto& row : r.eig) {
    CHECK(row.k == 3);
    CHECK(row.seconds >= 0.0);
  }
  CHECK_FALSE(r.updates.empty());
  for (const auto& u : r.updates) CHECK(u.delta_bytes == 16 * u.delta_nnz);
  CHECK(to_text(r).find("eigensolve") != std::string::npos);
}

TEST_CASE("GIN picks its own default widths") {
  auto cfg = parse_config("encoder=gin\n");
  CHECK(cfg.shape.hidden == std::vector<std::size_t>{512, 512, 512});
  cfg = parse_config("hidden=8,4\nencoder=gin\n");
  CHECK(cfg.shape.hidden == std::vector<std::size_t>{8, 4});
}
