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

// Exercises the shared library strictly through its C header.

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "lapboot/lapboot.h"

namespace fs = std::filesystem;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  lb_string_free(s);
  return out;
}

lb_config* small_config() {
  lb_config* cfg = nullptr;
  REQUIRE(lb_config_new(&cfg) == LB_OK);
  const char* settings[][2] = {
      {"dataset", "sbm"},      {"sbm.n", "40"},           {"sbm.feature_dim", "5"},
      {"sbm.p_in", "0.3"},     {"k", "3"},                {"aug_iterations", "3"},
      {"hidden", "6,4"},       {"projector_hidden", "5"}, {"projection_dim", "3"},
      {"predictor_hidden", "5"}, {"epochs", "3"},         {"lr", "0.01"},
      {"probe_seeds", "2"},    {"sbm.train_ratio", "0.3"},
  };
  for (const auto& kv : settings) REQUIRE(lb_config_set(cfg, kv[0], kv[1]) == LB_OK);
  return cfg;
}

void count_epoch(const char* json, void* user) {
  ++*static_cast<int*>(user);
  const auto j = nlohmann::json::parse(json);
  CHECK(j.contains("loss"));
}

}  // namespace

TEST_CASE("version and status strings") {
  CHECK(std::strlen(lb_version()) > 0);
  CHECK(std::string(lb_status_string(LB_OK)) != std::string(lb_status_string(LB_ERR_IO)));
}

TEST_CASE("null arguments are invalid, not crashes") {
  CHECK(lb_config_new(nullptr) == LB_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(lb_last_error()) > 0);
  CHECK(lb_config_set(nullptr, "a", "b") == LB_ERR_INVALID_ARGUMENT);
  lb_config_free(nullptr);
  lb_dataset_free(nullptr);
  lb_plans_free(nullptr);
  lb_model_free(nullptr);
  lb_string_free(nullptr);
  lb_buffer_free(nullptr);
}

TEST_CASE("config get, set and errors") {
  lb_config* cfg = small_config();
  char* v = nullptr;
  REQUIRE(lb_config_get(cfg, "sbm.n", &v) == LB_OK);
  CHECK(take(v) == "40");
  CHECK(lb_config_set(cfg, "bogus", "1") == LB_ERR_INVALID_ARGUMENT);
  CHECK(std::string(lb_last_error()).find("bogus") != std::string::npos);
  CHECK(lb_config_get(cfg, "bogus", &v) == LB_ERR_INVALID_ARGUMENT);
  REQUIRE(lb_config_set(cfg, "budget_ratio", "5") == LB_OK);
  CHECK(lb_config_validate(cfg) == LB_ERR_INVALID_ARGUMENT);
  char* text = nullptr;
  REQUIRE(lb_config_to_text(cfg, &text) == LB_OK);
  CHECK(take(text).find("budget_ratio=5") != std::string::npos);
  lb_config_free(cfg);
  lb_config* missing = nullptr;
  CHECK(lb_config_load("/nonexistent/x.cfg", &missing) == LB_ERR_IO);
  CHECK(missing == nullptr);
}

TEST_CASE("dataset load, info, attack and save") {
  lb_config* cfg = small_config();
  lb_dataset* ds = nullptr;
  REQUIRE(lb_dataset_load(cfg, &ds) == LB_OK);
  char* info = nullptr;
  REQUIRE(lb_dataset_info(ds, &info) == LB_OK);
  const auto j = nlohmann::json::parse(take(info));
  CHECK(j["nodes"] == 40);
  CHECK(j["feature_dim"] == 5);
  CHECK(j["task"] == "node");

  lb_dataset* attacked = nullptr;
  size_t flips = 0;
  REQUIRE(lb_dataset_attack(ds, "dice", 0.2, 3, &attacked, &flips) == LB_OK);
  CHECK(flips > 0);
  CHECK(lb_dataset_attack(ds, "laser", 0.2, 3, &attacked, &flips) == LB_ERR_INVALID_ARGUMENT);
  lb_dataset_free(attacked);

  const auto dir = fs::temp_directory_path() / "lapboot_capi_ds";
  fs::remove_all(dir);
  const auto manifest = (dir / "toy.manifest").string();
  REQUIRE(lb_dataset_save(ds, manifest.c_str()) == LB_OK);
  REQUIRE(lb_config_set(cfg, "dataset", manifest.c_str()) == LB_OK);
  lb_dataset* back = nullptr;
  REQUIRE(lb_dataset_load(cfg, &back) == LB_OK);
  lb_dataset_free(back);
  REQUIRE(lb_config_set(cfg, "dataset", (dir / "absent.manifest").string().c_str()) == LB_OK);
  CHECK(lb_dataset_load(cfg, &back) == LB_ERR_IO);
  lb_dataset* raw = nullptr;
  CHECK(lb_dataset_load_edgelist((dir / "toy.edges").string().c_str(), nullptr, nullptr, nullptr, &raw) ==
        LB_ERR_STRUCTURAL);
  REQUIRE(lb_dataset_load_edgelist((dir / "toy.edges").string().c_str(),
                                   (dir / "toy.features.csv").string().c_str(),
                                   (dir / "toy.labels").string().c_str(), nullptr, &raw) == LB_OK);
  lb_dataset_free(raw);
  fs::remove_all(dir);
  lb_dataset_free(ds);
  lb_config_free(cfg);
}

TEST_CASE("augment, train, checkpoint, embed and evaluate") {
  const auto dir = fs::temp_directory_path() / "lapboot_capi_run";
  fs::remove_all(dir);
  lb_config* cfg = small_config();
  const auto ckpt = (dir / "m.ckpt").string();
  REQUIRE(lb_config_set(cfg, "checkpoint", ckpt.c_str()) == LB_OK);
  REQUIRE(lb_config_set(cfg, "attack", "random") == LB_OK);
  REQUIRE(lb_config_set(cfg, "attack_mode", "evasion") == LB_OK);
  REQUIRE(lb_config_set(cfg, "attack_sigmas", "0,0.1") == LB_OK);
  lb_dataset* ds = nullptr;
  REQUIRE(lb_dataset_load(cfg, &ds) == LB_OK);

  lb_plan_set* plans = nullptr;
  REQUIRE(lb_augment(ds, cfg, &plans) == LB_OK);
  char* summary = nullptr;
  REQUIRE(lb_plans_summary(plans, &summary) == LB_OK);
  CHECK(nlohmann::json::parse(take(summary)).size() == 1);
  REQUIRE(lb_plans_save(plans, (dir / "plans").string().c_str()) == LB_OK);
  lb_plan_set* loaded = nullptr;
  REQUIRE(lb_plans_load((dir / "plans").string().c_str(), 1, &loaded) == LB_OK);
  CHECK(lb_plans_load((dir / "plans").string().c_str(), 2, &plans) == LB_ERR_IO);

  int seen = 0;
  lb_model* model = nullptr;
  REQUIRE(lb_train(ds, loaded, cfg, nullptr, count_epoch, &seen, &model) == LB_OK);
  CHECK(seen == 3);
  REQUIRE(lb_model_save(model, ckpt.c_str()) == LB_OK);
  lb_model* reloaded = nullptr;
  REQUIRE(lb_model_load(ckpt.c_str(), &reloaded) == LB_OK);
  char* info = nullptr;
  REQUIRE(lb_model_info(reloaded, &info) == LB_OK);
  CHECK(nlohmann::json::parse(take(info))["epoch"] == 3);

  double* a = nullptr;
  double* b = nullptr;
  size_t rows = 0, cols = 0, rows2 = 0, cols2 = 0;
  REQUIRE(lb_model_embeddings(model, ds, &a, &rows, &cols) == LB_OK);
  REQUIRE(lb_model_embeddings(reloaded, ds, &b, &rows2, &cols2) == LB_OK);
  CHECK(rows == 40);
  CHECK(cols == 4);
  CHECK(std::memcmp(a, b, sizeof(double) * rows * cols) == 0);
  lb_buffer_free(a);
  lb_buffer_free(b);

  // Resuming an already finished run with more epochs continues it.
  REQUIRE(lb_config_set(cfg, "epochs", "4") == LB_OK);
  lb_model* longer = nullptr;
  seen = 0;
  REQUIRE(lb_train(ds, loaded, cfg, reloaded, count_epoch, &seen, &longer) == LB_OK);
  CHECK(seen == 1);
  REQUIRE(lb_config_set(cfg, "eps", "0.5") == LB_OK);
  lb_model* refused = nullptr;
  CHECK(lb_train(ds, loaded, cfg, reloaded, nullptr, nullptr, &refused) == LB_ERR_INVALID_ARGUMENT);
  REQUIRE(lb_config_set(cfg, "eps", "0.008") == LB_OK);

  char* report = nullptr;
  REQUIRE(lb_evaluate(longer, ds, cfg, &report) == LB_OK);
  const std::string rj = take(report);
  const auto j = nlohmann::json::parse(rj);
  CHECK(j["rows"].size() == 2);
  CHECK(j["rows"][0]["result"]["values"] == j["clean"]["values"]);
  char* text = nullptr;
  REQUIRE(lb_report_to_text(rj.c_str(), &text) == LB_OK);
  CHECK(take(text).find("accuracy") != std::string::npos);
  CHECK(lb_report_to_text("{not json", &text) == LB_ERR_PARSE);

  CHECK(lb_model_load((dir / "nope.ckpt").string().c_str(), &refused) == LB_ERR_IO);

  lb_model_free(longer);
  lb_model_free(reloaded);
  lb_model_free(model);
  lb_plans_free(loaded);
  lb_plans_free(plans);
  lb_dataset_free(ds);
  lb_config_free(cfg);
  fs::remove_all(dir);
}

TEST_CASE("bench through the C API") {
  lb_config* cfg = nullptr;
  REQUIRE(lb_config_new(&cfg) == LB_OK);
  REQUIRE(lb_config_set(cfg, "bench_n", "50") == LB_OK);
  REQUIRE(lb_config_set(cfg, "bench_k", "3") == LB_OK);
  REQUIRE(lb_config_set(cfg, "bench_repeats", "1") == LB_OK);
  char* json = nullptr;
  char* text = nullptr;
  REQUIRE(lb_bench(cfg, &json, &text) == LB_OK);
  CHECK(nlohmann::json::parse(take(json))["eigensolve"].size() == 1);
  CHECK(!take(text).empty());
  lb_config_free(cfg);
}
