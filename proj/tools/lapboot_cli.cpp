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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lapboot/lapboot.h"

namespace {

// Thrown on a failed C API call; carries the process exit code.
struct Failure {
  int code;
  std::string message;
};

int exit_code(lb_status s) {
  switch (s) {
    case LB_OK: return 0;
    case LB_ERR_INVALID_ARGUMENT:
    case LB_ERR_PARSE:
    case LB_ERR_IO: return 2;
    default: return 1;
  }
}

void check(lb_status s, const std::string& what) {
  if (s != LB_OK) throw Failure{exit_code(s), what + ": " + lb_last_error()};
}

struct Deleter {
  void operator()(lb_config* p) const { lb_config_free(p); }
  void operator()(lb_dataset* p) const { lb_dataset_free(p); }
  void operator()(lb_plan_set* p) const { lb_plans_free(p); }
  void operator()(lb_model* p) const { lb_model_free(p); }
  void operator()(char* p) const { lb_string_free(p); }
};

template <typename T>
using Owned = std::unique_ptr<T, Deleter>;

std::string take(char* s) {
  Owned<char> guard(s);
  return s ? std::string(s) : std::string();
}

std::string config_value(const lb_config* cfg, const char* key) {
  char* v = nullptr;
  check(lb_config_get(cfg, key, &v), std::string("reading ") + key);
  return take(v);
}

struct Options {
  std::string config_path;
  std::vector<std::string> sets;
  std::string dataset;
  std::string checkpoint;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  bool json = false;
};

Owned<lb_config> make_config(const Options& o) {
  lb_config* raw = nullptr;
  if (o.config_path.empty()) {
    check(lb_config_new(&raw), "creating config");
  } else {
    check(lb_config_load(o.config_path.c_str(), &raw), "loading config");
  }
  Owned<lb_config> cfg(raw);
  auto set = [&](const std::string& key, const std::string& value) {
    check(lb_config_set(cfg.get(), key.c_str(), value.c_str()), "setting " + key);
  };
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Failure{2, "--set expects key=value, got '" + s + "'"};
    set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (!o.dataset.empty()) set("dataset", o.dataset);
  if (!o.checkpoint.empty()) set("checkpoint", o.checkpoint);
  if (o.seed) set("seed", std::to_string(*o.seed));
  if (o.epochs) set("epochs", std::to_string(*o.epochs));
  check(lb_config_validate(cfg.get()), "config");
  return cfg;
}

Owned<lb_dataset> load_dataset(const lb_config* cfg) {
  if (config_value(cfg, "dataset").empty()) throw Failure{2, "no dataset given (use --dataset or dataset=...)"};
  lb_dataset* raw = nullptr;
  check(lb_dataset_load(cfg, &raw), "loading dataset");
  Owned<lb_dataset> ds(raw);
  char* info = nullptr;
  check(lb_dataset_info(ds.get(), &info), "dataset info");
  const auto j = nlohmann::json::parse(take(info));
  for (const auto& w : j["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
  return ds;
}

std::size_t graph_count(const lb_dataset* ds) {
  char* info = nullptr;
  check(lb_dataset_info(ds, &info), "dataset info");
  return nlohmann::json::parse(take(info))["graphs"].get<std::size_t>();
}

void write_file(const std::string& path, const std::string& body) {
  if (path.empty()) return;
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path);
  out << body;
  if (!out.good()) throw Failure{1, "cannot write " + path};
}

int cmd_augment(const Options& o) {
  auto cfg = make_config(o);
  auto ds = load_dataset(cfg.get());
  lb_plan_set* raw = nullptr;
  check(lb_augment(ds.get(), cfg.get(), &raw), "augmentation");
  Owned<lb_plan_set> plans(raw);
  const std::string dir = config_value(cfg.get(), "plan_dir");
  check(lb_plans_save(plans.get(), dir.c_str()), "writing plans");
  char* summary = nullptr;
  check(lb_plans_summary(plans.get(), &summary), "plan summary");
  const auto j = nlohmann::json::parse(take(summary));
  if (o.json) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "plans written to " << dir << '\n';
    for (std::size_t i = 0; i < j.size(); ++i) {
      const auto& p = j[i];
      std::printf("graph %zu: n=%zu K=%zu budget=%.6g (r=%.3g) loss max=%.6g min=%.6g sum1=%.6g sum2=%.6g\n", i,
                  p["n"].get<std::size_t>(), p["k"].get<std::size_t>(), p["budget"].get<double>(),
                  p["budget_ratio"].get<double>(), p["final_loss_max"].get<double>(),
                  p["final_loss_min"].get<double>(), p["delta_max_sum"].get<double>(),
                  p["delta_min_sum"].get<double>());
    }
  }
  return 0;
}

struct MetricsSink {
  std::ofstream file;
  std::size_t every = 0;
  bool quiet = false;
};

void on_epoch(const char* metrics_json, void* user) {
  auto* sink = static_cast<MetricsSink*>(user);
  if (sink->file.is_open()) sink->file << metrics_json << '\n';
  if (sink->quiet || sink->every == 0) return;
  const auto j = nlohmann::json::parse(metrics_json);
  const auto epoch = j["epoch"].get<std::uint64_t>();
  if (epoch % sink->every == 0 || epoch == 1) {
    std::fprintf(stderr, "epoch %llu loss %.6f |delta|_inf %.3g grad %.3g\n",
                 static_cast<unsigned long long>(epoch), j["loss"].get<double>(),
                 j["delta_max_abs"].get<double>(), j["grad_norm"].get<double>());
  }
}

int cmd_train(const Options& o, bool inline_augment, bool resume, std::size_t log_every) {
  auto cfg = make_config(o);
  auto ds = load_dataset(cfg.get());
  const std::string dir = config_value(cfg.get(), "plan_dir");
  const std::string checkpoint = config_value(cfg.get(), "checkpoint");
  Owned<lb_plan_set> plans;
  lb_plan_set* raw = nullptr;
  if (inline_augment) {
    check(lb_augment(ds.get(), cfg.get(), &raw), "augmentation");
    plans.reset(raw);
    check(lb_plans_save(plans.get(), dir.c_str()), "writing plans");
  } else {
    check(lb_plans_load(dir.c_str(), graph_count(ds.get()), &raw),
          "loading plans (run 'augment' first or pass --augment)");
    plans.reset(raw);
  }
  Owned<lb_model> start;
  if (resume) {
    lb_model* m = nullptr;
    check(lb_model_load(checkpoint.c_str(), &m), "loading checkpoint");
    start.reset(m);
  }
  MetricsSink sink;
  sink.every = log_every;
  sink.quiet = o.json;
  const std::string metrics = config_value(cfg.get(), "metrics");
  if (!metrics.empty()) {
    const auto parent = std::filesystem::path(metrics).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    sink.file.open(metrics, resume ? std::ios::app : std::ios::trunc);
  }
  lb_model* trained = nullptr;
  check(lb_train(ds.get(), plans.get(), cfg.get(), start.get(), on_epoch, &sink, &trained), "training");
  Owned<lb_model> model(trained);
  check(lb_model_save(model.get(), checkpoint.c_str()), "writing checkpoint");
  char* info = nullptr;
  check(lb_model_info(model.get(), &info), "model info");
  auto j = nlohmann::json::parse(take(info));
  if (o.json) {
    j.erase("config");
    j["checkpoint"] = checkpoint;
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "trained to epoch " << j["epoch"].get<std::uint64_t>() << ", checkpoint " << checkpoint
              << " (config " << j["config_hash"].get<std::string>() << ")\n";
  }
  return 0;
}

int cmd_eval(const Options& o) {
  auto cfg = make_config(o);
  const std::string checkpoint = config_value(cfg.get(), "checkpoint");
  if (!std::filesystem::exists(checkpoint)) throw Failure{2, "checkpoint not found: " + checkpoint};
  lb_model* m = nullptr;
  check(lb_model_load(checkpoint.c_str(), &m), "loading checkpoint");
  Owned<lb_model> model(m);
  auto ds = load_dataset(cfg.get());
  char* report = nullptr;
  check(lb_evaluate(model.get(), ds.get(), cfg.get(), &report), "evaluation");
  const std::string json = take(report);
  write_file(config_value(cfg.get(), "report"), json + "\n");
  if (o.json) {
    std::cout << json << '\n';
  } else {
    char* text = nullptr;
    check(lb_report_to_text(json.c_str(), &text), "rendering report");
    std::cout << take(text);
  }
  return 0;
}

int cmd_bench(const Options& o, const std::string& output) {
  auto cfg = make_config(o);
  char* json = nullptr;
  char* text = nullptr;
  check(lb_bench(cfg.get(), &json, &text), "benchmark");
  const std::string j = take(json);
  const std::string t = take(text);
  write_file(output, j + "\n");
  std::cout << (o.json ? j + "\n" : t);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Centrality-guided spectral augmentation with adversarial bootstrapped training"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(lb_version()));
  Options o;
  app.add_option("-c,--config", o.config_path, "key=value config file");
  app.add_option("-s,--set", o.sets, "override a config key (key=value), repeatable");
  app.add_option("--dataset", o.dataset, "dataset manifest, or 'sbm' for a generated graph");
  app.add_option("--checkpoint", o.checkpoint, "checkpoint path");
  app.add_option("--seed", o.seed, "random seed");
  app.add_option("--epochs", o.epochs, "total training epochs");
  app.add_flag("--json", o.json, "print JSON instead of text");

  auto* augment = app.add_subcommand("augment", "optimize the two augmentation views and write plan files");
  auto* train = app.add_subcommand("train", "adversarial bootstrapped training from plan files");
  bool inline_augment = false;
  bool resume = false;
  std::size_t log_every = 50;
  train->add_flag("--augment", inline_augment, "compute plans first instead of reading them");
  train->add_flag("--resume", resume, "continue from the checkpoint");
  train->add_option("--log-every", log_every, "progress line cadence in epochs (0 disables)");
  auto* eval = app.add_subcommand("eval", "linear-probe evaluation of a checkpoint, with optional attacks");
  auto* bench = app.add_subcommand("bench", "eigensolver timing and sparse-update memory counters");
  std::string bench_output;
  bench->add_option("-o,--output", bench_output, "also write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*augment) return cmd_augment(o);
    if (*train) return cmd_train(o, inline_augment, resume, log_every);
    if (*eval) return cmd_eval(o);
    if (*bench) return cmd_bench(o, bench_output);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
