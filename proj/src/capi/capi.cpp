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

#include "lapboot/lapboot.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <sstream>
#include <string>

#include "error.hpp"
#include "json.hpp"
#include "pipeline.hpp"
#include "textio.hpp"

struct lb_config {
  lapboot::PipelineConfig cfg;
};

struct lb_dataset {
  lapboot::DatasetBundle bundle;
};

struct lb_plan_set {
  std::vector<lapboot::AugmentationPlan> plans;
};

struct lb_model {
  lapboot::TrainState state;
};

namespace {

thread_local std::string g_last_error;

lb_status to_status(lapboot::ErrorKind kind) {
  switch (kind) {
    case lapboot::ErrorKind::kInvalidArgument: return LB_ERR_INVALID_ARGUMENT;
    case lapboot::ErrorKind::kStructural: return LB_ERR_STRUCTURAL;
    case lapboot::ErrorKind::kParse: return LB_ERR_PARSE;
    case lapboot::ErrorKind::kIo: return LB_ERR_IO;
    case lapboot::ErrorKind::kNumerical: return LB_ERR_NUMERICAL;
    case lapboot::ErrorKind::kProtocol: return LB_ERR_PROTOCOL;
  }
  return LB_ERR_INTERNAL;
}

template <typename Fn>
lb_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return LB_OK;
  } catch (const lapboot::Error& e) {
    g_last_error = e.what();
    return to_status(e.kind());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("json: ") + e.what();
    return LB_ERR_PARSE;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return LB_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LB_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return LB_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  lapboot::require(p != nullptr, lapboot::ErrorKind::kInvalidArgument,
                   std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string opt(const char* s) { return s ? std::string(s) : std::string(); }

}  // namespace

extern "C" {

const char* lb_version(void) { return "0.1.0"; }

const char* lb_status_string(lb_status status) {
  switch (status) {
    case LB_OK: return "ok";
    case LB_ERR_INVALID_ARGUMENT: return "invalid argument";
    case LB_ERR_STRUCTURAL: return "structural error";
    case LB_ERR_PARSE: return "parse error";
    case LB_ERR_IO: return "i/o error";
    case LB_ERR_NUMERICAL: return "numerical error";
    case LB_ERR_PROTOCOL: return "protocol error";
    case LB_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* lb_last_error(void) { return g_last_error.c_str(); }

void lb_string_free(char* s) { std::free(s); }

void lb_buffer_free(double* data) { std::free(data); }

lb_status lb_config_new(lb_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new lb_config{};
  });
}

lb_status lb_config_load(const char* path, lb_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new lb_config{lapboot::load_config_file(path)};
  });
}

lb_status lb_config_set(lb_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(value, "value");
    lapboot::apply_setting(cfg->cfg, key, value);
  });
}

lb_status lb_config_get(const lb_config* cfg, const char* key, char** value) {
  return guarded([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(value, "value");
    std::istringstream lines(lapboot::to_text(cfg->cfg));
    std::string line;
    const std::string prefix = std::string(key) + "=";
    while (std::getline(lines, line)) {
      if (line.starts_with(prefix)) {
        *value = dup_string(line.substr(prefix.size()));
        return;
      }
    }
    lapboot::fail(lapboot::ErrorKind::kInvalidArgument, "config key '" + std::string(key) + "': unknown key");
  });
}

lb_status lb_config_validate(const lb_config* cfg) {
  return guarded([&] {
    need(cfg, "cfg");
    lapboot::validate(cfg->cfg);
  });
}

lb_status lb_config_to_text(const lb_config* cfg, char** text) {
  return guarded([&] {
    need(cfg, "cfg");
    need(text, "text");
    *text = dup_string(lapboot::to_text(cfg->cfg));
  });
}

void lb_config_free(lb_config* cfg) { delete cfg; }

lb_status lb_dataset_load(const lb_config* cfg, lb_dataset** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = new lb_dataset{lapboot::load_dataset(cfg->cfg)};
  });
}

lb_status lb_dataset_load_edgelist(const char* edges, const char* features, const char* labels,
                                   const char* splits, lb_dataset** out) {
  return guarded([&] {
    need(edges, "edges");
    need(out, "out");
    *out = new lb_dataset{lapboot::load_edgelist(edges, opt(features), opt(labels), opt(splits))};
  });
}

lb_status lb_dataset_save(const lb_dataset* ds, const char* manifest_path) {
  return guarded([&] {
    need(ds, "ds");
    need(manifest_path, "manifest_path");
    lapboot::save_bundle(manifest_path, ds->bundle);
  });
}

lb_status lb_dataset_info(const lb_dataset* ds, char** json) {
  return guarded([&] {
    need(ds, "ds");
    need(json, "json");
    const auto& b = ds->bundle;
    std::size_t nodes = 0;
    std::size_t edges = 0;
    for (const auto& g : b.graphs) {
      nodes += g.num_nodes();
      edges += g.num_edges();
    }
    nlohmann::json j{{"task", std::string(lapboot::to_string(b.task))},
                     {"graphs", b.graphs.size()},
                     {"nodes", nodes},
                     {"edges", edges},
                     {"feature_dim", b.graphs.empty() ? 0 : b.graphs.front().features().cols()},
                     {"warnings", b.warnings}};
    *json = dup_string(j.dump());
  });
}

lb_status lb_dataset_attack(const lb_dataset* ds, const char* kind, double sigma, uint64_t seed,
                            lb_dataset** out, size_t* flips) {
  return guarded([&] {
    need(ds, "ds");
    need(kind, "kind");
    need(out, "out");
    const std::string k(kind);
    lapboot::AttackKind ak;
    if (k == "random") {
      ak = lapboot::AttackKind::kRandom;
    } else if (k == "dice") {
      ak = lapboot::AttackKind::kDice;
    } else {
      lapboot::fail(lapboot::ErrorKind::kInvalidArgument, "attack kind must be random or dice");
    }
    auto attacked = lapboot::attack_bundle(ds->bundle, ak, sigma, seed);
    if (flips) *flips = attacked.flips;
    *out = new lb_dataset{std::move(attacked.bundle)};
  });
}

void lb_dataset_free(lb_dataset* ds) { delete ds; }

lb_status lb_augment(const lb_dataset* ds, const lb_config* cfg, lb_plan_set** out) {
  return guarded([&] {
    need(ds, "ds");
    need(cfg, "cfg");
    need(out, "out");
    lapboot::validate(cfg->cfg);
    *out = new lb_plan_set{lapboot::augment_dataset(ds->bundle, cfg->cfg)};
  });
}

lb_status lb_plans_save(const lb_plan_set* plans, const char* dir) {
  return guarded([&] {
    need(plans, "plans");
    need(dir, "dir");
    lapboot::write_plans(dir, plans->plans);
  });
}

lb_status lb_plans_load(const char* dir, size_t count, lb_plan_set** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    *out = new lb_plan_set{lapboot::read_plans(dir, count)};
  });
}

lb_status lb_plans_summary(const lb_plan_set* plans, char** json) {
  return guarded([&] {
    need(plans, "plans");
    need(json, "json");
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : plans->plans) {
      arr.push_back({{"n", p.n},
                     {"k", p.k},
                     {"budget_ratio", p.budget_ratio},
                     {"budget", p.budget},
                     {"iterations", p.iterations},
                     {"final_loss_max", p.final_loss_max},
                     {"final_loss_min", p.final_loss_min},
                     {"delta_max_sum", p.delta_max.sum()},
                     {"delta_min_sum", p.delta_min.sum()},
                     {"trace_length", p.loss_max_trace.size()}});
    }
    *json = dup_string(arr.dump());
  });
}

void lb_plans_free(lb_plan_set* plans) { delete plans; }

lb_status lb_train(const lb_dataset* ds, const lb_plan_set* plans, const lb_config* cfg,
                   const lb_model* resume, lb_epoch_callback on_epoch, void* user, lb_model** out) {
  return guarded([&] {
    need(ds, "ds");
    need(plans, "plans");
    need(cfg, "cfg");
    need(out, "out");
    const auto& c = cfg->cfg;
    lapboot::validate(c);
    lapboot::resolved_shape(c, ds->bundle);
    const auto data = lapboot::training_set(ds->bundle, plans->plans);
    std::optional<lapboot::TrainState> start;
    if (resume) start = resume->state;
    auto callback = [&](const lapboot::EpochMetrics& m, const lapboot::TrainState& state) {
      if (on_epoch) on_epoch(lapboot::to_json_line(m).c_str(), user);
      if (c.checkpoint_every > 0 && !c.checkpoint.empty() && state.epoch % c.checkpoint_every == 0) {
        lapboot::save_checkpoint(c.checkpoint, state);
      }
    };
    const std::string snapshot = c.checkpoint.empty() ? std::string() : c.checkpoint + ".abort";
    *out = new lb_model{lapboot::train_model(data, c, std::move(start), callback, {}, snapshot)};
  });
}

lb_status lb_model_load(const char* path, lb_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new lb_model{lapboot::load_checkpoint(path)};
  });
}

lb_status lb_model_save(const lb_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    lapboot::save_checkpoint(path, model->state);
  });
}

lb_status lb_model_info(const lb_model* model, char** json) {
  return guarded([&] {
    need(model, "model");
    need(json, "json");
    const auto& s = model->state;
    nlohmann::json j{{"epoch", s.epoch},
                     {"seed", s.seed},
                     {"config_hash", lapboot::text::hex64(lapboot::checkpoint_config_hash(s))},
                     {"config", lapboot::describe(s.cfg, s.teacher.shape)}};
    *json = dup_string(j.dump());
  });
}

lb_status lb_model_embeddings(const lb_model* model, const lb_dataset* ds, double** data,
                              size_t* rows, size_t* cols) {
  return guarded([&] {
    need(model, "model");
    need(ds, "ds");
    need(data, "data");
    need(rows, "rows");
    need(cols, "cols");
    std::vector<Eigen::MatrixXd> parts;
    Eigen::Index total = 0;
    for (const auto& g : ds->bundle.graphs) {
      parts.push_back(lapboot::embed(model->state.student, lapboot::normalized_laplacian(g), g.features()));
      total += parts.back().rows();
    }
    const Eigen::Index width = parts.empty() ? 0 : parts.front().cols();
    auto* buf = static_cast<double*>(std::malloc(sizeof(double) * static_cast<std::size_t>(std::max<Eigen::Index>(1, total * width))));
    if (!buf) throw std::bad_alloc();
    Eigen::Index r = 0;
    for (const auto& p : parts) {
      for (Eigen::Index i = 0; i < p.rows(); ++i, ++r) {
        for (Eigen::Index j = 0; j < width; ++j) buf[r * width + j] = p(i, j);
      }
    }
    *data = buf;
    *rows = static_cast<size_t>(total);
    *cols = static_cast<size_t>(width);
  });
}

void lb_model_free(lb_model* model) { delete model; }

lb_status lb_evaluate(const lb_model* model, const lb_dataset* ds, const lb_config* cfg,
                      char** report_json) {
  return guarded([&] {
    need(model, "model");
    need(ds, "ds");
    need(cfg, "cfg");
    need(report_json, "report_json");
    lapboot::validate(cfg->cfg);
    const auto report = lapboot::evaluate(model->state, ds->bundle, cfg->cfg);
    *report_json = dup_string(lapboot::to_json(report).dump(2));
  });
}

lb_status lb_report_to_text(const char* report_json, char** text) {
  return guarded([&] {
    need(report_json, "report_json");
    need(text, "text");
    *text = dup_string(lapboot::to_text(lapboot::report_from_json(nlohmann::json::parse(report_json))));
  });
}

lb_status lb_bench(const lb_config* cfg, char** report_json, char** text) {
  return guarded([&] {
    need(cfg, "cfg");
    const auto report = lapboot::run_bench(cfg->cfg);
    if (report_json) *report_json = dup_string(lapboot::to_json(report).dump(2));
    if (text) *text = dup_string(lapboot::to_text(report));
  });
}

}  // extern "C"
