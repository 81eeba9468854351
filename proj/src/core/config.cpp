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

#include "config.hpp"

#include <fstream>
#include <sstream>

#include "error.hpp"
#include "textio.hpp"

namespace lapboot {

namespace {

std::size_t to_size(std::string_view v, const std::string& key) {
  const auto x = text::parse_int(v, key);
  require(x >= 0, ErrorKind::kInvalidArgument, key + " must be non-negative");
  return static_cast<std::size_t>(x);
}

bool to_bool(std::string_view v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorKind::kInvalidArgument, key + ": expected true or false");
}

std::vector<std::string_view> list_items(std::string_view v) {
  std::vector<std::string_view> out;
  for (auto part : text::split(v, ",")) {
    const auto t = text::trim(part);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

template <typename T, typename Fmt>
std::string join(const std::vector<T>& v, Fmt fmt) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += fmt(v[i]);
  }
  return out;
}

std::string_view objective_name(SpectralObjective o) {
  return o == SpectralObjective::kSquaredDifference ? "squared_difference" : "squared_norm";
}

std::string_view attack_name(AttackKind a) {
  switch (a) {
    case AttackKind::kRandom: return "random";
    case AttackKind::kDice: return "dice";
    default: return "none";
  }
}

void set(PipelineConfig& c, std::string_view key, std::string_view value) {
  const std::string k(key);
  auto real = [&] { return text::parse_double(value, k); };
  auto size = [&] { return to_size(value, k); };
  auto str = [&] { return std::string(value); };

  if (apply_train_setting(c.train, c.shape, key, value)) return;
  if (key == "dataset") { c.dataset = str(); }
  else if (key == "sbm.n") { c.sbm.n = size(); }
  else if (key == "sbm.blocks") { c.sbm.blocks = size(); }
  else if (key == "sbm.p_in") { c.sbm.p_in = real(); }
  else if (key == "sbm.p_out") { c.sbm.p_out = real(); }
  else if (key == "sbm.feature_dim") { c.sbm.feature_dim = size(); }
  else if (key == "sbm.margin") { c.sbm.margin = real(); }
  else if (key == "sbm.noise") { c.sbm.noise = real(); }
  else if (key == "sbm.train_ratio") { c.sbm.train_ratio = real(); }
  else if (key == "sbm.val_ratio") { c.sbm.val_ratio = real(); }
  else if (key == "sbm.seed") { c.sbm.seed = size(); }
  else if (key == "centrality") {
    c.centrality.measures.clear();
    for (auto m : list_items(value)) c.centrality.measures.push_back(parse_centrality_measure(m));
  } else if (key == "centrality_weights") {
    const auto items = list_items(value);
    c.centrality.weights.resize(static_cast<Eigen::Index>(items.size()));
    for (std::size_t i = 0; i < items.size(); ++i) {
      c.centrality.weights(static_cast<Eigen::Index>(i)) = text::parse_double(items[i], k);
    }
  }
  else if (key == "pagerank_damping") { c.centrality.pagerank_damping = real(); }
  else if (key == "katz_scale") { c.centrality.katz_scale = real(); }
  else if (key == "centrality_tol") { c.centrality.tol = real(); }
  else if (key == "budget_ratio") { c.augment.budget_ratio = real(); }
  else if (key == "aug_step") { c.augment.step = real(); }
  else if (key == "aug_iterations") { c.augment.iterations = size(); }
  else if (key == "k") { c.augment.k = size(); }
  else if (key == "aug_decay") { c.augment.decay = to_bool(value, k); }
  else if (key == "objective") {
    if (value == "squared_difference") {
      c.augment.objective = SpectralObjective::kSquaredDifference;
    } else if (value == "squared_norm") {
      c.augment.objective = SpectralObjective::kSquaredNorm;
    } else {
      fail(ErrorKind::kInvalidArgument, "expected squared_difference or squared_norm");
    }
  }
  else if (key == "full_support_limit") { c.augment.full_support_limit = size(); }
  else if (key == "support_ratio") { c.augment.support_ratio = real(); }
  else if (key == "eig_tol") { c.augment.eigen.tol = real(); }
  else if (key == "eig_seed") { c.augment.eigen.seed = size(); }
  else if (key == "epochs") { c.epochs = size(); }
  else if (key == "seed") { c.seed = size(); }
  else if (key == "checkpoint_every") { c.checkpoint_every = size(); }
  else if (key == "probe_l2") { c.probe.l2 = real(); }
  else if (key == "probe_tol") { c.probe.tol = real(); }
  else if (key == "probe_max_iter") { c.probe.max_iter = size(); }
  else if (key == "train_ratio") { c.train_ratio = real(); }
  else if (key == "val_ratio") { c.val_ratio = real(); }
  else if (key == "probe_seeds") { c.probe_seeds = size(); }
  else if (key == "use_dataset_split") { c.use_dataset_split = to_bool(value, k); }
  else if (key == "kfold") { c.kfold = size(); }
  else if (key == "kfold_repeats") { c.kfold_repeats = size(); }
  else if (key == "attack") {
    if (value == "none") {
      c.attack = AttackKind::kNone;
    } else if (value == "random") {
      c.attack = AttackKind::kRandom;
    } else if (value == "dice") {
      c.attack = AttackKind::kDice;
    } else {
      fail(ErrorKind::kInvalidArgument, "expected none, random or dice");
    }
  } else if (key == "attack_mode") {
    if (value == "poison") {
      c.attack_mode = AttackMode::kPoison;
    } else if (value == "evasion") {
      c.attack_mode = AttackMode::kEvasion;
    } else {
      fail(ErrorKind::kInvalidArgument, "expected poison or evasion");
    }
  } else if (key == "attack_sigmas") {
    c.attack_sigmas.clear();
    for (auto s : list_items(value)) c.attack_sigmas.push_back(text::parse_double(s, k));
  } else if (key == "bench_n") {
    c.bench_n.clear();
    for (auto s : list_items(value)) c.bench_n.push_back(to_size(s, k));
  } else if (key == "bench_k") {
    c.bench_k.clear();
    for (auto s : list_items(value)) c.bench_k.push_back(to_size(s, k));
  }
  else if (key == "bench_degree") { c.bench_degree = real(); }
  else if (key == "bench_repeats") { c.bench_repeats = size(); }
  else if (key == "plan_dir") { c.plan_dir = str(); }
  else if (key == "checkpoint") { c.checkpoint = str(); }
  else if (key == "metrics") { c.metrics = str(); }
  else if (key == "report") { c.report = str(); }
  else { fail(ErrorKind::kInvalidArgument, "unknown key"); }
}

}  // namespace

void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  try {
    set(cfg, text::trim(key), text::trim(value));
  } catch (const Error& e) {
    fail(ErrorKind::kInvalidArgument, "config key '" + std::string(text::trim(key)) + "': " + e.what());
  }
}

PipelineConfig parse_config(std::string_view text_in, const std::string& source) {
  PipelineConfig cfg;
  std::istringstream in{std::string(text_in)};
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = text::trim(body);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    require(eq != std::string_view::npos, ErrorKind::kInvalidArgument,
            source + ":" + std::to_string(no) + ": expected key=value");
    apply_setting(cfg, body.substr(0, eq), body.substr(eq + 1));
  }
  return cfg;
}

PipelineConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::kIo, "cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

void apply_overrides(PipelineConfig& cfg, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    require(eq != std::string::npos, ErrorKind::kInvalidArgument,
            "override '" + o + "' is not key=value");
    apply_setting(cfg, std::string_view(o).substr(0, eq), std::string_view(o).substr(eq + 1));
  }
}

void validate(const PipelineConfig& c) {
  auto check = [](bool ok, const char* key, const std::string& why) {
    require(ok, ErrorKind::kInvalidArgument, std::string("config key '") + key + "': " + why);
  };
  check(c.augment.budget_ratio > 0.0 && c.augment.budget_ratio <= 1.0, "budget_ratio", "must lie in (0, 1]");
  check(c.augment.step > 0.0, "aug_step", "must be positive");
  check(c.augment.k >= 1, "k", "must be at least 1");
  check(c.augment.support_ratio >= 0.0 && c.augment.support_ratio <= 1.0, "support_ratio", "must lie in [0, 1]");
  check(!c.centrality.measures.empty(), "centrality", "needs at least one measure");
  check(c.centrality.weights.size() == 0 ||
            c.centrality.weights.size() == static_cast<Eigen::Index>(c.centrality.measures.size()),
        "centrality_weights", "needs one weight per measure");
  check(c.centrality.pagerank_damping > 0.0 && c.centrality.pagerank_damping < 1.0, "pagerank_damping", "must lie in (0, 1)");
  check(c.centrality.katz_scale > 0.0 && c.centrality.katz_scale < 1.0, "katz_scale", "must lie in (0, 1)");
  check(!c.shape.hidden.empty(), "hidden", "needs at least one layer");
  for (auto h : c.shape.hidden) check(h > 0, "hidden", "layer widths must be positive");
  check(c.shape.projector_hidden > 0, "projector_hidden", "must be positive");
  check(c.shape.projection_dim > 0, "projection_dim", "must be positive");
  check(c.shape.predictor_hidden > 0, "predictor_hidden", "must be positive");
  check(c.train.eps >= 0.0, "eps", "must be non-negative");
  check(c.train.pgd_step >= 0.0, "pgd_step", "must be non-negative");
  check(c.train.pgd_steps >= 1, "pgd_steps", "must be at least 1");
  check(c.train.accum_steps >= 1, "accum_steps", "must be at least 1");
  check(c.train.lr >= 0.0, "lr", "must be non-negative");
  check(c.train.weight_decay >= 0.0, "weight_decay", "must be non-negative");
  check(c.train.ema_decay >= 0.0 && c.train.ema_decay <= 1.0, "ema_decay", "must lie in [0, 1]");
  check(c.train.sample_rho > 0.0 && c.train.sample_rho <= 1.0, "sample_rho", "must lie in (0, 1]");
  check(c.train_ratio > 0.0 && c.val_ratio >= 0.0 && c.train_ratio + c.val_ratio < 1.0, "train_ratio",
        "train_ratio + val_ratio must be below 1");
  check(c.probe_seeds >= 1, "probe_seeds", "must be at least 1");
  check(c.kfold >= 2, "kfold", "must be at least 2");
  check(c.kfold_repeats >= 1, "kfold_repeats", "must be at least 1");
  for (double s : c.attack_sigmas) check(s >= 0.0 && s <= 1.0, "attack_sigmas", "values must lie in [0, 1]");
  check(c.bench_degree > 0.0, "bench_degree", "must be positive");
  check(c.bench_repeats >= 1, "bench_repeats", "must be at least 1");
}

std::string to_text(const PipelineConfig& c) {
  auto real = [](double v) { return text::format_double(v); };
  auto num = [](std::size_t v) { return std::to_string(v); };
  std::ostringstream out;
  out << "dataset=" << c.dataset << '\n'
      << "sbm.n=" << c.sbm.n << '\n'
      << "sbm.blocks=" << c.sbm.blocks << '\n'
      << "sbm.p_in=" << real(c.sbm.p_in) << '\n'
      << "sbm.p_out=" << real(c.sbm.p_out) << '\n'
      << "sbm.feature_dim=" << c.sbm.feature_dim << '\n'
      << "sbm.margin=" << real(c.sbm.margin) << '\n'
      << "sbm.noise=" << real(c.sbm.noise) << '\n'
      << "sbm.train_ratio=" << real(c.sbm.train_ratio) << '\n'
      << "sbm.val_ratio=" << real(c.sbm.val_ratio) << '\n'
      << "sbm.seed=" << c.sbm.seed << '\n'
      << "centrality=" << join(c.centrality.measures, [](CentralityMeasure m) { return std::string(to_string(m)); }) << '\n'
      << "centrality_weights=" << join(std::vector<double>(c.centrality.weights.data(), c.centrality.weights.data() + c.centrality.weights.size()), real) << '\n'
      << "pagerank_damping=" << real(c.centrality.pagerank_damping) << '\n'
      << "katz_scale=" << real(c.centrality.katz_scale) << '\n'
      << "centrality_tol=" << real(c.centrality.tol) << '\n'
      << "budget_ratio=" << real(c.augment.budget_ratio) << '\n'
      << "aug_step=" << real(c.augment.step) << '\n'
      << "aug_iterations=" << c.augment.iterations << '\n'
      << "k=" << c.augment.k << '\n'
      << "aug_decay=" << (c.augment.decay ? "true" : "false") << '\n'
      << "objective=" << objective_name(c.augment.objective) << '\n'
      << "full_support_limit=" << c.augment.full_support_limit << '\n'
      << "support_ratio=" << real(c.augment.support_ratio) << '\n'
      << "eig_tol=" << real(c.augment.eigen.tol) << '\n'
      << "eig_seed=" << c.augment.eigen.seed << '\n'
      << describe(c.train, c.shape)
      << "epochs=" << c.epochs << '\n'
      << "seed=" << c.seed << '\n'
      << "checkpoint_every=" << c.checkpoint_every << '\n'
      << "probe_l2=" << real(c.probe.l2) << '\n'
      << "probe_tol=" << real(c.probe.tol) << '\n'
      << "probe_max_iter=" << c.probe.max_iter << '\n'
      << "train_ratio=" << real(c.train_ratio) << '\n'
      << "val_ratio=" << real(c.val_ratio) << '\n'
      << "probe_seeds=" << c.probe_seeds << '\n'
      << "use_dataset_split=" << (c.use_dataset_split ? "true" : "false") << '\n'
      << "kfold=" << c.kfold << '\n'
      << "kfold_repeats=" << c.kfold_repeats << '\n'
      << "attack=" << attack_name(c.attack) << '\n'
      << "attack_mode=" << (c.attack_mode == AttackMode::kPoison ? "poison" : "evasion") << '\n'
      << "attack_sigmas=" << join(c.attack_sigmas, real) << '\n'
      << "bench_n=" << join(c.bench_n, num) << '\n'
      << "bench_k=" << join(c.bench_k, num) << '\n'
      << "bench_degree=" << real(c.bench_degree) << '\n'
      << "bench_repeats=" << c.bench_repeats << '\n'
      << "plan_dir=" << c.plan_dir << '\n'
      << "checkpoint=" << c.checkpoint << '\n'
      << "metrics=" << c.metrics << '\n'
      << "report=" << c.report << '\n';
  return out.str();
}

}  // namespace lapboot
