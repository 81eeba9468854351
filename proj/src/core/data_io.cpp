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

#include "data_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "error.hpp"
#include "eval.hpp"
#include "rng.hpp"
#include "textio.hpp"

namespace lapboot {

namespace fs = std::filesystem;

std::string_view to_string(TaskKind kind) {
  return kind == TaskKind::kNodeClassification ? "node" : "graph";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "node") return TaskKind::kNodeClassification;
  if (name == "graph") return TaskKind::kGraphClassification;
  fail(ErrorKind::kInvalidArgument, "unknown task '" + std::string(name) + "'");
}

std::vector<int> sample_labels(const DatasetBundle& bundle) {
  if (bundle.task == TaskKind::kGraphClassification) return bundle.graph_labels;
  require(bundle.graphs.size() == 1, ErrorKind::kStructural,
          "node classification expects exactly one graph");
  return bundle.graphs.front().labels();
}

std::size_t sample_count(const DatasetBundle& bundle) {
  if (bundle.task == TaskKind::kGraphClassification) return bundle.graphs.size();
  return bundle.graphs.empty() ? 0 : bundle.graphs.front().num_nodes();
}

void validate(const DatasetBundle& bundle) {
  require(!bundle.graphs.empty(), ErrorKind::kStructural, "dataset has no graphs");
  if (bundle.task == TaskKind::kNodeClassification) {
    require(bundle.graphs.size() == 1, ErrorKind::kStructural,
            "node classification expects exactly one graph");
    require(bundle.graphs.front().has_labels(), ErrorKind::kStructural,
            "node classification requires node labels");
  } else {
    require(bundle.graph_labels.size() == bundle.graphs.size(), ErrorKind::kStructural,
            "graph classification requires one label per graph");
  }
  const std::size_t n = sample_count(bundle);
  std::set<std::size_t> seen;
  for (const auto& [name, idx] : bundle.splits) {
    for (auto i : idx) {
      require(i < n, ErrorKind::kStructural,
              "split '" + name + "' index " + std::to_string(i) + " out of range");
      require(seen.insert(i).second, ErrorKind::kStructural,
              "index " + std::to_string(i) + " appears in more than one split");
    }
  }
}

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::kIo, "cannot open " + path);
  return in;
}

std::string where(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line);
}

std::string_view strip_comment(std::string_view s) {
  const auto hash = s.find('#');
  return text::trim(hash == std::string_view::npos ? s : s.substr(0, hash));
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::kIo, "cannot open " + path + " for writing");
  return out;
}

void write_edges(const std::string& path, const Graph& g) {
  auto out = open_output(path);
  for (const auto& e : g.edges()) out << e.lo << ' ' << e.hi << '\n';
  require(out.good(), ErrorKind::kIo, "write failed for " + path);
}

void write_features(const std::string& path, const Eigen::MatrixXd& x) {
  auto out = open_output(path);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (j) out << ',';
      out << text::format_double(x(i, j));
    }
    out << '\n';
  }
  require(out.good(), ErrorKind::kIo, "write failed for " + path);
}

void write_labels(const std::string& path, const std::vector<int>& labels) {
  auto out = open_output(path);
  for (int l : labels) out << l << '\n';
  require(out.good(), ErrorKind::kIo, "write failed for " + path);
}

void write_splits(const std::string& path, const std::map<std::string, std::vector<std::size_t>>& splits) {
  auto out = open_output(path);
  for (const auto& [name, idx] : splits) {
    out << '[' << name << "]\n";
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out << idx[i] << ((i + 1) % 20 == 0 || i + 1 == idx.size() ? '\n' : ' ');
    }
  }
  require(out.good(), ErrorKind::kIo, "write failed for " + path);
}

Graph assemble(const std::string& edges_path, const std::string& features_path,
               const std::string& labels_path, std::vector<std::string>& warnings) {
  const EdgeList edges = read_edges(edges_path);
  Eigen::MatrixXd features;
  std::vector<int> labels;
  std::size_t n = static_cast<std::size_t>(edges.max_node + 1);
  std::string source = edges_path;
  if (!features_path.empty()) {
    features = read_features(features_path);
    n = static_cast<std::size_t>(features.rows());
    source = features_path;
  }
  if (!labels_path.empty()) {
    labels = read_labels(labels_path);
    if (features_path.empty()) {
      n = labels.size();
      source = labels_path;
    }
    require(labels.size() == n, ErrorKind::kStructural,
            labels_path + " has " + std::to_string(labels.size()) + " labels but " + source +
                " implies " + std::to_string(n) + " nodes");
  }
  require(edges.max_node < static_cast<NodeId>(n), ErrorKind::kStructural,
          edges_path + " references node " + std::to_string(edges.max_node) + " but " + source +
              " implies " + std::to_string(n) + " nodes");
  std::size_t dropped = 0;
  Graph g(n, edges.edges, std::move(features), std::move(labels), &dropped);
  if (dropped > 0) {
    warnings.push_back(edges_path + ": dropped " + std::to_string(dropped) + " duplicate edge" +
                       (dropped == 1 ? "" : "s"));
  }
  return g;
}

}  // namespace

EdgeList read_edges(const std::string& path) {
  auto in = open_input(path);
  EdgeList out;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    const auto body = strip_comment(line);
    if (body.empty()) continue;
    const auto parts = text::split(body);
    require(parts.size() == 2, ErrorKind::kParse,
            where(path, no) + ": expected two node ids, got '" + std::string(body) + "'");
    const auto a = text::parse_int(parts[0], where(path, no));
    const auto b = text::parse_int(parts[1], where(path, no));
    require(a >= 0 && b >= 0 && a < (1LL << 31) - 1 && b < (1LL << 31) - 1, ErrorKind::kParse,
            where(path, no) + ": node ids must be non-negative 32-bit integers");
    require(a != b, ErrorKind::kStructural, where(path, no) + ": self-loop on node " + std::to_string(a));
    out.edges.push_back({static_cast<NodeId>(a), static_cast<NodeId>(b)});
    out.max_node = std::max({out.max_node, static_cast<NodeId>(a), static_cast<NodeId>(b)});
  }
  return out;
}

Eigen::MatrixXd read_features(const std::string& path) {
  auto in = open_input(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    const auto body = text::trim(line);
    if (body.empty()) continue;
    std::vector<double> row;
    for (auto cell : text::split(body, ",")) row.push_back(text::parse_double(text::trim(cell), where(path, no)));
    require(rows.empty() || row.size() == rows.front().size(), ErrorKind::kParse,
            where(path, no) + ": expected " + std::to_string(rows.empty() ? 0 : rows.front().size()) +
                " columns, got " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.empty() ? 0 : rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return x;
}

std::vector<int> read_labels(const std::string& path) {
  auto in = open_input(path);
  std::vector<int> labels;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    const auto body = text::trim(line);
    if (body.empty()) continue;
    const auto v = text::parse_int(body, where(path, no));
    require(v >= -(1LL << 31) && v < (1LL << 31), ErrorKind::kParse, where(path, no) + ": label out of range");
    labels.push_back(static_cast<int>(v));
  }
  return labels;
}

std::map<std::string, std::vector<std::size_t>> read_splits(const std::string& path) {
  auto in = open_input(path);
  std::map<std::string, std::vector<std::size_t>> splits;
  std::vector<std::size_t>* current = nullptr;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    const auto body = strip_comment(line);
    if (body.empty()) continue;
    if (body.front() == '[') {
      require(body.back() == ']' && body.size() > 2, ErrorKind::kParse,
              where(path, no) + ": malformed section header");
      const std::string name(text::trim(body.substr(1, body.size() - 2)));
      require(!splits.contains(name), ErrorKind::kParse, where(path, no) + ": duplicate split '" + name + "'");
      current = &splits[name];
      continue;
    }
    require(current != nullptr, ErrorKind::kParse, where(path, no) + ": index before any [section]");
    for (auto tok : text::split(body)) {
      const auto v = text::parse_int(tok, where(path, no));
      require(v >= 0, ErrorKind::kParse, where(path, no) + ": negative index");
      current->push_back(static_cast<std::size_t>(v));
    }
  }
  return splits;
}

DatasetBundle load_edgelist(const std::string& edges_path, const std::string& features_path,
                            const std::string& labels_path, const std::string& splits_path,
                            TaskKind task) {
  require(task == TaskKind::kNodeClassification, ErrorKind::kInvalidArgument,
          "a single edge list holds one graph; use a manifest for graph classification");
  require(!labels_path.empty(), ErrorKind::kStructural,
          "node classification requires a labels file");
  DatasetBundle b;
  b.task = task;
  b.graphs.push_back(assemble(edges_path, features_path, labels_path, b.warnings));
  if (!splits_path.empty()) b.splits = read_splits(splits_path);
  validate(b);
  return b;
}

DatasetBundle load_manifest(const std::string& path) {
  auto in = open_input(path);
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](std::string_view p) -> std::string {
    if (p == "-") return {};
    const fs::path q(p);
    return (q.is_absolute() ? q : base / q).string();
  };
  DatasetBundle b;
  bool header = false;
  bool have_task = false;
  std::string splits_path;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    const auto body = strip_comment(line);
    if (body.empty()) continue;
    const auto parts = text::split(body);
    if (!header) {
      require(parts.size() == 2 && parts[0] == "lapboot-dataset", ErrorKind::kParse,
              where(path, no) + ": not a dataset manifest");
      require(parts[1] == "1", ErrorKind::kParse,
              where(path, no) + ": unsupported manifest version " + std::string(parts[1]));
      header = true;
    } else if (parts[0] == "task" && parts.size() == 2) {
      b.task = parse_task_kind(parts[1]);
      have_task = true;
    } else if (parts[0] == "graph" && (parts.size() == 4 || parts.size() == 5)) {
      b.graphs.push_back(assemble(resolve(parts[1]), resolve(parts[2]), resolve(parts[3]), b.warnings));
      if (parts.size() == 5) {
        b.graph_labels.push_back(static_cast<int>(text::parse_int(parts[4], where(path, no))));
      }
    } else if (parts[0] == "splits" && parts.size() == 2) {
      splits_path = resolve(parts[1]);
    } else {
      fail(ErrorKind::kParse, where(path, no) + ": unrecognized line '" + std::string(body) + "'");
    }
  }
  require(header, ErrorKind::kParse, path + ": empty manifest");
  require(have_task, ErrorKind::kParse, path + ": missing task line");
  if (!splits_path.empty()) b.splits = read_splits(splits_path);
  validate(b);
  return b;
}

void save_bundle(const std::string& manifest_path, const DatasetBundle& bundle) {
  validate(bundle);
  const fs::path mp(manifest_path);
  const std::string stem = mp.stem().string();
  const fs::path dir = mp.parent_path();
  if (!dir.empty()) fs::create_directories(dir);
  auto out = open_output(manifest_path);
  out << "lapboot-dataset 1\n";
  out << "task " << to_string(bundle.task) << '\n';
  for (std::size_t i = 0; i < bundle.graphs.size(); ++i) {
    const Graph& g = bundle.graphs[i];
    const std::string prefix =
        bundle.graphs.size() == 1 ? stem : stem + ".g" + std::to_string(i);
    const std::string edges = prefix + ".edges";
    write_edges((dir / edges).string(), g);
    std::string features = "-";
    if (g.features().size() > 0) {
      features = prefix + ".features.csv";
      write_features((dir / features).string(), g.features());
    }
    std::string labels = "-";
    if (g.has_labels()) {
      labels = prefix + ".labels";
      write_labels((dir / labels).string(), g.labels());
    }
    out << "graph " << edges << ' ' << features << ' ' << labels;
    if (bundle.task == TaskKind::kGraphClassification) out << ' ' << bundle.graph_labels[i];
    out << '\n';
  }
  if (!bundle.splits.empty()) {
    const std::string splits = stem + ".splits";
    write_splits((dir / splits).string(), bundle.splits);
    out << "splits " << splits << '\n';
  }
  require(out.good(), ErrorKind::kIo, "write failed for " + manifest_path);
}

DatasetBundle generate_sbm(const SbmOptions& opts) {
  require(opts.blocks >= 1 && opts.n >= opts.blocks, ErrorKind::kInvalidArgument,
          "SBM needs at least one node per block");
  require(opts.p_out >= 0.0 && opts.p_out < opts.p_in && opts.p_in <= 1.0,
          ErrorKind::kInvalidArgument, "SBM needs 0 <= p_out < p_in <= 1");
  require(opts.feature_dim >= 1, ErrorKind::kInvalidArgument, "SBM needs a feature dimension");
  const std::size_t n = opts.n;
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i * opts.blocks / n);

  Rng edge_rng(derive_seed(opts.seed, 1));
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = labels[i] == labels[j] ? opts.p_in : opts.p_out;
      if (edge_rng.bernoulli(p)) edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j)});
    }
  }

  Rng feat_rng(derive_seed(opts.seed, 2));
  const auto d = static_cast<Eigen::Index>(opts.feature_dim);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      x(static_cast<Eigen::Index>(i), j) = opts.noise * feat_rng.normal();
    }
    x(static_cast<Eigen::Index>(i), labels[i] % d) += opts.margin;
  }

  DatasetBundle b;
  b.task = TaskKind::kNodeClassification;
  b.graphs.emplace_back(n, std::move(edges), std::move(x), labels);
  const Split split = random_split(n, opts.train_ratio, opts.val_ratio, derive_seed(opts.seed, 3));
  b.splits["train"] = split.train;
  if (!split.val.empty()) b.splits["val"] = split.val;
  b.splits["test"] = split.test;
  return b;
}

}  // namespace lapboot
