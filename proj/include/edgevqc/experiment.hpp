// Copyright 2026 The edgevqc Authors
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

/**
 * @file
 * Experiment grid: YAML config, per-cell train/eval, resumable CSV reports and
 * plot-ready series.
 *
 * Output layout under the output directory:
 *   runs/<run_id>/{row,grad,confusion}.csv   one directory per finished cell
 *   cache/<dataset>_k<K>_s<seed>.*            reduced datasets and manifests
 *   results.csv, aggregate.csv, summary.csv
 *   plots/{grad_totals,confusion,tempering}/<series>.csv
 */
#pragma once

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <future>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "edgevqc/data.hpp"
#include "edgevqc/metrics.hpp"
#include "edgevqc/train.hpp"

namespace edgevqc {

namespace fs = std::filesystem;

inline constexpr int kCsvSchemaVersion = 1;

/// Invalid configuration; path() names the offending field, e.g. "optimizer.lr0".
class ConfigError : public std::invalid_argument {
  public:
    ConfigError(std::string path, const std::string &msg)
        : std::invalid_argument(path + ": " + msg), path_(std::move(path)) {}
    const std::string &path() const noexcept { return path_; }

  private:
    std::string path_;
};

struct DatasetSource {
    std::string name;
    std::string train_images, train_labels, test_images, test_labels;
    bool operator==(const DatasetSource &) const = default;
};

struct ExperimentConfig {
    std::vector<DatasetSource> datasets;
    std::vector<std::size_t> k_values;
    std::vector<BlockKind> blocks;
    std::vector<Codec> methods;
    std::vector<std::uint64_t> seeds;
    TemperFn temper_fn{TemperFn::Erf};
    double min_grad{0.01};
    SimplexScale simplex_scale{SimplexScale::UnitRadius};
    OptimizerConfig optimizer{};
    std::size_t shots{100};
    bool valid_sampling{true};
    ValidSamplingConfig sampling{};
    std::size_t per_class_train{0}; // 0 = all rows
    std::size_t per_class_test{0};
    std::string output{"results"};
    fs::path base_dir{}; // relative dataset paths resolve here; not serialized

    bool operator==(const ExperimentConfig &o) const {
        return datasets == o.datasets && k_values == o.k_values && blocks == o.blocks && methods == o.methods &&
               seeds == o.seeds && temper_fn == o.temper_fn && min_grad == o.min_grad && simplex_scale == o.simplex_scale &&
               optimizer.kind == o.optimizer.kind && optimizer.lr0 == o.optimizer.lr0 &&
               optimizer.scheduler == o.optimizer.scheduler && optimizer.batch_size == o.optimizer.batch_size &&
               optimizer.epochs == o.optimizer.epochs && shots == o.shots && valid_sampling == o.valid_sampling &&
               sampling.alpha == o.sampling.alpha && sampling.increment == o.sampling.increment &&
               sampling.cap == o.sampling.cap && per_class_train == o.per_class_train &&
               per_class_test == o.per_class_test && output == o.output;
    }

    fs::path resolve(const std::string &p) const {
        const fs::path path(p);
        return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    }

    void validate() const;
};

namespace detail {

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

inline std::string join_path(const std::string &a, const std::string &b) { return a.empty() ? b : a + "." + b; }

template <class T>
T scalar_as(const YAML::Node &n, const std::string &path) {
    if (!n.IsScalar()) throw ConfigError(path, "expected a scalar");
    try {
        if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
            const std::string s = n.Scalar();
            if (!s.empty() && s[0] == '-') throw ConfigError(path, "must be non-negative");
        }
        return n.as<T>();
    } catch (const YAML::Exception &) {
        throw ConfigError(path, "cannot read '" + n.Scalar() + "'");
    }
}

inline std::string scalar_text(const YAML::Node &n, const std::string &path) { return scalar_as<std::string>(n, path); }

inline void check_keys(const YAML::Node &map, const std::string &path, std::initializer_list<const char *> allowed) {
    if (!map.IsMap()) throw ConfigError(path.empty() ? "<root>" : path, "expected a mapping");
    for (const auto &kv : map) {
        const std::string key = kv.first.as<std::string>();
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char *a) { return key == a; })) {
            throw ConfigError(join_path(path, key), "unknown key");
        }
    }
}

template <class T, class F>
std::vector<T> list_of(const YAML::Node &root, const char *key, F convert) {
    const YAML::Node n = root[key];
    if (!n) throw ConfigError(key, "required");
    if (!n.IsSequence() || n.size() == 0) throw ConfigError(key, "expected a non-empty list");
    std::vector<T> out;
    for (std::size_t i = 0; i < n.size(); ++i) {
        const std::string path = std::string(key) + "[" + std::to_string(i) + "]";
        T v = convert(n[i], path);
        if (std::find(out.begin(), out.end(), v) != out.end()) throw ConfigError(path, "duplicate entry");
        out.push_back(std::move(v));
    }
    return out;
}

template <class F>
auto enum_of(const YAML::Node &n, const std::string &path, F parse) {
    try {
        return parse(scalar_text(n, path));
    } catch (const std::invalid_argument &e) {
        if (dynamic_cast<const ConfigError *>(&e)) throw;
        throw ConfigError(path, e.what());
    }
}

} // namespace detail

inline void ExperimentConfig::validate() const {
    if (datasets.empty()) throw ConfigError("datasets", "expected a non-empty list");
    std::set<std::string> names;
    for (std::size_t i = 0; i < datasets.size(); ++i) {
        const std::string path = "datasets[" + std::to_string(i) + "]";
        const auto &d = datasets[i];
        if (d.name.empty() || !std::all_of(d.name.begin(), d.name.end(), [](unsigned char c) {
                return std::isalnum(c) || c == '_' || c == '-';
            })) {
            throw ConfigError(path + ".name", "must be non-empty [A-Za-z0-9_-]");
        }
        if (!names.insert(d.name).second) throw ConfigError(path + ".name", "duplicate dataset name");
        if (d.train_images.empty()) throw ConfigError(path + ".train_images", "required");
        if (d.train_labels.empty()) throw ConfigError(path + ".train_labels", "required");
        if (d.test_images.empty()) throw ConfigError(path + ".test_images", "required");
        if (d.test_labels.empty()) throw ConfigError(path + ".test_labels", "required");
    }
    if (k_values.empty()) throw ConfigError("k", "expected a non-empty list");
    for (std::size_t i = 0; i < k_values.size(); ++i) {
        if (k_values[i] < 3 || k_values[i] > 10) throw ConfigError("k[" + std::to_string(i) + "]", "K must be in [3, 10]");
    }
    if (blocks.empty()) throw ConfigError("blocks", "expected a non-empty list");
    if (methods.empty()) throw ConfigError("methods", "expected a non-empty list");
    if (seeds.empty()) throw ConfigError("seeds", "expected a non-empty list");
    if (!(min_grad > 0.0 && min_grad < 1.0)) throw ConfigError("tempering.min_grad", "must be in (0, 1)");
    try {
        (void)Tempering(temper_fn, min_grad);
    } catch (const std::exception &e) {
        throw ConfigError("tempering", e.what());
    }
    if (!(optimizer.lr0 > 0.0) || !std::isfinite(optimizer.lr0)) throw ConfigError("optimizer.lr0", "must be positive");
    if (optimizer.batch_size == 0) throw ConfigError("optimizer.batch_size", "must be >= 1");
    if (optimizer.epochs == 0) throw ConfigError("optimizer.epochs", "must be >= 1");
    if (shots == 0) throw ConfigError("evaluation.shots", "must be >= 1");
    if (!(sampling.alpha > 0.0 && sampling.alpha < 1.0)) throw ConfigError("evaluation.alpha", "must be in (0, 1)");
    if (sampling.increment == 0) throw ConfigError("evaluation.increment", "must be >= 1");
    if (sampling.cap < sampling.increment) throw ConfigError("evaluation.cap", "must be >= increment");
    if (output.empty()) throw ConfigError("output", "must be non-empty");
}

/// Parses YAML text. Enum spellings are case-insensitive and normalized.
inline ExperimentConfig parse_config(const std::string &text, const fs::path &base_dir = {}) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception &e) {
        throw ConfigError("<root>", std::string("YAML syntax: ") + e.what());
    }
    using namespace detail;
    check_keys(root, "", {"datasets", "k", "blocks", "methods", "seeds", "tempering", "readout", "optimizer", "evaluation", "data", "output"});
    ExperimentConfig c;
    c.base_dir = base_dir;

    const YAML::Node ds = root["datasets"];
    if (!ds) throw ConfigError("datasets", "required");
    if (!ds.IsSequence() || ds.size() == 0) throw ConfigError("datasets", "expected a non-empty list");
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::string path = "datasets[" + std::to_string(i) + "]";
        check_keys(ds[i], path, {"name", "train_images", "train_labels", "test_images", "test_labels"});
        DatasetSource d;
        const auto field = [&](const char *key) {
            const YAML::Node n = ds[i][key];
            if (!n) throw ConfigError(join_path(path, key), "required");
            return scalar_text(n, join_path(path, key));
        };
        d.name = field("name");
        d.train_images = field("train_images");
        d.train_labels = field("train_labels");
        d.test_images = field("test_images");
        d.test_labels = field("test_labels");
        c.datasets.push_back(std::move(d));
    }
    c.k_values = list_of<std::size_t>(root, "k", [](const YAML::Node &n, const std::string &p) { return scalar_as<std::size_t>(n, p); });
    c.blocks = list_of<BlockKind>(root, "blocks", [](const YAML::Node &n, const std::string &p) {
        return enum_of(n, p, [](const std::string &s) { return parse_block(upper(s)); });
    });
    c.methods = list_of<Codec>(root, "methods", [](const YAML::Node &n, const std::string &p) {
        return enum_of(n, p, [](const std::string &s) { return parse_codec(lower(s)); });
    });
    c.seeds = list_of<std::uint64_t>(root, "seeds", [](const YAML::Node &n, const std::string &p) { return scalar_as<std::uint64_t>(n, p); });

    if (const YAML::Node t = root["tempering"]) {
        check_keys(t, "tempering", {"function", "min_grad"});
        if (t["function"]) c.temper_fn = enum_of(t["function"], "tempering.function", [](const std::string &s) { return parse_temper_fn(lower(s)); });
        if (t["min_grad"]) c.min_grad = scalar_as<double>(t["min_grad"], "tempering.min_grad");
    }
    if (const YAML::Node r = root["readout"]) {
        check_keys(r, "readout", {"simplex_scale"});
        if (r["simplex_scale"]) c.simplex_scale = enum_of(r["simplex_scale"], "readout.simplex_scale", [](const std::string &s) { return parse_simplex_scale(lower(s)); });
    }
    if (const YAML::Node o = root["optimizer"]) {
        check_keys(o, "optimizer", {"kind", "lr0", "scheduler", "batch_size", "epochs"});
        if (o["kind"]) c.optimizer.kind = enum_of(o["kind"], "optimizer.kind", [](const std::string &s) { return parse_optimizer(lower(s)); });
        if (o["lr0"]) c.optimizer.lr0 = scalar_as<double>(o["lr0"], "optimizer.lr0");
        if (o["scheduler"]) c.optimizer.scheduler = enum_of(o["scheduler"], "optimizer.scheduler", [](const std::string &s) { return parse_scheduler(lower(s)); });
        if (o["batch_size"]) c.optimizer.batch_size = scalar_as<std::size_t>(o["batch_size"], "optimizer.batch_size");
        if (o["epochs"]) c.optimizer.epochs = scalar_as<std::size_t>(o["epochs"], "optimizer.epochs");
    }
    if (const YAML::Node e = root["evaluation"]) {
        check_keys(e, "evaluation", {"shots", "valid_sampling", "alpha", "increment", "cap"});
        if (e["shots"]) c.shots = scalar_as<std::size_t>(e["shots"], "evaluation.shots");
        if (e["valid_sampling"]) c.valid_sampling = scalar_as<bool>(e["valid_sampling"], "evaluation.valid_sampling");
        if (e["alpha"]) c.sampling.alpha = scalar_as<double>(e["alpha"], "evaluation.alpha");
        if (e["increment"]) c.sampling.increment = scalar_as<std::size_t>(e["increment"], "evaluation.increment");
        if (e["cap"]) c.sampling.cap = scalar_as<std::size_t>(e["cap"], "evaluation.cap");
    }
    if (const YAML::Node d = root["data"]) {
        check_keys(d, "data", {"per_class_train", "per_class_test"});
        if (d["per_class_train"]) c.per_class_train = scalar_as<std::size_t>(d["per_class_train"], "data.per_class_train");
        if (d["per_class_test"]) c.per_class_test = scalar_as<std::size_t>(d["per_class_test"], "data.per_class_test");
    }
    if (root["output"]) c.output = scalar_text(root["output"], "output");
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const fs::path &path) {
    return parse_config(read_text(path), fs::absolute(path).parent_path());
}

/// Canonical text: fixed key order, flow lists, shortest round-trip numbers.
inline std::string to_yaml(const ExperimentConfig &c) {
    using detail::format_double;
    std::ostringstream os;
    const auto quoted = [](const std::string &s) {
        YAML::Emitter e;
        e << YAML::DoubleQuoted << s;
        return std::string(e.c_str());
    };
    os << "datasets:\n";
    for (const auto &d : c.datasets) {
        os << "  - name: " << quoted(d.name) << "\n    train_images: " << quoted(d.train_images)
           << "\n    train_labels: " << quoted(d.train_labels) << "\n    test_images: " << quoted(d.test_images)
           << "\n    test_labels: " << quoted(d.test_labels) << "\n";
    }
    const auto flow = [&os](const char *key, const auto &items, auto show) {
        os << key << ": [";
        for (std::size_t i = 0; i < items.size(); ++i) os << (i ? ", " : "") << show(items[i]);
        os << "]\n";
    };
    flow("k", c.k_values, [](std::size_t k) { return std::to_string(k); });
    flow("blocks", c.blocks, [](BlockKind b) { return to_string(b); });
    flow("methods", c.methods, [](Codec m) { return to_string(m); });
    flow("seeds", c.seeds, [](std::uint64_t s) { return std::to_string(s); });
    os << "tempering:\n  function: " << to_string(c.temper_fn) << "\n  min_grad: " << format_double(c.min_grad) << "\n";
    os << "readout:\n  simplex_scale: " << to_string(c.simplex_scale) << "\n";
    os << "optimizer:\n  kind: " << to_string(c.optimizer.kind) << "\n  lr0: " << format_double(c.optimizer.lr0)
       << "\n  scheduler: " << to_string(c.optimizer.scheduler) << "\n  batch_size: " << c.optimizer.batch_size
       << "\n  epochs: " << c.optimizer.epochs << "\n";
    os << "evaluation:\n  shots: " << c.shots << "\n  valid_sampling: " << (c.valid_sampling ? "true" : "false")
       << "\n  alpha: " << format_double(c.sampling.alpha) << "\n  increment: " << c.sampling.increment
       << "\n  cap: " << c.sampling.cap << "\n";
    os << "data:\n  per_class_train: " << c.per_class_train << "\n  per_class_test: " << c.per_class_test << "\n";
    os << "output: " << quoted(c.output) << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Grid cells

struct Cell {
    std::size_t dataset{0}; // index into config.datasets
    std::size_t k{0};
    BlockKind block{BlockKind::CNN7};
    Codec method{Codec::Edge};
    std::uint64_t seed{0};
};

/// Cartesian product in dataset, K, block, method, seed order.
inline std::vector<Cell> expand_grid(const ExperimentConfig &c) {
    std::vector<Cell> out;
    for (std::size_t d = 0; d < c.datasets.size(); ++d)
        for (std::size_t k : c.k_values)
            for (BlockKind b : c.blocks)
                for (Codec m : c.methods)
                    for (std::uint64_t s : c.seeds) out.push_back({d, k, b, m, s});
    return out;
}

/// Every setting that changes a cell's outcome, in canonical text.
inline std::string cell_identity(const ExperimentConfig &c, const Cell &cell) {
    using detail::format_double;
    const DatasetSource &d = c.datasets.at(cell.dataset);
    std::ostringstream os;
    os << "dataset=" << d.name << ";files=" << d.train_images << "|" << d.train_labels << "|" << d.test_images << "|"
       << d.test_labels << ";k=" << cell.k << ";block=" << to_string(cell.block) << ";method=" << to_string(cell.method)
       << ";seed=" << cell.seed << ";tempering=" << to_string(c.temper_fn) << ":" << format_double(c.min_grad)
       << ";scale=" << to_string(c.simplex_scale)
       << ";opt=" << to_string(c.optimizer.kind) << ":" << format_double(c.optimizer.lr0) << ":"
       << to_string(c.optimizer.scheduler) << ":" << c.optimizer.batch_size << ":" << c.optimizer.epochs
       << ";shots=" << c.shots << ";vs=" << c.valid_sampling << ":" << format_double(c.sampling.alpha) << ":"
       << c.sampling.increment << ":" << c.sampling.cap << ";cap=" << c.per_class_train << ":" << c.per_class_test;
    return os.str();
}

inline std::string run_id(const ExperimentConfig &c, const Cell &cell) {
    const std::string key = cell_identity(c, cell);
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0')
       << fnv1a({reinterpret_cast<const std::uint8_t *>(key.data()), key.size()});
    return os.str();
}

/**
 * Cell filter "dataset=mnist,k=3|4,block=CNN7,method=edge,seed=0|1"; omitted
 * keys match everything.
 */
class CellFilter {
  public:
    CellFilter() = default;

    static CellFilter parse(const std::string &spec) {
        CellFilter f;
        std::stringstream ss(spec);
        std::string part;
        while (std::getline(ss, part, ',')) {
            if (part.empty()) continue;
            const auto eq = part.find('=');
            if (eq == std::string::npos) throw std::invalid_argument("filter term without '=': " + part);
            const std::string key = detail::lower(part.substr(0, eq));
            if (key != "dataset" && key != "k" && key != "block" && key != "method" && key != "seed") {
                throw std::invalid_argument("unknown filter key: " + key);
            }
            std::stringstream vs(part.substr(eq + 1));
            std::string v;
            auto &set = f.allowed_[key];
            while (std::getline(vs, v, '|')) {
                if (key == "block") v = detail::upper(v);
                if (key == "method") v = detail::lower(v);
                set.insert(v);
            }
        }
        return f;
    }

    bool matches(const ExperimentConfig &c, const Cell &cell) const {
        const auto ok = [&](const char *key, const std::string &v) {
            const auto it = allowed_.find(key);
            return it == allowed_.end() || it->second.count(v) > 0;
        };
        return ok("dataset", c.datasets.at(cell.dataset).name) && ok("k", std::to_string(cell.k)) &&
               ok("block", to_string(cell.block)) && ok("method", to_string(cell.method)) &&
               ok("seed", std::to_string(cell.seed));
    }

  private:
    std::map<std::string, std::set<std::string>> allowed_;
};

// ---------------------------------------------------------------------------
// Data provider: raw files and reduced splits, each computed once per process.

class DataProvider {
  public:
    explicit DataProvider(const ExperimentConfig &c, fs::path cache_dir = {}) : cfg_(c), cache_dir_(std::move(cache_dir)) {}

    std::shared_ptr<const ReducedSplit> reduced(std::size_t dataset, std::size_t k, std::uint64_t seed) {
        std::shared_future<std::shared_ptr<const ReducedSplit>> fut;
        bool owner = false;
        std::promise<std::shared_ptr<const ReducedSplit>> promise;
        {
            std::lock_guard<std::mutex> lock(mu_);
            const auto key = std::make_tuple(dataset, k, seed);
            auto it = reduced_.find(key);
            if (it == reduced_.end()) {
                fut = promise.get_future().share();
                reduced_.emplace(key, fut);
                owner = true;
            } else {
                fut = it->second;
            }
        }
        if (owner) {
            try {
                promise.set_value(build(dataset, k, seed));
            } catch (...) {
                promise.set_exception(std::current_exception());
            }
        }
        return fut.get();
    }

  private:
    using RawPair = std::pair<RawDataset, RawDataset>;

    std::shared_ptr<const RawPair> raw(std::size_t dataset) {
        std::shared_future<std::shared_ptr<const RawPair>> fut;
        bool owner = false;
        std::promise<std::shared_ptr<const RawPair>> promise;
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = raw_.find(dataset);
            if (it == raw_.end()) {
                fut = promise.get_future().share();
                raw_.emplace(dataset, fut);
                owner = true;
            } else {
                fut = it->second;
            }
        }
        if (owner) {
            try {
                const DatasetSource &d = cfg_.datasets.at(dataset);
                auto p = std::make_shared<RawPair>(load_idx(cfg_.resolve(d.train_images), cfg_.resolve(d.train_labels)),
                                                   load_idx(cfg_.resolve(d.test_images), cfg_.resolve(d.test_labels)));
                promise.set_value(std::move(p));
            } catch (...) {
                promise.set_exception(std::current_exception());
            }
        }
        return fut.get();
    }

    std::shared_ptr<const ReducedSplit> build(std::size_t dataset, std::size_t k, std::uint64_t seed) {
        const auto r = raw(dataset);
        const ClassSubset train = select_classes(r->first, k, seed, cfg_.per_class_train);
        const ClassSubset test = subset_for(r->second, train.class_map, cfg_.per_class_test);
        auto split = std::make_shared<ReducedSplit>(reduce_and_scale(r->first, train, r->second, test, wires_for_classes(k)));
        if (!cache_dir_.empty()) {
            const std::string stem = cfg_.datasets[dataset].name + "_k" + std::to_string(k) + "_s" + std::to_string(seed);
            save_cache(cache_dir_ / stem, *split, {seed, k, wires_for_classes(k), cfg_.per_class_train, 0});
        }
        return split;
    }

    const ExperimentConfig &cfg_;
    fs::path cache_dir_;
    std::mutex mu_;
    std::map<std::size_t, std::shared_future<std::shared_ptr<const RawPair>>> raw_;
    std::map<std::tuple<std::size_t, std::size_t, std::uint64_t>, std::shared_future<std::shared_ptr<const ReducedSplit>>> reduced_;
};

// ---------------------------------------------------------------------------
// One cell

struct CellResult {
    std::string run_id;
    std::size_t n_wires{0}, n_params{0}, n_train{0}, n_test{0};
    double final_loss{0.0};
    ConstantRateReport constant{ConfusionMatrix(1), ConfusionMatrix(1), 0.0, 0.0};
    std::optional<ValidSamplingReport> valid;
    ThresholdReport threshold;
    std::vector<double> grad_totals;

    double invalid_rate() const {
        const std::size_t k = constant.per_sample.k_classes();
        std::uint64_t inv = 0;
        for (std::size_t r = 0; r < k; ++r) inv += constant.per_sample.at(r, k);
        return constant.per_sample.total() ? static_cast<double>(inv) / static_cast<double>(constant.per_sample.total()) : 0.0;
    }
};

/// Same subset, initial parameters and batch order for every method under one seed.
inline CellResult run_cell(const ExperimentConfig &c, const Cell &cell, DataProvider &data) {
    const auto split = data.reduced(cell.dataset, cell.k, cell.seed);
    const Readout readout(cell.method, cell.k, Tempering(c.temper_fn, c.min_grad), c.simplex_scale);
    CircuitSpec spec = CircuitSpec::make(cell.k, cell.block);
    spec.theta = init_params(spec, cell.seed);
    OptimizerConfig opt = c.optimizer;
    opt.seed = cell.seed;
    const TrainResult trained = train(spec, split->train.data, readout, opt);

    CellResult r;
    r.run_id = run_id(c, cell);
    r.n_wires = spec.n_wires;
    r.n_params = spec.parameter_count();
    r.n_train = split->train.data.size();
    r.n_test = split->test.data.size();
    r.final_loss = batch_loss(trained.spec, split->train.data.features, split->train.data.labels, readout);
    r.grad_totals = trained.grad_totals;
    const auto &xs = split->test.data.features;
    const auto &ys = split->test.data.labels;
    r.constant = eval_constant(circuit_shots(trained.spec, readout, xs, derive_seed(cell.seed, 0x5407)), ys, cell.k, c.shots);
    if (c.valid_sampling) {
        r.valid = eval_valid_sampling(circuit_shots(trained.spec, readout, xs, derive_seed(cell.seed, 0x7a11d)), ys, cell.k, c.sampling);
    }
    r.threshold = eval_threshold(model_activations(trained.spec, readout, xs), ys);
    return r;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string schema_line(const std::string &table, const std::string &columns) {
    return "# edgevqc " + table + " schema v" + std::to_string(kCsvSchemaVersion) + ": " + columns + "\n" + columns + "\n";
}

inline const std::string kResultColumns =
    "dataset,k,block,method,seed,run_id,n_wires,n_params,n_train,n_test,final_loss,c_micro,c_macro,invalid_rate,"
    "v_micro,samples_mean,samples_capped,t_accuracy,l_margin";

struct MetricInfo {
    const char *name;
    Direction direction;
};

/// Numeric result columns that are aggregated and ranked.
inline const std::vector<MetricInfo> kMetrics = {
    {"final_loss", Direction::LowerBetter}, {"c_micro", Direction::HigherBetter}, {"c_macro", Direction::HigherBetter},
    {"invalid_rate", Direction::LowerBetter}, {"v_micro", Direction::HigherBetter}, {"samples_mean", Direction::LowerBetter},
    {"t_accuracy", Direction::HigherBetter}, {"l_margin", Direction::HigherBetter}};

inline std::string result_row(const ExperimentConfig &c, const Cell &cell, const CellResult &r) {
    using detail::format_double;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::ostringstream os;
    os << c.datasets[cell.dataset].name << ',' << cell.k << ',' << to_string(cell.block) << ',' << to_string(cell.method)
       << ',' << cell.seed << ',' << r.run_id << ',' << r.n_wires << ',' << r.n_params << ',' << r.n_train << ','
       << r.n_test << ',' << format_double(r.final_loss) << ',' << format_double(r.constant.micro) << ','
       << format_double(r.constant.macro) << ',' << format_double(r.invalid_rate()) << ','
       << format_double(r.valid ? r.valid->micro : nan) << ',' << format_double(r.valid ? r.valid->mean_samples : nan)
       << ',' << (r.valid ? std::to_string(r.valid->capped) : "nan") << ',' << format_double(r.threshold.accuracy)
       << ',' << format_double(r.threshold.margin) << '\n';
    return os.str();
}

inline std::vector<std::string> split_csv(const std::string &line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(f);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

/// Data lines of a CSV written by this module (comment and header skipped).
inline std::vector<std::vector<std::string>> read_csv_rows(const fs::path &path) {
    std::istringstream is(read_text(path));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        rows.push_back(split_csv(line));
    }
    return rows;
}

inline std::size_t column_index(const std::string &columns, const std::string &name) {
    const auto cols = split_csv(columns);
    const auto it = std::find(cols.begin(), cols.end(), name);
    if (it == cols.end()) throw std::invalid_argument("no column " + name);
    return static_cast<std::size_t>(it - cols.begin());
}

inline double mean_of(const std::vector<double> &v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample standard deviation over sqrt(n); nan for n < 2.
inline double stderr_of(const std::vector<double> &v) {
    if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

// ---------------------------------------------------------------------------
// Grid execution

struct GridReport {
    std::size_t requested{0}, ran{0}, skipped{0};
    std::vector<std::pair<std::string, std::string>> failures; // run_id, message
    fs::path output;
    bool ok() const noexcept { return failures.empty(); }
};

struct GridOptions {
    std::optional<fs::path> output; // overrides config.output
    std::size_t jobs{1};
    CellFilter filter{};
    bool resume{true};
    bool quiet{false};
};

inline fs::path output_dir(const ExperimentConfig &c, const GridOptions &o) {
    return o.output ? *o.output : c.resolve(c.output);
}

inline void write_run(const fs::path &runs, const ExperimentConfig &c, const Cell &cell, const CellResult &r) {
    const fs::path final_dir = runs / r.run_id;
    const fs::path tmp = runs / (r.run_id + ".partial");
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    write_atomic(tmp / "row.csv", schema_line("results", kResultColumns) + result_row(c, cell, r));
    std::ostringstream g;
    g << schema_line("grad_totals", "param,total");
    for (std::size_t q = 0; q < r.grad_totals.size(); ++q) g << q << ',' << detail::format_double(r.grad_totals[q]) << '\n';
    write_atomic(tmp / "grad.csv", g.str());
    std::ostringstream m;
    m << schema_line("confusion", "true,pred,count");
    const std::size_t k = cell.k;
    for (std::size_t t = 0; t < k; ++t) {
        for (std::size_t p = 0; p <= k; ++p) m << t << ',' << (p == k ? std::string("invalid") : std::to_string(p)) << ',' << r.constant.per_sample.at(t, p) << '\n';
    }
    write_atomic(tmp / "confusion.csv", m.str());
    fs::remove_all(final_dir);
    fs::rename(tmp, final_dir);
}

inline void write_reports(const ExperimentConfig &c, const fs::path &out);
inline void emit_plot_data(const ExperimentConfig &c, const fs::path &out);

/**
 * Runs every cell passing the filter on a pool of o.jobs threads. Finished
 * cells (runs/<id>/row.csv present) are skipped when resuming. Reports cover
 * every finished cell of the full grid.
 */
inline GridReport run_grid(const ExperimentConfig &c, const GridOptions &o = {}) {
    c.validate();
    GridReport rep;
    rep.output = output_dir(c, o);
    const fs::path runs = rep.output / "runs";
    fs::create_directories(runs);
    write_atomic(rep.output / "config.yaml", to_yaml(c));

    std::vector<Cell> todo;
    for (const Cell &cell : expand_grid(c)) {
        if (!o.filter.matches(c, cell)) continue;
        ++rep.requested;
        if (o.resume && fs::exists(runs / run_id(c, cell) / "row.csv")) {
            ++rep.skipped;
            continue;
        }
        todo.push_back(cell);
    }

    DataProvider data(c, rep.output / "cache");
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= todo.size()) return;
            const Cell &cell = todo[i];
            const std::string id = run_id(c, cell);
            try {
                const CellResult r = run_cell(c, cell, data);
                write_run(runs, c, cell, r);
                std::lock_guard<std::mutex> lock(mu);
                ++rep.ran;
                if (!o.quiet) {
                    std::cerr << "[" << rep.ran + rep.failures.size() << "/" << todo.size() << "] " << id << " "
                              << c.datasets[cell.dataset].name << " K=" << cell.k << " " << to_string(cell.block) << " "
                              << to_string(cell.method) << " seed=" << cell.seed << " C_m=" << r.constant.micro << "\n";
                }
            } catch (const std::exception &e) {
                std::lock_guard<std::mutex> lock(mu);
                rep.failures.emplace_back(id, e.what());
                if (!o.quiet) std::cerr << "FAILED " << id << ": " << e.what() << "\n";
            }
        }
    };
    const std::size_t n_threads = std::max<std::size_t>(1, std::min(o.jobs, todo.size()));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto &th : pool) th.join();
    }
    std::sort(rep.failures.begin(), rep.failures.end());
    write_reports(c, rep.output);
    emit_plot_data(c, rep.output);
    return rep;
}

namespace detail {

struct FinishedRun {
    Cell cell;
    std::string id;
    std::string row_line;
    std::vector<std::string> fields;
};

inline std::vector<FinishedRun> finished_runs(const ExperimentConfig &c, const fs::path &out) {
    std::vector<FinishedRun> done;
    for (const Cell &cell : expand_grid(c)) {
        const std::string id = run_id(c, cell);
        const fs::path row = out / "runs" / id / "row.csv";
        if (!fs::exists(row)) continue;
        const auto rows = read_csv_rows(row);
        if (rows.size() != 1) throw std::runtime_error("malformed " + row.string());
        std::string line;
        for (std::size_t i = 0; i < rows[0].size(); ++i) line += (i ? "," : "") + rows[0][i];
        done.push_back({cell, id, line + "\n", rows[0]});
    }
    return done;
}

inline std::string group_name(const ExperimentConfig &c, const Cell &cell) {
    return c.datasets[cell.dataset].name + "_k" + std::to_string(cell.k) + "_" + to_string(cell.block);
}

} // namespace detail

/// results.csv, aggregate.csv and summary.csv from the finished run rows.
inline void write_reports(const ExperimentConfig &c, const fs::path &out) {
    using detail::format_double;
    const auto done = detail::finished_runs(c, out);

    std::string results = schema_line("results", kResultColumns);
    for (const auto &r : done) results += r.row_line;
    write_atomic(out / "results.csv", results);

    // aggregate: per (dataset, K, block, method), mean and standard error over seeds
    std::string agg_cols = "dataset,k,block,method,n";
    for (const auto &m : kMetrics) agg_cols += std::string(",") + m.name + "_mean," + m.name + "_stderr";
    std::ostringstream agg;
    agg << schema_line("aggregate", agg_cols);

    // means[group][method][metric]
    std::map<std::string, std::map<std::string, std::vector<double>>> group_means;
    std::vector<std::string> group_order;
    std::vector<std::string> method_order;
    for (Codec m : c.methods) method_order.push_back(to_string(m));

    for (std::size_t d = 0; d < c.datasets.size(); ++d) {
        for (std::size_t k : c.k_values) {
            for (BlockKind b : c.blocks) {
                const std::string g = c.datasets[d].name + "/k" + std::to_string(k) + "/" + to_string(b);
                for (Codec m : c.methods) {
                    std::vector<const detail::FinishedRun *> rows;
                    for (const auto &r : done) {
                        if (r.cell.dataset == d && r.cell.k == k && r.cell.block == b && r.cell.method == m) rows.push_back(&r);
                    }
                    if (rows.empty()) continue;
                    if (std::find(group_order.begin(), group_order.end(), g) == group_order.end()) group_order.push_back(g);
                    agg << c.datasets[d].name << ',' << k << ',' << to_string(b) << ',' << to_string(m) << ',' << rows.size();
                    std::vector<double> means;
                    for (const auto &metric : kMetrics) {
                        const std::size_t col = column_index(kResultColumns, metric.name);
                        std::vector<double> v;
                        for (const auto *r : rows) v.push_back(std::stod(r->fields.at(col)));
                        const double mu = mean_of(v);
                        means.push_back(mu);
                        agg << ',' << format_double(mu) << ',' << format_double(stderr_of(v));
                    }
                    agg << '\n';
                    group_means[g][to_string(m)] = means;
                }
            }
        }
    }
    write_atomic(out / "aggregate.csv", agg.str());

    // summary: paired per-seed win rates and Friedman ranks of the methods
    std::ostringstream sum;
    sum << schema_line("summary", "scope,kind,metric,method,opponent,value");
    for (std::size_t i = 0; i < c.methods.size(); ++i) {
        for (std::size_t j = i + 1; j < c.methods.size(); ++j) {
            for (const auto &metric : kMetrics) {
                const std::size_t col = column_index(kResultColumns, metric.name);
                std::vector<double> a_all, b_all;
                std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_group;
                for (const auto &ra : done) {
                    if (ra.cell.method != c.methods[i]) continue;
                    for (const auto &rb : done) {
                        if (rb.cell.method != c.methods[j] || rb.cell.dataset != ra.cell.dataset || rb.cell.k != ra.cell.k ||
                            rb.cell.block != ra.cell.block || rb.cell.seed != ra.cell.seed) {
                            continue;
                        }
                        const double va = std::stod(ra.fields.at(col)), vb = std::stod(rb.fields.at(col));
                        if (std::isnan(va) || std::isnan(vb)) continue;
                        const std::string g = c.datasets[ra.cell.dataset].name + "/k" + std::to_string(ra.cell.k) + "/" + to_string(ra.cell.block);
                        per_group[g].first.push_back(va);
                        per_group[g].second.push_back(vb);
                        a_all.push_back(va);
                        b_all.push_back(vb);
                    }
                }
                const auto emit = [&](const std::string &scope, const std::vector<double> &a, const std::vector<double> &b) {
                    if (a.empty()) return;
                    const WinRate w = win_rate(a, b, metric.direction);
                    sum << scope << ",win_rate," << metric.name << ',' << to_string(c.methods[i]) << ',' << to_string(c.methods[j]) << ',' << format_double(w.a) << '\n';
                    sum << scope << ",win_rate," << metric.name << ',' << to_string(c.methods[j]) << ',' << to_string(c.methods[i]) << ',' << format_double(w.b) << '\n';
                };
                for (const auto &g : group_order) {
                    const auto it = per_group.find(g);
                    if (it != per_group.end()) emit(g, it->second.first, it->second.second);
                }
                emit("all", a_all, b_all);
            }
        }
    }
    // Friedman: rows are (group, metric) means, columns the methods present in every group
    std::vector<std::vector<double>> grid_all;
    std::vector<Direction> dirs_all;
    for (const auto &g : group_order) {
        const auto &by_method = group_means[g];
        if (by_method.size() != c.methods.size() || c.methods.size() < 2) continue;
        std::vector<std::vector<double>> grid;
        std::vector<Direction> dirs;
        for (std::size_t mi = 0; mi < kMetrics.size(); ++mi) {
            std::vector<double> row;
            bool finite = true;
            for (const auto &m : method_order) {
                row.push_back(by_method.at(m)[mi]);
                finite = finite && std::isfinite(row.back());
            }
            if (!finite) continue;
            grid.push_back(row);
            dirs.push_back(kMetrics[mi].direction);
        }
        if (grid.empty()) continue;
        const RankTable t = friedman_rank(grid, dirs);
        for (std::size_t m = 0; m < method_order.size(); ++m) {
            sum << g << ",friedman_rank,all_metrics," << method_order[m] << ",," << format_double(t.mean_rank[m]) << '\n';
        }
        grid_all.insert(grid_all.end(), grid.begin(), grid.end());
        dirs_all.insert(dirs_all.end(), dirs.begin(), dirs.end());
    }
    if (!grid_all.empty()) {
        const RankTable t = friedman_rank(grid_all, dirs_all);
        for (std::size_t m = 0; m < method_order.size(); ++m) {
            sum << "all,friedman_rank,all_metrics," << method_order[m] << ",," << format_double(t.mean_rank[m]) << '\n';
        }
    }
    write_atomic(out / "summary.csv", sum.str());
}

/// x, t(x), t'(x) and |t'(x)| on x = -1.00, -0.99, ..., 1.00.
inline std::string tempering_curve_csv(const Tempering &t) {
    std::ostringstream os;
    os << schema_line("tempering_curve", "x,value,derivative,grad_magnitude");
    for (int i = -100; i <= 100; ++i) {
        const double x = i / 100.0;
        const double d = t.derivative(x);
        os << detail::format_double(x) << ',' << detail::format_double(t(x)) << ',' << detail::format_double(d) << ','
           << detail::format_double(std::abs(d)) << '\n';
    }
    return os.str();
}

inline void write_tempering_curves(const fs::path &dir, const std::vector<TemperFn> &fns, const std::vector<double> &min_grads) {
    for (TemperFn f : fns) {
        for (double g : min_grads) {
            write_atomic(dir / (to_string(f) + "_" + detail::format_double(g) + ".csv"), tempering_curve_csv(Tempering(f, g)));
        }
    }
}

/**
 * Plot series from the finished runs: gradient totals per run, confusion heat
 * data (row-normalized shot fractions, mean and standard error over seeds) per
 * (dataset, K, block, method), and tempering curves.
 */
inline void emit_plot_data(const ExperimentConfig &c, const fs::path &out) {
    using detail::format_double;
    const fs::path plots = out / "plots";
    const auto done = detail::finished_runs(c, out);
    for (const auto &r : done) {
        const std::string name = detail::group_name(c, r.cell) + "_" + to_string(r.cell.method) + "_s" + std::to_string(r.cell.seed) + ".csv";
        const auto rows = read_csv_rows(out / "runs" / r.id / "grad.csv");
        std::ostringstream os;
        os << schema_line("grad_totals_series", "x,y");
        for (const auto &row : rows) os << row.at(0) << ',' << row.at(1) << '\n';
        write_atomic(plots / "grad_totals" / name, os.str());
    }
    for (std::size_t d = 0; d < c.datasets.size(); ++d) {
        for (std::size_t k : c.k_values) {
            for (BlockKind b : c.blocks) {
                for (Codec m : c.methods) {
                    std::vector<std::vector<double>> cells(k * (k + 1));
                    Cell key{d, k, b, m, 0};
                    for (const auto &r : done) {
                        if (r.cell.dataset != d || r.cell.k != k || r.cell.block != b || r.cell.method != m) continue;
                        const auto rows = read_csv_rows(out / "runs" / r.id / "confusion.csv");
                        if (rows.size() != k * (k + 1)) throw std::runtime_error("confusion data for " + r.id + " has wrong size");
                        std::vector<double> row_total(k, 0.0);
                        for (std::size_t i = 0; i < rows.size(); ++i) row_total[i / (k + 1)] += std::stod(rows[i].at(2));
                        for (std::size_t i = 0; i < rows.size(); ++i) {
                            const double tot = row_total[i / (k + 1)];
                            cells[i].push_back(tot > 0 ? std::stod(rows[i].at(2)) / tot : 0.0);
                        }
                    }
                    if (cells[0].empty()) continue;
                    std::ostringstream os;
                    os << schema_line("confusion_heat", "true,pred,mean,stderr,n");
                    for (std::size_t i = 0; i < cells.size(); ++i) {
                        const std::size_t p = i % (k + 1);
                        os << i / (k + 1) << ',' << (p == k ? std::string("invalid") : std::to_string(p)) << ','
                           << format_double(mean_of(cells[i])) << ',' << format_double(stderr_of(cells[i])) << ','
                           << cells[i].size() << '\n';
                    }
                    write_atomic(plots / "confusion" / (detail::group_name(c, key) + "_" + to_string(m) + ".csv"), os.str());
                }
            }
        }
    }
    write_tempering_curves(plots / "tempering", {c.temper_fn}, {c.min_grad});
}

} // namespace edgevqc
