// Copyright 2026 The ctrn authors. Apache 2.0 License.
//
// Flat `key = value` run configuration. Precedence is flag > file > default;
// the effective configuration is re-emitted as text for log headers and the
// checkpoint echo, so a run can be reproduced from either artifact.

#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ctrn/error.hpp"
#include "ctrn/model.hpp"
#include "ctrn/optim.hpp"

namespace ctrn {

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline KeyValues parse_config_text(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": empty key");
    }
    kv[key] = value;
  }
  return kv;
}

inline KeyValues parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

namespace detail {

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v +
                      "'");
  }
}

inline double parse_f64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

}  // namespace detail

struct RunConfig {
  TrainConfig train;
  std::string train_path;
  std::string dev_path;
  std::string test_path;
  std::string embeddings_path;
  std::string stopwords_path;
  std::string checkpoint_path = "model.ckpt";
  std::string out_path;
  std::string run_tag = "ctrn";
  std::size_t length_min = 0;  // 0 disables the length filter
  std::size_t length_max = 0;

  void apply(const KeyValues& kv) {
    using detail::parse_bool;
    using detail::parse_f64;
    using detail::parse_u64;
    for (const auto& [key, value] : kv) {
      if (key == "kind") {
        train.model.kind = cell_kind_from_string(value);
      } else if (key == "embed_dim") {
        train.model.embed_dim = parse_u64(key, value);
      } else if (key == "proj_dim") {
        train.model.proj_dim = parse_u64(key, value);
      } else if (key == "filters") {
        train.model.filters = parse_u64(key, value);
      } else if (key == "kernel") {
        train.model.kernel = parse_u64(key, value);
      } else if (key == "hidden") {
        train.model.hidden = parse_u64(key, value);
      } else if (key == "dense_layers") {
        train.model.dense_layers = parse_u64(key, value);
      } else if (key == "conv_bias") {
        train.model.conv_bias = parse_bool(key, value);
      } else if (key == "shared_banks") {
        train.model.shared_banks = parse_bool(key, value);
      } else if (key == "use_overlap") {
        train.model.use_overlap = parse_bool(key, value);
      } else if (key == "dropout") {
        train.model.dropout = parse_f64(key, value);
      } else if (key == "lr") {
        train.learning_rate = parse_f64(key, value);
      } else if (key == "batch") {
        train.batch_size = parse_u64(key, value);
      } else if (key == "lambda") {
        train.lambda = parse_f64(key, value);
      } else if (key == "epochs") {
        train.epochs = parse_u64(key, value);
      } else if (key == "patience") {
        train.patience = parse_u64(key, value);
      } else if (key == "seed") {
        train.seed = parse_u64(key, value);
      } else if (key == "dev_metric") {
        train.dev_metric = dev_metric_from_string(value);
      } else if (key == "train_path") {
        train_path = value;
      } else if (key == "dev_path") {
        dev_path = value;
      } else if (key == "test_path") {
        test_path = value;
      } else if (key == "embeddings_path") {
        embeddings_path = value;
      } else if (key == "stopwords_path") {
        stopwords_path = value;
      } else if (key == "checkpoint") {
        checkpoint_path = value;
      } else if (key == "out") {
        out_path = value;
      } else if (key == "run_tag") {
        run_tag = value;
      } else if (key == "length_min") {
        length_min = parse_u64(key, value);
      } else if (key == "length_max") {
        length_max = parse_u64(key, value);
      } else {
        throw ConfigError("unknown config key: " + key);
      }
    }
  }

  // flag > file > default.
  static RunConfig merged(const KeyValues& file, const KeyValues& flags) {
    RunConfig cfg;
    cfg.apply(file);
    cfg.apply(flags);
    return cfg;
  }

  std::string to_text() const {
    std::ostringstream out;
    out << "kind = " << to_string(train.model.kind) << '\n'
        << "embed_dim = " << train.model.embed_dim << '\n'
        << "proj_dim = " << train.model.proj_dim << '\n'
        << "filters = " << train.model.filters << '\n'
        << "kernel = " << train.model.kernel << '\n'
        << "hidden = " << train.model.hidden << '\n'
        << "dense_layers = " << train.model.dense_layers << '\n'
        << "conv_bias = " << (train.model.conv_bias ? "true" : "false") << '\n'
        << "shared_banks = " << (train.model.shared_banks ? "true" : "false")
        << '\n'
        << "use_overlap = " << (train.model.use_overlap ? "true" : "false")
        << '\n'
        << "dropout = " << train.model.dropout << '\n'
        << "lr = " << train.learning_rate << '\n'
        << "batch = " << train.batch_size << '\n'
        << "lambda = " << train.lambda << '\n'
        << "epochs = " << train.epochs << '\n'
        << "patience = " << train.patience << '\n'
        << "seed = " << train.seed << '\n'
        << "dev_metric = " << to_string(train.dev_metric) << '\n';
    return out.str();
  }

  void require_file(const std::string& key, const std::string& path) const {
    if (path.empty()) {
      throw ConfigError(key + ": path is required");
    }
    if (!std::filesystem::exists(path)) {
      throw ConfigError(key + ": no such file: " + path);
    }
  }

  void validate_for_train() const {
    require_file("train_path", train_path);
    require_file("dev_path", dev_path);
    if (!embeddings_path.empty()) {
      require_file("embeddings_path", embeddings_path);
    }
    if (!stopwords_path.empty()) {
      require_file("stopwords_path", stopwords_path);
    }
    if (train.epochs == 0) throw ConfigError("epochs: must be positive");
    if (checkpoint_path.empty()) {
      throw ConfigError("checkpoint: path is required");
    }
    train.validate_grids();
  }

  void validate_for_eval() const {
    require_file("checkpoint", checkpoint_path);
    require_file("test_path", test_path);
  }
};

}  // namespace ctrn
