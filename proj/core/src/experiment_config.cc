#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "dain/errors.h"
#include "dain/evaluation.h"

namespace dain {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_scalar(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("invalid value '" + text + "' for key '" + key + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("invalid boolean '" + text + "' for key '" + key + "'");
}

using Setter = std::function<void(const std::string& key, const std::string& value)>;

void add_train_keys(std::map<std::string, Setter>& keys, const std::string& prefix,
                    TrainConfig& cfg) {
  keys[prefix + "embedding_len"] = [&cfg](auto& k, auto& v) { cfg.embedding_len = parse_scalar<int>(k, v); };
  keys[prefix + "layer_sizes"] = [&cfg](auto& k, auto& v) {
    cfg.layer_sizes.clear();
    for (const auto& item : split_list(v)) cfg.layer_sizes.push_back(parse_scalar<int>(k, item));
  };
  keys[prefix + "batch_size"] = [&cfg](auto& k, auto& v) { cfg.batch_size = parse_scalar<int>(k, v); };
  keys[prefix + "learning_rate"] = [&cfg](auto& k, auto& v) { cfg.learning_rate = parse_scalar<double>(k, v); };
  keys[prefix + "max_epochs"] = [&cfg](auto& k, auto& v) { cfg.max_epochs = parse_scalar<int>(k, v); };
  keys[prefix + "patience"] = [&cfg](auto& k, auto& v) { cfg.patience = parse_scalar<int>(k, v); };
  keys[prefix + "checkpoint_step_size"] = [&cfg](auto& k, auto& v) {
    cfg.checkpoint_step_size = parse_scalar<double>(k, v);
  };
}

TrainConfig preset(const std::string& key, const std::string& name) {
  if (name == "full") return TrainConfig::full();
  if (name == "desk") return TrainConfig::desk();
  throw ConfigError("unknown preset '" + name + "' for key '" + key + "' (full|desk)");
}

}  // namespace

ExperimentConfig parse_experiment_config(std::istream& in) {
  // Collect first so presets apply before individual overrides.
  std::vector<std::pair<std::string, std::string>> entries;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!seen.insert(key).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": repeated key '" + key + "'");
    }
    entries.emplace_back(std::move(key), std::move(value));
  }

  ExperimentConfig cfg;
  for (const auto& [key, value] : entries) {
    if (key == "train.preset") cfg.train_config = preset(key, value);
    if (key == "downstream.preset") cfg.downstream_config = preset(key, value);
  }

  std::map<std::string, Setter> keys;
  keys["train.preset"] = [](auto&, auto&) {};
  keys["downstream.preset"] = [](auto&, auto&) {};
  keys["ratios"] = [&](auto& k, auto& v) {
    cfg.ratios.clear();
    for (const auto& item : split_list(v)) cfg.ratios.push_back(parse_scalar<double>(k, item));
  };
  keys["methods"] = [&](auto&, auto& v) {
    cfg.methods.clear();
    try {
      for (const auto& item : split_list(v)) cfg.methods.push_back(parse_augment_method(item));
    } catch (const ArgumentError& e) {
      throw ConfigError(e.what());
    }
  };
  keys["repeats"] = [&](auto& k, auto& v) { cfg.repeats = parse_scalar<int>(k, v); };
  keys["seeds"] = [&](auto& k, auto& v) {
    cfg.seeds.clear();
    for (const auto& item : split_list(v)) cfg.seeds.push_back(parse_scalar<std::uint64_t>(k, item));
  };
  keys["entity_method"] = [&](auto& k, auto& v) {
    if (v == "aggregate") {
      cfg.entity_method = EntityMethod::kAggregate;
    } else if (v == "cp") {
      cfg.entity_method = EntityMethod::kCpRank1;
    } else {
      throw ConfigError("invalid value '" + v + "' for key '" + k + "' (aggregate|cp)");
    }
  };
  keys["dain_predictor"] = [&](auto&, auto& v) {
    try {
      cfg.dain_predictor = parse_predictor_kind(v);
    } catch (const ArgumentError& e) {
      throw ConfigError(e.what());
    }
  };
  keys["costco_channels"] = [&](auto& k, auto& v) { cfg.costco_channels = parse_scalar<int>(k, v); };
  keys["clamp"] = [&](auto& k, auto& v) { cfg.clamp = parse_bool(k, v); };
  keys["threads"] = [&](auto& k, auto& v) { cfg.threads = parse_scalar<int>(k, v); };
  keys["cp.lambda"] = [&](auto& k, auto& v) { cfg.cp.lambda = parse_scalar<double>(k, v); };
  keys["cp.epochs"] = [&](auto& k, auto& v) { cfg.cp.epochs = parse_scalar<int>(k, v); };
  keys["cp.learning_rate"] = [&](auto& k, auto& v) { cfg.cp.learning_rate = parse_scalar<double>(k, v); };
  add_train_keys(keys, "train.", cfg.train_config);
  add_train_keys(keys, "downstream.", cfg.downstream_config);

  for (const auto& [key, value] : entries) {
    auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError("unknown key '" + key + "'");
    it->second(key, value);
  }
  if (seen.contains("seeds") && !seen.contains("repeats")) {
    cfg.repeats = static_cast<int>(cfg.seeds.size());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_experiment_config(in);
}

}  // namespace dain
