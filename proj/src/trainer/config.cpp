#include "sar/trainer/config.hpp"

#include "sar/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace sar {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw ConfigError("invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

template <typename T>
T parse_integer(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

std::vector<std::size_t> parse_list(std::string_view key, std::string_view value) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const auto part = trim(value.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                : comma - start));
    if (part.empty()) bad_value(key, value);
    out.push_back(parse_integer<std::size_t>(key, part));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string format_list(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

struct Field {
  std::function<void(Config&, std::string_view, std::string_view)> set;
  std::function<std::string(const Config&)> get;
};

template <typename T>
Field size_field(T Config::*group, std::size_t T::*member) {
  return {[=](Config& c, std::string_view k, std::string_view v) {
            (c.*group).*member = parse_integer<std::size_t>(k, v);
          },
          [=](const Config& c) { return std::to_string((c.*group).*member); }};
}

template <typename T>
Field double_field(T Config::*group, double T::*member) {
  return {[=](Config& c, std::string_view k, std::string_view v) {
            (c.*group).*member = parse_double(k, v);
          },
          [=](const Config& c) { return format_double((c.*group).*member); }};
}

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = [] {
    std::map<std::string, Field, std::less<>> f;
    f["item_dim"] = size_field(&Config::model, &ModelConfig::item_dim);
    f["user_dim"] = size_field(&Config::model, &ModelConfig::user_dim);
    f["state_dim"] = size_field(&Config::model, &ModelConfig::state_dim);
    f["encoder_hidden"] = size_field(&Config::model, &ModelConfig::encoder_hidden);
    f["encoder_ff"] = size_field(&Config::model, &ModelConfig::encoder_ff);
    f["encoder_blocks"] = size_field(&Config::model, &ModelConfig::encoder_blocks);
    f["recommender_ff"] = size_field(&Config::model, &ModelConfig::recommender_ff);
    f["recommender_blocks"] = size_field(&Config::model, &ModelConfig::recommender_blocks);
    f["max_length"] = size_field(&Config::model, &ModelConfig::max_length);
    f["actor_hidden"] = size_field(&Config::model, &ModelConfig::actor_hidden);
    f["critic_hidden"] = size_field(&Config::model, &ModelConfig::critic_hidden);
    f["gate_bias"] = double_field(&Config::model, &ModelConfig::gate_bias);
    f["actor_initial_length"] = double_field(&Config::model, &ModelConfig::actor_initial_length);
    f["share_item_embeddings"] = {
        [](Config& c, std::string_view k, std::string_view v) {
          c.model.share_item_embeddings = parse_bool(k, v);
        },
        [](const Config& c) { return std::string(c.model.share_item_embeddings ? "true" : "false"); }};

    f["gamma"] = double_field(&Config::rl, &RLConfig::gamma);
    f["exploration_sigma"] = double_field(&Config::rl, &RLConfig::exploration_sigma);
    f["reward_cutoff"] = size_field(&Config::rl, &RLConfig::reward_cutoff);
    f["reward_kind"] = {
        [](Config& c, std::string_view k, std::string_view v) {
          if (v == "ndcg") c.rl.reward_kind = agent::RewardKind::kNdcg;
          else if (v == "hit") c.rl.reward_kind = agent::RewardKind::kHit;
          else bad_value(k, v);
        },
        [](const Config& c) {
          return std::string(c.rl.reward_kind == agent::RewardKind::kHit ? "hit" : "ndcg");
        }};

    f["epochs"] = size_field(&Config::train, &TrainConfig::epochs);
    f["batch_size"] = size_field(&Config::train, &TrainConfig::batch_size);
    f["lr"] = double_field(&Config::train, &TrainConfig::lr);
    f["beta1"] = double_field(&Config::train, &TrainConfig::beta1);
    f["beta2"] = double_field(&Config::train, &TrainConfig::beta2);
    f["adam_eps"] = double_field(&Config::train, &TrainConfig::adam_eps);
    f["mode"] = {
        [](Config& c, std::string_view k, std::string_view v) {
          if (v == "adaptive") c.train.mode = TrainMode::kAdaptive;
          else if (v == "fixed") c.train.mode = TrainMode::kFixed;
          else bad_value(k, v);
        },
        [](const Config& c) {
          return std::string(c.train.mode == TrainMode::kFixed ? "fixed" : "adaptive");
        }};
    f["fixed_length"] = size_field(&Config::train, &TrainConfig::fixed_length);
    f["lambda_critic"] = double_field(&Config::train, &TrainConfig::lambda_critic);
    f["lambda_actor"] = double_field(&Config::train, &TrainConfig::lambda_actor);
    f["seed"] = {[](Config& c, std::string_view k,
                    std::string_view v) { c.train.seed = parse_integer<std::uint64_t>(k, v); },
                 [](const Config& c) { return std::to_string(c.train.seed); }};
    f["workers"] = size_field(&Config::train, &TrainConfig::workers);
    f["eval_ks"] = {[](Config& c, std::string_view k,
                       std::string_view v) { c.train.eval_ks = parse_list(k, v); },
                    [](const Config& c) { return format_list(c.train.eval_ks); }};

    using data::SyntheticSpec;
    f["synth_users"] = size_field(&Config::synthetic, &SyntheticSpec::num_users);
    f["synth_items"] = size_field(&Config::synthetic, &SyntheticSpec::num_items);
    f["synth_min_length"] = size_field(&Config::synthetic, &SyntheticSpec::min_length);
    f["synth_max_length"] = size_field(&Config::synthetic, &SyntheticSpec::max_length);
    f["synth_windows"] = {[](Config& c, std::string_view k,
                             std::string_view v) { c.synthetic.windows = parse_list(k, v); },
                          [](const Config& c) { return format_list(c.synthetic.windows); }};
    f["synth_noise"] = double_field(&Config::synthetic, &SyntheticSpec::noise_rate);
    f["synth_seed"] = {[](Config& c, std::string_view k,
                          std::string_view v) { c.synthetic.seed = parse_integer<std::uint64_t>(k, v); },
                       [](const Config& c) { return std::to_string(c.synthetic.seed); }};
    return f;
  }();
  return table;
}

}  // namespace

void Config::set(std::string_view key, std::string_view value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second.set(*this, key, trim(value));
}

Config Config::parse(std::string_view text) {
  Config config;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto newline = text.find('\n', start);
    std::string_view line = text.substr(start, newline == std::string_view::npos ? std::string_view::npos
                                                                                  : newline - start);
    start = newline == std::string_view::npos ? text.size() : newline + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    if (!seen.insert(std::string(key)).second) {
      throw ConfigError("duplicate config key '" + std::string(key) + "'");
    }
    config.set(key, line.substr(eq + 1));
  }
  config.validate();
  return config;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + "=" + field.get(*this) + "\n";
  return out;
}

std::string Config::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void Config::validate() const {
  model.validate();
  if (!(rl.gamma >= 0.0 && rl.gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(rl.exploration_sigma >= 0.0)) throw ConfigError("exploration_sigma must be >= 0");
  if (rl.reward_cutoff < 1) throw ConfigError("reward_cutoff must be >= 1");
  if (train.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (train.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(train.lr >= 0.0)) throw ConfigError("lr must be >= 0");
  if (train.mode == TrainMode::kFixed && train.fixed_length < 1) {
    throw ConfigError("fixed_length must be >= 1");
  }
  if (train.workers < 1) throw ConfigError("workers must be >= 1");
  if (train.eval_ks.empty()) throw ConfigError("eval_ks must not be empty");
  for (std::size_t k : train.eval_ks) {
    if (k < 1) throw ConfigError("eval_ks entries must be >= 1");
  }
  synthetic.validate();
}

}  // namespace sar
