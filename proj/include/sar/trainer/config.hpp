#pragma once

#include "sar/agent/agent.hpp"
#include "sar/data/synthetic.hpp"
#include "sar/model/sar_model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sar {

enum class TrainMode { kAdaptive, kFixed };

struct RLConfig {
  double gamma = 0.82;
  // Stddev of Gaussian noise on the raw action, annealed linearly to 0.
  double exploration_sigma = 2.0;
  std::size_t reward_cutoff = 10;
  agent::RewardKind reward_kind = agent::RewardKind::kNdcg;
};

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 128;  // transitions per update (whole episodes)
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  TrainMode mode = TrainMode::kAdaptive;
  std::size_t fixed_length = 50;
  double lambda_critic = 1.0;
  double lambda_actor = 1.0;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::vector<std::size_t> eval_ks{5, 10};
};

// Flat `key = value` file; `#` starts a comment. Keys (defaults in the structs):
//   model:     item_dim user_dim state_dim encoder_hidden encoder_ff encoder_blocks
//              recommender_ff recommender_blocks max_length actor_hidden critic_hidden
//              gate_bias actor_initial_length share_item_embeddings
//   rl:        gamma exploration_sigma reward_cutoff reward_kind (ndcg|hit)
//   train:     epochs batch_size lr beta1 beta2 adam_eps mode (adaptive|fixed)
//              fixed_length lambda_critic lambda_actor seed workers eval_ks
//   synthetic: synth_users synth_items synth_min_length synth_max_length
//              synth_windows synth_noise synth_seed
// Lists are comma-separated.
struct Config {
  ModelConfig model;
  RLConfig rl;
  TrainConfig train;
  data::SyntheticSpec synthetic;

  // Throws ConfigError on unknown/duplicate keys or malformed values.
  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  // Every key with its value, sorted by key, one per line.
  std::string canonical() const;
  // 16 hex digits of FNV-1a 64 over canonical().
  std::string hash() const;
  void validate() const;
  // Applies one `key=value` override.
  void set(std::string_view key, std::string_view value);
};

}  // namespace sar
