#pragma once

#include "sar/agent/agent.hpp"
#include "sar/model/encoder.hpp"
#include "sar/model/recommender.hpp"

#include <cstdint>
#include <vector>

namespace sar {

struct ModelConfig {
  std::size_t item_dim = 100;  // d_i; must equal user_dim
  std::size_t user_dim = 100;  // d_u
  std::size_t state_dim = 150; // d_s
  std::size_t encoder_hidden = 100;
  std::size_t encoder_ff = 200;
  std::size_t encoder_blocks = 1;
  std::size_t recommender_ff = 200;
  std::size_t recommender_blocks = 1;
  std::size_t max_length = 200;  // T_max
  std::size_t actor_hidden = 64;   // d_a
  std::size_t critic_hidden = 64;  // d_c
  double gate_bias = 0.0;
  double actor_initial_length = 5.0;
  bool share_item_embeddings = true;

  // Throws ConfigError.
  void validate() const;
};

// Every trainable tensor of the model, plus the grouping used by the three
// optimizers. Tensors are shared handles, so the model is move-only.
class SarModel {
 public:
  SarModel(const ModelConfig& config, std::size_t num_users, std::size_t num_items,
           std::uint64_t seed);
  SarModel(SarModel&&) = default;
  SarModel& operator=(SarModel&&) = default;
  SarModel(const SarModel&) = delete;
  SarModel& operator=(const SarModel&) = delete;

  const ModelConfig& config() const { return config_; }
  std::size_t num_users() const { return num_users_; }
  std::size_t num_items() const { return num_items_; }

  model::EmbeddingTable embeddings;
  model::StateEncoder encoder;
  agent::Actor actor;
  agent::Critic critic;
  model::Recommender recommender;

  // Stable names; the checkpoint layout.
  std::vector<nc::NamedTensor> named_parameters() const;
  // Embeddings + recommender transformer.
  std::vector<nc::Tensor> recommender_parameters() const;
  // Critic MLP + state encoder (without the shared item table).
  std::vector<nc::Tensor> critic_parameters() const;
  std::vector<nc::Tensor> actor_parameters() const;

  std::size_t parameter_count() const;
  static std::size_t expected_parameter_count(const ModelConfig& config, std::size_t num_users,
                                              std::size_t num_items);

  // Copies values from `tensors` by name. Throws LoadError on a missing name
  // or a shape mismatch.
  void load_parameters(const std::vector<nc::NamedTensor>& tensors);
  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& values);
  void zero_grad();

 private:
  ModelConfig config_;
  std::size_t num_users_;
  std::size_t num_items_;
};

}  // namespace sar
