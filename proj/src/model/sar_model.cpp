#include "sar/model/sar_model.hpp"

#include "sar/errors.hpp"

#include <algorithm>
#include <map>

namespace sar {

void ModelConfig::validate() const {
  if (item_dim == 0 || state_dim == 0 || encoder_hidden == 0 || encoder_ff == 0 ||
      recommender_ff == 0 || actor_hidden == 0 || critic_hidden == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (item_dim != user_dim) throw ConfigError("item_dim and user_dim must be equal");
  if (encoder_blocks == 0 || recommender_blocks == 0) {
    throw ConfigError("block counts must be at least 1");
  }
  if (max_length < 2) throw ConfigError("max_length must be at least 2");
  if (!(actor_initial_length >= 0.0)) throw ConfigError("actor_initial_length must be >= 0");
}

SarModel::SarModel(const ModelConfig& config, std::size_t num_users, std::size_t num_items,
                   std::uint64_t seed)
    : config_(config), num_users_(num_users), num_items_(num_items) {
  config.validate();
  if (num_users == 0 || num_items == 0) throw ConfigError("model needs users and items");
  const nc::Rng root(seed);
  nc::Rng emb_rng = root.split(1);
  nc::Rng enc_rng = root.split(2);
  nc::Rng actor_rng = root.split(3);
  nc::Rng critic_rng = root.split(4);
  nc::Rng rec_rng = root.split(5);

  embeddings = model::EmbeddingTable::create(num_items, num_users, config.item_dim,
                                             config.max_length, emb_rng);
  const nc::Tensor encoder_items = config.share_item_embeddings
                                       ? embeddings.item
                                       : model::embedding_init(num_items, config.item_dim, enc_rng);
  model::EncoderShape enc{config.item_dim, config.encoder_hidden, config.encoder_ff,
                          config.encoder_blocks, config.state_dim, config.max_length,
                          config.gate_bias};
  encoder = model::StateEncoder(enc, encoder_items, embeddings.positional, enc_rng);
  actor = agent::Actor(config.state_dim, config.actor_hidden, config.actor_initial_length, actor_rng);
  critic = agent::Critic(config.state_dim, config.critic_hidden, config.max_length, critic_rng);
  model::RecommenderShape rec{config.item_dim, config.user_dim, config.recommender_ff,
                              config.recommender_blocks, config.max_length, config.gate_bias};
  recommender = model::Recommender(rec, rec_rng);
}

std::vector<nc::NamedTensor> SarModel::named_parameters() const {
  std::vector<nc::NamedTensor> out;
  out.push_back({"embedding.item", embeddings.item});
  out.push_back({"embedding.user", embeddings.user});
  encoder.append_parameters(out, !config_.share_item_embeddings);
  recommender.append_parameters(out);
  actor.append_parameters(out);
  critic.append_parameters(out);
  return out;
}

std::vector<nc::Tensor> SarModel::recommender_parameters() const {
  std::vector<nc::NamedTensor> named{{"embedding.item", embeddings.item},
                                     {"embedding.user", embeddings.user}};
  recommender.append_parameters(named);
  std::vector<nc::Tensor> out;
  for (auto& [name, t] : named) out.push_back(t);
  return out;
}

std::vector<nc::Tensor> SarModel::critic_parameters() const {
  std::vector<nc::NamedTensor> named;
  encoder.append_parameters(named, !config_.share_item_embeddings);
  critic.append_parameters(named);
  std::vector<nc::Tensor> out;
  for (auto& [name, t] : named) out.push_back(t);
  return out;
}

std::vector<nc::Tensor> SarModel::actor_parameters() const {
  return {actor.w1(), actor.w2()};
}

std::size_t SarModel::parameter_count() const {
  std::size_t total = 0;
  for (const auto& [name, t] : named_parameters()) total += t.size();
  return total;
}

std::size_t SarModel::expected_parameter_count(const ModelConfig& c, std::size_t num_users,
                                               std::size_t num_items) {
  const std::size_t embeddings = (num_items + num_users) * c.item_dim;
  model::EncoderShape enc{c.item_dim, c.encoder_hidden, c.encoder_ff, c.encoder_blocks,
                          c.state_dim, c.max_length, c.gate_bias};
  model::RecommenderShape rec{c.item_dim, c.user_dim, c.recommender_ff, c.recommender_blocks,
                              c.max_length, c.gate_bias};
  return embeddings +
         model::StateEncoder::parameter_count(enc, !c.share_item_embeddings, num_items) +
         model::Recommender::parameter_count(rec) +
         agent::Actor::parameter_count(c.state_dim, c.actor_hidden) +
         agent::Critic::parameter_count(c.state_dim, c.critic_hidden);
}

void SarModel::load_parameters(const std::vector<nc::NamedTensor>& tensors) {
  std::map<std::string, const nc::Tensor*> by_name;
  for (const auto& [name, t] : tensors) by_name[name] = &t;
  auto params = named_parameters();
  for (auto& [name, target] : params) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw LoadError("checkpoint is missing tensor '" + name + "'");
    const nc::Tensor& source = *it->second;
    if (source.shape() != target.shape()) {
      throw LoadError("tensor '" + name + "' has shape " + nc::to_string(source.shape()) +
                      " but the configured model expects " + nc::to_string(target.shape()));
    }
  }
  for (auto& [name, target] : params) {
    const nc::Tensor& source = *by_name.at(name);
    std::copy(source.values().begin(), source.values().end(), target.mutable_values().begin());
  }
}

std::vector<std::vector<double>> SarModel::snapshot() const {
  std::vector<std::vector<double>> values;
  for (const auto& [name, t] : named_parameters()) {
    values.emplace_back(t.values().begin(), t.values().end());
  }
  return values;
}

void SarModel::restore(const std::vector<std::vector<double>>& values) {
  auto params = named_parameters();
  if (values.size() != params.size()) throw ContractError("snapshot does not match the model");
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::copy(values[i].begin(), values[i].end(), params[i].tensor.mutable_values().begin());
  }
}

void SarModel::zero_grad() {
  for (auto& [name, t] : named_parameters()) t.zero_grad();
}

}  // namespace sar
