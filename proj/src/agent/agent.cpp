#include "sar/agent/agent.hpp"

#include "sar/errors.hpp"
#include "sar/model/gated_attention.hpp"
#include "sar/numcore/ops.hpp"

#include <algorithm>
#include <cmath>

namespace sar::agent {

std::size_t length_from_raw(double raw, std::size_t t) {
  if (t == 0) throw ContractError("length_from_raw: empty prefix");
  const double rounded = std::round(raw);
  if (!(rounded >= 1.0)) return 1;  // also catches NaN
  if (rounded >= static_cast<double>(t)) return t;
  return static_cast<std::size_t>(rounded);
}

Actor::Actor(std::size_t state_dim, std::size_t hidden, double initial_length, nc::Rng& rng) {
  w1_ = model::glorot(state_dim, hidden, rng);
  // The hidden layer starts near σ = 0.5, so weights around
  // 2·initial_length/hidden put the raw output near initial_length.
  const double centre = 2.0 * initial_length / static_cast<double>(hidden);
  std::vector<double> w2(hidden);
  for (double& v : w2) v = centre * rng.uniform(0.5, 1.5);
  w2_ = Tensor::from({hidden, 1}, std::move(w2), true);
}

Tensor Actor::raw(const Tensor& states) const {
  return nc::relu(nc::matmul(nc::sigmoid(nc::matmul(states, w1_)), w2_));
}

Action Actor::act(const Tensor& state, std::size_t t, double noise_sigma, nc::Rng* rng) const {
  nc::TapeScope no_recording(nullptr);
  Action action;
  action.raw = raw(state).item();
  if (noise_sigma > 0.0) {
    if (rng == nullptr) throw ContractError("exploration noise requires a generator");
    action.raw += noise_sigma * rng->normal();
  }
  action.length = length_from_raw(action.raw, t);
  return action;
}

void Actor::append_parameters(std::vector<NamedTensor>& out) const {
  out.push_back({"actor.w1", w1_});
  out.push_back({"actor.w2", w2_});
}

std::size_t Actor::parameter_count(std::size_t state_dim, std::size_t hidden) {
  return state_dim * hidden + hidden;
}

Critic::Critic(std::size_t state_dim, std::size_t hidden, std::size_t max_length, nc::Rng& rng)
    : max_length_(max_length) {
  w1_ = model::glorot(state_dim + 1, hidden, rng);
  // Nonnegative output weights keep the outer ReLU active at the start;
  // a dead critic would zero every joint-loss weight.
  std::vector<double> w2(hidden);
  for (double& v : w2) v = rng.uniform(0.0, 2.0 / static_cast<double>(hidden));
  w2_ = Tensor::from({hidden, 1}, std::move(w2), true);
}

Tensor Critic::q(const Tensor& states, const Tensor& lengths) const {
  if (lengths.cols() != 1 || lengths.rows() != states.rows()) {
    throw ShapeError("critic: one action per state expected");
  }
  const Tensor action = nc::scale(lengths, 1.0 / static_cast<double>(max_length_));
  return nc::relu(nc::matmul(nc::sigmoid(nc::matmul(nc::concat_cols(states, action), w1_)), w2_));
}

double Critic::value(const Tensor& state, const Action& action) const {
  nc::TapeScope no_recording(nullptr);
  return q(state, Tensor::scalar(static_cast<double>(action.length))).item();
}

void Critic::append_parameters(std::vector<NamedTensor>& out) const {
  out.push_back({"critic.w1", w1_});
  out.push_back({"critic.w2", w2_});
}

std::size_t Critic::parameter_count(std::size_t state_dim, std::size_t hidden) {
  return (state_dim + 1) * hidden + hidden;
}

Tensor relaxed_length(const Tensor& raw, std::span<const double> prefix_lengths) {
  if (raw.cols() != 1 || raw.rows() != prefix_lengths.size()) {
    throw ShapeError("relaxed_length: one prefix length per row expected");
  }
  const std::vector<double> lower(prefix_lengths.size(), 1.0);
  return nc::clamp(raw, lower, prefix_lengths);
}

std::span<const ItemId> adapt_sequence(std::span<const ItemId> items, std::size_t length) {
  if (length < 1 || length > items.size()) {
    throw ContractError("adapt_sequence: length " + std::to_string(length) + " outside [1, " +
                        std::to_string(items.size()) + "]");
  }
  return items.subspan(items.size() - length, length);
}

double reward_from_rank(std::size_t rank, std::size_t cutoff, RewardKind kind) {
  if (rank < 1 || rank > cutoff) return 0.0;
  if (kind == RewardKind::kHit) return 1.0;
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

double compute_reward(const model::RankedList& ranked, ItemId truth, std::size_t cutoff,
                      RewardKind kind) {
  return reward_from_rank(ranked.rank_of(truth), cutoff, kind);
}

double td_target(double reward, double gamma, std::optional<double> q_next) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ContractError("td_target: gamma outside [0, 1)");
  if (!q_next) return reward;
  return reward + gamma * *q_next;
}

}  // namespace sar::agent
