#pragma once

#include "sar/model/recommender.hpp"
#include "sar/numcore/rng.hpp"

#include <optional>
#include <span>
#include <vector>

namespace sar::agent {

using data::ItemId;
using nc::NamedTensor;
using nc::Tensor;

struct Action {
  double raw = 0.0;         // actor output (plus exploration noise when training)
  std::size_t length = 1;   // clamp(round(raw), 1, t)
};

// clamp(round(raw), 1, t) for a prefix of length t >= 1.
std::size_t length_from_raw(double raw, std::size_t t);

// raw = ReLU(σ(s·W1)·W2), W1: d_s×d_a, W2: d_a×1.
class Actor {
 public:
  Actor() = default;
  // W2 is drawn so that the initial raw output is close to `initial_length`.
  Actor(std::size_t state_dim, std::size_t hidden, double initial_length, nc::Rng& rng);

  // [n×d_s] states → [n×1] raw actions.
  Tensor raw(const Tensor& states) const;
  // Action for a single 1×d_s state and prefix length t. Gaussian noise with
  // stddev `noise_sigma` is added to the raw output before rounding.
  Action act(const Tensor& state, std::size_t t, double noise_sigma = 0.0,
             nc::Rng* rng = nullptr) const;

  void append_parameters(std::vector<NamedTensor>& out) const;
  static std::size_t parameter_count(std::size_t state_dim, std::size_t hidden);

  Tensor& w1() { return w1_; }
  Tensor& w2() { return w2_; }
  const Tensor& w1() const { return w1_; }
  const Tensor& w2() const { return w2_; }

 private:
  Tensor w1_, w2_;
};

// Q = ReLU(σ((s ⊕ a)·W1)·W2), W1: (d_s+1)×d_c, W2: d_c×1. The action
// scalar fed in is length / max_length, where length is the executed window
// length (or its continuous relaxation when differentiating the actor).
class Critic {
 public:
  Critic() = default;
  Critic(std::size_t state_dim, std::size_t hidden, std::size_t max_length, nc::Rng& rng);

  // [n×d_s] states and [n×1] lengths → [n×1] Q values.
  Tensor q(const Tensor& states, const Tensor& lengths) const;
  double value(const Tensor& state, const Action& action) const;

  void append_parameters(std::vector<NamedTensor>& out) const;
  static std::size_t parameter_count(std::size_t state_dim, std::size_t hidden);

  std::size_t max_length() const { return max_length_; }
  Tensor& w1() { return w1_; }
  Tensor& w2() { return w2_; }
  const Tensor& w1() const { return w1_; }
  const Tensor& w2() const { return w2_; }

 private:
  Tensor w1_, w2_;
  std::size_t max_length_ = 200;
};

// clamp(raw, 1, t) per row: the executed length before rounding, with a
// gradient inside the feasible range. `prefix_lengths` holds t per row.
Tensor relaxed_length(const Tensor& raw, std::span<const double> prefix_lengths);

// The `length` most recent items, order preserved. Throws ContractError
// unless 1 <= length <= items.size().
std::span<const ItemId> adapt_sequence(std::span<const ItemId> items, std::size_t length);

enum class RewardKind { kNdcg, kHit };

// 1/log2(rank+1) (or 1 for kHit) when rank <= cutoff, else 0; rank is 1-based.
double reward_from_rank(std::size_t rank, std::size_t cutoff, RewardKind kind = RewardKind::kNdcg);
double compute_reward(const model::RankedList& ranked, ItemId truth, std::size_t cutoff,
                      RewardKind kind = RewardKind::kNdcg);

// r + γ·q_next, or r when the step is terminal (q_next empty).
double td_target(double reward, double gamma, std::optional<double> q_next);

}  // namespace sar::agent
