#pragma once

#include "sar/agent/agent.hpp"
#include "sar/model/sar_model.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace sar::agent {

enum class EpisodeMode { kTrain, kEval };

struct Transition {
  data::UserId user = 0;
  std::size_t step = 0;  // prefix length t the state encodes
  model::StateVector state;
  Action action;
  double reward = 0.0;
  double q = 0.0;  // critic value of (state, action)
  bool terminal = false;
  std::optional<model::StateVector> next_state;  // empty when terminal
};

struct EpisodeOptions {
  EpisodeMode mode = EpisodeMode::kEval;
  double noise_sigma = 0.0;  // used in kTrain only
  std::size_t reward_cutoff = 10;
  RewardKind reward_kind = RewardKind::kNdcg;
  // Overrides the actor with a fixed length (clamped to t).
  std::optional<std::size_t> fixed_length;
};

// Walks the logged training prefix of one user. For t = 1 .. n−1 the state
// of prefix[0..t) picks a length, the recommender scores the adapted suffix,
// and the reward is measured against the logged item prefix[t]. The next
// state always follows the log. Returns no transitions when the prefix has
// fewer than two items.
std::vector<Transition> run_episode(const SarModel& model, const data::UserSplit& entry,
                                    const EpisodeOptions& options, nc::Rng& rng);

// One line per transition: user, t, l, reward, q, terminal (0/1), tab-separated.
void write_transitions(std::ostream& out, const std::vector<Transition>& transitions);

}  // namespace sar::agent
