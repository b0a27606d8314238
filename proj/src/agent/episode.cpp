#include "sar/agent/episode.hpp"

#include "sar/numcore/ops.hpp"

#include <ostream>
#include <span>

namespace sar::agent {

std::vector<Transition> run_episode(const SarModel& model, const data::UserSplit& entry,
                                    const EpisodeOptions& options, nc::Rng& rng) {
  const auto& prefix = entry.train_prefix;
  std::vector<Transition> transitions;
  if (prefix.size() < 2) return transitions;

  nc::TapeScope no_recording(nullptr);
  const std::span<const data::ItemId> items(prefix);
  const std::size_t steps = prefix.size() - 1;
  // Causal encoding: row t−1 is the state of prefix[0..t).
  const nc::Tensor states = model.encoder.encode_all(items.first(steps));
  const double sigma = options.mode == EpisodeMode::kTrain ? options.noise_sigma : 0.0;

  transitions.reserve(steps);
  for (std::size_t t = 1; t <= steps; ++t) {
    Transition tr;
    tr.user = entry.user;
    tr.step = t;
    tr.state = {nc::slice_rows(states, t - 1, 1), entry.user, t};
    if (options.fixed_length) {
      tr.action.raw = static_cast<double>(*options.fixed_length);
      tr.action.length = length_from_raw(tr.action.raw, t);
    } else {
      tr.action = model.actor.act(tr.state.values, t, sigma, &rng);
    }
    const auto window = adapt_sequence(items.first(t), tr.action.length);
    const auto ranked = model.recommender.score_next(model.embeddings, window, entry.user);
    tr.reward = compute_reward(ranked, prefix[t], options.reward_cutoff, options.reward_kind);
    tr.q = model.critic.value(tr.state.values, tr.action);
    tr.terminal = t == steps;
    if (!tr.terminal) tr.next_state = model::StateVector{nc::slice_rows(states, t, 1), entry.user, t + 1};
    transitions.push_back(std::move(tr));
  }
  return transitions;
}

void write_transitions(std::ostream& out, const std::vector<Transition>& transitions) {
  for (const auto& tr : transitions) {
    out << tr.user << '\t' << tr.step << '\t' << tr.action.length << '\t' << tr.reward << '\t'
        << tr.q << '\t' << (tr.terminal ? 1 : 0) << '\n';
  }
}

}  // namespace sar::agent
