#include "sar/trainer/trainer.hpp"

#include "sar/agent/agent.hpp"
#include "sar/errors.hpp"
#include "sar/eval/evaluate.hpp"
#include "sar/numcore/ops.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

namespace sar {

nc::Tensor joint_loss(const nc::Tensor& recommendation_loss, const nc::Tensor& q) {
  return nc::scale(recommendation_loss, q.item());
}

double joint_loss(double recommendation_loss, double q) { return recommendation_loss * q; }

namespace {

nc::AdamOptions adam_options(const TrainConfig& t) { return {t.lr, t.beta1, t.beta2, t.adam_eps}; }

void require_finite(double value, const char* what, std::size_t epoch) {
  if (!std::isfinite(value)) {
    throw NumericError(std::string("non-finite ") + what + " in epoch " + std::to_string(epoch));
  }
}

nc::Tensor accumulate(const nc::Tensor& total, const nc::Tensor& term) {
  return total.defined() ? nc::add(total, term) : term;
}

// Episodes longer than the encoder capacity keep their most recent items.
std::span<const data::ItemId> episode_items(const data::UserSplit& user, std::size_t max_length) {
  std::span<const data::ItemId> items(user.train_prefix);
  if (items.size() > max_length + 1) items = items.last(max_length + 1);
  return items;
}

}  // namespace

struct Trainer::Batch {
  std::vector<const data::UserSplit*> users;
  std::size_t transitions = 0;
  std::size_t epoch = 0;
};

Trainer::Trainer(const Config& config, const data::SplitDataset& dataset)
    : config_(config),
      dataset_(dataset),
      model_(config.model, dataset.num_users, dataset.num_items, config.train.seed),
      recommender_opt_(model_.recommender_parameters(), adam_options(config.train)),
      critic_opt_(model_.critic_parameters(), adam_options(config.train)),
      actor_opt_(model_.actor_parameters(), adam_options(config.train)),
      rng_(nc::Rng(config.train.seed).split(1000)) {
  config_.validate();
  if (dataset.users.empty()) throw DataError("training needs at least one user");
}

double Trainer::exploration_sigma(std::size_t epoch) const {
  const double epochs = static_cast<double>(config_.train.epochs);
  const double remaining = epochs - static_cast<double>(epoch);
  return config_.rl.exploration_sigma * std::max(0.0, remaining) / std::max(1.0, epochs - 1.0);
}

void Trainer::update(const Batch& batch, double sigma, nc::Rng& rng, EpochRecord& sums,
                     std::vector<double>& lengths) {
  const bool adaptive = config_.train.mode == TrainMode::kAdaptive;
  const std::size_t max_length = config_.model.max_length;
  const double n = static_cast<double>(batch.transitions);

  struct Episode {
    const data::UserSplit* user;
    std::span<const data::ItemId> items;
    std::size_t steps;
    nc::Tensor states;  // steps×d_s, recorded on the critic tape
    nc::Tensor q;       // steps×1
    std::vector<std::size_t> lengths;
    std::vector<double> rewards;
  };
  std::vector<Episode> episodes;
  episodes.reserve(batch.users.size());

  // Critic tape: states and Q(s_t, a_t).
  nc::Tape critic_tape;
  for (const auto* user : batch.users) {
    Episode ep{user, episode_items(*user, max_length), 0, {}, {}, {}, {}};
    ep.steps = ep.items.size() - 1;
    ep.lengths.resize(ep.steps);
    if (adaptive) {
      nc::TapeScope scope(&critic_tape);
      ep.states = model_.encoder.encode_all(ep.items.first(ep.steps));
      std::vector<double> raw(ep.steps);
      {
        nc::TapeScope no_recording(nullptr);
        const nc::Tensor mean_action = model_.actor.raw(ep.states.detach());
        for (std::size_t i = 0; i < ep.steps; ++i) {
          raw[i] = mean_action.values()[i] + (sigma > 0.0 ? sigma * rng.normal() : 0.0);
          ep.lengths[i] = agent::length_from_raw(raw[i], i + 1);
        }
      }
      std::vector<double> executed(ep.lengths.begin(), ep.lengths.end());
      ep.q = model_.critic.q(ep.states, nc::Tensor::from({ep.steps, 1}, std::move(executed)));
    } else {
      for (std::size_t i = 0; i < ep.steps; ++i) {
        ep.lengths[i] =
            agent::length_from_raw(static_cast<double>(config_.train.fixed_length), i + 1);
      }
    }
    episodes.push_back(std::move(ep));
  }

  // Recommendation pass: mean of L_r · detach(Q).
  {
    nc::Tape tape;
    nc::TapeScope scope(&tape);
    nc::Tensor total;
    for (auto& ep : episodes) {
      ep.rewards.resize(ep.steps);
      for (std::size_t t = 1; t <= ep.steps; ++t) {
        const data::ItemId truth = ep.items[t];
        const auto window = agent::adapt_sequence(ep.items.first(t), ep.lengths[t - 1]);
        const nc::Tensor probs =
            model_.recommender.probabilities(model_.embeddings, window, ep.user->user);
        const nc::Tensor ce = model::cross_entropy(probs, truth);
        const double q = adaptive ? ep.q(t - 1, 0) : 1.0;
        const nc::Tensor weighted = adaptive ? joint_loss(ce, nc::Tensor::scalar(q)) : ce;
        total = accumulate(total, weighted);
        ep.rewards[t - 1] =
            agent::reward_from_rank(model::rank_in_scores(probs.values(), truth),
                                    config_.rl.reward_cutoff, config_.rl.reward_kind);
        sums.recommendation_loss += ce.item();
        sums.joint_loss += weighted.item();
        sums.mean_reward += ep.rewards[t - 1];
        lengths.push_back(static_cast<double>(ep.lengths[t - 1]));
      }
    }
    const nc::Tensor loss = nc::scale(total, 1.0 / n);
    require_finite(loss.item(), "recommendation loss", batch.epoch);
    model_.zero_grad();
    tape.backward(loss);
    recommender_opt_.step();
  }
  if (!adaptive) return;

  // Critic pass: λ_c · mean (y − Q)² with y = r + γ·Q(s', l'), l' the noiseless
  // executed length at the next state, detached.
  {
    nc::TapeScope scope(&critic_tape);
    nc::Tensor total;
    for (const auto& ep : episodes) {
      std::vector<double> target(ep.steps);
      {
        nc::TapeScope no_recording(nullptr);
        const nc::Tensor s = ep.states.detach();
        const nc::Tensor raw = model_.actor.raw(s);
        std::vector<double> next_lengths(ep.steps);
        for (std::size_t i = 0; i < ep.steps; ++i) {
          next_lengths[i] = static_cast<double>(agent::length_from_raw(raw.values()[i], i + 1));
        }
        const nc::Tensor q_next =
            model_.critic.q(s, nc::Tensor::from({ep.steps, 1}, std::move(next_lengths)));
        for (std::size_t i = 0; i < ep.steps; ++i) {
          const bool terminal = i + 1 == ep.steps;
          target[i] = agent::td_target(
              ep.rewards[i], config_.rl.gamma,
              terminal ? std::nullopt : std::optional<double>(q_next.values()[i + 1]));
        }
      }
      const nc::Tensor diff =
          nc::sub(ep.q, nc::Tensor::from({ep.steps, 1}, std::move(target)));
      total = accumulate(total, nc::sum(nc::mul(diff, diff)));
    }
    sums.critic_loss += total.item();
    const nc::Tensor loss = nc::scale(total, config_.train.lambda_critic / n);
    require_finite(loss.item(), "critic loss", batch.epoch);
    model_.zero_grad();
    critic_tape.backward(loss);
    critic_opt_.step();
  }

  // Actor pass: −λ_a · mean Q(s, clamp(actor(s), 1, t)) on detached states.
  {
    nc::Tape tape;
    nc::TapeScope scope(&tape);
    nc::Tensor total;
    for (const auto& ep : episodes) {
      const nc::Tensor s = ep.states.detach();
      std::vector<double> prefix(ep.steps);
      std::iota(prefix.begin(), prefix.end(), 1.0);
      const nc::Tensor length = agent::relaxed_length(model_.actor.raw(s), prefix);
      total = accumulate(total, nc::sum(model_.critic.q(s, length)));
    }
    sums.actor_objective += total.item();
    const nc::Tensor loss = nc::scale(total, -config_.train.lambda_actor / n);
    require_finite(loss.item(), "actor objective", batch.epoch);
    model_.zero_grad();
    tape.backward(loss);
    actor_opt_.step();
  }
}

EpochRecord Trainer::train_epoch(std::size_t epoch) {
  nc::Rng rng = rng_.split(epoch);
  std::vector<const data::UserSplit*> order;
  for (const auto& user : dataset_.users) {
    if (user.train_prefix.size() >= 2) order.push_back(&user);
  }
  if (order.empty()) throw DataError("no user has a training prefix of two or more items");
  rng.shuffle(std::span<const data::UserSplit*>(order));

  EpochRecord record;
  record.epoch = epoch;
  record.exploration_sigma =
      config_.train.mode == TrainMode::kAdaptive ? exploration_sigma(epoch) : 0.0;
  std::vector<double> lengths;

  Batch batch;
  batch.epoch = epoch;
  for (std::size_t i = 0; i < order.size(); ++i) {
    batch.users.push_back(order[i]);
    batch.transitions += episode_items(*order[i], config_.model.max_length).size() - 1;
    if (batch.transitions >= config_.train.batch_size || i + 1 == order.size()) {
      update(batch, record.exploration_sigma, rng, record, lengths);
      record.transitions += batch.transitions;
      batch.users.clear();
      batch.transitions = 0;
    }
  }

  const double n = static_cast<double>(record.transitions);
  record.recommendation_loss /= n;
  record.joint_loss /= n;
  record.critic_loss /= n;
  record.actor_objective /= n;
  record.mean_reward /= n;
  record.mean_length = std::accumulate(lengths.begin(), lengths.end(), 0.0) / n;
  double sq = 0.0;
  for (double l : lengths) sq += (l - record.mean_length) * (l - record.mean_length);
  record.length_stddev = std::sqrt(sq / n);
  require_finite(record.recommendation_loss, "recommendation loss", epoch);
  return record;
}

void Trainer::validate(EpochRecord& record) const {
  const std::size_t ks[] = {std::min<std::size_t>(10, dataset_.num_items)};
  std::optional<std::size_t> fixed;
  if (config_.train.mode == TrainMode::kFixed) fixed = config_.train.fixed_length;
  const auto report =
      eval::evaluate(model_, dataset_, eval::Split::kVal, ks, fixed, config_.train.workers);
  record.val_ndcg10 = report.ndcg.at(ks[0]);
  record.val_hr10 = report.hr.at(ks[0]);
}

TrainReport Trainer::train() {
  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  report.parameter_count = model_.parameter_count();
  report.config_hash = config_.hash();
  std::vector<std::vector<double>> best;
  for (std::size_t epoch = 1; epoch <= config_.train.epochs; ++epoch) {
    EpochRecord record = train_epoch(epoch);
    validate(record);
    if (best.empty() || record.val_ndcg10 > report.best_val_ndcg10) {
      report.best_epoch = epoch;
      report.best_val_ndcg10 = record.val_ndcg10;
      best = model_.snapshot();
    }
    report.epochs.push_back(record);
  }
  model_.restore(best);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_report_jsonl(std::ostream& out, const TrainReport& report) {
  for (const auto& r : report.epochs) {
    nlohmann::ordered_json j;
    j["epoch"] = r.epoch;
    j["transitions"] = r.transitions;
    j["recommendation_loss"] = r.recommendation_loss;
    j["joint_loss"] = r.joint_loss;
    j["critic_loss"] = r.critic_loss;
    j["actor_objective"] = r.actor_objective;
    j["mean_reward"] = r.mean_reward;
    j["mean_length"] = r.mean_length;
    j["length_stddev"] = r.length_stddev;
    j["exploration_sigma"] = r.exploration_sigma;
    j["val_ndcg10"] = r.val_ndcg10;
    j["val_hr10"] = r.val_hr10;
    out << j.dump() << '\n';
  }
  nlohmann::ordered_json summary;
  summary["record"] = "summary";
  summary["epochs"] = report.epochs.size();
  summary["best_epoch"] = report.best_epoch;
  summary["best_val_ndcg10"] = report.best_val_ndcg10;
  summary["parameter_count"] = report.parameter_count;
  summary["config_hash"] = report.config_hash;
  out << summary.dump() << '\n';
}

void write_report_table(std::ostream& out, const TrainReport& report) {
  out << std::right << std::setw(5) << "epoch" << std::setw(10) << "L_r" << std::setw(10) << "joint"
      << std::setw(10) << "critic" << std::setw(10) << "Q(s,pi)" << std::setw(14) << "length"
      << std::setw(9) << "NDCG@10" << std::setw(9) << "HR@10" << '\n';
  out << std::fixed;
  for (const auto& r : report.epochs) {
    std::ostringstream length;
    length << std::fixed << std::setprecision(2) << r.mean_length << "+-" << r.length_stddev;
    out << std::setw(5) << r.epoch << std::setprecision(4) << std::setw(10) << r.recommendation_loss
        << std::setw(10) << r.joint_loss << std::setw(10) << r.critic_loss << std::setw(10)
        << r.actor_objective << std::setw(14) << length.str() << std::setw(9) << r.val_ndcg10
        << std::setw(9) << r.val_hr10 << '\n';
  }
  out.unsetf(std::ios::floatfield);
  out << "best epoch " << report.best_epoch << " (val NDCG@10 " << report.best_val_ndcg10 << "), "
      << report.parameter_count << " parameters\n";
}

}  // namespace sar
