#include "sar/eval/evaluate.hpp"

#include "sar/agent/agent.hpp"
#include "sar/errors.hpp"
#include "sar/eval/metrics.hpp"
#include "sar/model/recommender.hpp"
#include "sar/numcore/tensor.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <exception>
#include <iomanip>
#include <ostream>
#include <thread>

namespace sar::eval {

const char* split_name(Split split) { return split == Split::kVal ? "val" : "test"; }

std::vector<ItemId> split_history(const data::UserSplit& user, Split split) {
  std::vector<ItemId> history = user.train_prefix;
  if (split == Split::kTest) history.push_back(user.val_item);
  return history;
}

ItemId split_target(const data::UserSplit& user, Split split) {
  return split == Split::kVal ? user.val_item : user.test_item;
}

MetricsReport summarize(std::vector<UserResult> per_user, std::span<const std::size_t> ks) {
  MetricsReport report;
  report.num_users = per_user.size();
  const double n = static_cast<double>(per_user.size());
  for (std::size_t k : ks) {
    double ndcg = 0.0;
    double hr = 0.0;
    for (const auto& r : per_user) {
      ndcg += ndcg_from_rank(r.rank, k);
      hr += hr_from_rank(r.rank, k);
    }
    report.ndcg[k] = per_user.empty() ? 0.0 : ndcg / n;
    report.hr[k] = per_user.empty() ? 0.0 : hr / n;
  }
  double sum = 0.0;
  for (const auto& r : per_user) sum += static_cast<double>(r.length);
  report.mean_length = per_user.empty() ? 0.0 : sum / n;
  double sq = 0.0;
  for (const auto& r : per_user) {
    const double d = static_cast<double>(r.length) - report.mean_length;
    sq += d * d;
  }
  report.length_stddev = per_user.empty() ? 0.0 : std::sqrt(sq / n);
  report.per_user = std::move(per_user);
  return report;
}

MetricsReport evaluate_with(const data::SplitDataset& dataset, Split split,
                            std::span<const std::size_t> ks, const Scorer& scorer,
                            std::size_t workers) {
  for (std::size_t k : ks) {
    if (k < 1 || k > dataset.num_items) {
      throw ContractError("K=" + std::to_string(k) + " outside [1, " +
                          std::to_string(dataset.num_items) + "]");
    }
  }
  const std::size_t n = dataset.users.size();
  std::vector<UserResult> results(n);
  auto run_range = [&](std::size_t worker, std::size_t stride) {
    for (std::size_t i = worker; i < n; i += stride) {
      const auto& user = dataset.users[i];
      const auto history = split_history(user, split);
      const ScoredUser scored = scorer(user.user, history);
      if (scored.scores.size() != dataset.num_items) {
        throw ShapeError("scorer returned " + std::to_string(scored.scores.size()) +
                         " scores for a catalog of " + std::to_string(dataset.num_items));
      }
      results[i] = {user.user, model::rank_in_scores(scored.scores, split_target(user, split)),
                    scored.length};
    }
  };

  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    run_range(0, 1);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          run_range(w, workers);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  MetricsReport report = summarize(std::move(results), ks);
  report.split = split_name(split);
  return report;
}

Scorer model_scorer(const SarModel& model, std::optional<std::size_t> fixed_length) {
  return [&model, fixed_length](UserId user, std::span<const ItemId> history) {
    nc::TapeScope no_recording(nullptr);
    const std::size_t cap = model.config().max_length;
    if (history.size() > cap) history = history.last(cap);
    const std::size_t t = history.size();
    std::size_t length = 0;
    if (fixed_length) {
      length = agent::length_from_raw(static_cast<double>(*fixed_length), t);
    } else {
      length = model.actor.act(model.encoder.encode(history), t).length;
    }
    const auto window = agent::adapt_sequence(history, length);
    const nc::Tensor logits = model.recommender.logits(model.embeddings, window, user);
    return ScoredUser{{logits.values().begin(), logits.values().end()}, length};
  };
}

MetricsReport evaluate(const SarModel& model, const data::SplitDataset& dataset, Split split,
                       std::span<const std::size_t> ks, std::optional<std::size_t> fixed_length,
                       std::size_t workers) {
  if (dataset.num_items != model.num_items() || dataset.num_users != model.num_users()) {
    throw LoadError("model was built for " + std::to_string(model.num_users()) + " users and " +
                    std::to_string(model.num_items()) + " items, dataset has " +
                    std::to_string(dataset.num_users) + " and " +
                    std::to_string(dataset.num_items));
  }
  return evaluate_with(dataset, split, ks, model_scorer(model, fixed_length), workers);
}

void write_metrics_jsonl(std::ostream& out, const MetricsReport& report) {
  nlohmann::ordered_json summary;
  summary["record"] = "summary";
  summary["split"] = report.split;
  summary["num_users"] = report.num_users;
  for (const auto& [k, v] : report.ndcg) summary["ndcg@" + std::to_string(k)] = v;
  for (const auto& [k, v] : report.hr) summary["hr@" + std::to_string(k)] = v;
  summary["mean_length"] = report.mean_length;
  summary["length_stddev"] = report.length_stddev;
  summary["seed"] = report.seed;
  summary["config_hash"] = report.config_hash;
  out << summary.dump() << '\n';
  for (const auto& r : report.per_user) {
    nlohmann::ordered_json row;
    row["record"] = "user";
    row["user"] = r.user;
    row["rank"] = r.rank;
    row["length"] = r.length;
    out << row.dump() << '\n';
  }
}

void write_metrics_table(std::ostream& out, const MetricsReport& report) {
  out << "split " << report.split << ", " << report.num_users << " users\n";
  out << std::left << std::setw(6) << "K" << std::setw(10) << "NDCG" << "HR\n";
  for (const auto& [k, v] : report.ndcg) {
    out << std::left << std::setw(6) << k << std::setw(10) << std::fixed << std::setprecision(4) << v
        << report.hr.at(k) << '\n';
  }
  out << "mean length " << std::setprecision(2) << report.mean_length << " +- "
      << report.length_stddev << '\n';
  out.unsetf(std::ios::floatfield);
}

}  // namespace sar::eval
