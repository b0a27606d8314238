#include "sar/eval/compare.hpp"

#include "sar/errors.hpp"
#include "sar/trainer/trainer.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

namespace sar::eval {

std::string ComparisonRow::label() const {
  return length ? "fixed-" + std::to_string(*length) : mode;
}

namespace {

struct CellJob {
  std::size_t row;
  std::size_t repeat;
};

CellResult run_cell(const data::SplitDataset& dataset, Config config, std::size_t k, Split split) {
  CellResult cell;
  cell.seed = config.train.seed;
  try {
    Trainer trainer(config, dataset);
    trainer.train();
    std::optional<std::size_t> fixed;
    if (config.train.mode == TrainMode::kFixed) fixed = config.train.fixed_length;
    const std::size_t ks[] = {k};
    auto report = evaluate(trainer.model(), dataset, split, ks, fixed, config.train.workers);
    cell.ndcg = report.ndcg.at(k);
    cell.hr = report.hr.at(k);
    cell.mean_length = report.mean_length;
    cell.per_user = std::move(report.per_user);
  } catch (const std::exception& e) {
    cell.failed = true;
    cell.error = e.what();
  }
  return cell;
}

void mean_stddev(const std::vector<double>& xs, double& mean, double& stddev) {
  mean = 0.0;
  stddev = 0.0;
  if (xs.empty()) return;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return;
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  stddev = std::sqrt(sq / static_cast<double>(xs.size() - 1));
}

void aggregate(ComparisonRow& row, std::size_t num_users) {
  std::vector<double> ndcg, hr, length;
  row.user_length_mean.assign(num_users, 0.0);
  for (const auto& cell : row.cells) {
    if (cell.failed) continue;
    ndcg.push_back(cell.ndcg);
    hr.push_back(cell.hr);
    length.push_back(cell.mean_length);
    for (std::size_t i = 0; i < cell.per_user.size() && i < num_users; ++i) {
      row.user_length_mean[i] += static_cast<double>(cell.per_user[i].length);
    }
  }
  row.completed = ndcg.size();
  if (row.completed > 0) {
    for (double& v : row.user_length_mean) v /= static_cast<double>(row.completed);
  }
  mean_stddev(ndcg, row.ndcg_mean, row.ndcg_stddev);
  mean_stddev(hr, row.hr_mean, row.hr_stddev);
  double unused = 0.0;
  mean_stddev(length, row.length_mean, unused);
}

}  // namespace

ComparisonTable compare_lengths(const data::SplitDataset& dataset, const Config& base,
                                const CompareOptions& options) {
  if (options.lengths.empty()) throw ConfigError("compare: the length grid is empty");
  if (options.repeats < 1) throw ConfigError("compare: repeats must be >= 1");
  for (std::size_t l : options.lengths) {
    if (l < 1) throw ConfigError("compare: grid lengths must be >= 1");
  }
  base.validate();

  ComparisonTable table;
  table.k = options.k;
  table.config_hash = base.hash();
  for (std::size_t l : options.lengths) {
    ComparisonRow row;
    row.mode = "fixed";
    row.length = l;
    table.rows.push_back(row);
  }
  table.rows.emplace_back().mode = "adaptive";
  for (auto& row : table.rows) row.cells.resize(options.repeats);

  std::vector<CellJob> jobs;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t rep = 0; rep < options.repeats; ++rep) jobs.push_back({r, rep});
  }
  auto run_job = [&](const CellJob& job) {
    const ComparisonRow& row = table.rows[job.row];
    Config config = base;
    config.train.seed = base.train.seed + job.repeat;
    if (row.length) {
      config.train.mode = TrainMode::kFixed;
      config.train.fixed_length = *row.length;
    } else {
      config.train.mode = TrainMode::kAdaptive;
    }
    if (options.workers > 1) config.train.workers = 1;
    table.rows[job.row].cells[job.repeat] = run_cell(dataset, config, options.k, options.split);
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, jobs.size()));
  if (workers == 1) {
    for (const auto& job : jobs) run_job(job);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) run_job(jobs[i]);
      });
    }
    for (auto& t : threads) t.join();
  }

  for (auto& row : table.rows) aggregate(row, dataset.users.size());
  return table;
}

void write_comparison_table(std::ostream& out, const ComparisonTable& table) {
  const std::string k = std::to_string(table.k);
  out << std::left << std::setw(12) << "row" << std::setw(20) << ("NDCG@" + k) << std::setw(20)
      << ("HR@" + k) << std::setw(10) << "length" << "runs\n";
  for (const auto& row : table.rows) {
    std::ostringstream ndcg, hr, length;
    ndcg << std::fixed << std::setprecision(4) << row.ndcg_mean << " +- " << row.ndcg_stddev;
    hr << std::fixed << std::setprecision(4) << row.hr_mean << " +- " << row.hr_stddev;
    length << std::fixed << std::setprecision(2) << row.length_mean;
    out << std::left << std::setw(12) << row.label() << std::setw(20) << ndcg.str() << std::setw(20)
        << hr.str() << std::setw(10) << length.str() << row.completed << "/" << row.cells.size()
        << '\n';
    for (const auto& cell : row.cells) {
      if (cell.failed) out << "  seed " << cell.seed << " failed: " << cell.error << '\n';
    }
  }
}

void write_comparison_jsonl(std::ostream& out, const ComparisonTable& table) {
  for (const auto& row : table.rows) {
    nlohmann::ordered_json j;
    j["mode"] = row.mode;
    j["length"] = row.length ? nlohmann::ordered_json(*row.length) : nlohmann::ordered_json();
    j["k"] = table.k;
    j["ndcg_mean"] = row.ndcg_mean;
    j["ndcg_stddev"] = row.ndcg_stddev;
    j["hr_mean"] = row.hr_mean;
    j["hr_stddev"] = row.hr_stddev;
    j["mean_length"] = row.length_mean;
    j["completed"] = row.completed;
    j["runs"] = row.cells.size();
    j["config_hash"] = table.config_hash;
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& cell : row.cells) {
      nlohmann::ordered_json c;
      c["seed"] = cell.seed;
      c["failed"] = cell.failed;
      if (cell.failed) c["error"] = cell.error;
      c["ndcg"] = cell.ndcg;
      c["hr"] = cell.hr;
      c["mean_length"] = cell.mean_length;
      cells.push_back(c);
    }
    j["cells"] = cells;
    out << j.dump() << '\n';
  }
}

void write_fixed_series(std::ostream& out, const ComparisonTable& table) {
  for (const auto& row : table.rows) {
    if (row.length) out << *row.length << '\t' << row.ndcg_mean << '\n';
  }
}

void write_adaptive_series(std::ostream& out, const ComparisonTable& table) {
  for (const auto& row : table.rows) {
    if (row.length) out << *row.length << '\t' << table.adaptive().ndcg_mean << '\n';
  }
}

}  // namespace sar::eval
