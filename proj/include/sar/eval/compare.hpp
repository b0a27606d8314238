#pragma once

#include "sar/data/dataset.hpp"
#include "sar/eval/evaluate.hpp"
#include "sar/trainer/config.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sar::eval {

struct CompareOptions {
  std::vector<std::size_t> lengths;  // fixed-length grid
  std::size_t repeats = 1;           // seeds base_seed, base_seed + 1, ...
  std::size_t k = 10;
  Split split = Split::kTest;
  std::size_t workers = 1;  // cells trained concurrently
};

struct CellResult {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double ndcg = 0.0;
  double hr = 0.0;
  double mean_length = 0.0;
  std::vector<UserResult> per_user;
};

struct ComparisonRow {
  std::string mode;                   // "fixed" or "adaptive"
  std::optional<std::size_t> length;  // set for fixed rows
  std::vector<CellResult> cells;
  std::size_t completed = 0;
  double ndcg_mean = 0.0, ndcg_stddev = 0.0;
  double hr_mean = 0.0, hr_stddev = 0.0;
  double length_mean = 0.0;
  // Chosen length per user averaged over completed runs (indexed like the
  // dataset's users).
  std::vector<double> user_length_mean;

  std::string label() const;
};

struct ComparisonTable {
  std::size_t k = 10;
  std::string config_hash;
  std::vector<ComparisonRow> rows;  // fixed rows in grid order, adaptive last

  const ComparisonRow& adaptive() const { return rows.back(); }
};

// Trains fixed(l) for every l in the grid plus the adaptive model, each
// `repeats` times, and evaluates every run on the chosen split. A cell that
// throws is marked failed; the study continues.
ComparisonTable compare_lengths(const data::SplitDataset& dataset, const Config& base,
                                const CompareOptions& options);

void write_comparison_table(std::ostream& out, const ComparisonTable& table);
void write_comparison_jsonl(std::ostream& out, const ComparisonTable& table);
// Two columns, l and NDCG@K, for the fixed rows.
void write_fixed_series(std::ostream& out, const ComparisonTable& table);
// The adaptive result as a constant line over the same l values.
void write_adaptive_series(std::ostream& out, const ComparisonTable& table);

}  // namespace sar::eval
