#include "sar/eval/cli.hpp"

#include "sar/data/dataset.hpp"
#include "sar/data/synthetic.hpp"
#include "sar/errors.hpp"
#include "sar/eval/compare.hpp"
#include "sar/eval/evaluate.hpp"
#include "sar/eval/gradcheck_suite.hpp"
#include "sar/model/checkpoint.hpp"
#include "sar/trainer/config.hpp"
#include "sar/trainer/trainer.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace sar {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
};

Config load_config(const Common& common) {
  Config config = common.config_path.empty() ? Config{} : Config::load(common.config_path);
  for (const auto& kv : common.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + kv + "' is not key=value");
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  config.validate();
  return config;
}

fs::path run_directory(const Common& common, const Config& config) {
  const fs::path dir = fs::path(common.out_dir) / config.hash();
  fs::create_directories(dir);
  std::ofstream(dir / "config.cfg") << config.canonical();
  return dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

void add_common(CLI::App* cmd, Common& common, bool needs_config) {
  auto* opt = cmd->add_option("-c,--config", common.config_path, "key=value config file");
  if (needs_config) opt->required();
  cmd->add_option("-s,--set", common.overrides, "override a config key (key=value)");
  cmd->add_option("-o,--out", common.out_dir, "output root; results go to <out>/<config hash>/");
}

data::SplitDataset load_split(const std::string& path) {
  return data::leave_one_out(data::load_tsv(path));
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sequence-adaptive recommender: training and evaluation tool"};
  app.require_subcommand(1);

  Common common;
  std::string data_path;
  std::string checkpoint_path;
  std::string split = "test";
  std::vector<std::size_t> ks;
  std::vector<std::size_t> lengths{2, 5, 20, 50};
  std::size_t repeats = 3;
  std::size_t workers = 1;
  std::size_t instances = 100;
  std::uint64_t seed = 1;
  std::vector<std::string> ops;
  double step = 1e-3;

  auto* ingest = app.add_subcommand("ingest", "normalize a user/item/timestamp TSV");
  add_common(ingest, common, false);
  ingest->add_option("-d,--data", data_path, "input TSV")->required();

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus from the synth_* keys");
  add_common(synth, common, false);

  auto* train = app.add_subcommand("train", "train a model and write a checkpoint and report");
  add_common(train, common, true);
  train->add_option("-d,--data", data_path, "dataset TSV")->required();

  auto* evaluate = app.add_subcommand("evaluate", "rank the full catalog for every user");
  add_common(evaluate, common, true);
  evaluate->add_option("-d,--data", data_path, "dataset TSV")->required();
  evaluate->add_option("--checkpoint", checkpoint_path,
                       "checkpoint file (default <out>/<config hash>/checkpoint.bin)");
  evaluate->add_option("--split", split, "val or test")->check(CLI::IsMember({"val", "test"}));
  evaluate->add_option("-k,--ks", ks, "cutoffs (default: eval_ks)")->delimiter(',');

  auto* compare = app.add_subcommand("compare", "fixed lengths against the adaptive model");
  add_common(compare, common, true);
  compare->add_option("-d,--data", data_path, "dataset TSV")->required();
  compare->add_option("-l,--lengths", lengths, "fixed-length grid")->delimiter(',');
  compare->add_option("-r,--repeats", repeats, "seeds per cell");
  compare->add_option("-w,--workers", workers, "cells trained concurrently");
  compare->add_option("--split", split, "val or test")->check(CLI::IsMember({"val", "test"}));

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  gradcheck->add_option("-n,--instances", instances, "instances per operation");
  gradcheck->add_option("--seed", seed, "generator seed");
  gradcheck->add_option("--step", step, "finite-difference step");
  gradcheck->add_option("--op", ops, "restrict to these operations");
  gradcheck->add_option("-o,--out", common.out_dir, "output root");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*ingest) {
      const Config config = load_config(common);
      const data::Dataset dataset = data::load_tsv(data_path);
      const fs::path dir = run_directory(common, config);
      data::write_tsv(dataset, dir / "dataset.tsv");
      data::write_stats(dataset, dir / "stats.txt");
      out << dataset.catalog.num_users() << " users, " << dataset.catalog.num_items()
          << " items -> " << dir.string() << '\n';
    } else if (*synth) {
      const Config config = load_config(common);
      const auto corpus = data::generate_synthetic(config.synthetic);
      const fs::path dir = run_directory(common, config);
      data::write_tsv(corpus.dataset, dir / "data.tsv");
      data::write_stats(corpus.dataset, dir / "stats.txt");
      data::write_windows(corpus, dir / "windows.tsv");
      out << "synthetic corpus -> " << (dir / "data.tsv").string() << '\n';
    } else if (*train) {
      const Config config = load_config(common);
      const auto dataset = load_split(data_path);
      const fs::path dir = run_directory(common, config);
      Trainer trainer(config, dataset);
      const TrainReport report = trainer.train();
      model::save_checkpoint(dir / "checkpoint.bin", trainer.model().named_parameters());
      auto jsonl = open_output(dir / "report.jsonl");
      write_report_jsonl(jsonl, report);
      auto table = open_output(dir / "report.txt");
      write_report_table(table, report);
      open_output(dir / "timing.txt") << "train_seconds=" << report.wall_seconds << '\n';
      write_report_table(out, report);
      out << "run directory " << dir.string() << '\n';
    } else if (*evaluate) {
      const auto start = std::chrono::steady_clock::now();
      const Config config = load_config(common);
      const auto dataset = load_split(data_path);
      const fs::path dir = run_directory(common, config);
      const fs::path ckpt = checkpoint_path.empty() ? dir / "checkpoint.bin" : fs::path(checkpoint_path);
      SarModel model(config.model, dataset.num_users, dataset.num_items, config.train.seed);
      model.load_parameters(model::load_checkpoint(ckpt));
      std::optional<std::size_t> fixed;
      if (config.train.mode == TrainMode::kFixed) fixed = config.train.fixed_length;
      const auto which = split == "val" ? eval::Split::kVal : eval::Split::kTest;
      const auto& cutoffs = ks.empty() ? config.train.eval_ks : ks;
      auto report = eval::evaluate(model, dataset, which, cutoffs, fixed, config.train.workers);
      report.seed = config.train.seed;
      report.config_hash = config.hash();
      auto jsonl = open_output(dir / ("metrics_" + split + ".jsonl"));
      eval::write_metrics_jsonl(jsonl, report);
      auto table = open_output(dir / ("metrics_" + split + ".txt"));
      eval::write_metrics_table(table, report);
      open_output(dir / ("timing_" + split + ".txt"))
          << "evaluate_seconds=" << seconds_since(start) << '\n';
      eval::write_metrics_table(out, report);
    } else if (*compare) {
      const auto start = std::chrono::steady_clock::now();
      const Config config = load_config(common);
      const auto dataset = load_split(data_path);
      const fs::path dir = run_directory(common, config);
      eval::CompareOptions options;
      options.lengths = lengths;
      options.repeats = repeats;
      options.workers = workers;
      options.split = split == "val" ? eval::Split::kVal : eval::Split::kTest;
      const auto table = eval::compare_lengths(dataset, config, options);
      auto text = open_output(dir / "comparison.txt");
      eval::write_comparison_table(text, table);
      auto jsonl = open_output(dir / "comparison.jsonl");
      eval::write_comparison_jsonl(jsonl, table);
      auto series = open_output(dir / "series.tsv");
      eval::write_fixed_series(series, table);
      auto adaptive = open_output(dir / "adaptive_series.tsv");
      eval::write_adaptive_series(adaptive, table);
      auto user_lengths = open_output(dir / "user_lengths.tsv");
      const auto& row = table.adaptive();
      for (std::size_t i = 0; i < row.user_length_mean.size(); ++i) {
        user_lengths << dataset.users[i].user << '\t' << row.user_length_mean[i] << '\n';
      }
      open_output(dir / "timing.txt") << "compare_seconds=" << seconds_since(start) << '\n';
      eval::write_comparison_table(out, table);
    } else if (*gradcheck) {
      eval::GradCheckSuiteOptions options;
      options.instances = instances;
      options.seed = seed;
      options.step = step;
      const auto results = eval::run_gradcheck_suite(options, ops);
      eval::write_gradcheck_table(out, results);
      for (const auto& r : results) {
        if (!r.passed) {
          err << "gradcheck: " << r.op << " exceeded tolerance\n";
          return 3;
        }
      }
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const DomainError& e) {
    err << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace sar
