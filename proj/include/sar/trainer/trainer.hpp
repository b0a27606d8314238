#pragma once

#include "sar/data/dataset.hpp"
#include "sar/model/sar_model.hpp"
#include "sar/numcore/adam.hpp"
#include "sar/numcore/rng.hpp"
#include "sar/trainer/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace sar {

// L_r · q with q treated as a constant: no gradient reaches the critic.
nc::Tensor joint_loss(const nc::Tensor& recommendation_loss, const nc::Tensor& q);
double joint_loss(double recommendation_loss, double q);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  std::size_t transitions = 0;
  double recommendation_loss = 0.0;  // mean cross-entropy
  double joint_loss = 0.0;
  double critic_loss = 0.0;      // mean (y − Q)²
  double actor_objective = 0.0;  // mean Q(s, actor(s))
  double mean_reward = 0.0;
  double mean_length = 0.0;
  double length_stddev = 0.0;
  double exploration_sigma = 0.0;
  double val_ndcg10 = 0.0;
  double val_hr10 = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_ndcg10 = 0.0;
  std::size_t parameter_count = 0;
  std::string config_hash;
  double wall_seconds = 0.0;  // not part of the serialized records
};

// Owns the model and the three optimizer groups (recommender, critic +
// encoder, actor), each with its own Adam moments.
class Trainer {
 public:
  Trainer(const Config& config, const data::SplitDataset& dataset);

  // One pass over the users in a seeded shuffle; `epoch` is 1-based and
  // drives the exploration schedule. Throws NumericError on a non-finite loss.
  EpochRecord train_epoch(std::size_t epoch);
  // Validation NDCG@10 / HR@10 on val_item.
  void validate(EpochRecord& record) const;
  // Full loop with per-epoch validation; leaves the best-validation weights
  // in the model.
  TrainReport train();

  const SarModel& model() const { return model_; }
  SarModel& model() { return model_; }
  const Config& config() const { return config_; }
  double exploration_sigma(std::size_t epoch) const;

 private:
  struct Batch;
  void update(const Batch& batch, double sigma, nc::Rng& rng, EpochRecord& sums,
              std::vector<double>& lengths);

  Config config_;
  const data::SplitDataset& dataset_;
  SarModel model_;
  nc::Adam recommender_opt_;
  nc::Adam critic_opt_;
  nc::Adam actor_opt_;
  nc::Rng rng_;
};

// One JSON object per epoch in field order: epoch, transitions,
// recommendation_loss, joint_loss, critic_loss, actor_objective, mean_reward,
// mean_length, length_stddev, exploration_sigma, val_ndcg10, val_hr10;
// then a summary object.
void write_report_jsonl(std::ostream& out, const TrainReport& report);
void write_report_table(std::ostream& out, const TrainReport& report);

}  // namespace sar
