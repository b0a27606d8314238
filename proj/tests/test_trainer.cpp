#include "helpers.hpp"

#include "sar/agent/agent.hpp"
#include "sar/errors.hpp"
#include "sar/model/sar_model.hpp"
#include "sar/numcore/ops.hpp"
#include "sar/trainer/config.hpp"
#include "sar/trainer/trainer.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace sar;

namespace {

std::vector<std::vector<double>> values_of(const std::vector<nc::Tensor>& ts) {
  std::vector<std::vector<double>> out;
  for (const auto& t : ts) out.emplace_back(t.values().begin(), t.values().end());
  return out;
}

std::string jsonl(const TrainReport& r) {
  std::ostringstream s;
  write_report_jsonl(s, r);
  return s.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const Config c = Config::parse("# comment\nepochs = 7\n\nlr=0.01  # trailing\nmode = fixed\n"
                                 "fixed_length=5\neval_ks=1,5,10\nsynth_windows=2,20\n");
  CHECK(c.train.epochs == 7);
  CHECK(c.train.lr == 0.01);
  CHECK(c.train.mode == TrainMode::kFixed);
  CHECK(c.train.fixed_length == 5);
  CHECK(c.train.eval_ks == std::vector<std::size_t>{1, 5, 10});
  CHECK(c.synthetic.windows == std::vector<std::size_t>{2, 20});
  CHECK(c.rl.gamma == 0.82);
  CHECK(c.model.state_dim == 150);

  CHECK_THROWS_AS(Config::parse("epoch = 3\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("epochs = 3\nepochs = 4\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("epochs = three\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("epochs\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("mode = sometimes\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("gamma = 1.0\n").validate(), ConfigError);
  CHECK_THROWS_AS(Config::parse("item_dim = 50\n").validate(), ConfigError);
  CHECK_THROWS_AS(Config::load("/nonexistent/config.cfg"), ConfigError);
}

TEST_CASE("canonical form and hash") {
  const Config a = Config::parse("lr = 0.01\nepochs = 7\n");
  const Config b = Config::parse("epochs=7\n# same settings\nlr=1e-2\n");
  CHECK(a.canonical() == b.canonical());
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  CHECK(Config::parse(a.canonical()).canonical() == a.canonical());
  Config c = a;
  c.set("seed", "2");
  CHECK(c.hash() != a.hash());
  CHECK_THROWS_AS(c.set("nope", "1"), ConfigError);
}

TEST_CASE("joint loss") {
  CHECK(joint_loss(0.5, 2.0) == 1.0);
  CHECK(joint_loss(3.0, 0.0) == 0.0);
}

TEST_CASE("joint loss sends no gradient to the critic") {
  const Config config = test::tiny_config();
  SarModel model(config.model, 2, 30, 3);
  model.zero_grad();
  const std::vector<data::ItemId> items{2, 5, 9};
  nc::Tape tape;
  nc::TapeScope scope(&tape);
  const nc::Tensor state = model.encoder.encode(items);
  const nc::Tensor q = model.critic.q(state, nc::Tensor::scalar(2.0));
  const nc::Tensor ce = model::cross_entropy(
      model.recommender.probabilities(model.embeddings, std::span(items).last(2), 1), 4);
  const nc::Tensor loss = joint_loss(ce, q);
  CHECK(loss.item() == doctest::Approx(ce.item() * q.item()));
  tape.backward(loss);
  for (const auto& p : {model.critic.w1(), model.critic.w2()}) {
    for (double g : p.grad()) CHECK(g == 0.0);
  }
  double rec = 0.0;
  for (double g : model.recommender.recency().grad()) rec += std::abs(g);
  CHECK(rec > 0.0);
}

TEST_CASE("one epoch gives one record with finite fields") {
  Config config = test::tiny_config();
  config.train.epochs = 1;
  const auto data = test::tiny_split(config);
  Trainer trainer(config, data);
  const TrainReport report = trainer.train();
  REQUIRE(report.epochs.size() == 1);
  const auto& r = report.epochs[0];
  CHECK(r.epoch == 1);
  CHECK(r.transitions > 0);
  CHECK(std::isfinite(r.recommendation_loss));
  CHECK(r.mean_length >= 1.0);
  CHECK(report.best_epoch == 1);
  CHECK(report.parameter_count == trainer.model().parameter_count());
  CHECK(report.config_hash == config.hash());
}

TEST_CASE("exploration anneals to zero") {
  Config config = test::tiny_config();
  config.train.epochs = 5;
  config.rl.exploration_sigma = 4.0;
  const auto data = test::tiny_split(config);
  Trainer trainer(config, data);
  CHECK(trainer.exploration_sigma(1) == 4.0);
  CHECK(trainer.exploration_sigma(3) == doctest::Approx(2.0));
  CHECK(trainer.exploration_sigma(5) == 0.0);
}

TEST_CASE("zero learning rate leaves every parameter bitwise unchanged") {
  Config config = test::tiny_config();
  config.train.lr = 0.0;
  const auto data = test::tiny_split(config);
  Trainer trainer(config, data);
  const auto before = trainer.model().snapshot();
  trainer.train_epoch(1);
  CHECK(trainer.model().snapshot() == before);
}

TEST_CASE("fixed mode never touches the actor or critic") {
  Config config = test::tiny_config();
  config.train.mode = TrainMode::kFixed;
  config.train.fixed_length = 3;
  const auto data = test::tiny_split(config);
  Trainer trainer(config, data);
  const auto actor = values_of(trainer.model().actor_parameters());
  const auto critic = values_of(trainer.model().critic_parameters());
  const auto rec = values_of(trainer.model().recommender_parameters());
  const auto record = trainer.train_epoch(1);
  CHECK(values_of(trainer.model().actor_parameters()) == actor);
  CHECK(values_of(trainer.model().critic_parameters()) == critic);
  CHECK(values_of(trainer.model().recommender_parameters()) != rec);
  CHECK(record.joint_loss == doctest::Approx(record.recommendation_loss));
}

TEST_CASE("training is deterministic") {
  const Config config = test::tiny_config();
  const auto data = test::tiny_split(config);
  Trainer a(config, data);
  Trainer b(config, data);
  CHECK(jsonl(a.train()) == jsonl(b.train()));
  CHECK(a.model().snapshot() == b.model().snapshot());
}

TEST_CASE("report writers") {
  const Config config = test::tiny_config();
  const auto data = test::tiny_split(config);
  Trainer trainer(config, data);
  const TrainReport report = trainer.train();
  const std::string text = jsonl(report);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  CHECK(text.find("\"recommendation_loss\"") != std::string::npos);
  std::ostringstream table;
  write_report_table(table, report);
  CHECK(!table.str().empty());
}
