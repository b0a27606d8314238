#pragma once

#include "sar/data/synthetic.hpp"
#include "sar/trainer/config.hpp"

namespace sar::test {

// A model small enough for unit tests.
inline ModelConfig tiny_model() {
  ModelConfig m;
  m.item_dim = m.user_dim = m.encoder_hidden = 8;
  m.encoder_ff = m.recommender_ff = 16;
  m.state_dim = 12;
  m.max_length = 16;
  m.actor_hidden = m.critic_hidden = 6;
  return m;
}

inline Config tiny_config() {
  Config c;
  c.model = tiny_model();
  c.train.epochs = 2;
  c.train.batch_size = 32;
  c.train.lr = 5e-3;
  c.synthetic.num_users = 12;
  c.synthetic.num_items = 30;
  c.synthetic.min_length = 6;
  c.synthetic.max_length = 12;
  return c;
}

inline data::SplitDataset tiny_split(const Config& c) {
  return data::leave_one_out(data::generate_synthetic(c.synthetic).dataset);
}

}  // namespace sar::test
