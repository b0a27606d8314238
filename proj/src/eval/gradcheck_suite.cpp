#include "sar/eval/gradcheck_suite.hpp"

#include "sar/agent/agent.hpp"
#include "sar/errors.hpp"
#include "sar/model/gated_attention.hpp"
#include "sar/model/recommender.hpp"
#include "sar/numcore/gradcheck.hpp"
#include "sar/numcore/ops.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <iomanip>
#include <ostream>

namespace sar::eval {

namespace {

using nc::Rng;
using nc::Tensor;

struct Instance {
  std::function<Tensor()> objective;
  std::vector<Tensor> leaves;
};

Tensor random_tensor(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from({rows, cols}, std::move(v), true);
}

std::size_t dim(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

// Random linear readout so every output coordinate matters.
std::function<Tensor()> readout(std::function<Tensor()> f, const nc::Shape& shape, Rng& rng) {
  const Tensor weights = random_tensor(shape.rows, shape.cols, rng).set_requires_grad(false);
  return [f = std::move(f), weights] { return nc::sum(nc::mul(f(), weights)); };
}

nc::Shape output_shape(const std::function<Tensor()>& f) {
  nc::TapeScope no_recording(nullptr);
  return f().shape();
}

Instance with_readout(std::function<Tensor()> f, std::vector<Tensor> leaves, Rng& rng) {
  const nc::Shape shape = output_shape(f);
  return {readout(std::move(f), shape, rng), std::move(leaves)};
}

// Jitters every leaf so gains and biases are not sitting at their init values.
void perturb(std::vector<Tensor>& leaves, Rng& rng, double amount) {
  for (Tensor& t : leaves) {
    for (double& v : t.mutable_values()) v += rng.uniform(-amount, amount);
  }
}

Instance matmul_instance(Rng& rng) {
  const std::size_t n = dim(rng, 1, 5), k = dim(rng, 1, 5), m = dim(rng, 1, 5);
  Tensor a = random_tensor(n, k, rng);
  if (rng.below(2) == 0) {
    Tensor b = random_tensor(k, m, rng);
    return with_readout([a, b] { return nc::matmul(a, b); }, {a, b}, rng);
  }
  Tensor b = random_tensor(m, k, rng);
  return with_readout([a, b] { return nc::matmul_transposed(a, b); }, {a, b}, rng);
}

Instance elementwise_instance(Rng& rng) {
  const std::size_t n = dim(rng, 1, 4), m = dim(rng, 1, 5);
  Tensor a = random_tensor(n, m, rng);
  Tensor b = random_tensor(n, m, rng);
  const double c = rng.uniform(-2.0, 2.0);
  switch (rng.below(13)) {
    case 0: return with_readout([a, b] { return nc::add(a, b); }, {a, b}, rng);
    case 1: return with_readout([a, b] { return nc::sub(a, b); }, {a, b}, rng);
    case 2: return with_readout([a, b] { return nc::mul(a, b); }, {a, b}, rng);
    case 3: return with_readout([a] { return nc::neg(a); }, {a}, rng);
    case 4: return with_readout([a, c] { return nc::scale(a, c); }, {a}, rng);
    case 5: return with_readout([a, c] { return nc::add_constant(a, c); }, {a}, rng);
    case 6: return with_readout([a] { return nc::relu(a); }, {a}, rng);
    case 7: return with_readout([a] { return nc::sigmoid(nc::scale(a, 3.0)); }, {a}, rng);
    case 8: return with_readout([a] { return nc::tanh(nc::scale(a, 2.0)); }, {a}, rng);
    case 9: {
      Tensor p = random_tensor(n, m, rng, 0.5, 2.0);
      return with_readout([p] { return nc::log(p); }, {p}, rng);
    }
    case 10: {
      Tensor bias = random_tensor(1, m, rng);
      return with_readout([a, bias] { return nc::add_row(a, bias); }, {a, bias}, rng);
    }
    case 11: {
      std::vector<double> lo(n * m), hi(n * m);
      for (std::size_t i = 0; i < lo.size(); ++i) {
        lo[i] = rng.uniform(-1.0, 0.0);
        hi[i] = lo[i] + rng.uniform(0.2, 1.5);
      }
      return with_readout([a, lo, hi] { return nc::clamp(a, lo, hi); }, {a}, rng);
    }
    default: {
      Tensor s = random_tensor(1, 1, rng);
      return with_readout([a, s] { return nc::mul(a, s); }, {a, s}, rng);
    }
  }
}

Instance softmax_instance(Rng& rng) {
  if (rng.below(2) == 0) {
    Tensor x = random_tensor(dim(rng, 1, 4), dim(rng, 2, 6), rng, -2.0, 2.0);
    return with_readout([x] { return nc::softmax(x); }, {x}, rng);
  }
  const std::size_t t = dim(rng, 1, 5);
  Tensor x = random_tensor(t, t, rng, -2.0, 2.0);
  return with_readout([x] { return nc::causal_softmax(x); }, {x}, rng);
}

Instance layer_norm_instance(Rng& rng) {
  const std::size_t n = dim(rng, 1, 4), m = dim(rng, 2, 6);
  Tensor x = random_tensor(n, m, rng);
  Tensor gain = random_tensor(1, m, rng, 0.5, 1.5);
  Tensor bias = random_tensor(1, m, rng);
  return with_readout([x, gain, bias] { return nc::layer_norm(x, gain, bias); }, {x, gain, bias},
                      rng);
}

Instance indexing_instance(Rng& rng) {
  const std::size_t n = dim(rng, 2, 5), m = dim(rng, 1, 4);
  Tensor table = random_tensor(n, m, rng);
  Tensor other = random_tensor(n, dim(rng, 1, 3), rng);
  std::vector<std::size_t> ids(dim(rng, 1, 6));
  for (auto& id : ids) id = rng.below(n);
  const std::size_t begin = rng.below(n);
  const std::size_t r = rng.below(n), c = rng.below(m);
  return with_readout(
      [=] {
        const Tensor gathered = nc::gather_rows(table, ids);
        const Tensor joined = nc::concat_cols(table, other);
        const Tensor rows = nc::slice_rows(joined, begin, n - begin);
        const Tensor cols = nc::slice_cols(rows, 0, m);
        return nc::add(nc::sum(nc::mul(gathered, gathered)),
                       nc::add(nc::mean(cols), nc::mul(nc::pick(table, r, c), nc::transpose(
                                                                             nc::pick(other, 0, 0)))));
      },
      {table, other}, rng);
}

std::vector<Tensor> block_leaves(const model::BlockParams& block) {
  std::vector<nc::NamedTensor> named;
  model::append_parameters(block, "block", named);
  std::vector<Tensor> out;
  for (auto& n : named) out.push_back(n.tensor);
  return out;
}

Instance gated_block_instance(Rng& rng) {
  const std::size_t width = dim(rng, 2, 5), ff = dim(rng, 2, 6), t = dim(rng, 1, 5);
  const model::BlockParams block = model::make_block({width, ff}, rng.uniform(-1.0, 1.0), rng);
  std::vector<Tensor> leaves = block_leaves(block);
  perturb(leaves, rng, 0.3);
  Tensor x = random_tensor(t, width, rng);
  leaves.push_back(x);
  const bool last_only = rng.below(2) == 0;
  return with_readout([block, x, last_only] { return model::gated_attention_block(block, x, last_only); },
                      std::move(leaves), rng);
}

Instance actor_instance(Rng& rng) {
  const std::size_t d_s = dim(rng, 2, 6), d_a = dim(rng, 2, 6), n = dim(rng, 1, 4);
  agent::Actor actor(d_s, d_a, rng.uniform(1.0, 8.0), rng);
  Tensor states = random_tensor(n, d_s, rng);
  return with_readout([actor, states] { return actor.raw(states); },
                      {actor.w1(), actor.w2(), states}, rng);
}

Instance critic_instance(Rng& rng) {
  const std::size_t d_s = dim(rng, 2, 6), d_c = dim(rng, 2, 6), n = dim(rng, 1, 4);
  agent::Critic critic(d_s, d_c, dim(rng, 5, 50), rng);
  Tensor states = random_tensor(n, d_s, rng);
  Tensor actions = random_tensor(n, 1, rng, 0.0, 10.0);
  return with_readout([critic, states, actions] { return critic.q(states, actions); },
                      {critic.w1(), critic.w2(), states, actions}, rng);
}

struct TinyRecommender {
  model::EmbeddingTable emb;
  model::Recommender rec;
  std::vector<data::ItemId> window;
  data::UserId user = 0;
  std::vector<Tensor> leaves;
};

TinyRecommender tiny_recommender(Rng& rng) {
  TinyRecommender r;
  const std::size_t d = dim(rng, 2, 4), items = dim(rng, 3, 9), users = dim(rng, 1, 3);
  const std::size_t max_length = 6;
  r.emb = model::EmbeddingTable::create(items, users, d, max_length, rng);
  r.rec = model::Recommender({d, d, dim(rng, 2, 6), 1, max_length, 0.0}, rng);
  r.window.resize(dim(rng, 1, max_length));
  for (auto& i : r.window) i = rng.below(items);
  r.user = rng.below(users);
  std::vector<nc::NamedTensor> named{{"item", r.emb.item}, {"user", r.emb.user}};
  r.rec.append_parameters(named);
  for (auto& n : named) r.leaves.push_back(n.tensor);
  perturb(r.leaves, rng, 0.5);
  return r;
}

Instance recommender_instance(Rng& rng) {
  TinyRecommender r = tiny_recommender(rng);
  auto leaves = r.leaves;
  return with_readout([r] { return r.rec.logits(r.emb, r.window, r.user); }, std::move(leaves),
                      rng);
}

Instance cross_entropy_instance(Rng& rng) {
  if (rng.below(2) == 0) {
    Tensor x = random_tensor(1, dim(rng, 2, 10), rng, -3.0, 3.0);
    const std::size_t truth = rng.below(x.cols());
    return {[x, truth] { return model::cross_entropy(nc::softmax(x), truth); }, {x}};
  }
  TinyRecommender r = tiny_recommender(rng);
  const std::size_t truth = rng.below(r.emb.item.rows());
  auto leaves = r.leaves;
  return {[r, truth] {
            return model::cross_entropy(r.rec.probabilities(r.emb, r.window, r.user), truth);
          },
          std::move(leaves)};
}

using Generator = Instance (*)(Rng&);

const std::vector<std::pair<std::string, Generator>>& generators() {
  static const std::vector<std::pair<std::string, Generator>> table{
      {"matmul", matmul_instance},
      {"elementwise", elementwise_instance},
      {"softmax", softmax_instance},
      {"layer_norm", layer_norm_instance},
      {"indexing", indexing_instance},
      {"gated_attention_block", gated_block_instance},
      {"actor", actor_instance},
      {"critic", critic_instance},
      {"recommender_scoring", recommender_instance},
      {"cross_entropy", cross_entropy_instance},
  };
  return table;
}

}  // namespace

std::vector<std::string> gradcheck_operations() {
  std::vector<std::string> names;
  for (const auto& [name, gen] : generators()) names.push_back(name);
  return names;
}

std::vector<OpGradCheck> run_gradcheck_suite(const GradCheckSuiteOptions& options,
                                             const std::vector<std::string>& only) {
  for (const auto& name : only) {
    const auto names = gradcheck_operations();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw ConfigError("unknown gradcheck operation '" + name + "'");
    }
  }
  std::vector<OpGradCheck> results;
  const Rng root(options.seed);
  std::uint64_t stream = 0;
  for (const auto& [name, generate] : generators()) {
    ++stream;
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    OpGradCheck result;
    result.op = name;
    Rng rng = root.split(stream);
    while (result.instances < options.instances) {
      Instance instance = generate(rng);
      nc::GradCheckOptions gc;
      gc.step = options.step;
      gc.seed = rng.next_u64();
      const auto check = nc::check_gradients(instance.objective, instance.leaves, gc);
      if (!check.smooth) {
        if (++result.resampled > options.max_resamples) break;
        continue;
      }
      result.max_rel_error = std::max(result.max_rel_error, check.max_rel_error);
      ++result.instances;
    }
    result.passed = result.instances == options.instances && result.max_rel_error < options.tolerance;
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    results.push_back(result);
  }
  return results;
}

void write_gradcheck_table(std::ostream& out, const std::vector<OpGradCheck>& results) {
  out << std::left << std::setw(24) << "operation" << std::setw(11) << "instances" << std::setw(11)
      << "resampled" << std::setw(14) << "max rel err" << "status\n";
  for (const auto& r : results) {
    out << std::left << std::setw(24) << r.op << std::setw(11) << r.instances << std::setw(11)
        << r.resampled << std::setw(14) << std::scientific << std::setprecision(3) << r.max_rel_error
        << (r.passed ? "ok" : "FAIL") << '\n';
    out.unsetf(std::ios::floatfield);
  }
}

}  // namespace sar::eval
