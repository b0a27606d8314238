#include "sar/errors.hpp"
#include "sar/numcore/adam.hpp"
#include "sar/numcore/gradcheck.hpp"
#include "sar/numcore/ops.hpp"
#include "sar/numcore/rng.hpp"
#include "sar/numcore/tensor.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace sar;
using namespace sar::nc;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool grad = true) {
  std::vector<double> v(shape.size());
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor::from(shape, std::move(v), grad);
}

// Central differences at step h, compared coordinate-wise against backward().
double fd_error(const std::function<Tensor()>& f, std::vector<Tensor> leaves, double h) {
  for (auto& leaf : leaves) leaf.zero_grad();
  {
    Tape tape;
    TapeScope scope(&tape);
    tape.backward(f());
  }
  double worst = 0.0;
  for (auto& leaf : leaves) {
    auto values = leaf.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double x = values[i];
      values[i] = x + h;
      double up = 0.0, down = 0.0;
      {
        TapeScope off(nullptr);
        up = f().item();
        values[i] = x - h;
        down = f().item();
      }
      values[i] = x;
      const double numeric = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(numeric - leaf.grad()[i]));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("matmul identity and a hand-computed product") {
  const Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
  const Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  const Tensor p = matmul(a, eye);
  for (std::size_t i = 0; i < 4; ++i) CHECK(p.values()[i] == a.values()[i]);
  CHECK(matmul(Tensor::row({1, 2}), Tensor::from({2, 1}, {3, 4})).item() == 11.0);
  CHECK_THROWS_AS(matmul(a, Tensor::row({1, 2})), ShapeError);
}

TEST_CASE("elementwise values") {
  const Tensor r = relu(Tensor::row({-1, 0, 2}));
  CHECK(r.values()[0] == 0.0);
  CHECK(r.values()[1] == 0.0);
  CHECK(r.values()[2] == 2.0);
  CHECK(sigmoid(Tensor::scalar(0.0)).item() == 0.5);
  const Tensor c = clamp(Tensor::row({-3, 2, 9}), std::vector<double>{1, 1, 1},
                         std::vector<double>{5, 5, 5});
  CHECK(c.values()[0] == 1.0);
  CHECK(c.values()[1] == 2.0);
  CHECK(c.values()[2] == 5.0);
}

TEST_CASE("softmax of equal and extreme logits") {
  const Tensor u = softmax(Tensor::row({0, 0, 0}));
  for (double v : u.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const Tensor e = softmax(Tensor::row({1000, 0}));
  CHECK(e.values()[0] == doctest::Approx(1.0));
  CHECK(e.values()[1] >= 0.0);
  CHECK(e.values()[1] < 1e-300);
}

TEST_CASE("backward of sum gives ones; x*x at 3 gives 6") {
  Tensor x = Tensor::row({1, 2, 3}, true);
  {
    Tape tape;
    TapeScope scope(&tape);
    tape.backward(sum(x));
  }
  for (double g : x.grad()) CHECK(g == 1.0);

  Tensor y = Tensor::scalar(3.0, true);
  Tape tape;
  TapeScope scope(&tape);
  tape.backward(mul(y, y));
  CHECK(y.grad()[0] == 6.0);
}

TEST_CASE("tape misuse is reported") {
  Tensor x = Tensor::row({1, 2}, true);
  Tape tape;
  TapeScope scope(&tape);
  const Tensor s = sum(x);
  tape.backward(s);
  CHECK_THROWS_AS(tape.backward(s), ContractError);

  Tape other;
  TapeScope inner(&other);
  CHECK_THROWS_AS(other.backward(mul(x, x)), ContractError);
}

TEST_CASE("domain and numeric errors") {
  CHECK_THROWS_AS(log(Tensor::row({1.0, 0.0})), DomainError);
  CHECK_THROWS_AS(log(Tensor::row({-2.0})), DomainError);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(add(Tensor::row({nan}), Tensor::row({1.0})), NumericError);
  CHECK_THROWS_AS(scale(Tensor::row({1e308}), 1e10), NumericError);
}

TEST_CASE("finite-difference oracle: matmul, mul, softmax") {
  Rng rng(11);
  {
    Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng);
    const Tensor w = random_tensor({3, 2}, rng, false);
    CHECK(fd_error([&] { return sum(mul(matmul(a, b), w)); }, {a, b}, 1e-5) < 1e-6);
  }
  {
    Tensor a = random_tensor({1, 5}, rng), b = random_tensor({1, 5}, rng);
    CHECK(fd_error([&] { return sum(mul(mul(a, b), a)); }, {a, b}, 1e-5) < 1e-6);
  }
  {
    Tensor x = random_tensor({1, 6}, rng);
    const Tensor w = random_tensor({1, 6}, rng, false);
    CHECK(fd_error([&] { return sum(mul(softmax(x), w)); }, {x}, 1e-5) < 1e-5);
  }
}

TEST_CASE("finite-difference oracle: actor-shaped MLP") {
  Rng rng(12);
  Tensor s = random_tensor({1, 8}, rng), w1 = random_tensor({8, 4}, rng);
  Tensor w2 = random_tensor({4, 1}, rng);
  for (double& v : w2.mutable_values()) v = std::abs(v) + 0.1;  // away from the ReLU kink
  const auto f = [&] { return sum(relu(matmul(sigmoid(matmul(s, w1)), w2))); };
  CHECK(fd_error(f, {s, w1, w2}, 1e-5) < 1e-4);
  const auto result = check_gradients(f, {s, w1, w2});
  CHECK(result.smooth);
  CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("clamp passes gradient only inside the bounds") {
  Tensor x = Tensor::row({0.0, 2.0, 7.0}, true);
  Tape tape;
  TapeScope scope(&tape);
  tape.backward(sum(clamp(x, std::vector<double>{1, 1, 1}, std::vector<double>{5, 5, 5})));
  CHECK(x.grad()[0] == 0.0);
  CHECK(x.grad()[1] == 1.0);
  CHECK(x.grad()[2] == 0.0);
}

TEST_CASE("gather_rows scatter-adds repeated ids") {
  Tensor table = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6}, true);
  const std::size_t ids[] = {2, 0, 2};
  Tape tape;
  TapeScope scope(&tape);
  const Tensor g = gather_rows(table, ids);
  CHECK(g(0, 0) == 5.0);
  CHECK(g(1, 1) == 2.0);
  tape.backward(sum(g));
  CHECK(table.grad()[0] == 1.0);
  CHECK(table.grad()[2] == 0.0);
  CHECK(table.grad()[4] == 2.0);
}

TEST_CASE("causal softmax masks the future") {
  const Tensor p = causal_softmax(Tensor::from({2, 2}, {0, 5, 1, 1}));
  CHECK(p(0, 0) == 1.0);
  CHECK(p(0, 1) == 0.0);
  CHECK(p(1, 0) == doctest::Approx(0.5));
}

TEST_CASE("Adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Tensor w = Tensor::row({1.5, -2.0}, true);
    Adam adam({w}, {});
    w.zero_grad();
    adam.step();
    CHECK(w.values()[0] == 1.5);
    CHECK(w.values()[1] == -2.0);
  }
  SUBCASE("first step moves each coordinate by about lr") {
    Tensor w = Tensor::row({1.0, 1.0}, true);
    Adam adam({w}, {.lr = 0.01});
    w.mutable_grad()[0] = 3.0;
    w.mutable_grad()[1] = -0.2;
    adam.step();
    CHECK(w.values()[0] == doctest::Approx(0.99).epsilon(1e-6));
    CHECK(w.values()[1] == doctest::Approx(1.01).epsilon(1e-6));
  }
  SUBCASE("minimizes a quadratic") {
    Tensor w = Tensor::scalar(0.0, true);
    Adam adam({w}, {.lr = 0.1});
    for (int i = 0; i < 200; ++i) {
      adam.zero_grad();
      Tape tape;
      TapeScope scope(&tape);
      const Tensor d = add_constant(w, -3.0);
      tape.backward(mul(d, d));
      adam.step();
    }
    CHECK(std::abs(w.item() - 3.0) < 0.05);
  }
  SUBCASE("missing gradient buffer throws") {
    Tensor w = Tensor::row({1.0}, true);
    Adam adam({w}, {});
    CHECK_THROWS_AS(adam.step(), ContractError);
  }
}

TEST_CASE("Rng determinism, splitting and moments") {
  Rng a(5), b(5), c(6);
  bool differs = false;
  for (int i = 0; i < 16; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs |= x != c.next_u64();
  }
  CHECK(differs);
  CHECK(Rng(5).split(3).next_u64() == Rng(5).split(3).next_u64());
  CHECK(Rng(5).split(3).next_u64() != Rng(5).split(4).next_u64());

  Rng rng(99);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  std::vector<int> bins(10, 0);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK_UNARY(u >= 0.0);
    CHECK_UNARY(u < 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
    ++bins[rng.below(10)];
  }
  CHECK(std::abs(su / n - 0.5) < 0.005);
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(std::abs(sn2 / n - 1.0) < 0.02);
  for (int b : bins) CHECK(std::abs(b / double(n) - 0.1) < 0.005);
}
