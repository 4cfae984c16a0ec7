#include <gtest/gtest.h>

#include "goalseq/autodiff.hpp"
#include "goalseq/nn.hpp"
#include "support/oracles.hpp"

#include <functional>
#include <vector>

namespace goalseq {
namespace {

using Op = std::function<ad::Var(std::span<const ad::Var>)>;

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double lo = -1.5, double hi = 1.5) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = lo + (hi - lo) * rng.uniform();
  return m;
}

/// Max relative gap between tape gradients and central differences of
/// sum(op(inputs) .* W) for a fixed random W.
double op_gradient_gap(const Op& op, std::vector<Matrix> inputs, std::uint64_t seed) {
  Rng rng(seed);
  Matrix weights;
  auto eval = [&](const std::vector<Matrix>& xs, std::vector<Matrix>* grads) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& x : xs) vars.push_back(tape.variable(x));
    ad::Var out = op(vars);
    if (weights.size() == 0) weights = random_matrix(out.rows(), out.cols(), rng);
    ad::Var loss = ad::sum(ad::mul(out, tape.constant(weights)));
    if (grads) {
      tape.backward(loss);
      for (const auto& v : vars) grads->push_back(tape.grad(v));
    }
    return loss.scalar();
  };
  std::vector<Matrix> analytic;
  eval(inputs, &analytic);
  double worst = 0.0;
  const double h = 1e-5;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (Eigen::Index k = 0; k < inputs[i].size(); ++k) {
      const double orig = inputs[i].data()[k];
      inputs[i].data()[k] = orig + h;
      const double up = eval(inputs, nullptr);
      inputs[i].data()[k] = orig - h;
      const double down = eval(inputs, nullptr);
      inputs[i].data()[k] = orig;
      worst = std::max(worst, oracle::relative_gap(analytic[i].data()[k], (up - down) / (2 * h)));
    }
  }
  return worst;
}

struct OpCase {
  const char* name;
  Op op;
  std::vector<std::pair<int, int>> shapes;
  bool positive = false;
};

TEST(Autodiff, EveryOpMatchesFiniteDifferences) {
  const std::vector<int> picks{2, 0, 1};
  const std::vector<int> rows{1, 0, 2, 1};
  const std::vector<OpCase> cases = {
      {"add", [](auto v) { return ad::add(v[0], v[1]); }, {{3, 2}, {3, 2}}},
      {"sub", [](auto v) { return ad::sub(v[0], v[1]); }, {{3, 2}, {3, 2}}},
      {"mul", [](auto v) { return ad::mul(v[0], v[1]); }, {{3, 2}, {3, 2}}},
      {"matmul", [](auto v) { return ad::matmul(v[0], v[1]); }, {{3, 4}, {4, 2}}},
      {"add_row", [](auto v) { return ad::add_row(v[0], v[1]); }, {{3, 4}, {1, 4}}},
      {"mul_col", [](auto v) { return ad::mul_col(v[0], v[1]); }, {{3, 4}, {3, 1}}},
      {"scale", [](auto v) { return ad::scale(v[0], -1.7); }, {{2, 3}}},
      {"add_scalar", [](auto v) { return ad::add_scalar(v[0], 0.3); }, {{2, 3}}},
      {"neg", [](auto v) { return ad::neg(v[0]); }, {{2, 3}}},
      {"sigmoid", [](auto v) { return ad::sigmoid(v[0]); }, {{2, 3}}},
      {"tanh", [](auto v) { return ad::tanh(v[0]); }, {{2, 3}}},
      {"exp", [](auto v) { return ad::exp(v[0]); }, {{2, 3}}},
      {"log", [](auto v) { return ad::log(v[0]); }, {{2, 3}}, true},
      {"square", [](auto v) { return ad::square(v[0]); }, {{2, 3}}},
      {"softplus", [](auto v) { return ad::softplus(v[0]); }, {{2, 3}}},
      {"log_sigmoid", [](auto v) { return ad::log_sigmoid(v[0]); }, {{2, 3}}},
      {"sum", [](auto v) { return ad::sum(v[0]); }, {{2, 3}}},
      {"mean", [](auto v) { return ad::mean(v[0]); }, {{2, 3}}},
      {"row_sum", [](auto v) { return ad::row_sum(v[0]); }, {{2, 3}}},
      {"slice_cols", [](auto v) { return ad::slice_cols(v[0], 1, 2); }, {{2, 4}}},
      {"concat_cols", [](auto v) { return ad::concat_cols(v); }, {{2, 1}, {2, 3}}},
      {"gather_rows", [&rows](auto v) { return ad::gather_rows(v[0], rows); }, {{3, 2}}},
      {"pick", [&picks](auto v) { return ad::pick(v[0], picks); }, {{3, 4}}},
      {"log_softmax_rows", [](auto v) { return ad::log_softmax_rows(v[0]); }, {{3, 4}}},
      {"softmax_rows", [](auto v) { return ad::softmax_rows(v[0]); }, {{3, 4}}},
  };
  Rng rng(5);
  for (const auto& c : cases) {
    std::vector<Matrix> inputs;
    for (auto [r, k] : c.shapes) inputs.push_back(c.positive ? random_matrix(r, k, rng, 0.2, 2.0) : random_matrix(r, k, rng));
    EXPECT_LT(op_gradient_gap(c.op, inputs, 11), 1e-6) << c.name;
  }
}

TEST(Autodiff, LstmStepMatchesFiniteDifferences) {
  Rng rng(8);
  const Op op = [](std::span<const ad::Var> v) {
    LstmStateVars s = lstm_step(v[0], {v[1], v[2]}, v[3], v[4]);
    const ad::Var parts[] = {s.h, s.c};
    return ad::concat_cols(parts);
  };
  std::vector<Matrix> inputs{random_matrix(2, 3, rng), random_matrix(2, 4, rng), random_matrix(2, 4, rng),
                             random_matrix(7, 16, rng), random_matrix(1, 16, rng)};
  EXPECT_LT(op_gradient_gap(op, inputs, 3), 1e-6);
}

TEST(Autodiff, TapeLstmAgreesWithValueLstm) {
  Rng rng(2);
  const Matrix x = random_matrix(2, 3, rng), h = random_matrix(2, 4, rng), c = random_matrix(2, 4, rng);
  const Matrix w = random_matrix(7, 16, rng), b = random_matrix(1, 16, rng);
  ad::Tape tape;
  auto s = lstm_step(tape.constant(x), {tape.constant(h), tape.constant(c)}, tape.constant(w), tape.constant(b));
  const LstmState v = lstm_step(x, LstmState{h, c}, w, b);
  EXPECT_LT((s.h.value() - v.h).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((s.c.value() - v.c).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Autodiff, ReusedNodeAccumulates) {
  ad::Tape tape;
  ad::Var x = tape.variable(Matrix::Constant(1, 1, 3.0));
  ad::Var y = ad::add(ad::mul(x, x), x);  // x^2 + x
  tape.backward(y);
  EXPECT_DOUBLE_EQ(tape.grad(x)(0, 0), 7.0);
}

TEST(Autodiff, ConstantsReceiveNoGradient) {
  ad::Tape tape;
  ad::Var c = tape.constant(Matrix::Constant(1, 1, 2.0));
  ad::Var x = tape.variable(Matrix::Constant(1, 1, 3.0));
  tape.backward(ad::mul(c, x));
  EXPECT_EQ(tape.grad(c)(0, 0), 0.0);
  EXPECT_EQ(tape.grad(x)(0, 0), 2.0);
}

TEST(Autodiff, StableAtExtremeLogits) {
  ad::Tape tape;
  Matrix big(1, 3);
  big << 1000.0, -1000.0, 0.0;
  ad::Var x = tape.variable(big);
  ad::Var ls = ad::log_sigmoid(x);
  ad::Var sp = ad::softplus(x);
  ad::Var lsm = ad::log_softmax_rows(x);
  EXPECT_TRUE(ls.value().allFinite());
  EXPECT_TRUE(sp.value().allFinite());
  EXPECT_TRUE(lsm.value().allFinite());
  EXPECT_NEAR(ls.value()(0, 1), -1000.0, 1e-9);
  tape.backward(ad::sum(ad::add(ls, sp)));
  EXPECT_TRUE(tape.grad(x).allFinite());
}

TEST(Autodiff, ShapeErrors) {
  ad::Tape tape;
  ad::Var a = tape.variable(Matrix::Zero(2, 3));
  ad::Var b = tape.variable(Matrix::Zero(3, 2));
  EXPECT_THROW(ad::add(a, b), ValidationError);
  EXPECT_THROW(tape.backward(a), ValidationError);
  ad::Tape other;
  ad::Var c = other.variable(Matrix::Zero(2, 3));
  EXPECT_THROW(ad::add(a, c), ValidationError);
}

TEST(ParamSet, ClipGlobalNorm) {
  GradSet g{Matrix::Constant(1, 2, 3.0), Matrix::Constant(1, 1, 4.0)};
  EXPECT_NEAR(global_norm(g), std::sqrt(9.0 + 9.0 + 16.0), 1e-12);
  const double pre = clip_global_norm(g, 1.0);
  EXPECT_NEAR(pre, std::sqrt(34.0), 1e-12);
  EXPECT_NEAR(global_norm(g), 1.0, 1e-12);
  GradSet small{Matrix::Constant(1, 1, 0.5)};
  clip_global_norm(small, 1.0);
  EXPECT_EQ(small[0](0, 0), 0.5);
}

TEST(ParamSet, NamedAccess) {
  ParamSet p;
  p.add("a", Matrix::Zero(2, 2));
  p.add("b", Matrix::Ones(1, 3));
  EXPECT_EQ(p.index_of("b"), 1u);
  EXPECT_EQ(p.scalar_count(), 7u);
  EXPECT_THROW(p.index_of("c"), ValidationError);
  EXPECT_THROW(p.add("a", Matrix::Zero(1, 1)), ValidationError);
}

}  // namespace
}  // namespace goalseq
