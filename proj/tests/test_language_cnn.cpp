#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "lcnn/errors.hpp"
#include "lcnn/language_cnn.hpp"
#include "test_util.hpp"

using namespace lcnn;
using lcnn::testing::gradcheck;
using lcnn::testing::random_tensor;
using lcnn::testing::values;

namespace {

std::vector<std::size_t> lengths(const LangCnnConfig& c) {
  std::vector<std::size_t> out{c.window};
  for (const PlannedLayer& l : plan_layers(c)) out.push_back(l.out_length);
  return out;
}

std::vector<Tensor> random_history(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<Tensor> h;
  for (std::size_t i = 0; i < n; ++i) h.push_back(random_tensor({k}, rng, false));
  return h;
}

LangCnnParams random_params(ParameterSet& ps, const LangCnnConfig& c, std::size_t k, std::uint64_t seed) {
  LangCnnParams p = register_lang_cnn(ps, "cnn.", c, k);
  Rng rng(seed);
  for (auto& e : ps.entries()) {
    for (double& v : e.tensor.data()) v = uniform(rng, -0.5, 0.5);
  }
  return p;
}

}  // namespace

TEST(Plan, DefaultStackReducesSixteenToTwo) {
  EXPECT_EQ(lengths(LangCnnConfig{}), (std::vector<std::size_t>{16, 12, 8, 6, 4, 2}));
}

TEST(Plan, MaxPoolVariantLengths) {
  // Recurrence: conv L-k+1, pool (L-2)/2+1, kernel narrowed once it overruns.
  const auto plan = plan_layers(LangCnnConfig::max_pool_preset());
  EXPECT_EQ(lengths(LangCnnConfig::max_pool_preset()), (std::vector<std::size_t>{16, 12, 6, 4, 2, 1}));
  EXPECT_EQ(plan[1].kind, PlannedLayer::Kind::max_pool);
  EXPECT_EQ(plan[3].kind, PlannedLayer::Kind::max_pool);
  EXPECT_EQ(plan[4].kernel, 2u);
}

TEST(Plan, WindowPresets) {
  EXPECT_EQ(lengths(LangCnnConfig::preset(2)), (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ(lengths(LangCnnConfig::preset(4)), (std::vector<std::size_t>{4, 2, 1}));
  EXPECT_EQ(lengths(LangCnnConfig::preset(8)), (std::vector<std::size_t>{8, 4, 2, 1}));
  EXPECT_EQ(LangCnnConfig::preset(16), LangCnnConfig{});
  EXPECT_THROW(LangCnnConfig::preset(5), ContractError);
}

TEST(Plan, OverrunningKernelIsRejected) {
  LangCnnConfig c;
  c.window = 8;
  EXPECT_THROW(plan_layers(c), DimensionError);
}

TEST(Plan, ParameterCountMatchesRegistration) {
  for (const LangCnnConfig& c : {LangCnnConfig{}, LangCnnConfig::max_pool_preset(), LangCnnConfig::preset(4)}) {
    ParameterSet ps;
    register_lang_cnn(ps, "cnn.", c, 6);
    EXPECT_EQ(ps.scalar_count(), lang_cnn_parameter_count(c, 6));
  }
  EXPECT_EQ(lang_cnn_parameter_count(LangCnnConfig::average_preset(), 6), 0u);
}

TEST(InputWindow, FirstStepRepeatsImage) {
  Rng rng(1);
  const Tensor image = random_tensor({4}, rng, false);
  const Tensor w = build_input_window({}, image, 5);
  ASSERT_EQ(w.shape(), (Shape{5, 4}));
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(w.at(r, c), image[c]);
  }
}

TEST(InputWindow, ZeroPadsShortHistory) {
  Rng rng(2);
  const Tensor image = random_tensor({3}, rng, false);
  const auto h = random_history(3, 3, rng);
  const Tensor w = build_input_window(h, image, 4);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(w.at(r, c), h[r][c]);
  }
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(w.at(3, c), 0.0);
}

TEST(InputWindow, TruncatesLongHistory) {
  Rng rng(3);
  const Tensor image = random_tensor({2}, rng, false);
  const auto h = random_history(20, 2, rng);
  const Tensor w = build_input_window(h, image, 16);
  for (std::size_t r = 0; r < 16; ++r) {
    for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(w.at(r, c), h[r + 4][c]);
  }
}

TEST(TemporalConv, IdentityKernel) {
  ConvWeights w{Tensor::matrix({{1, 0}, {0, 1}}), Tensor::zeros({2})};
  const Tensor x = Tensor::matrix({{1, 2}, {0, 3}, {4, 0.5}});
  EXPECT_EQ(values(temporal_conv_forward(x, {1, Activation::relu}, w)), values(x));
}

TEST(TemporalConv, LengthArithmeticAndConstantMap) {
  const std::size_t k = 3;
  ConvWeights w{Tensor::zeros({3 * k, k}), Tensor::vector({-1.0, 0.0, 2.0})};
  Rng rng(4);
  const Tensor x = random_tensor({4, k}, rng, false);
  for (Activation act : {Activation::relu, Activation::sigmoid, Activation::tanh}) {
    const Tensor out = temporal_conv_forward(x, {3, act}, w);
    ASSERT_EQ(out.shape(), (Shape{2, k}));
    const Tensor expected = apply_activation(w.bias, act);
    for (std::size_t r = 0; r < 2; ++r) {
      for (std::size_t c = 0; c < k; ++c) EXPECT_EQ(out.at(r, c), expected[c]);
    }
  }
}

TEST(TemporalConv, MatchesDirectSum) {
  // out[i][o] = relu(b[o] + sum_j sum_c x[i+j][c] * W[j*K + c][o])
  Rng rng(5);
  const std::size_t k = 3, kernel = 2;
  const Tensor x = random_tensor({5, k}, rng, false);
  ConvWeights w{random_tensor({kernel * k, k}, rng, false), random_tensor({k}, rng, false)};
  const Tensor out = temporal_conv_forward(x, {kernel, Activation::tanh}, w);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t o = 0; o < k; ++o) {
      double acc = w.bias[o];
      for (std::size_t j = 0; j < kernel; ++j) {
        for (std::size_t c = 0; c < k; ++c) acc += x.at(i + j, c) * w.weight.at(j * k + c, o);
      }
      EXPECT_NEAR(out.at(i, o), std::tanh(acc), 1e-14);
    }
  }
}

TEST(Highway, GateClosedPassesInput) {
  Rng rng(6);
  const std::size_t k = 5;
  HighwayWeights w{random_tensor({k, k}, rng, false), Tensor::filled({k}, -std::numeric_limits<double>::infinity()),
                   random_tensor({k, k}, rng, false), random_tensor({k}, rng, false)};
  const Tensor x = random_tensor({k}, rng, false);
  const Tensor y = highway_forward(x, w);
  for (std::size_t i = 0; i < k; ++i) EXPECT_NEAR(y[i], x[i], 1e-12);
}

TEST(Highway, GateOpenGivesTransform) {
  Rng rng(7);
  const std::size_t k = 5;
  HighwayWeights w{Tensor::zeros({k, k}), Tensor::filled({k}, 800.0), random_tensor({k, k}, rng, false),
                   random_tensor({k}, rng, false)};
  const Tensor x = random_tensor({k}, rng, false);
  const Tensor h = relu(add(matvec(w.transform_weight, x), w.transform_bias));
  EXPECT_EQ(values(highway_forward(x, w)), values(h));
}

TEST(Highway, GradientMatchesFiniteDifferences) {
  Rng rng(8);
  const std::size_t k = 4;
  HighwayWeights w{random_tensor({k, k}, rng), random_tensor({k}, rng), random_tensor({k, k}, rng),
                   random_tensor({k}, rng, true, 0.2, 0.6)};
  Tensor x = random_tensor({k}, rng, true, 0.1, 1.0);
  EXPECT_LT(gradcheck([&] { return sum(tanh(highway_forward(x, w))); },
                      {x, w.gate_weight, w.gate_bias, w.transform_weight, w.transform_bias}),
            1e-6);
}

TEST(EncodeHistory, OutputWidthIndependentOfT) {
  const LangCnnConfig c;
  ParameterSet ps;
  const LangCnnParams p = random_params(ps, c, 6, 9);
  Rng rng(10);
  const Tensor image = random_tensor({6}, rng, false);
  const auto h = random_history(24, 6, rng);
  for (std::size_t t = 0; t <= h.size(); ++t) {
    const Tensor y = encode_history(build_input_window(std::span(h).first(t), image, c.window), c, p);
    EXPECT_EQ(y.shape(), (Shape{6}));
  }
}

TEST(EncodeHistory, SensitiveToWordOrder) {
  const LangCnnConfig c;
  ParameterSet ps;
  const LangCnnParams p = random_params(ps, c, 6, 11);
  Rng rng(12);
  const Tensor image = random_tensor({6}, rng, false);
  auto h = random_history(7, 6, rng);
  const Tensor before = encode_history(build_input_window(h, image, c.window), c, p);
  std::swap(h[5], h[6]);
  const Tensor after = encode_history(build_input_window(h, image, c.window), c, p);
  EXPECT_NE(values(before), values(after));
}

TEST(EncodeHistory, GradientThroughWholeStack) {
  for (const LangCnnConfig& c : {LangCnnConfig::preset(4), LangCnnConfig::max_pool_preset()}) {
    ParameterSet ps;
    const LangCnnParams p = random_params(ps, c, 3, 13);
    Rng rng(14);
    std::vector<Tensor> h;
    for (int i = 0; i < 3; ++i) h.push_back(random_tensor({3}, rng));
    const Tensor image = random_tensor({3}, rng);
    std::vector<Tensor> leaves = h;
    for (const auto& e : ps.entries()) leaves.push_back(e.tensor);
    EXPECT_LT(gradcheck([&] { return sum(tanh(encode_history(build_input_window(h, image, c.window), c, p))); },
                        leaves),
              1e-4);
  }
}

TEST(AverageHistory, MeanOfWindowOrImage) {
  const Tensor image = Tensor::vector({7, 7});
  EXPECT_EQ(values(average_history({}, image, 4)), values(image));
  const std::vector<Tensor> h = {Tensor::vector({100, 100}), Tensor::vector({1, 2}), Tensor::vector({3, 6})};
  EXPECT_EQ(values(average_history(h, image, 2)), (std::vector<double>{2, 4}));
}
