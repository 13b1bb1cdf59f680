#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "lcnn/errors.hpp"
#include "lcnn/trainer.hpp"

using namespace lcnn;

namespace {

ParameterSet single(Tensor& t) {
  ParameterSet ps;
  t = ps.add("w", {3}, constant_init(0.0));
  Rng rng(1);
  ps.initialize(rng);
  return ps;
}

struct TinyTask {
  SynthCorpus corpus = synth_corpus(7, 8, 2);
  Vocabulary vocab;
  Dataset data;
  ModelConfig config;

  TinyTask() {
    std::vector<std::string> texts;
    for (const RawCaption& c : corpus.captions) texts.push_back(c.text);
    vocab = Vocabulary::build(texts, 1);
    data = {encode_records(vocab, corpus.captions), &corpus.features};
    config.vocab_size = vocab.size();
    config.embed_dim = 8;
    config.hidden_dim = 8;
    config.feature_dim = corpus.features.dim();
    config.lang_cnn = LangCnnConfig::preset(4);
    config.dropout = 0.0;
  }
};

}  // namespace

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Tensor w;
  ParameterSet ps = single(w);
  w.data()[0] = 0.25;
  AdamState s;
  adam_update(ps, s, 0.1);
  EXPECT_EQ(w.data()[0], 0.25);
  EXPECT_EQ(s.step, 1u);
  adam_update(ps, s, 0.1);
  EXPECT_EQ(s.step, 2u);
}

TEST(Adam, FirstStepMatchesHandComputation) {
  Tensor w;
  ParameterSet ps = single(w);
  w.grad()[0] = 0.5;
  w.grad()[1] = -2.0;
  AdamState s;
  adam_update(ps, s, 0.01);
  // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
  EXPECT_NEAR(w.data()[0], -0.01 * 0.5 / (0.5 + 1e-8), 1e-18);
  EXPECT_NEAR(w.data()[1], 0.01 * 2.0 / (2.0 + 1e-8), 1e-18);
}

TEST(Adam, ConstantGradientApproachesSignStep) {
  Tensor w;
  ParameterSet ps = single(w);
  AdamState s;
  double before = 0.0;
  for (int i = 0; i < 2000; ++i) {
    w.grad()[2] = 3.0;
    before = w.data()[2];
    adam_update(ps, s, 1e-3);
  }
  EXPECT_NEAR(before - w.data()[2], 1e-3, 1e-9);
}

TEST(Adam, NonFiniteGradientIsRejectedWithoutSideEffects) {
  Tensor w;
  ParameterSet ps = single(w);
  w.grad()[0] = 1.0;
  w.grad()[1] = std::numeric_limits<double>::quiet_NaN();
  AdamState s;
  EXPECT_THROW(adam_update(ps, s, 0.1), NumericError);
  EXPECT_EQ(w.data()[0], 0.0);
  EXPECT_EQ(s.step, 0u);
}

TEST(Schedule, RestartsAndMidpoints) {
  const RestartSchedule s{4e-4, 5.0, 2.0, 4e-6};
  EXPECT_EQ(lr_at(s, 0.0), 4e-4);
  EXPECT_EQ(lr_at(s, 5.0), 4e-4);
  EXPECT_EQ(lr_at(s, 15.0), 4e-4);
  EXPECT_EQ(lr_at(s, 35.0), 4e-4);
  const double mid = (4e-4 + 4e-6) / 2.0;
  EXPECT_NEAR(lr_at(s, 2.5), mid, 1e-12);
  EXPECT_NEAR(lr_at(s, 10.0), mid, 1e-12);
  EXPECT_NEAR(lr_at(s, 25.0), mid, 1e-12);
  EXPECT_GT(lr_at(s, 4.9), 4e-6);
  EXPECT_LT(lr_at(s, 4.9), lr_at(s, 4.0));
  EXPECT_THROW(lr_at(s, -1.0), ContractError);
}

TEST(Clipping, BoundsGlobalNorm) {
  ParameterSet ps;
  Tensor a = ps.add("a", {2}), b = ps.add("b", {2});
  Rng rng(1);
  ps.initialize(rng);
  a.grad()[0] = 3.0;
  a.grad()[1] = 4.0;
  b.grad()[0] = 12.0;
  EXPECT_EQ(global_grad_norm(ps), 13.0);
  EXPECT_EQ(clip_grad_norm(ps, 5.0), 13.0);
  EXPECT_LE(global_grad_norm(ps), 5.0 + 1e-9);
  EXPECT_NEAR(a.grad()[0] / b.grad()[0], 0.25, 1e-15);
  clip_grad_norm(ps, 100.0);
  EXPECT_NEAR(global_grad_norm(ps), 5.0, 1e-12);
}

TEST(Train, FrozenMetricStopsAfterPatience) {
  TinyTask task;
  CaptionerModel model(task.config);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.patience = 1;
  const TrainReport report =
      train(model, task.data, task.data, cfg, [](const CaptionerModel&) { return std::pair{0.5, 0.0}; });
  // Best at epoch 0, one epoch without improvement, stop.
  EXPECT_EQ(report.epochs.size(), 2u);
  EXPECT_EQ(report.stop_reason, "early stopping");
  cfg.patience = 3;
  CaptionerModel again(task.config);
  EXPECT_EQ(train(again, task.data, task.data, cfg, [](const CaptionerModel&) { return std::pair{0.5, 0.0}; })
                .epochs.size(),
            4u);
}

TEST(Train, RestoresBestCheckpoint) {
  TinyTask task;
  CaptionerModel model(task.config);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.patience = 10;
  cfg.base_lr = 1e-2;
  const std::vector<double> scores = {0.1, 0.9, 0.3, 0.2};
  std::vector<std::vector<double>> snapshots;
  std::size_t call = 0;
  const TrainReport report = train(model, task.data, task.data, cfg, [&](const CaptionerModel& m) {
    snapshots.push_back(m.parameters().snapshot());
    return std::pair{scores[call++], 0.0};
  });
  EXPECT_EQ(report.best_epoch, 1u);
  EXPECT_EQ(report.best_cider, 0.9);
  double best = 0.0;
  for (const EpochLog& e : report.epochs) best = std::max(best, e.val_cider);
  EXPECT_EQ(report.best_cider, best);
  EXPECT_EQ(model.parameters().snapshot(), snapshots[1]);
}

TEST(Train, SeededRunsAreIdentical) {
  TinyTask task;
  task.config.dropout = 0.5;
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 3;
  std::string reports[2];
  for (std::string& out : reports) {
    CaptionerModel model(task.config, 5);
    std::ostringstream ss;
    write_report(train(model, task.data, task.data, cfg), ss);
    out = ss.str();
  }
  EXPECT_EQ(reports[0], reports[1]);
  EXPECT_FALSE(reports[0].empty());
}

TEST(Train, ReportHasFiveColumns) {
  TrainReport r;
  r.epochs.push_back({0, 4e-4, 2.5, 0.25, 0.125});
  std::ostringstream ss;
  write_report(r, ss);
  EXPECT_EQ(ss.str(), "0\t0.0004\t2.5\t0.25\t0.125\n");
}

TEST(Train, LossFallsOnTinyCorpus) {
  TinyTask task;
  CaptionerModel model(task.config, 2);
  const double before = evaluate_loss(model, task.data);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.patience = 100;
  cfg.batch_size = 2;
  cfg.base_lr = 5e-3;
  const TrainReport report = train(model, task.data, task.data, cfg);
  EXPECT_FALSE(report.diverged);
  EXPECT_LT(evaluate_loss(model, task.data), before - 0.5);
}

TEST(Train, DivergenceIsReported) {
  TinyTask task;
  CaptionerModel model(task.config);
  for (auto& e : model.parameters().entries()) {
    if (e.name == "output.b_o") e.tensor.data()[0] = std::numeric_limits<double>::infinity();
  }
  TrainConfig cfg;
  cfg.epochs = 3;
  const TrainReport report = train(model, task.data, task.data, cfg);
  EXPECT_TRUE(report.diverged);
  EXPECT_TRUE(report.epochs.empty());
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ContractError);
  c = TrainConfig{};
  c.patience = 0;
  EXPECT_THROW(c.validate(), ContractError);
  EXPECT_NO_THROW(TrainConfig{}.validate());
}
