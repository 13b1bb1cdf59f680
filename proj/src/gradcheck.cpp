#include "lcnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "lcnn/errors.hpp"

namespace lcnn {

GradcheckSettings small_gradcheck_settings(CellKind cell) {
  GradcheckSettings s;
  s.model.vocab_size = 20;
  s.model.embed_dim = 8;
  s.model.hidden_dim = 8;
  s.model.feature_dim = 8;
  s.model.cell = cell;
  s.model.dropout = 0.0;
  s.model.lang_cnn.window = 6;
  s.model.lang_cnn.layers = {{3}, {2}};
  return s;
}

GradcheckResult gradient_check(const GradcheckSettings& settings) {
  if (settings.sequence_length < 2) throw ContractError("gradient_check: sequence needs <START> and <END>");
  if (!(settings.epsilon > 0.0)) throw ContractError("gradient_check: epsilon must be positive");
  ModelConfig config = settings.model;
  config.dropout = 0.0;
  CaptionerModel model(config, settings.seed);

  Rng rng(settings.seed + 1);
  // Zero-initialized biases put ReLUs fed by zero padding exactly on their
  // kink, where central differences see half a slope. Redraw everything.
  for (auto& entry : model.parameters().entries()) {
    for (double& v : entry.tensor.data()) v = uniform(rng, -settings.init_range, settings.init_range);
  }
  CaptionRecord record{"gradcheck", {Vocabulary::kStart}};
  for (std::size_t i = 2; i < settings.sequence_length; ++i) {
    record.tokens.push_back(Vocabulary::kEnd + 1 + below(rng, config.vocab_size - Vocabulary::kEnd - 1));
  }
  record.tokens.push_back(Vocabulary::kEnd);
  std::vector<double> features(config.feature_dim);
  for (double& f : features) f = uniform(rng, -1.0, 1.0);

  ParameterSet& params = model.parameters();
  params.zero_grad();
  {
    Tape tape;
    Tensor loss;
    {
      Tape::Scope scope(tape);
      loss = model.sequence_loss(record, features);
    }
    tape.backward(loss);
  }

  auto loss_value = [&] {
    NoGradScope no_grad;
    return model.sequence_loss(record, features).item();
  };

  GradcheckResult result;
  result.cell = config.cell;
  for (auto& entry : params.entries()) {
    auto values = entry.tensor.data();
    const auto analytic = entry.tensor.grad();
    BlockError block{entry.name};
    double scale = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + settings.epsilon;
      const double plus = loss_value();
      values[i] = saved - settings.epsilon;
      const double minus = loss_value();
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * settings.epsilon);
      block.max_abs_diff = std::max(block.max_abs_diff, std::abs(analytic[i] - numeric));
      scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric)});
    }
    block.relative_error = scale > 1e-12 ? block.max_abs_diff / scale : block.max_abs_diff;
    result.max_relative_error = std::max(result.max_relative_error, block.relative_error);
    result.blocks.push_back(std::move(block));
  }
  result.passed = result.max_relative_error < settings.tolerance;
  return result;
}

}  // namespace lcnn
