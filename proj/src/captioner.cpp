#include "lcnn/captioner.hpp"

#include "lcnn/errors.hpp"

namespace lcnn {

void ModelConfig::validate() const {
  if (vocab_size < Vocabulary::kNumSpecial + 1) {
    throw ContractError("vocab_size must be at least 4 (specials plus one word), got " + std::to_string(vocab_size));
  }
  if (embed_dim == 0 || hidden_dim == 0 || feature_dim == 0) {
    throw ContractError("embed_dim, hidden_dim and feature_dim must be positive");
  }
  if (cell_layers == 0) throw ContractError("cell_layers must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ContractError("dropout must be in [0, 1)");
  if (use_cnn_l) plan_layers(lang_cnn);
}

Tensor dropout(const Tensor& x, double rate, Rng* rng) {
  if (rng == nullptr || rate <= 0.0) return x;
  const double keep = 1.0 - rate;
  std::vector<double> mask(x.size());
  for (double& m : mask) m = uniform01(*rng) < keep ? 1.0 / keep : 0.0;
  return mul(x, Tensor::from(x.shape(), std::move(mask)));
}

Tensor multimodal_fuse(const Tensor& y, const Tensor& image, const FusionParams& p, double dropout_rate, Rng* rng) {
  if (!y.defined() || !image.defined() || y.rank() != 1 || image.rank() != 1 || y.size() != image.size()) {
    throw DimensionError("multimodal_fuse: word and image features must be vectors of equal width");
  }
  const Tensor from_words = add(matvec(p.word_weight, y), p.word_bias);
  const Tensor from_image = add(matvec(p.image_weight, image), p.image_bias);
  return dropout(scaled_tanh(add(from_words, from_image)), dropout_rate, rng);
}

CaptionerModel::CaptionerModel(ModelConfig config, std::uint64_t init_seed) : config_(std::move(config)) {
  config_.validate();
  const std::size_t v = config_.vocab_size, k = config_.embed_dim, d = config_.hidden_dim;

  embedding_ = params_.add("embedding", {v, k});
  image_weight_ = params_.add("image.weight", {k, config_.feature_dim});
  image_bias_ = params_.add("image.bias", {k}, constant_init(0.0));
  if (config_.use_cnn_l) {
    if (!config_.lang_cnn.average_history) lang_cnn_ = register_lang_cnn(params_, "cnn.", config_.lang_cnn, k);
    fusion_.word_weight = params_.add("fusion.W_Y", {k, k});
    fusion_.word_bias = params_.add("fusion.b_Y", {k}, constant_init(0.0));
  }
  fusion_.image_weight = params_.add("fusion.W_V", {k, k});
  fusion_.image_bias = params_.add("fusion.b_V", {k}, constant_init(0.0));
  for (std::size_t l = 0; l < config_.cell_layers; ++l) {
    const std::size_t input = l == 0 ? 2 * k : d;
    cells_.push_back(register_cell(params_, "cell" + std::to_string(l) + ".", config_.cell, input, d));
  }
  output_weight_ = params_.add("output.W_o", {v, d});
  output_bias_ = params_.add("output.b_o", {v}, constant_init(0.0));

  Rng rng(init_seed);
  params_.initialize(rng);
}

Tensor CaptionerModel::project_image(std::span<const double> features) const {
  if (features.size() != config_.feature_dim) {
    throw DimensionError("image feature has " + std::to_string(features.size()) + " values, model expects " +
                         std::to_string(config_.feature_dim));
  }
  const Tensor f = Tensor::vector({features.begin(), features.end()});
  return add(matvec(image_weight_, f), image_bias_);
}

RecurrentState CaptionerModel::initial_state() const {
  RecurrentState s;
  for (std::size_t l = 0; l < config_.cell_layers; ++l) {
    s.layers.push_back(initial_cell_state(config_.cell, config_.hidden_dim));
  }
  return s;
}

Tensor CaptionerModel::history_feature(std::span<const Tensor> history, const Tensor& image) const {
  const LangCnnConfig& cnn = config_.lang_cnn;
  if (cnn.average_history) return average_history(history, image, cnn.window);
  return encode_history(build_input_window(history, image, cnn.window), cnn, lang_cnn_);
}

StepResult CaptionerModel::step(std::span<const TokenId> history, const Tensor& image, const RecurrentState& state,
                                Rng* dropout_rng) const {
  if (state.layers.size() != config_.cell_layers) throw DimensionError("recurrent state has the wrong depth");
  const std::size_t t = history.size();
  const std::size_t window = config_.lang_cnn.window;
  // Only the last L_L words reach the language CNN; the RNN input needs x^[t-1].
  const std::size_t first = config_.use_cnn_l && t > window ? t - window : (t > 0 ? t - 1 : 0);
  std::vector<Tensor> embedded;
  embedded.reserve(t - first);
  for (std::size_t i = first; i < t; ++i) embedded.push_back(embedding_lookup(embedding_, history[i]));
  const Tensor x_prev = t > 0 ? embedded.back() : Tensor();

  Tensor m;
  if (config_.use_cnn_l) {
    const Tensor y = history_feature(embedded, image);
    m = multimodal_fuse(y, image, fusion_, config_.dropout, dropout_rng);
  } else if (t == 0) {
    m = add(matvec(fusion_.image_weight, image), fusion_.image_bias);
  } else {
    m = Tensor::zeros({config_.embed_dim});
  }

  StepResult out;
  Tensor input = make_input_z(m, x_prev);
  for (std::size_t l = 0; l < cells_.size(); ++l) {
    out.state.layers.push_back(cell_step(state.layers[l], input, cells_[l]));
    input = out.state.layers.back().r;
  }
  const Tensor r = dropout(out.state.output(), config_.dropout, dropout_rng);
  out.logits = add(matvec(output_weight_, r), output_bias_);
  return out;
}

Tensor CaptionerModel::sequence_loss(const CaptionRecord& record, std::span<const double> features,
                                     Rng* dropout_rng) const {
  const auto& tokens = record.tokens;
  if (tokens.size() < 2) {
    throw ContractError("sequence_loss: record '" + record.image_id + "' needs at least <START> and <END>");
  }
  for (TokenId id : tokens) {
    if (id >= config_.vocab_size) {
      throw IndexError("token " + std::to_string(id) + " out of range for vocabulary of " +
                       std::to_string(config_.vocab_size));
    }
  }
  const Tensor image = project_image(features);
  RecurrentState state = initial_state();
  std::vector<Tensor> terms;
  terms.reserve(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    StepResult r = step(std::span(tokens).first(t), image, state, dropout_rng);
    terms.push_back(softmax_cross_entropy(r.logits, tokens[t]));
    state = std::move(r.state);
  }
  return sum(concat(terms));
}

ParameterReport CaptionerModel::parameter_report() const {
  ParameterReport report;
  for (const auto& e : params_.entries()) {
    const std::string component = e.name.substr(0, e.name.find('.'));
    if (report.components.empty() || report.components.back().first != component) {
      report.components.emplace_back(component, 0);
    }
    report.components.back().second += e.tensor.size();
    report.total += e.tensor.size();
  }
  return report;
}

std::size_t count_parameters(const ModelConfig& config) {
  config.validate();
  const std::size_t v = config.vocab_size, k = config.embed_dim, d = config.hidden_dim;
  std::size_t n = v * k;                        // embedding
  n += k * config.feature_dim + k;              // image projection
  if (config.use_cnn_l) {
    n += lang_cnn_parameter_count(config.lang_cnn, k);
    n += k * k + k;                             // W_Y, b_Y
  }
  n += k * k + k;                               // W_V, b_V
  for (std::size_t l = 0; l < config.cell_layers; ++l) {
    n += cell_parameter_count(config.cell, l == 0 ? 2 * k : d, d);
  }
  n += v * d + v;                               // output layer
  return n;
}

}  // namespace lcnn
