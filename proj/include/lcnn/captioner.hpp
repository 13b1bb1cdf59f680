#pragma once

// The full captioning model: image projection, language CNN, multimodal
// fusion, recurrent cell(s) and the softmax output layer, applied one time
// step at a time.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lcnn/cells.hpp"
#include "lcnn/data.hpp"
#include "lcnn/language_cnn.hpp"
#include "lcnn/parameters.hpp"
#include "lcnn/random.hpp"
#include "lcnn/tensor.hpp"

namespace lcnn {

struct ModelConfig {
  std::size_t vocab_size = 0;  // V
  std::size_t embed_dim = 512;  // K
  std::size_t hidden_dim = 512;  // d
  std::size_t feature_dim = 512;  // D
  CellKind cell = CellKind::simple_rnn;
  // >1 stacks cells; layer l > 0 reads the hidden state of layer l-1.
  std::size_t cell_layers = 1;
  LangCnnConfig lang_cnn;
  // Off: the recurrent-only baseline, z = [g_v(V) at t = 0 else 0; x^[t-1]].
  bool use_cnn_l = true;
  double dropout = 0.5;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct FusionParams {
  Tensor word_weight;   // W_Y [K x K]
  Tensor word_bias;     // b_Y [K]
  Tensor image_weight;  // W_V [K x K]
  Tensor image_bias;    // b_V [K]
};

// Inverted dropout; identity when rng is null or rate is zero.
Tensor dropout(const Tensor& x, double rate, Rng* rng);

// scaled_tanh(W_Y y + b_Y + W_V v + b_V), dropout applied when training.
Tensor multimodal_fuse(const Tensor& y, const Tensor& image, const FusionParams& params, double dropout_rate = 0.0,
                       Rng* rng = nullptr);

struct RecurrentState {
  std::vector<CellState> layers;
  const Tensor& output() const { return layers.back().r; }
};

struct StepResult {
  Tensor logits;  // [V]
  RecurrentState state;
};

struct ParameterReport {
  std::vector<std::pair<std::string, std::size_t>> components;
  std::size_t total = 0;
};

class CaptionerModel {
 public:
  explicit CaptionerModel(ModelConfig config, std::uint64_t init_seed = 1);

  CaptionerModel(const CaptionerModel&) = delete;
  CaptionerModel& operator=(const CaptionerModel&) = delete;
  CaptionerModel(CaptionerModel&&) = default;
  CaptionerModel& operator=(CaptionerModel&&) = default;

  const ModelConfig& config() const { return config_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  // Linear map of the D-dimensional image feature into the K-dimensional
  // embedding space.
  Tensor project_image(std::span<const double> features) const;
  RecurrentState initial_state() const;

  // One application of the working flow for time step t = history.size().
  // Dropout is active iff dropout_rng is non-null.
  StepResult step(std::span<const TokenId> history, const Tensor& image, const RecurrentState& state,
                  Rng* dropout_rng = nullptr) const;

  // Teacher-forced sum of -log P(S^[t] | S^[0..t-1], I) over t = 0..N-1.
  Tensor sequence_loss(const CaptionRecord& record, std::span<const double> features,
                       Rng* dropout_rng = nullptr) const;

  std::size_t parameter_count() const { return params_.scalar_count(); }
  ParameterReport parameter_report() const;

  const Tensor& embedding() const { return embedding_; }
  const LangCnnParams& lang_cnn_params() const { return lang_cnn_; }
  const FusionParams& fusion_params() const { return fusion_; }
  const std::vector<CellParams>& cell_params() const { return cells_; }

 private:
  Tensor history_feature(std::span<const Tensor> history, const Tensor& image) const;

  ModelConfig config_;
  ParameterSet params_;
  Tensor embedding_;       // W_e [V x K]
  Tensor image_weight_;    // [K x D]
  Tensor image_bias_;      // [K]
  LangCnnParams lang_cnn_;
  FusionParams fusion_;
  std::vector<CellParams> cells_;
  Tensor output_weight_;   // W_o [V x d]
  Tensor output_bias_;     // b_o [V]
};

// Scalar count implied by a configuration, without building the model.
std::size_t count_parameters(const ModelConfig& config);

}  // namespace lcnn
