#pragma once

// History encoder: a stack of temporal convolutions over the last L_L word
// embeddings, flattened, projected back to K and passed through a highway
// layer. No pooling in the default configuration.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lcnn/parameters.hpp"
#include "lcnn/tensor.hpp"

namespace lcnn {

enum class Activation { relu, sigmoid, tanh };

struct ConvLayerSpec {
  std::size_t kernel_size = 3;
  Activation activation = Activation::relu;

  friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

struct LangCnnConfig {
  // L_L: number of history words the encoder sees.
  std::size_t window = 16;
  std::vector<ConvLayerSpec> layers{{5}, {5}, {3}, {3}, {3}};
  // Replaces the 2nd and 4th layers with max-pooling (kernel 2, stride 2).
  bool use_max_pool_variant = false;
  // Replaces the whole encoder with the mean of the history embeddings.
  bool average_history = false;

  // Window sizes 2, 4, 8 and 16 with stacks that reduce the window to at most
  // two positions.
  static LangCnnConfig preset(std::size_t window);
  static LangCnnConfig max_pool_preset();
  static LangCnnConfig average_preset(std::size_t window = 16);

  friend bool operator==(const LangCnnConfig&, const LangCnnConfig&) = default;
};

struct PlannedLayer {
  enum class Kind { conv, max_pool };
  Kind kind = Kind::conv;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t in_length = 0;
  std::size_t out_length = 0;
  Activation activation = Activation::relu;
};

// Temporal lengths layer by layer (stride 1, no padding for convolutions).
// In the max-pool variant a convolution whose kernel exceeds the remaining
// length is narrowed to that length. Throws DimensionError when the default
// stack does not fit the window.
std::vector<PlannedLayer> plan_layers(const LangCnnConfig& config);
std::size_t final_length(const LangCnnConfig& config);

struct ConvWeights {
  Tensor weight;  // [kernel*K x K]
  Tensor bias;    // [K]
};

struct HighwayWeights {
  Tensor gate_weight;       // W_T [K x K]
  Tensor gate_bias;         // b_T [K]
  Tensor transform_weight;  // W_H [K x K]
  Tensor transform_bias;    // b_H [K]
};

struct LangCnnParams {
  std::vector<ConvWeights> convs;  // one per planned convolution
  Tensor projection_weight;        // [K x final_length*K]
  Tensor projection_bias;          // [K]
  HighwayWeights highway;
};

inline constexpr double kHighwayGateBiasInit = -2.0;

LangCnnParams register_lang_cnn(ParameterSet& params, const std::string& prefix, const LangCnnConfig& config,
                                std::size_t embed_dim);
std::size_t lang_cnn_parameter_count(const LangCnnConfig& config, std::size_t embed_dim);

// Rows 0..t-1 are the history (only the last `window` when t >= window);
// missing rows are the image feature when t == 0 and zero otherwise.
Tensor build_input_window(std::span<const Tensor> history, const Tensor& image, std::size_t window);

Tensor apply_activation(const Tensor& x, Activation activation);

// One layer: every length-`kernel` segment is flattened and mapped to K
// outputs by the shared affine map, then activated.
Tensor temporal_conv_forward(const Tensor& input, const ConvLayerSpec& spec, const ConvWeights& weights);

Tensor highway_forward(const Tensor& x, const HighwayWeights& weights);

// y^[t] for a window built by build_input_window.
Tensor encode_history(const Tensor& window, const LangCnnConfig& config, const LangCnnParams& params);

// The averaging baseline: image feature when the history is empty, else the
// mean of the last `window` embeddings.
Tensor average_history(std::span<const Tensor> history, const Tensor& image, std::size_t window);

}  // namespace lcnn
