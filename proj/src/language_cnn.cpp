#include "lcnn/language_cnn.hpp"

#include "lcnn/errors.hpp"

namespace lcnn {

LangCnnConfig LangCnnConfig::preset(std::size_t window) {
  LangCnnConfig c;
  c.window = window;
  switch (window) {
    case 2: c.layers = {{2}}; break;
    case 4: c.layers = {{3}, {2}}; break;
    case 8: c.layers = {{5}, {3}, {2}}; break;
    case 16: c.layers = {{5}, {5}, {3}, {3}, {3}}; break;
    default: throw ContractError("no language CNN preset for window " + std::to_string(window));
  }
  return c;
}

LangCnnConfig LangCnnConfig::max_pool_preset() {
  LangCnnConfig c = preset(16);
  c.use_max_pool_variant = true;
  return c;
}

LangCnnConfig LangCnnConfig::average_preset(std::size_t window) {
  LangCnnConfig c;
  c.window = window;
  c.layers.clear();
  c.average_history = true;
  return c;
}

std::vector<PlannedLayer> plan_layers(const LangCnnConfig& config) {
  if (config.window == 0) throw DimensionError("language CNN window must be positive");
  std::vector<PlannedLayer> plan;
  if (config.average_history) return plan;
  std::size_t length = config.window;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    PlannedLayer layer;
    layer.in_length = length;
    const bool pooled = config.use_max_pool_variant && (i == 1 || i == 3);
    if (pooled) {
      layer.kind = PlannedLayer::Kind::max_pool;
      layer.kernel = 2;
      layer.stride = 2;
      if (length < 2) {
        throw DimensionError("max-pool layer " + std::to_string(i + 1) + " needs at least 2 positions, has " +
                             std::to_string(length));
      }
      layer.out_length = (length - 2) / 2 + 1;
    } else {
      layer.kind = PlannedLayer::Kind::conv;
      layer.activation = config.layers[i].activation;
      layer.kernel = config.layers[i].kernel_size;
      if (layer.kernel == 0) throw DimensionError("kernel size must be positive");
      if (layer.kernel > length) {
        if (!config.use_max_pool_variant) {
          throw DimensionError("conv layer " + std::to_string(i + 1) + " kernel " + std::to_string(layer.kernel) +
                               " exceeds temporal length " + std::to_string(length));
        }
        layer.kernel = length;
      }
      layer.out_length = length - layer.kernel + 1;
    }
    length = layer.out_length;
    plan.push_back(layer);
  }
  return plan;
}

std::size_t final_length(const LangCnnConfig& config) {
  const auto plan = plan_layers(config);
  return plan.empty() ? config.window : plan.back().out_length;
}

LangCnnParams register_lang_cnn(ParameterSet& params, const std::string& prefix, const LangCnnConfig& config,
                                std::size_t embed_dim) {
  LangCnnParams p;
  if (config.average_history) return p;
  const std::size_t k = embed_dim;
  std::size_t conv_index = 0;
  for (const PlannedLayer& layer : plan_layers(config)) {
    if (layer.kind != PlannedLayer::Kind::conv) continue;
    const std::string name = prefix + "conv" + std::to_string(conv_index++);
    ConvWeights w;
    w.weight = params.add(name + ".weight", {layer.kernel * k, k});
    w.bias = params.add(name + ".bias", {k}, constant_init(0.0));
    p.convs.push_back(w);
  }
  p.projection_weight = params.add(prefix + "projection.weight", {k, final_length(config) * k});
  p.projection_bias = params.add(prefix + "projection.bias", {k}, constant_init(0.0));
  p.highway.gate_weight = params.add(prefix + "highway.gate_weight", {k, k});
  p.highway.gate_bias = params.add(prefix + "highway.gate_bias", {k}, constant_init(kHighwayGateBiasInit));
  p.highway.transform_weight = params.add(prefix + "highway.transform_weight", {k, k});
  p.highway.transform_bias = params.add(prefix + "highway.transform_bias", {k}, constant_init(0.0));
  return p;
}

std::size_t lang_cnn_parameter_count(const LangCnnConfig& config, std::size_t embed_dim) {
  if (config.average_history) return 0;
  const std::size_t k = embed_dim;
  std::size_t n = 0;
  for (const PlannedLayer& layer : plan_layers(config)) {
    if (layer.kind == PlannedLayer::Kind::conv) n += layer.kernel * k * k + k;
  }
  n += k * final_length(config) * k + k;
  n += 2 * (k * k + k);
  return n;
}

Tensor build_input_window(std::span<const Tensor> history, const Tensor& image, std::size_t window) {
  if (window == 0) throw DimensionError("window must be positive");
  if (!image.defined() || image.rank() != 1) throw DimensionError("image feature must be a vector");
  const std::size_t k = image.size();
  for (const Tensor& x : history) {
    if (x.rank() != 1 || x.size() != k) {
      throw DimensionError("history embedding " + shape_to_string(x.shape()) + " does not match width " +
                           std::to_string(k));
    }
  }
  const std::size_t t = history.size();
  std::vector<Tensor> rows;
  rows.reserve(window);
  if (t >= window) {
    rows.assign(history.end() - static_cast<std::ptrdiff_t>(window), history.end());
  } else {
    rows.assign(history.begin(), history.end());
    const Tensor pad = t == 0 ? image : Tensor::zeros({k});
    while (rows.size() < window) rows.push_back(pad);
  }
  return concat_rows(rows);
}

Tensor apply_activation(const Tensor& x, Activation activation) {
  switch (activation) {
    case Activation::relu: return relu(x);
    case Activation::sigmoid: return sigmoid(x);
    case Activation::tanh: return tanh(x);
  }
  throw ContractError("unknown activation");
}

Tensor temporal_conv_forward(const Tensor& input, const ConvLayerSpec& spec, const ConvWeights& weights) {
  if (input.rank() != 2) throw DimensionError("temporal_conv: input must be [M x K]");
  const std::size_t k = input.cols();
  if (weights.weight.rank() != 2 || weights.weight.rows() != spec.kernel_size * k || weights.weight.cols() != k ||
      weights.bias.size() != k) {
    throw DimensionError("temporal_conv: weights " + shape_to_string(weights.weight.shape()) +
                         " do not fit kernel " + std::to_string(spec.kernel_size) + " over width " +
                         std::to_string(k));
  }
  if (input.rows() < spec.kernel_size) {
    throw DimensionError("temporal_conv: kernel " + std::to_string(spec.kernel_size) + " overruns " +
                         std::to_string(input.rows()) + " positions");
  }
  const Tensor segments = unfold_rows(input, spec.kernel_size);
  return apply_activation(add(matmul(segments, weights.weight), weights.bias), spec.activation);
}

Tensor highway_forward(const Tensor& x, const HighwayWeights& w) {
  const Tensor gate = sigmoid(add(matvec(w.gate_weight, x), w.gate_bias));
  const Tensor candidate = relu(add(matvec(w.transform_weight, x), w.transform_bias));
  return add(mul(gate, candidate), mul(affine(gate, -1.0, 1.0), x));
}

Tensor encode_history(const Tensor& window, const LangCnnConfig& config, const LangCnnParams& params) {
  if (config.average_history) throw ContractError("encode_history: averaging config has no convolution stack");
  if (window.rank() != 2 || window.rows() != config.window) {
    throw DimensionError("encode_history: window " + shape_to_string(window.shape()) + " does not have " +
                         std::to_string(config.window) + " rows");
  }
  Tensor h = window;
  std::size_t conv_index = 0;
  for (const PlannedLayer& layer : plan_layers(config)) {
    if (layer.kind == PlannedLayer::Kind::max_pool) {
      h = max_pool_rows(h, layer.kernel, layer.stride);
      continue;
    }
    if (conv_index >= params.convs.size()) throw DimensionError("encode_history: missing conv parameters");
    h = temporal_conv_forward(h, {layer.kernel, layer.activation}, params.convs[conv_index++]);
  }
  const Tensor projected = relu(add(matvec(params.projection_weight, flatten(h)), params.projection_bias));
  return highway_forward(projected, params.highway);
}

Tensor average_history(std::span<const Tensor> history, const Tensor& image, std::size_t window) {
  if (history.empty()) return image;
  const std::size_t start = history.size() > window ? history.size() - window : 0;
  return mean_rows(concat_rows(history.subspan(start)));
}

}  // namespace lcnn
