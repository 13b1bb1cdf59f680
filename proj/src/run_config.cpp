#include "lcnn/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "lcnn/errors.hpp"

namespace lcnn {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

std::string from_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

Activation to_activation(const std::string& key, const std::string& v) {
  if (v == "relu") return Activation::relu;
  if (v == "sigmoid") return Activation::sigmoid;
  if (v == "tanh") return Activation::tanh;
  throw ConfigError("'" + key + "' expects relu, sigmoid or tanh, got '" + v + "'");
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
  }
  return "relu";
}

LangCnnConfig to_preset(const std::string& v) {
  if (v == "maxpool") return LangCnnConfig::max_pool_preset();
  if (v == "average") return LangCnnConfig::average_preset();
  try {
    return LangCnnConfig::preset(to_size("cnn.preset", v));
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
}

// Returns false for keys outside model.* / cnn.*.
bool apply_model_key(ModelConfig& m, const std::string& key, const std::string& v) {
  LangCnnConfig& cnn = m.lang_cnn;
  if (key == "model.vocab_size") m.vocab_size = to_size(key, v);
  else if (key == "model.embed_dim") m.embed_dim = to_size(key, v);
  else if (key == "model.hidden_dim") m.hidden_dim = to_size(key, v);
  else if (key == "model.feature_dim") m.feature_dim = to_size(key, v);
  else if (key == "model.cell") {
    try {
      m.cell = parse_cell_kind(v);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "model.cell_layers") m.cell_layers = to_size(key, v);
  else if (key == "model.use_cnn_l") m.use_cnn_l = to_bool(key, v);
  else if (key == "model.dropout") m.dropout = to_double(key, v);
  else if (key == "cnn.preset") cnn = to_preset(v);
  else if (key == "cnn.window") cnn.window = to_size(key, v);
  else if (key == "cnn.kernels") {
    const Activation act = cnn.layers.empty() ? Activation::relu : cnn.layers.front().activation;
    cnn.layers.clear();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!trim(item).empty()) cnn.layers.push_back({to_size(key, trim(item)), act});
    }
  } else if (key == "cnn.activation") {
    const Activation act = to_activation(key, v);
    for (auto& layer : cnn.layers) layer.activation = act;
  } else if (key == "cnn.max_pool_variant") cnn.use_max_pool_variant = to_bool(key, v);
  else if (key == "cnn.average_history") cnn.average_history = to_bool(key, v);
  else return false;
  return true;
}

bool apply_run_key(RunConfig& c, const std::string& key, const std::string& v) {
  TrainConfig& t = c.train;
  if (apply_model_key(c.model, key, v)) return true;
  if (key == "train.lr") t.base_lr = to_double(key, v);
  else if (key == "train.epochs") t.epochs = to_size(key, v);
  else if (key == "train.batch_size") t.batch_size = to_size(key, v);
  else if (key == "train.clip_norm") t.clip_norm = to_double(key, v);
  else if (key == "train.patience") t.patience = to_size(key, v);
  else if (key == "train.beam") t.beam_size = to_size(key, v);
  else if (key == "train.max_len") t.max_len = to_size(key, v);
  else if (key == "train.restart_period") t.restart_period = to_double(key, v);
  else if (key == "train.restart_mult") t.restart_mult = to_double(key, v);
  else if (key == "train.floor_ratio") t.floor_ratio = to_double(key, v);
  else if (key == "train.target_loss") t.target_loss = to_double(key, v);
  else if (key == "data.min_count") c.min_count = to_size(key, v);
  else if (key == "data.max_words") c.max_words = to_size(key, v);
  else if (key == "seed") {
    c.seed = to_size(key, v);
    t.seed = c.seed;
  } else return false;
  return true;
}

template <typename Config, typename Apply>
void apply_all(Config& config, const KeyValues& values, Apply apply) {
  for (const auto& [key, value] : values) {
    if (key == "cnn.preset") apply(config, key, value);
  }
  for (const auto& [key, value] : values) {
    if (key == "cnn.preset") continue;
    if (!apply(config, key, value)) throw ConfigError("unknown config key '" + key + "'");
  }
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", number);
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty config key", number);
    out.emplace_back(std::move(key), trim(line.substr(eq + 1)));
  }
  return out;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_key_values(buffer.str());
}

std::pair<std::string, std::string> parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || trim(text.substr(0, eq)).empty()) {
    throw ConfigError("override '" + text + "' is not of the form key=value");
  }
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

void apply_key_values(RunConfig& config, const KeyValues& values) { apply_all(config, values, apply_run_key); }

void apply_model_key_values(ModelConfig& config, const KeyValues& values) {
  apply_all(config, values, apply_model_key);
}

KeyValues model_key_values(const ModelConfig& m) {
  const LangCnnConfig& cnn = m.lang_cnn;
  std::string kernels;
  for (const auto& layer : cnn.layers) {
    if (!kernels.empty()) kernels += ',';
    kernels += std::to_string(layer.kernel_size);
  }
  return {
      {"model.vocab_size", std::to_string(m.vocab_size)},
      {"model.embed_dim", std::to_string(m.embed_dim)},
      {"model.hidden_dim", std::to_string(m.hidden_dim)},
      {"model.feature_dim", std::to_string(m.feature_dim)},
      {"model.cell", to_string(m.cell)},
      {"model.cell_layers", std::to_string(m.cell_layers)},
      {"model.use_cnn_l", from_bool(m.use_cnn_l)},
      {"model.dropout", from_double(m.dropout)},
      {"cnn.window", std::to_string(cnn.window)},
      {"cnn.kernels", kernels},
      {"cnn.activation", activation_name(cnn.layers.empty() ? Activation::relu : cnn.layers.front().activation)},
      {"cnn.max_pool_variant", from_bool(cnn.use_max_pool_variant)},
      {"cnn.average_history", from_bool(cnn.average_history)},
  };
}

KeyValues to_key_values(const RunConfig& c) {
  KeyValues out = model_key_values(c.model);
  const TrainConfig& t = c.train;
  const KeyValues rest = {
      {"train.lr", from_double(t.base_lr)},
      {"train.epochs", std::to_string(t.epochs)},
      {"train.batch_size", std::to_string(t.batch_size)},
      {"train.clip_norm", from_double(t.clip_norm)},
      {"train.patience", std::to_string(t.patience)},
      {"train.beam", std::to_string(t.beam_size)},
      {"train.max_len", std::to_string(t.max_len)},
      {"train.restart_period", from_double(t.restart_period)},
      {"train.restart_mult", from_double(t.restart_mult)},
      {"train.floor_ratio", from_double(t.floor_ratio)},
      {"train.target_loss", from_double(t.target_loss)},
      {"data.min_count", std::to_string(c.min_count)},
      {"data.max_words", std::to_string(c.max_words)},
      {"seed", std::to_string(c.seed)},
  };
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

std::string format_key_values(const KeyValues& values) {
  std::string out;
  for (const auto& [key, value] : values) out += key + " = " + value + '\n';
  return out;
}

}  // namespace lcnn
