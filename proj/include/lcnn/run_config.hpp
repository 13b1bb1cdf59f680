#pragma once

// Flat `key = value` run configuration. Keys are dotted (model.cell,
// cnn.window, train.lr, ...); `#` starts a comment. Sources are applied in
// order (file, then command-line overrides) and a later value wins. Within
// one source `cnn.preset` is applied before the other keys, so a preset can
// be refined by explicit cnn.* keys.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "lcnn/captioner.hpp"
#include "lcnn/trainer.hpp"

namespace lcnn {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

struct RunConfig {
  ModelConfig model;  // model.vocab_size = 0 means "size of the built vocabulary"
  TrainConfig train;
  std::size_t min_count = kDefaultMinCount;
  std::size_t max_words = kDefaultMaxWords;
  std::uint64_t seed = 1;  // parameter initialization and shuffling

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Throws ParseError with the line number for lines without '='.
KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::filesystem::path& path);
// "key=value" as given on the command line.
std::pair<std::string, std::string> parse_override(const std::string& text);

// Throws ConfigError for unknown keys or unparsable values.
void apply_key_values(RunConfig& config, const KeyValues& values);
void apply_model_key_values(ModelConfig& config, const KeyValues& values);

// Every addressable key with its current value, in a fixed order.
KeyValues to_key_values(const RunConfig& config);
KeyValues model_key_values(const ModelConfig& config);
std::string format_key_values(const KeyValues& values);

}  // namespace lcnn
