#include "lcnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lcnn/errors.hpp"
#include "lcnn/run_config.hpp"

namespace lcnn {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

namespace {

std::string shape_field(const Shape& shape) {
  std::string s;
  for (std::size_t d : shape) {
    if (!s.empty()) s += 'x';
    s += std::to_string(d);
  }
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const CaptionerModel& model, const Vocabulary& vocab) {
  if (vocab.size() != model.config().vocab_size) {
    throw CheckpointError("vocabulary has " + std::to_string(vocab.size()) + " entries, model expects " +
                          std::to_string(model.config().vocab_size));
  }
  std::filesystem::create_directories(dir);
  {
    std::ofstream cfg(dir / "model.cfg");
    cfg << format_key_values(model_key_values(model.config()));
    if (!cfg) throw CheckpointError("cannot write " + (dir / "model.cfg").string());
  }
  std::ofstream idx(dir / "params.idx");
  std::ofstream bin(dir / "params.bin", std::ios::binary);
  std::size_t offset = 0;
  for (const auto& e : model.parameters().entries()) {
    const auto values = e.tensor.data();
    idx << e.name << '\t' << offset << '\t' << values.size() << '\t' << shape_field(e.tensor.shape()) << '\n';
    bin.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    offset += values.size();
  }
  if (!idx || !bin) throw CheckpointError("cannot write parameters to " + dir.string());
  vocab.save(dir / "vocab.tsv");
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  for (const char* name : {"model.cfg", "params.idx", "params.bin", "vocab.tsv"}) {
    if (!std::filesystem::exists(dir / name)) throw CheckpointError("checkpoint is missing " + (dir / name).string());
  }
  ModelConfig config;
  config.lang_cnn.layers.clear();
  try {
    apply_model_key_values(config, read_key_values(dir / "model.cfg"));
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("model.cfg: ") + e.what());
  }
  Vocabulary vocab = Vocabulary::load(dir / "vocab.tsv");
  if (vocab.size() != config.vocab_size) {
    throw CheckpointError("vocabulary has " + std::to_string(vocab.size()) + " entries, checkpoint model expects " +
                          std::to_string(config.vocab_size));
  }
  CaptionerModel model(config);

  std::ifstream idx(dir / "params.idx");
  std::ifstream bin(dir / "params.bin", std::ios::binary);
  std::size_t expected_offset = 0;
  std::string line;
  auto& entries = model.parameters().entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!std::getline(idx, line)) throw CheckpointError("params.idx ends before parameter '" + entries[i].name + "'");
    std::istringstream fields(line);
    std::string name, shape;
    std::size_t offset = 0, count = 0;
    fields >> name >> offset >> count >> shape;
    if (name != entries[i].name || offset != expected_offset || count != entries[i].tensor.size() ||
        shape != shape_field(entries[i].tensor.shape())) {
      throw CheckpointError("params.idx line " + std::to_string(i + 1) + " does not match parameter '" +
                            entries[i].name + "'");
    }
    auto values = entries[i].tensor.data();
    bin.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    if (!bin) throw CheckpointError("params.bin is truncated at parameter '" + entries[i].name + "'");
    expected_offset += count;
  }
  if (std::getline(idx, line) && !line.empty()) throw CheckpointError("params.idx has extra entries");
  if (bin.peek() != std::char_traits<char>::eof()) throw CheckpointError("params.bin has trailing data");
  return {std::move(model), std::move(vocab)};
}

}  // namespace lcnn
