#pragma once

// A checkpoint is a directory holding
//   model.cfg   model.* / cnn.* keys, `key = value`
//   params.idx  `name<TAB>offset<TAB>count<TAB>shape` per parameter
//   params.bin  all parameter values as little-endian IEEE doubles
//   vocab.tsv   the vocabulary
// Loading reproduces the saved parameters bit for bit.

#include <filesystem>

#include "lcnn/captioner.hpp"
#include "lcnn/data.hpp"

namespace lcnn {

struct Checkpoint {
  CaptionerModel model;
  Vocabulary vocab;
};

void save_checkpoint(const std::filesystem::path& dir, const CaptionerModel& model, const Vocabulary& vocab);

// Throws CheckpointError when files are missing, the index disagrees with the
// configuration, or the vocabulary size differs from model.vocab_size.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace lcnn
