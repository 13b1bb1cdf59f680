#pragma once

// Central finite-difference check of the full model gradient.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lcnn/captioner.hpp"

namespace lcnn {

struct GradcheckSettings {
  ModelConfig model;
  std::size_t sequence_length = 9;  // tokens, including <START> and <END>
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t seed = 3;
  // All parameters, biases included, are redrawn from U(-init_range, init_range).
  double init_range = 0.3;
};

// V=20, K=d=D=8, window 6 with kernels {3, 2}, no dropout.
GradcheckSettings small_gradcheck_settings(CellKind cell);

struct BlockError {
  std::string name;
  double max_abs_diff = 0.0;
  // max|analytic - numeric| / max(max|analytic|, max|numeric|) over the block
  double relative_error = 0.0;
};

struct GradcheckResult {
  CellKind cell = CellKind::simple_rnn;
  std::vector<BlockError> blocks;
  double max_relative_error = 0.0;
  bool passed = false;
};

// Builds a randomly initialized model and a random caption/feature pair, and
// compares the tape gradient of sequence_loss with central differences for
// every scalar parameter.
GradcheckResult gradient_check(const GradcheckSettings& settings);

}  // namespace lcnn
