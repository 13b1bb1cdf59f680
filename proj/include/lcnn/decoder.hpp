#pragma once

// Caption decoding. Every decoder starts from <START>, scores a sequence by
// the summed log-probabilities of the tokens after <START>, and allows at
// most max_len interior tokens: once a hypothesis holds max_len of them the
// only admissible continuation is <END>.

#include <cstddef>
#include <span>
#include <vector>

#include "lcnn/captioner.hpp"

namespace lcnn {

struct Decoded {
  std::vector<TokenId> tokens;  // <START> ... <END>
  double log_prob = 0.0;
};

struct BeamHypothesis {
  std::vector<TokenId> tokens;
  double log_prob = 0.0;
  RecurrentState state;
  bool finished = false;
};

// Argmax per step, lowest index on ties.
Decoded greedy_decode(const CaptionerModel& model, std::span<const double> features,
                      std::size_t max_len = kDefaultMaxWords);

// Keeps the k best expansions per step, ordered by score then by token
// sequence. Hypotheses ending in <END> retire and shrink the live beam.
// Returns the retired hypotheses, best first. No length normalization.
std::vector<Decoded> beam_search(const CaptionerModel& model, std::span<const double> features, std::size_t k,
                                 std::size_t max_len = kDefaultMaxWords);

inline constexpr double kExhaustiveLimit = 1e6;

// Number of sequences exhaustive_decode would enumerate.
double exhaustive_candidate_count(std::size_t vocab_size, std::size_t max_len);

// Best-scoring <END>-terminated sequence over the whole search space. Throws
// RefusalError when that space exceeds `limit` sequences.
Decoded exhaustive_decode(const CaptionerModel& model, std::span<const double> features, std::size_t max_len,
                          double limit = kExhaustiveLimit);

// Summed log-probability of a given <START>...<END> sequence.
double sequence_log_prob(const CaptionerModel& model, std::span<const double> features,
                         const std::vector<TokenId>& tokens);

}  // namespace lcnn
