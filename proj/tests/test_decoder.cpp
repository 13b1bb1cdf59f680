#include <gtest/gtest.h>

#include <cmath>

#include "lcnn/decoder.hpp"
#include "lcnn/errors.hpp"

using namespace lcnn;

namespace {

ModelConfig toy_config(std::size_t vocab = 6) {
  ModelConfig c;
  c.vocab_size = vocab;
  c.embed_dim = 4;
  c.hidden_dim = 4;
  c.feature_dim = 3;
  c.dropout = 0.0;
  c.lang_cnn = LangCnnConfig::preset(2);
  return c;
}

CaptionerModel random_model(std::uint64_t seed, double range = 2.0, std::size_t vocab = 6) {
  CaptionerModel m(toy_config(vocab), seed);
  Rng rng(seed * 7919 + 1);
  for (auto& e : m.parameters().entries()) {
    for (double& v : e.tensor.data()) v = uniform(rng, -range, range);
  }
  return m;
}

std::vector<double> features(std::uint64_t seed) {
  Rng rng(seed);
  return {uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)};
}

void check_well_formed(const Decoded& d, std::size_t vocab, std::size_t max_len) {
  ASSERT_GE(d.tokens.size(), 2u);
  EXPECT_EQ(d.tokens.front(), Vocabulary::kStart);
  EXPECT_EQ(d.tokens.back(), Vocabulary::kEnd);
  EXPECT_LE(d.tokens.size(), max_len + 2);
  for (TokenId t : d.tokens) EXPECT_LT(t, vocab);
  EXPECT_LE(d.log_prob, 0.0);
}

}  // namespace

TEST(Greedy, WellFormedAndDeterministic) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const CaptionerModel m = random_model(seed);
    const auto f = features(seed);
    const Decoded a = greedy_decode(m, f, 4);
    check_well_formed(a, 6, 4);
    const Decoded b = greedy_decode(m, f, 4);
    EXPECT_EQ(a.tokens, b.tokens);
    EXPECT_EQ(a.log_prob, b.log_prob);
    EXPECT_EQ(sequence_log_prob(m, f, a.tokens), a.log_prob);
  }
}

TEST(Beam, WidthOneIsGreedy) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const CaptionerModel m = random_model(seed);
    const auto f = features(seed);
    const Decoded g = greedy_decode(m, f, 5);
    const auto beam = beam_search(m, f, 1, 5);
    ASSERT_EQ(beam.size(), 1u);
    EXPECT_EQ(beam[0].tokens, g.tokens);
    EXPECT_EQ(beam[0].log_prob, g.log_prob);
  }
}

TEST(Beam, RankingIsSortedAndWellFormed) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const CaptionerModel m = random_model(seed);
    const auto ranked = beam_search(m, features(seed), 5, 4);
    ASSERT_EQ(ranked.size(), 5u);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      check_well_formed(ranked[i], 6, 4);
      if (i > 0) EXPECT_LE(ranked[i].log_prob, ranked[i - 1].log_prob);
    }
  }
}

TEST(Beam, SaturatedWidthMatchesExhaustive) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const CaptionerModel m = random_model(seed);
    const auto f = features(seed);
    const Decoded best = exhaustive_decode(m, f, 4);
    const auto beam = beam_search(m, f, 1296, 4);
    EXPECT_EQ(beam.front().tokens, best.tokens);
    EXPECT_EQ(beam.front().log_prob, best.log_prob);
  }
}

TEST(Beam, ZeroWidthIsAContractError) {
  const CaptionerModel m = random_model(1);
  EXPECT_THROW(beam_search(m, features(1), 0, 4), ContractError);
}

TEST(Exhaustive, CandidateCounting) {
  // Sequences of 0..max_len interior tokens drawn from V-1 ids, then <END>.
  EXPECT_EQ(exhaustive_candidate_count(3, 2), 1.0 + 2.0 + 4.0);
  EXPECT_LE(exhaustive_candidate_count(3, 2), 9.0);
  EXPECT_EQ(exhaustive_candidate_count(6, 4), 1.0 + 5 + 25 + 125 + 625);
}

TEST(Exhaustive, RefusesHugeSearch) {
  const CaptionerModel m = random_model(1, 1.0, 20);
  EXPECT_THROW(exhaustive_decode(m, features(1), 16), RefusalError);
}

TEST(Exhaustive, BeatsEverySuppliedSequence) {
  const CaptionerModel m = random_model(3);
  const auto f = features(3);
  const Decoded best = exhaustive_decode(m, f, 3);
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TokenId> seq{Vocabulary::kStart};
    const std::size_t len = below(rng, 4);
    for (std::size_t i = 0; i < len; ++i) {
      TokenId t = below(rng, 5);
      seq.push_back(t >= Vocabulary::kEnd ? t + 1 : t);
    }
    seq.push_back(Vocabulary::kEnd);
    EXPECT_GE(best.log_prob, sequence_log_prob(m, f, seq));
  }
}

TEST(Decoding, RespectsLengthCap) {
  // A model that never wants to stop still terminates at the cap.
  CaptionerModel m(toy_config(), 1);
  for (auto& e : m.parameters().entries()) {
    if (e.name == "output.b_o") e.tensor.data()[Vocabulary::kEnd] = -50.0;
  }
  const auto f = features(1);
  EXPECT_EQ(greedy_decode(m, f, 3).tokens.size(), 5u);
  for (const Decoded& d : beam_search(m, f, 3, 3)) EXPECT_EQ(d.tokens.size(), 5u);
}

TEST(SequenceLogProb, RejectsMalformedSequences) {
  const CaptionerModel m = random_model(1);
  EXPECT_THROW(sequence_log_prob(m, features(1), {0, 3}), ContractError);
  EXPECT_THROW(sequence_log_prob(m, features(1), {0, 9, 1}), IndexError);
}
