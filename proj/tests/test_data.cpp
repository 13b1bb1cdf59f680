#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "lcnn/data.hpp"
#include "lcnn/errors.hpp"
#include "lcnn/random.hpp"

using namespace lcnn;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lcnn_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Normalize, LowercasesAndStripsNonLetters) {
  EXPECT_EQ(normalize_caption("A cat!!"), (std::vector<std::string>{"a", "cat"}));
  EXPECT_EQ(normalize_caption("  Two\tdogs,\n 3 balls "), (std::vector<std::string>{"two", "dogs", "balls"}));
  EXPECT_EQ(normalize_caption("don't"), (std::vector<std::string>{"dont"}));
  EXPECT_TRUE(normalize_caption("?! 42").empty());
}

TEST(Vocabulary, MinCountOne) {
  const Vocabulary v = Vocabulary::build({"a cat", "a dog"}, 1);
  EXPECT_EQ(v.size(), 6u);
  EXPECT_EQ(v.token(0), "<START>");
  EXPECT_EQ(v.token(1), "<END>");
  EXPECT_EQ(v.token(2), "<UNK>");
  // Descending count, then lexicographic.
  EXPECT_EQ(v.token(3), "a");
  EXPECT_EQ(v.token(4), "cat");
  EXPECT_EQ(v.token(5), "dog");
  EXPECT_EQ(v.count(3), 2u);
}

TEST(Vocabulary, MinCountTwoMapsRareWordsToUnknown) {
  const Vocabulary v = Vocabulary::build({"a cat", "a dog"}, 2);
  EXPECT_EQ(v.size(), 4u);
  EXPECT_TRUE(v.contains("a"));
  EXPECT_EQ(v.index_of("cat"), Vocabulary::kUnknown);
  EXPECT_EQ(v.index_of("dog"), Vocabulary::kUnknown);
}

TEST(Vocabulary, Errors) {
  EXPECT_THROW(Vocabulary::build({}, 1), EmptyVocabularyError);
  EXPECT_THROW(Vocabulary::build({"!!", "12"}, 1), EmptyVocabularyError);
  EXPECT_THROW(Vocabulary::build({"a"}, 0), ContractError);
  EXPECT_THROW(Vocabulary::build({"a"}, 1).token(4), IndexError);
}

TEST(Vocabulary, IndependentOfCaptionOrder) {
  std::vector<std::string> captions;
  for (const RawCaption& c : synth_corpus(5, 40).captions) captions.push_back(c.text);
  const Vocabulary reference = Vocabulary::build(captions, 2);
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    shuffle(captions, rng);
    EXPECT_EQ(Vocabulary::build(captions, 2), reference);
  }
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  const fs::path dir = scratch_dir("vocab");
  const Vocabulary v = Vocabulary::build({"a cat sat", "a dog sat on a mat"}, 1);
  v.save(dir / "vocab.tsv");
  EXPECT_EQ(Vocabulary::load(dir / "vocab.tsv"), v);
  std::ofstream(dir / "bad.tsv") << "0\t<START>\t0\n1\t<END>\n";
  try {
    Vocabulary::load(dir / "bad.tsv");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(EncodeCaption, AddsMarkers) {
  const Vocabulary v = Vocabulary::build({"a cat", "a dog"}, 1);
  EXPECT_EQ(encode_caption(v, "a cat"), (std::vector<TokenId>{0, 3, 4, 1}));
  EXPECT_EQ(encode_caption(v, "a zebra"), (std::vector<TokenId>{0, 3, Vocabulary::kUnknown, 1}));
}

TEST(EncodeCaption, TruncatesToSixteenWords) {
  std::string caption;
  for (int i = 0; i < 20; ++i) caption += "a ";
  const Vocabulary v = Vocabulary::build({caption}, 1);
  const auto ids = encode_caption(v, caption, kDefaultMaxWords);
  EXPECT_EQ(ids.size(), 18u);
  EXPECT_EQ(ids.back(), Vocabulary::kEnd);
}

TEST(EncodeCaption, DecodeInvertsEncodeForKnownWords) {
  const SynthCorpus corpus = synth_corpus(3, 30);
  std::vector<std::string> texts;
  for (const RawCaption& c : corpus.captions) texts.push_back(c.text);
  const Vocabulary v = Vocabulary::build(texts, 1);
  for (const std::string& t : texts) EXPECT_EQ(v.decode(encode_caption(v, t)), normalize_caption(t));
}

TEST(Features, TsvRoundTripIsExact) {
  const fs::path dir = scratch_dir("features");
  FeatureStore store(3);
  Rng rng(4);
  for (int i = 0; i < 5; ++i) store.add("img" + std::to_string(i), {uniform01(rng), -uniform01(rng) * 1e-30, 1.0 / 3.0});
  save_features(store, dir / "f.tsv");
  const FeatureStore loaded = load_features(dir / "f.tsv");
  ASSERT_EQ(loaded.ids(), store.ids());
  for (const auto& id : store.ids()) EXPECT_EQ(loaded.at(id), store.at(id));
  EXPECT_THROW(loaded.at("nope"), MissingFeatureError);
}

TEST(Features, Errors) {
  FeatureStore store(2);
  store.add("a", {1, 2});
  EXPECT_THROW(store.add("b", {1, 2, 3}), DimensionError);
  EXPECT_THROW(store.add("a", {1, 2}), ParseError);
  const fs::path dir = scratch_dir("features_bad");
  std::ofstream(dir / "f.tsv") << "a\t1,2\nb\t1,x\n";
  try {
    load_features(dir / "f.tsv");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Captions, TsvRoundTrip) {
  const fs::path dir = scratch_dir("captions");
  const std::vector<RawCaption> caps = {{"a", "A cat."}, {"a", "a kitten"}, {"b", "dog"}};
  save_captions(caps, dir / "c.tsv");
  const auto loaded = load_captions(dir / "c.tsv");
  ASSERT_EQ(loaded.size(), caps.size());
  for (std::size_t i = 0; i < caps.size(); ++i) {
    EXPECT_EQ(loaded[i].image_id, caps[i].image_id);
    EXPECT_EQ(loaded[i].text, caps[i].text);
  }
}

TEST(Synth, DeterministicPerSeed) {
  const fs::path dir = scratch_dir("synth");
  for (int run = 0; run < 2; ++run) {
    const SynthCorpus c = synth_corpus(7, 32, 8);
    save_captions(c.captions, dir / ("c" + std::to_string(run)));
    save_features(c.features, dir / ("f" + std::to_string(run)));
  }
  EXPECT_EQ(slurp(dir / "c0"), slurp(dir / "c1"));
  EXPECT_EQ(slurp(dir / "f0"), slurp(dir / "f1"));
  const SynthCorpus other = synth_corpus(8, 32, 8);
  save_captions(other.captions, dir / "c2");
  EXPECT_NE(slurp(dir / "c0"), slurp(dir / "c2"));
}

TEST(Synth, SizesAndFeatureEncoding) {
  const SynthCorpus c = synth_corpus(7, 32, 8);
  EXPECT_EQ(c.captions.size(), 32u);
  EXPECT_EQ(c.features.size(), 32u);
  EXPECT_EQ(c.features.dim(), 4u + 4u * 8u);
  for (const auto& id : c.features.ids()) {
    const auto& f = c.features.at(id);
    EXPECT_EQ(std::count(f.begin(), f.end(), 1.0), 5);
  }
  EXPECT_THROW(synth_corpus(7, 0), ContractError);
  EXPECT_THROW(synth_corpus(7, 4, 17), ContractError);
}

TEST(Synth, CaptionIsAFunctionOfFeatures) {
  const SynthCorpus c = synth_corpus(11, 200, 4);
  std::map<std::vector<double>, std::string> seen;
  for (const RawCaption& r : c.captions) {
    auto [it, inserted] = seen.emplace(c.features.at(r.image_id), r.text);
    if (!inserted) EXPECT_EQ(it->second, r.text);
  }
}

TEST(Splits, PartitionAndRoundTrip) {
  std::vector<std::string> ids;
  for (int i = 0; i < 32; ++i) ids.push_back("img" + std::to_string(i));
  const SplitManifest s = assign_splits(ids, 7);
  std::map<std::string, int> counts;
  for (const auto& [id, split] : s) ++counts[split];
  EXPECT_EQ(counts["val"], 3);
  EXPECT_EQ(counts["test"], 3);
  EXPECT_EQ(counts["train"], 26);
  const fs::path dir = scratch_dir("splits");
  save_splits(s, dir / "s.tsv");
  EXPECT_EQ(load_splits(dir / "s.tsv"), s);
  EXPECT_EQ(assign_splits({"a", "b"}, 1), (SplitManifest{{"a", "train"}, {"b", "train"}}));
}
