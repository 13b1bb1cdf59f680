#pragma once

// Caption preprocessing, vocabulary, image-feature storage and the synthetic
// corpus used for desk-scale experiments.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lcnn {

using TokenId = std::size_t;

inline constexpr std::size_t kDefaultMinCount = 5;
inline constexpr std::size_t kDefaultMaxWords = 16;

inline constexpr std::string_view kStartToken = "<START>";
inline constexpr std::string_view kEndToken = "<END>";
inline constexpr std::string_view kUnknownToken = "<UNK>";

// Lowercases, drops every character that is neither a letter nor whitespace,
// and splits on whitespace. Digits and punctuation are removed.
std::vector<std::string> normalize_caption(std::string_view raw);

class Vocabulary {
 public:
  static constexpr TokenId kStart = 0;
  static constexpr TokenId kEnd = 1;
  static constexpr TokenId kUnknown = 2;
  static constexpr std::size_t kNumSpecial = 3;

  // Special tokens first, then surviving words by descending count with ties
  // broken lexicographically. The result does not depend on caption order.
  static Vocabulary build(const std::vector<std::string>& captions, std::size_t min_count = kDefaultMinCount);

  // Rebuilds from persisted (token, count) entries in index order.
  static Vocabulary from_entries(const std::vector<std::pair<std::string, std::size_t>>& entries);

  std::size_t size() const { return tokens_.size(); }
  TokenId index_of(std::string_view token) const;  // <UNK> when absent
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t count(TokenId id) const;
  std::size_t min_count() const { return min_count_; }

  std::vector<TokenId> encode_words(const std::vector<std::string>& words) const;
  // Maps ids to words, dropping <START>/<END>.
  std::vector<std::string> decode(const std::vector<TokenId>& ids) const;
  std::string decode_text(const std::vector<TokenId>& ids) const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  // Same tokens in the same order with the same counts.
  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.counts_ == b.counts_;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> counts_;
  std::map<std::string, TokenId, std::less<>> index_;
  std::size_t min_count_ = 1;
};

struct CaptionRecord {
  std::string image_id;
  // <START>, interior words, <END>.
  std::vector<TokenId> tokens;
};

// <START> + at most max_words interior tokens + <END>.
std::vector<TokenId> encode_caption(const Vocabulary& vocab, std::string_view raw,
                                    std::size_t max_words = kDefaultMaxWords);

class FeatureStore {
 public:
  FeatureStore() = default;
  explicit FeatureStore(std::size_t dim) : dim_(dim) {}

  void add(const std::string& image_id, std::vector<double> features);
  const std::vector<double>& at(const std::string& image_id) const;  // MissingFeatureError
  bool contains(const std::string& image_id) const { return features_.count(image_id) != 0; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  // Insertion order.
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::vector<double>> features_;
};

struct RawCaption {
  std::string image_id;
  std::string text;
};

// `image_id<TAB>f1,f2,...,fD` per line.
FeatureStore load_features(const std::filesystem::path& path);
void save_features(const FeatureStore& store, const std::filesystem::path& path);
// `image_id<TAB>caption` per line; an image may appear on several lines.
std::vector<RawCaption> load_captions(const std::filesystem::path& path);
void save_captions(const std::vector<RawCaption>& captions, const std::filesystem::path& path);

std::vector<CaptionRecord> encode_records(const Vocabulary& vocab, const std::vector<RawCaption>& captions,
                                          std::size_t max_words = kDefaultMaxWords);

struct SynthCorpus {
  std::vector<RawCaption> captions;
  FeatureStore features;
};

// Each synthetic image has latent attributes: one of four sentence templates,
// plus a colour, object, action and place each drawn from `grammar_size`
// choices. Its feature vector is the concatenation of one-hot codes of those
// attributes (dimension 4 + 4 * grammar_size), so the caption is a
// deterministic function of the features.
SynthCorpus synth_corpus(std::uint64_t seed, std::size_t n_images, std::size_t grammar_size = 8);

// image_id -> "train" | "val" | "test". A seeded shuffle puts max(1, n/10)
// images in each of val and test when n >= 3; smaller corpora are all train.
using SplitManifest = std::vector<std::pair<std::string, std::string>>;
SplitManifest assign_splits(const std::vector<std::string>& ids, std::uint64_t seed);
// `image_id<TAB>split` per line.
void save_splits(const SplitManifest& splits, const std::filesystem::path& path);
SplitManifest load_splits(const std::filesystem::path& path);

}  // namespace lcnn
