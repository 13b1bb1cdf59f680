#include "lcnn/data.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "lcnn/errors.hpp"
#include "lcnn/random.hpp"

namespace lcnn {

std::vector<std::string> normalize_caption(std::string_view raw) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : raw) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalpha(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (std::isspace(c)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

// ---- Vocabulary --------------------------------------------------------------

Vocabulary Vocabulary::build(const std::vector<std::string>& captions, std::size_t min_count) {
  if (min_count == 0) throw ContractError("min_count must be at least 1");
  std::map<std::string, std::size_t> counts;
  for (const std::string& caption : captions) {
    for (std::string& word : normalize_caption(caption)) ++counts[std::move(word)];
  }
  if (counts.empty()) throw EmptyVocabularyError("cannot build a vocabulary from an empty corpus");

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [word, n] : counts) {
    if (n >= min_count) kept.emplace_back(word, n);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::pair<std::string, std::size_t>> entries{
      {std::string(kStartToken), 0}, {std::string(kEndToken), 0}, {std::string(kUnknownToken), 0}};
  entries.insert(entries.end(), kept.begin(), kept.end());
  Vocabulary v = from_entries(entries);
  v.min_count_ = min_count;
  return v;
}

Vocabulary Vocabulary::from_entries(const std::vector<std::pair<std::string, std::size_t>>& entries) {
  if (entries.size() < kNumSpecial || entries[kStart].first != kStartToken ||
      entries[kEnd].first != kEndToken || entries[kUnknown].first != kUnknownToken) {
    throw ParseError("vocabulary must begin with <START>, <END>, <UNK>");
  }
  Vocabulary v;
  std::size_t smallest = 0;
  for (const auto& [token, n] : entries) {
    if (!v.index_.emplace(token, v.tokens_.size()).second) {
      throw ParseError("duplicate vocabulary token '" + token + "'");
    }
    v.tokens_.push_back(token);
    v.counts_.push_back(n);
    if (v.tokens_.size() > kNumSpecial) smallest = smallest == 0 ? n : std::min(smallest, n);
  }
  v.min_count_ = std::max<std::size_t>(1, smallest);
  return v;
}

TokenId Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnknown : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.find(token) != index_.end(); }

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) throw IndexError("token id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::size_t Vocabulary::count(TokenId id) const {
  if (id >= counts_.size()) throw IndexError("token id " + std::to_string(id) + " out of range");
  return counts_[id];
}

std::vector<TokenId> Vocabulary::encode_words(const std::vector<std::string>& words) const {
  std::vector<TokenId> ids;
  ids.reserve(words.size());
  for (const std::string& w : words) ids.push_back(index_of(w));
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<TokenId>& ids) const {
  std::vector<std::string> words;
  for (TokenId id : ids) {
    if (id == kStart || id == kEnd) continue;
    words.push_back(token(id));
  }
  return words;
}

std::string Vocabulary::decode_text(const std::vector<TokenId>& ids) const {
  std::string text;
  for (const std::string& w : decode(ids)) {
    if (!text.empty()) text.push_back(' ');
    text += w;
  }
  return text;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t i = 0; i < tokens_.size(); ++i) out << i << '\t' << tokens_[i] << '\t' << counts_[i] << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open vocabulary " + path.string());
  std::vector<std::pair<std::string, std::size_t>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string index, token, count;
    if (!std::getline(fields, index, '\t') || !std::getline(fields, token, '\t') ||
        !std::getline(fields, count, '\t')) {
      throw ParseError("vocabulary line needs index, token and count", line_no);
    }
    std::size_t idx = 0, n = 0;
    auto r1 = std::from_chars(index.data(), index.data() + index.size(), idx);
    auto r2 = std::from_chars(count.data(), count.data() + count.size(), n);
    if (r1.ec != std::errc() || r2.ec != std::errc() || idx != entries.size()) {
      throw ParseError("bad vocabulary entry", line_no);
    }
    entries.emplace_back(token, n);
  }
  return from_entries(entries);
}

std::vector<TokenId> encode_caption(const Vocabulary& vocab, std::string_view raw, std::size_t max_words) {
  std::vector<std::string> words = normalize_caption(raw);
  if (words.size() > max_words) words.resize(max_words);
  std::vector<TokenId> ids{Vocabulary::kStart};
  for (TokenId id : vocab.encode_words(words)) ids.push_back(id);
  ids.push_back(Vocabulary::kEnd);
  return ids;
}

std::vector<CaptionRecord> encode_records(const Vocabulary& vocab, const std::vector<RawCaption>& captions,
                                          std::size_t max_words) {
  std::vector<CaptionRecord> records;
  records.reserve(captions.size());
  for (const RawCaption& c : captions) records.push_back({c.image_id, encode_caption(vocab, c.text, max_words)});
  return records;
}

// ---- features ---------------------------------------------------------------

void FeatureStore::add(const std::string& image_id, std::vector<double> features) {
  if (ids_.empty() && dim_ == 0) dim_ = features.size();
  if (features.size() != dim_ || dim_ == 0) {
    throw DimensionError("feature vector for '" + image_id + "' has " + std::to_string(features.size()) +
                         " values, store expects " + std::to_string(dim_));
  }
  if (!features_.emplace(image_id, std::move(features)).second) {
    throw ParseError("duplicate image id '" + image_id + "'");
  }
  ids_.push_back(image_id);
}

const std::vector<double>& FeatureStore::at(const std::string& image_id) const {
  auto it = features_.find(image_id);
  if (it == features_.end()) throw MissingFeatureError("no features for image '" + image_id + "'");
  return it->second;
}

FeatureStore load_features(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open feature file " + path.string());
  FeatureStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) throw ParseError("expected image_id<TAB>values", line_no);
    std::vector<double> values;
    const char* p = line.data() + tab + 1;
    const char* end = line.data() + line.size();
    while (p < end) {
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw ParseError("malformed feature value", line_no);
      values.push_back(v);
      p = next;
      if (p < end) {
        if (*p != ',') throw ParseError("expected ',' between feature values", line_no);
        ++p;
        if (p == end) throw ParseError("trailing ',' in feature values", line_no);
      }
    }
    try {
      store.add(line.substr(0, tab), std::move(values));
    } catch (const std::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return store;
}

void save_features(const FeatureStore& store, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::array<char, 64> buf{};
  for (const std::string& id : store.ids()) {
    out << id << '\t';
    const auto& values = store.at(id);
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out << ',';
      auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), values[i]);
      out.write(buf.data(), ptr - buf.data());
    }
    out << '\n';
  }
}

std::vector<RawCaption> load_captions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open caption file " + path.string());
  std::vector<RawCaption> captions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) throw ParseError("expected image_id<TAB>caption", line_no);
    captions.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return captions;
}

void save_captions(const std::vector<RawCaption>& captions, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const RawCaption& c : captions) out << c.image_id << '\t' << c.text << '\n';
}

// ---- synthetic corpus ---------------------------------------------------------

namespace {

constexpr std::array<std::string_view, 16> kColours{
    "red", "blue", "green", "yellow", "black", "white", "brown", "orange",
    "purple", "pink", "grey", "golden", "silver", "striped", "spotted", "pale"};
constexpr std::array<std::string_view, 16> kObjects{
    "dog", "cat", "horse", "bird", "car", "boat", "train", "kite",
    "bicycle", "sheep", "truck", "ball", "bear", "cow", "bus", "zebra"};
constexpr std::array<std::string_view, 16> kActions{
    "running", "sitting", "standing", "jumping", "sleeping", "waiting", "resting", "moving",
    "playing", "turning", "parked", "floating", "rolling", "walking", "lying", "flying"};
constexpr std::array<std::string_view, 16> kPlaces{
    "in the park", "on the beach", "near the river", "on the street", "in the snow", "by the lake",
    "in a field", "on the grass", "under a tree", "in the city", "at the station", "near a fence",
    "on a hill", "in the water", "on the road", "in the yard"};
constexpr std::size_t kTemplates = 4;

std::string render(std::size_t tmpl, std::string_view colour, std::string_view object, std::string_view action,
                   std::string_view place) {
  std::ostringstream os;
  switch (tmpl) {
    case 0: os << "a " << colour << ' ' << object << ' ' << action << ' ' << place; break;
    case 1: os << "the " << object << " is " << colour << " and " << action << ' ' << place; break;
    case 2: os << place << " a " << colour << ' ' << object << " is " << action; break;
    default: os << "there is a " << colour << ' ' << object << ' ' << action << ' ' << place; break;
  }
  return os.str();
}

}  // namespace

SynthCorpus synth_corpus(std::uint64_t seed, std::size_t n_images, std::size_t grammar_size) {
  if (n_images == 0) throw ContractError("synth_corpus: n_images must be positive");
  if (grammar_size == 0 || grammar_size > kColours.size()) {
    throw ContractError("synth_corpus: grammar_size must be in [1, " + std::to_string(kColours.size()) + "]");
  }
  Rng rng(seed);
  const std::size_t dim = kTemplates + 4 * grammar_size;
  SynthCorpus corpus{{}, FeatureStore(dim)};
  for (std::size_t i = 0; i < n_images; ++i) {
    const std::size_t tmpl = below(rng, kTemplates);
    const std::size_t colour = below(rng, grammar_size);
    const std::size_t object = below(rng, grammar_size);
    const std::size_t action = below(rng, grammar_size);
    const std::size_t place = below(rng, grammar_size);

    std::vector<double> features(dim, 0.0);
    features[tmpl] = 1.0;
    features[kTemplates + colour] = 1.0;
    features[kTemplates + grammar_size + object] = 1.0;
    features[kTemplates + 2 * grammar_size + action] = 1.0;
    features[kTemplates + 3 * grammar_size + place] = 1.0;

    std::ostringstream id;
    id << "img" << i;
    corpus.captions.push_back(
        {id.str(), render(tmpl, kColours[colour], kObjects[object], kActions[action], kPlaces[place])});
    corpus.features.add(id.str(), std::move(features));
  }
  return corpus;
}

SplitManifest assign_splits(const std::vector<std::string>& ids, std::uint64_t seed) {
  std::vector<std::size_t> order(ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  shuffle(order, rng);
  const std::size_t held_out = ids.size() >= 3 ? std::max<std::size_t>(1, ids.size() / 10) : 0;
  std::vector<std::string> split(ids.size(), "train");
  for (std::size_t i = 0; i < held_out; ++i) {
    split[order[i]] = "val";
    split[order[held_out + i]] = "test";
  }
  SplitManifest out;
  for (std::size_t i = 0; i < ids.size(); ++i) out.emplace_back(ids[i], split[i]);
  return out;
}

void save_splits(const SplitManifest& splits, const std::filesystem::path& path) {
  std::ofstream out(path);
  for (const auto& [id, split] : splits) out << id << '\t' << split << '\n';
  if (!out) throw ParseError("cannot write " + path.string());
}

SplitManifest load_splits(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open split manifest " + path.string());
  SplitManifest out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("expected 'image_id<TAB>split'", number);
    std::string split = line.substr(tab + 1);
    if (split != "train" && split != "val" && split != "test") throw ParseError("unknown split '" + split + "'", number);
    out.emplace_back(line.substr(0, tab), std::move(split));
  }
  return out;
}

}  // namespace lcnn
