#pragma once

// Corpus-level BLEU-n and CIDEr over tokenized captions.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace lcnn {

using Tokens = std::vector<std::string>;

struct ClippedCounts {
  std::size_t clipped = 0;
  std::size_t total = 0;
};

// Corpus sums of clipped n-gram matches and candidate n-gram counts for one n.
ClippedCounts modified_precision(std::span<const Tokens> candidates,
                                 std::span<const std::vector<Tokens>> references, std::size_t n);

// Geometric mean of clipped precisions 1..n (uniform weights) times the
// brevity penalty exp(min(0, 1 - r/c)), r summed over closest-length
// references (shorter on ties).
double bleu(std::span<const Tokens> candidates, std::span<const std::vector<Tokens>> references, std::size_t n);

// Per-pair CIDEr: for n = 1..4, TF-IDF n-gram vectors with
// IDF = log(|reference sets| / max(1, df)); cosine against each reference,
// clamped to [0, 1] and averaged over references; 10 x mean over n.
std::vector<double> cider_scores(std::span<const Tokens> candidates,
                                 std::span<const std::vector<Tokens>> references);

// Mean of cider_scores, summed in ascending order so the result does not
// depend on pair order.
double cider(std::span<const Tokens> candidates, std::span<const std::vector<Tokens>> references);

struct MetricReport {
  std::array<double, 4> bleu{};
  double cider = 0.0;
};

MetricReport evaluate_metrics(std::span<const Tokens> candidates, std::span<const std::vector<Tokens>> references);

// `metric<TAB>value` lines: BLEU-1..4, CIDEr (0-10 scale), CIDEr_table (x10,
// the percentage scale captioning tables use).
void write_metric_report(const MetricReport& report, std::ostream& out);

// Raw caption text, normalized the same way training captions are.
Tokens scoring_tokens(const std::string& text);
MetricReport evaluate_text(const std::vector<std::string>& candidates,
                           const std::vector<std::vector<std::string>>& references);

}  // namespace lcnn
