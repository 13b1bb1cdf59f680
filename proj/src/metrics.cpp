#include "lcnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include "lcnn/data.hpp"
#include "lcnn/errors.hpp"

namespace lcnn {

namespace {

using NgramCounts = std::map<std::string, std::size_t>;

NgramCounts ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t j = 1; j < n; ++j) {
      key += '\x1f';
      key += tokens[i + j];
    }
    ++counts[key];
  }
  return counts;
}

void check_corpus(std::span<const Tokens> candidates, std::span<const std::vector<Tokens>> references,
                  const char* who) {
  if (candidates.empty()) throw ContractError(std::string(who) + ": empty candidate corpus");
  if (candidates.size() != references.size()) {
    throw ContractError(std::string(who) + ": candidate and reference counts differ");
  }
  for (const auto& refs : references) {
    if (refs.empty()) throw ContractError(std::string(who) + ": every candidate needs at least one reference");
  }
}

void check_order(std::size_t n) {
  if (n < 1 || n > 4) throw ContractError("n-gram order must be between 1 and 4");
}

std::size_t closest_length(std::size_t c, const std::vector<Tokens>& refs) {
  std::size_t best = refs.front().size();
  for (const Tokens& r : refs) {
    const auto diff = [c](std::size_t len) { return len > c ? len - c : c - len; };
    if (diff(r.size()) < diff(best) || (diff(r.size()) == diff(best) && r.size() < best)) best = r.size();
  }
  return best;
}

}  // namespace

ClippedCounts modified_precision(std::span<const Tokens> candidates,
                                 std::span<const std::vector<Tokens>> references, std::size_t n) {
  check_corpus(candidates, references, "modified_precision");
  check_order(n);
  ClippedCounts out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    NgramCounts max_ref;
    for (const Tokens& ref : references[i]) {
      for (const auto& [g, c] : ngrams(ref, n)) max_ref[g] = std::max(max_ref[g], c);
    }
    for (const auto& [g, c] : ngrams(candidates[i], n)) {
      out.total += c;
      const auto it = max_ref.find(g);
      if (it != max_ref.end()) out.clipped += std::min(c, it->second);
    }
  }
  return out;
}

double bleu(std::span<const Tokens> candidates, std::span<const std::vector<Tokens>> references, std::size_t n) {
  check_corpus(candidates, references, "bleu");
  check_order(n);
  double log_sum = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const ClippedCounts counts = modified_precision(candidates, references, k);
    if (counts.total == 0 || counts.clipped == 0) return 0.0;
    log_sum += std::log(static_cast<double>(counts.clipped) / static_cast<double>(counts.total));
  }
  std::size_t c = 0, r = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    c += candidates[i].size();
    r += closest_length(candidates[i].size(), references[i]);
  }
  if (c == 0) return 0.0;
  const double brevity = std::exp(std::min(0.0, 1.0 - static_cast<double>(r) / static_cast<double>(c)));
  return brevity * std::exp(log_sum / static_cast<double>(n));
}

std::vector<double> cider_scores(std::span<const Tokens> candidates,
                                 std::span<const std::vector<Tokens>> references) {
  check_corpus(candidates, references, "cider");
  constexpr std::size_t kMaxN = 4;
  const double num_sets = static_cast<double>(references.size());

  // Document frequency: number of reference sets containing the n-gram.
  std::array<std::map<std::string, std::size_t>, kMaxN> df;
  for (const auto& refs : references) {
    for (std::size_t n = 1; n <= kMaxN; ++n) {
      NgramCounts seen;
      for (const Tokens& r : refs) {
        for (const auto& entry : ngrams(r, n)) seen.insert(entry);
      }
      for (const auto& entry : seen) ++df[n - 1][entry.first];
    }
  }
  auto tfidf = [&](const NgramCounts& counts, std::size_t n) {
    std::map<std::string, double> vec;
    for (const auto& [g, c] : counts) {
      const auto it = df[n - 1].find(g);
      const double freq = it == df[n - 1].end() ? 0.0 : static_cast<double>(it->second);
      vec[g] = static_cast<double>(c) * std::log(num_sets / std::max(1.0, freq));
    }
    return vec;
  };
  auto norm = [](const std::map<std::string, double>& v) {
    double s = 0.0;
    for (const auto& entry : v) s += entry.second * entry.second;
    return std::sqrt(s);
  };

  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double total = 0.0;
    for (std::size_t n = 1; n <= kMaxN; ++n) {
      const auto cand = tfidf(ngrams(candidates[i], n), n);
      const double cand_norm = norm(cand);
      double per_n = 0.0;
      for (const Tokens& r : references[i]) {
        const auto ref = tfidf(ngrams(r, n), n);
        const double ref_norm = norm(ref);
        if (cand_norm == 0.0 || ref_norm == 0.0) continue;
        double dot = 0.0;
        for (const auto& [g, w] : cand) {
          const auto it = ref.find(g);
          if (it != ref.end()) dot += w * it->second;
        }
        per_n += std::clamp(dot / (cand_norm * ref_norm), 0.0, 1.0);
      }
      total += per_n / static_cast<double>(references[i].size());
    }
    scores.push_back(10.0 * total / static_cast<double>(kMaxN));
  }
  return scores;
}

double cider(std::span<const Tokens> candidates, std::span<const std::vector<Tokens>> references) {
  std::vector<double> scores = cider_scores(candidates, references);
  std::sort(scores.begin(), scores.end());
  double total = 0.0;
  for (double s : scores) total += s;
  return total / static_cast<double>(scores.size());
}

MetricReport evaluate_metrics(std::span<const Tokens> candidates, std::span<const std::vector<Tokens>> references) {
  MetricReport report;
  for (std::size_t n = 1; n <= 4; ++n) report.bleu[n - 1] = bleu(candidates, references, n);
  report.cider = cider(candidates, references);
  return report;
}

void write_metric_report(const MetricReport& report, std::ostream& out) {
  const auto old_precision = out.precision(6);
  for (std::size_t n = 1; n <= 4; ++n) out << "BLEU-" << n << '\t' << report.bleu[n - 1] << '\n';
  out << "CIDEr\t" << report.cider << '\n';
  out << "CIDEr_table\t" << report.cider * 10.0 << '\n';
  out.precision(old_precision);
}

Tokens scoring_tokens(const std::string& text) { return normalize_caption(text); }

MetricReport evaluate_text(const std::vector<std::string>& candidates,
                           const std::vector<std::vector<std::string>>& references) {
  std::vector<Tokens> cands;
  std::vector<std::vector<Tokens>> refs;
  for (const auto& c : candidates) cands.push_back(scoring_tokens(c));
  for (const auto& set : references) {
    auto& out = refs.emplace_back();
    for (const auto& r : set) out.push_back(scoring_tokens(r));
  }
  return evaluate_metrics(cands, refs);
}

}  // namespace lcnn
