#include "lcnn/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lcnn/errors.hpp"

namespace lcnn {

namespace {

struct Primed {
  Tensor image;
  RecurrentState state;  // r^[0], after the empty-history step
};

Primed prime(const CaptionerModel& model, std::span<const double> features) {
  Primed p;
  p.image = model.project_image(features);
  p.state = model.step({}, p.image, model.initial_state()).state;
  return p;
}

struct Expansion {
  std::vector<double> log_probs;
  RecurrentState state;
};

Expansion expand(const CaptionerModel& model, const Tensor& image, const std::vector<TokenId>& tokens,
                 const RecurrentState& state) {
  StepResult r = model.step(tokens, image, state);
  return {log_softmax(r.logits.data()), std::move(r.state)};
}

bool better(double score_a, const std::vector<TokenId>& a, double score_b, const std::vector<TokenId>& b) {
  if (score_a != score_b) return score_a > score_b;
  return a < b;
}

std::size_t interior_length(const std::vector<TokenId>& tokens) { return tokens.size() - 1; }

}  // namespace

Decoded greedy_decode(const CaptionerModel& model, std::span<const double> features, std::size_t max_len) {
  NoGradScope no_grad;
  Primed p = prime(model, features);
  Decoded out{{Vocabulary::kStart}, 0.0};
  RecurrentState state = std::move(p.state);
  while (true) {
    Expansion e = expand(model, p.image, out.tokens, state);
    TokenId best = Vocabulary::kEnd;
    if (interior_length(out.tokens) < max_len) {
      best = static_cast<TokenId>(std::max_element(e.log_probs.begin(), e.log_probs.end()) - e.log_probs.begin());
    }
    out.log_prob += e.log_probs[best];
    out.tokens.push_back(best);
    if (best == Vocabulary::kEnd) return out;
    state = std::move(e.state);
  }
}

std::vector<Decoded> beam_search(const CaptionerModel& model, std::span<const double> features, std::size_t k,
                                 std::size_t max_len) {
  if (k == 0) throw ContractError("beam_search: beam width must be at least 1");
  NoGradScope no_grad;
  Primed p = prime(model, features);
  std::vector<BeamHypothesis> live{{{Vocabulary::kStart}, 0.0, std::move(p.state), false}};
  std::vector<Decoded> completed;

  struct Candidate {
    std::size_t parent;
    TokenId token;
    double score;
  };

  while (!live.empty() && completed.size() < k) {
    const std::size_t width = k - completed.size();
    std::vector<RecurrentState> next_states;
    std::vector<Candidate> candidates;
    for (std::size_t h = 0; h < live.size(); ++h) {
      Expansion e = expand(model, p.image, live[h].tokens, live[h].state);
      const bool capped = interior_length(live[h].tokens) >= max_len;
      for (TokenId w = 0; w < e.log_probs.size(); ++w) {
        if (capped && w != Vocabulary::kEnd) continue;
        candidates.push_back({h, w, live[h].log_prob + e.log_probs[w]});
      }
      next_states.push_back(std::move(e.state));
    }
    auto order = [&](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      const auto& ta = live[a.parent].tokens;
      const auto& tb = live[b.parent].tokens;
      if (ta != tb) return ta < tb;
      return a.token < b.token;
    };
    const std::size_t keep = std::min(width, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      order);

    std::vector<BeamHypothesis> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& c = candidates[i];
      std::vector<TokenId> tokens = live[c.parent].tokens;
      tokens.push_back(c.token);
      if (c.token == Vocabulary::kEnd) {
        completed.push_back({std::move(tokens), c.score});
      } else {
        next.push_back({std::move(tokens), c.score, next_states[c.parent], false});
      }
    }
    live = std::move(next);
  }

  std::stable_sort(completed.begin(), completed.end(), [](const Decoded& a, const Decoded& b) {
    return better(a.log_prob, a.tokens, b.log_prob, b.tokens);
  });
  return completed;
}

double exhaustive_candidate_count(std::size_t vocab_size, std::size_t max_len) {
  // Interior tokens range over every id except <END>.
  const double branching = static_cast<double>(vocab_size - 1);
  double total = 0.0, level = 1.0;
  for (std::size_t l = 0; l <= max_len; ++l) {
    total += level;
    level *= branching;
  }
  return total;
}

Decoded exhaustive_decode(const CaptionerModel& model, std::span<const double> features, std::size_t max_len,
                          double limit) {
  const double count = exhaustive_candidate_count(model.config().vocab_size, max_len);
  if (count > limit) {
    throw RefusalError("exhaustive_decode: " + std::to_string(count) + " candidate sequences exceed the limit of " +
                       std::to_string(limit));
  }
  NoGradScope no_grad;
  Primed p = prime(model, features);
  Decoded best{{}, -std::numeric_limits<double>::infinity()};

  std::vector<TokenId> prefix{Vocabulary::kStart};
  auto search = [&](auto& self, const RecurrentState& state, double score) -> void {
    Expansion e = expand(model, p.image, prefix, state);
    prefix.push_back(Vocabulary::kEnd);
    const double end_score = score + e.log_probs[Vocabulary::kEnd];
    if (best.tokens.empty() || better(end_score, prefix, best.log_prob, best.tokens)) {
      best = {prefix, end_score};
    }
    prefix.pop_back();
    if (interior_length(prefix) >= max_len) return;
    for (TokenId w = 0; w < e.log_probs.size(); ++w) {
      if (w == Vocabulary::kEnd) continue;
      prefix.push_back(w);
      self(self, e.state, score + e.log_probs[w]);
      prefix.pop_back();
    }
  };
  search(search, p.state, 0.0);
  return best;
}

double sequence_log_prob(const CaptionerModel& model, std::span<const double> features,
                         const std::vector<TokenId>& tokens) {
  if (tokens.size() < 2 || tokens.front() != Vocabulary::kStart || tokens.back() != Vocabulary::kEnd) {
    throw ContractError("sequence_log_prob: sequence must run from <START> to <END>");
  }
  NoGradScope no_grad;
  Primed p = prime(model, features);
  std::vector<TokenId> prefix{Vocabulary::kStart};
  RecurrentState state = std::move(p.state);
  double score = 0.0;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    if (tokens[i] >= model.config().vocab_size) throw IndexError("token out of vocabulary range");
    Expansion e = expand(model, p.image, prefix, state);
    score += e.log_probs[tokens[i]];
    prefix.push_back(tokens[i]);
    state = std::move(e.state);
  }
  return score;
}

}  // namespace lcnn
