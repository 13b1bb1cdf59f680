#include "lcnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>

#include "lcnn/decoder.hpp"
#include "lcnn/errors.hpp"
#include "lcnn/metrics.hpp"

namespace lcnn {

void adam_update(ParameterSet& params, AdamState& state, double lr) {
  auto& entries = params.entries();
  if (state.first_moment.empty()) {
    for (const auto& e : entries) {
      state.first_moment.emplace_back(e.tensor.size(), 0.0);
      state.second_moment.emplace_back(e.tensor.size(), 0.0);
    }
  }
  if (state.first_moment.size() != entries.size()) {
    throw DimensionError("Adam state does not match the parameter set");
  }
  for (std::size_t p = 0; p < entries.size(); ++p) {
    if (state.first_moment[p].size() != entries[p].tensor.size()) {
      throw DimensionError("Adam moments for '" + entries[p].name + "' have the wrong size");
    }
    for (double g : entries[p].tensor.grad()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter '" + entries[p].name + "'");
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t p = 0; p < entries.size(); ++p) {
    auto value = entries[p].tensor.data();
    auto grad = entries[p].tensor.grad();
    auto& m = state.first_moment[p];
    auto& v = state.second_moment[p];
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * grad[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

double lr_at(const RestartSchedule& s, double epoch) {
  if (epoch < 0.0) throw ContractError("lr_at: epoch must be non-negative");
  double start = 0.0;
  double period = s.period;
  while (epoch >= start + period) {
    start += period;
    period *= s.period_mult;
  }
  const double progress = (epoch - start) / period;
  return s.floor_lr + (s.base_lr - s.floor_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double global_grad_norm(const ParameterSet& params) {
  double sq = 0.0;
  for (const auto& e : params.entries()) {
    for (double g : e.tensor.grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_grad_norm(ParameterSet& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (max_norm > 0.0 && norm > max_norm && std::isfinite(norm)) {
    const double scale = max_norm / norm;
    for (auto& e : params.entries()) {
      for (double& g : e.tensor.grad()) g *= scale;
    }
  }
  return norm;
}

void TrainConfig::validate() const {
  if (!(base_lr > 0.0)) throw ContractError("train.lr must be positive");
  if (epochs == 0) throw ContractError("train.epochs must be positive");
  if (batch_size == 0) throw ContractError("train.batch_size must be positive");
  if (patience == 0) throw ContractError("train.patience must be at least 1");
  if (beam_size == 0) throw ContractError("train.beam must be at least 1");
  if (max_len == 0) throw ContractError("train.max_len must be positive");
  if (!(restart_period > 0.0) || !(restart_mult >= 1.0)) throw ContractError("invalid restart schedule");
  if (!(floor_ratio >= 0.0 && floor_ratio <= 1.0)) throw ContractError("train.floor_ratio must be in [0, 1]");
  if (clip_norm < 0.0) throw ContractError("train.clip_norm must be non-negative");
}

RestartSchedule TrainConfig::schedule() const {
  return {base_lr, restart_period, restart_mult, base_lr * floor_ratio};
}

void write_report(const TrainReport& report, std::ostream& out) {
  const auto old_precision = out.precision(10);
  for (const EpochLog& e : report.epochs) {
    out << e.epoch << '\t' << e.lr << '\t' << e.train_loss << '\t' << e.val_cider << '\t' << e.val_bleu4 << '\n';
  }
  out.precision(old_precision);
}

double evaluate_loss(const CaptionerModel& model, const Dataset& data) {
  NoGradScope no_grad;
  double total = 0.0;
  std::size_t tokens = 0;
  for (const CaptionRecord& r : data.records) {
    total += model.sequence_loss(r, data.features->at(r.image_id)).item();
    tokens += r.tokens.size();
  }
  return tokens ? total / static_cast<double>(tokens) : 0.0;
}

namespace {

Tokens id_tokens(const std::vector<TokenId>& ids) {
  Tokens out;
  for (TokenId id : ids) {
    if (id == Vocabulary::kStart || id == Vocabulary::kEnd) continue;
    out.push_back(std::to_string(id));
  }
  return out;
}

}  // namespace

std::pair<double, double> evaluate_captions(const CaptionerModel& model, const Dataset& data,
                                            std::size_t beam_size, std::size_t max_len) {
  std::map<std::string, std::vector<Tokens>> references;
  std::vector<std::string> order;
  for (const CaptionRecord& r : data.records) {
    auto [it, inserted] = references.try_emplace(r.image_id);
    if (inserted) order.push_back(r.image_id);
    it->second.push_back(id_tokens(r.tokens));
  }
  std::vector<Tokens> candidates;
  std::vector<std::vector<Tokens>> reference_sets;
  for (const std::string& id : order) {
    const auto ranked = beam_search(model, data.features->at(id), beam_size, max_len);
    candidates.push_back(id_tokens(ranked.front().tokens));
    reference_sets.push_back(references[id]);
  }
  return {cider(candidates, reference_sets), bleu(candidates, reference_sets, 4)};
}

TrainReport train(CaptionerModel& model, const Dataset& train_set, const Dataset& validation,
                  const TrainConfig& config, const Validator& validator,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  if (train_set.records.empty() || train_set.features == nullptr) throw ContractError("empty training split");
  if (validation.records.empty() || validation.features == nullptr) throw ContractError("empty validation split");
  for (const Dataset* d : {&train_set, &validation}) {
    for (const CaptionRecord& r : d->records) d->features->at(r.image_id);
  }

  const Validator validate = validator ? validator : Validator([&](const CaptionerModel& m) {
    return evaluate_captions(m, validation, config.beam_size, config.max_len);
  });

  ParameterSet& params = model.parameters();
  const RestartSchedule schedule = config.schedule();
  AdamState adam;
  Rng rng(config.seed);
  Rng* dropout_rng = model.config().dropout > 0.0 ? &rng : nullptr;

  TrainReport report;
  std::vector<double> best = params.snapshot();
  double best_cider = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<std::size_t> order(train_set.records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = lr_at(schedule, static_cast<double>(epoch));
    shuffle(order, rng);
    double total_loss = 0.0;
    std::size_t total_tokens = 0;
    bool diverged = false;

    for (std::size_t begin = 0; begin < order.size() && !diverged; begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      params.zero_grad();
      for (std::size_t i = begin; i < end; ++i) {
        const CaptionRecord& record = train_set.records[order[i]];
        Tape tape;
        Tensor loss;
        {
          Tape::Scope scope(tape);
          loss = model.sequence_loss(record, train_set.features->at(record.image_id), dropout_rng);
        }
        if (!std::isfinite(loss.item())) {
          diverged = true;
          break;
        }
        tape.backward(loss);
        total_loss += loss.item();
        total_tokens += record.tokens.size();
      }
      if (diverged) break;
      const double inv = 1.0 / static_cast<double>(end - begin);
      for (auto& e : params.entries()) {
        for (double& g : e.tensor.grad()) g *= inv;
      }
      clip_grad_norm(params, config.clip_norm);
      try {
        adam_update(params, adam, lr);
      } catch (const NumericError& err) {
        diverged = true;
        report.stop_reason = err.what();
      }
    }

    if (diverged) {
      report.diverged = true;
      if (report.stop_reason.empty()) report.stop_reason = "non-finite training loss";
      break;
    }

    EpochLog log;
    log.epoch = epoch;
    log.lr = lr;
    log.train_loss = total_loss / static_cast<double>(total_tokens);
    std::tie(log.val_cider, log.val_bleu4) = validate(model);
    report.epochs.push_back(log);
    if (on_epoch) on_epoch(log);

    if (log.val_cider > best_cider) {
      best_cider = log.val_cider;
      report.best_epoch = epoch;
      best = params.snapshot();
      since_best = 0;
    } else {
      // Equal scores refresh the checkpoint but do not reset patience.
      if (log.val_cider == best_cider) {
        report.best_epoch = epoch;
        best = params.snapshot();
      }
      ++since_best;
    }
    if (config.target_loss > 0.0 && log.train_loss < config.target_loss) {
      report.stop_reason = "target loss reached";
      break;
    }
    if (since_best >= config.patience) {
      report.stop_reason = "early stopping";
      break;
    }
  }
  if (report.stop_reason.empty()) report.stop_reason = "epoch limit";

  params.restore(best);
  params.zero_grad();
  report.best_cider = report.epochs.empty() ? 0.0 : best_cider;
  return report;
}

}  // namespace lcnn
