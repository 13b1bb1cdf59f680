#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "lcnn/captioner.hpp"
#include "lcnn/data.hpp"
#include "lcnn/parameters.hpp"

namespace lcnn {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// Bias-corrected Adam on every parameter, using the gradients stored in the
// parameter tensors. Throws NumericError naming the first parameter with a
// non-finite gradient; parameters are untouched in that case.
void adam_update(ParameterSet& params, AdamState& state, double lr);

// Cosine annealing with warm restarts: periods of T_0, T_0*T_mult, ...
// epochs, each decaying from base_lr to floor_lr.
struct RestartSchedule {
  double base_lr = 4e-4;
  double period = 5.0;
  double period_mult = 2.0;
  double floor_lr = 4e-6;
};

double lr_at(const RestartSchedule& schedule, double epoch);

double global_grad_norm(const ParameterSet& params);
// Rescales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping. max_norm <= 0 disables clipping.
double clip_grad_norm(ParameterSet& params, double max_norm);

inline constexpr double kLrMsCoco = 4e-4;
inline constexpr double kLrFlickr30k = 2e-4;

struct TrainConfig {
  double base_lr = kLrMsCoco;
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  double clip_norm = 5.0;
  std::size_t patience = 5;
  std::size_t beam_size = 2;
  std::size_t max_len = kDefaultMaxWords;
  double restart_period = 5.0;
  double restart_mult = 2.0;
  // floor_lr = base_lr * floor_ratio
  double floor_ratio = 0.01;
  // Stop once the epoch's mean per-token loss drops below this; 0 disables.
  double target_loss = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
  RestartSchedule schedule() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct Dataset {
  std::vector<CaptionRecord> records;
  const FeatureStore* features = nullptr;
};

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // mean per-token cross-entropy
  double val_cider = 0.0;
  double val_bleu4 = 0.0;
  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

struct TrainReport {
  std::vector<EpochLog> epochs;
  std::size_t best_epoch = 0;
  double best_cider = 0.0;
  bool diverged = false;
  std::string stop_reason;
};

// `epoch<TAB>lr<TAB>train_loss<TAB>val_CIDEr<TAB>val_BLEU4` per epoch.
void write_report(const TrainReport& report, std::ostream& out);

// Mean per-token teacher-forced loss without dropout.
double evaluate_loss(const CaptionerModel& model, const Dataset& data);

// Decodes one caption per distinct validation image (beam search) and scores
// it against all of that image's references. Returns {CIDEr, BLEU-4}.
std::pair<double, double> evaluate_captions(const CaptionerModel& model, const Dataset& data,
                                            std::size_t beam_size, std::size_t max_len);

// Produces the validation metrics for one epoch; replaceable in tests.
using Validator = std::function<std::pair<double, double>(const CaptionerModel&)>;

// Seeded shuffling, teacher-forced minibatches, global-norm clipping and Adam
// under the restart schedule. Validation CIDEr after every epoch drives early
// stopping; the best-CIDEr parameters are restored before returning. A
// non-finite loss or gradient stops training and restores the best
// parameters, with report.diverged set.
TrainReport train(CaptionerModel& model, const Dataset& train_set, const Dataset& validation,
                  const TrainConfig& config, const Validator& validator = {},
                  const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace lcnn
