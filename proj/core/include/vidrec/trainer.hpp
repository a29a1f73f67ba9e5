#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vidrec/augment.hpp"
#include "vidrec/metrics.hpp"
#include "vidrec/models.hpp"
#include "vidrec/sampling.hpp"
#include "vidrec/schedule.hpp"
#include "vidrec/score_table.hpp"
#include "vidrec/synthetic.hpp"

namespace vidrec {

struct EvalAccuracy {
  double verb = 0.0;  // top-1 fractions
  double noun = 0.0;
  double action = 0.0;
};

struct TrainLogRow {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // mean over samples
  EvalAccuracy train;       // on the augmented training inputs
  std::optional<EvalAccuracy> eval;
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
  /// epoch,lr,train_loss,train_acc_verb,train_acc_noun,train_acc_action,
  /// eval_acc_verb,eval_acc_noun,eval_acc_action (eval columns blank when not run).
  std::string to_csv() const;
};

struct EvalOptions {
  std::size_t frames_T = 8;
  CropSpec crops;
  std::string split = "S1";
};

struct StageOptions {
  AugmentationConfig augmentation;
  std::uint64_t seed = 0;
  /// Evaluated after every `eval_every`-th epoch and after the last one.
  const Dataset* eval_set = nullptr;
  std::size_t eval_every = 0;
  EvalOptions eval;
  std::function<void(const TrainLogRow&)> on_epoch;
};

/// Inputs of one sample at the given frame indices (frames and/or flow
/// stacks, as the model requires).
ModelInput make_input(const ModelConfig& config, std::span<const Tensor> video,
                      std::span<const std::size_t> indices);

/// Trains the parameters of `model` in `schedule.trainable_groups` for
/// `schedule.epochs` epochs: shuffled mini-batches, one tape per sample,
/// gradients summed in sample order and averaged over the batch, then one
/// optimizer step at lr_at(epoch). Other groups are never written.
///
/// Throws ValidationError if the model lacks a trainable group and
/// NumericalError (with epoch/sample context) on a non-finite loss or gradient.
TrainLog run_stage(Model& model, const Dataset& train, const StageSchedule& schedule,
                   const StageOptions& options);

/// Scores of every sample, averaged over the crop views, at eval-mode frame indices.
ScoreTable evaluate(const Model& model, const Dataset& data, const EvalOptions& options);

LabelMap labels_of(const Dataset& data);
EvalAccuracy top1_accuracy(const ScoreTable& table, const LabelMap& labels);

}  // namespace vidrec
