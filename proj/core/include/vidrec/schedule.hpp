#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace vidrec {

enum class OptimizerKind { adam, sgd };
enum class LossKind { structured, verb_only };

/// One training stage. Epochs are 1-based; "decayed after epoch d" means the
/// decayed rate applies from epoch d + 1.
struct StageSchedule {
  std::string name;
  std::size_t epochs = 0;
  double base_lr = 0.0;
  std::vector<std::size_t> decay_epochs;
  double decay_factor = 1.0;
  /// When set, the rate is multiplied by `decay_factor` after every epoch and
  /// `decay_epochs` is ignored.
  bool per_epoch_decay = false;
  OptimizerKind optimizer = OptimizerKind::adam;
  double momentum = 0.9;  // SGD only
  double dropout_p = 0.0;
  std::size_t batch_size = 32;
  std::size_t frames_T = 16;
  std::set<std::string> trainable_groups;
  LossKind loss = LossKind::structured;

  /// Throws ValidationError if decay points are not strictly increasing and
  /// below `epochs`, or dropout is outside [0, 1).
  void validate() const;
};

/// Learning rate at a 1-based epoch. Throws ValidationError outside [1, epochs].
double lr_at(const StageSchedule& s, std::size_t epoch);

/// Built-in schedules, values as published.
namespace presets {
const StageSchedule& lsta_stage1();
const StageSchedule& lsta_stage2();
const StageSchedule& hf_tsn();
const StageSchedule& flow_pretrain();
const StageSchedule& flow_stage2();
const StageSchedule& two_stream();
/// Lookup by name; throws ValidationError for an unknown name.
const StageSchedule& by_name(const std::string& name);
std::vector<std::string> names();
}  // namespace presets

/// Desk-scale changes applied on top of a preset copy.
struct ScheduleOverrides {
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> frames_T;
  std::optional<std::size_t> batch_size;
  std::optional<double> base_lr;
  std::optional<double> dropout_p;
  std::optional<std::set<std::string>> trainable_groups;
};

/// Copy of `preset` with the overrides applied. Decay points at or beyond the
/// new epoch count are dropped.
StageSchedule with_overrides(const StageSchedule& preset, const ScheduleOverrides& overrides);

const char* to_string(OptimizerKind kind);
const char* to_string(LossKind kind);

}  // namespace vidrec
