#include "vidrec/schedule.hpp"

#include <cmath>

#include "vidrec/errors.hpp"

namespace vidrec {

void StageSchedule::validate() const {
  for (std::size_t k = 0; k < decay_epochs.size(); ++k) {
    if (k > 0 && decay_epochs[k] <= decay_epochs[k - 1]) {
      throw ValidationError("schedule " + name + ": decay epochs must be strictly increasing");
    }
    if (decay_epochs[k] >= epochs) {
      throw ValidationError("schedule " + name + ": decay epoch " +
                            std::to_string(decay_epochs[k]) + " is not below the epoch count " +
                            std::to_string(epochs));
    }
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) {
    throw ValidationError("schedule " + name + ": dropout must lie in [0, 1)");
  }
  if (!(base_lr > 0.0) || !std::isfinite(base_lr)) {
    throw ValidationError("schedule " + name + ": base learning rate must be positive");
  }
  if (batch_size == 0 || frames_T == 0) {
    throw ValidationError("schedule " + name + ": batch size and frame count must be positive");
  }
}

double lr_at(const StageSchedule& s, std::size_t epoch) {
  if (epoch < 1 || epoch > s.epochs) {
    throw ValidationError("lr_at: epoch " + std::to_string(epoch) + " outside [1, " +
                          std::to_string(s.epochs) + "] for schedule " + s.name);
  }
  if (s.per_epoch_decay) {
    return s.base_lr * std::pow(s.decay_factor, static_cast<double>(epoch - 1));
  }
  std::size_t applied = 0;
  for (std::size_t d : s.decay_epochs) {
    if (d < epoch) ++applied;
  }
  if (applied == 0) return s.base_lr;
  // Factors like 0.1 and 0.5 divide by an exact integer power, so 1e-3 decays
  // to 1e-6 rather than 1.0000000000000002e-06.
  const double inverse = std::round(1.0 / s.decay_factor);
  if (inverse >= 2.0 && std::abs(1.0 / s.decay_factor - inverse) < 1e-12) {
    return s.base_lr / std::pow(inverse, static_cast<double>(applied));
  }
  return s.base_lr * std::pow(s.decay_factor, static_cast<double>(applied));
}

namespace presets {

namespace {

StageSchedule make(std::string name, std::size_t epochs, double lr, std::vector<std::size_t> decay,
                   double factor, OptimizerKind opt, double dropout, std::size_t frames,
                   std::set<std::string> groups, LossKind loss = LossKind::structured) {
  StageSchedule s;
  s.name = std::move(name);
  s.epochs = epochs;
  s.base_lr = lr;
  s.decay_epochs = std::move(decay);
  s.decay_factor = factor;
  s.optimizer = opt;
  s.dropout_p = dropout;
  s.batch_size = 32;
  s.frames_T = frames;
  s.trainable_groups = std::move(groups);
  s.loss = loss;
  s.validate();
  return s;
}

const std::set<std::string> kAllAppearance{"backbone", "backbone_last_stage", "hf", "heads"};
const std::set<std::string> kAllMotion{"motion_backbone", "motion_backbone_last_stage", "heads"};

}  // namespace

const StageSchedule& lsta_stage1() {
  static const StageSchedule s = make("lsta_stage1", 200, 1e-3, {25, 75, 150}, 0.1,
                                      OptimizerKind::adam, 0.7, 20, {"heads", "lsta", "grus"});
  return s;
}

const StageSchedule& lsta_stage2() {
  static const StageSchedule s =
      make("lsta_stage2", 150, 1e-4, {25, 75}, 0.1, OptimizerKind::adam, 0.7, 20,
           {"heads", "lsta", "grus", "backbone_last_stage"});
  return s;
}

const StageSchedule& hf_tsn() {
  static const StageSchedule s = make("hf_tsn", 120, 0.01, {50, 100}, 0.1, OptimizerKind::sgd,
                                      0.5, 16, kAllAppearance);
  return s;
}

const StageSchedule& flow_pretrain() {
  static const StageSchedule s =
      make("flow_pretrain", 700, 0.01, {75, 150, 250, 500}, 0.5, OptimizerKind::sgd, 0.5, 16,
           kAllMotion, LossKind::verb_only);
  return s;
}

const StageSchedule& flow_stage2() {
  static const StageSchedule s = [] {
    auto groups = kAllMotion;
    groups.insert("motion_attention");
    return make("flow_stage2", 500, 0.01, {50, 100}, 0.5, OptimizerKind::sgd, 0.5, 16, groups);
  }();
  return s;
}

const StageSchedule& two_stream() {
  static const StageSchedule s = [] {
    StageSchedule t = make("two_stream", 100, 0.01, {}, 0.99, OptimizerKind::adam, 0.7, 20,
                           {"heads", "lsta", "convlstm", "backbone_last_stage",
                            "motion_backbone_last_stage", "fusion"});
    t.per_epoch_decay = true;
    return t;
  }();
  return s;
}

const StageSchedule& by_name(const std::string& name) {
  for (const StageSchedule* s : {&lsta_stage1(), &lsta_stage2(), &hf_tsn(), &flow_pretrain(),
                                 &flow_stage2(), &two_stream()}) {
    if (s->name == name) return *s;
  }
  throw ValidationError("unknown schedule preset \"" + name + "\"");
}

std::vector<std::string> names() {
  return {"lsta_stage1", "lsta_stage2", "hf_tsn", "flow_pretrain", "flow_stage2", "two_stream"};
}

}  // namespace presets

StageSchedule with_overrides(const StageSchedule& preset, const ScheduleOverrides& o) {
  StageSchedule s = preset;
  if (o.epochs) {
    s.epochs = *o.epochs;
    std::erase_if(s.decay_epochs, [&](std::size_t d) { return d >= s.epochs; });
  }
  if (o.frames_T) s.frames_T = *o.frames_T;
  if (o.batch_size) s.batch_size = *o.batch_size;
  if (o.base_lr) s.base_lr = *o.base_lr;
  if (o.dropout_p) s.dropout_p = *o.dropout_p;
  if (o.trainable_groups) s.trainable_groups = *o.trainable_groups;
  s.validate();
  return s;
}

const char* to_string(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "sgd"; }
const char* to_string(LossKind kind) {
  return kind == LossKind::structured ? "structured" : "verb_only";
}

}  // namespace vidrec
