#include "vidrec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "vidrec/errors.hpp"
#include "vidrec/ops.hpp"
#include "vidrec/optimizer.hpp"

namespace vidrec {

std::string TrainLog::to_csv() const {
  std::string out =
      "epoch,lr,train_loss,train_acc_verb,train_acc_noun,train_acc_action,eval_acc_verb,"
      "eval_acc_noun,eval_acc_action\n";
  char buf[256];
  for (const TrainLogRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.6f,%.4f,%.4f,%.4f", r.epoch, r.lr, r.train_loss,
                  r.train.verb, r.train.noun, r.train.action);
    out += buf;
    if (r.eval) {
      std::snprintf(buf, sizeof buf, ",%.4f,%.4f,%.4f\n", r.eval->verb, r.eval->noun,
                    r.eval->action);
      out += buf;
    } else {
      out += ",,,\n";
    }
  }
  return out;
}

ModelInput make_input(const ModelConfig& config, std::span<const Tensor> video,
                      std::span<const std::size_t> indices) {
  ModelInput in;
  if (config.uses_frames()) {
    for (std::size_t t : indices) {
      if (t >= video.size()) throw ValidationError("make_input: frame index out of range");
      in.frames.push_back(video[t]);
    }
  }
  if (config.uses_flows()) in.flows = flow_stacks(video, indices, config.flow_pairs);
  return in;
}

LabelMap labels_of(const Dataset& data) {
  LabelMap out;
  for (const Sample& s : data.samples) out.emplace(s.id, s.labels);
  return out;
}

EvalAccuracy top1_accuracy(const ScoreTable& table, const LabelMap& labels) {
  return {topk_accuracy(table, labels, Task::verb, 1), topk_accuracy(table, labels, Task::noun, 1),
          topk_accuracy(table, labels, Task::action, 1)};
}

namespace {

void check_groups(const Model& model, const StageSchedule& s) {
  const auto groups = model.params().groups();
  for (const std::string& g : s.trainable_groups) {
    if (groups.count(g) == 0) {
      throw ValidationError("run_stage " + s.name + ": model has no parameter group \"" + g + "\"");
    }
  }
}

}  // namespace

TrainLog run_stage(Model& model, const Dataset& train, const StageSchedule& schedule,
                   const StageOptions& options) {
  schedule.validate();
  options.augmentation.validate();
  check_groups(model, schedule);
  if (train.samples.empty() && schedule.epochs > 0) {
    throw ValidationError("run_stage " + schedule.name + ": empty training set");
  }

  TrainLog log;
  std::mt19937_64 rng(options.seed);
  OptimizerConfig opt;
  opt.kind = schedule.optimizer;
  opt.momentum = schedule.momentum;
  OptimizerState state;
  const ModelConfig& config = model.config();
  const SampleMode mode =
      options.augmentation.temporal_jitter ? SampleMode::train : SampleMode::eval;

  std::vector<std::size_t> order(train.samples.size());
  for (std::size_t epoch = 1; epoch <= schedule.epochs; ++epoch) {
    const double lr = lr_at(schedule, epoch);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t hits[3] = {0, 0, 0};
    for (std::size_t start = 0; start < order.size(); start += schedule.batch_size) {
      const std::size_t stop = std::min(order.size(), start + schedule.batch_size);
      std::vector<std::vector<double>> sums;
      std::vector<std::string> names;

      for (std::size_t b = start; b < stop; ++b) {
        const Sample& sample = train.samples[order[b]];
        const auto video = augment_clip(sample.frames, options.augmentation, rng);
        const auto idx = sample_frames(video.size(), schedule.frames_T, mode, rng);
        const ModelInput input = make_input(config, video, idx);

        Tape tape;
        const BoundParams bound = BoundParams::bind(model.params(), tape, schedule.trainable_groups);
        ForwardContext ctx{true, schedule.dropout_p, &rng};
        Tensor loss;
        ScoreTriple scores;
        try {
          scores = model.forward(bound, input, ctx);
          loss = schedule.loss == LossKind::verb_only ? verb_loss(scores, sample.labels)
                                                      : multi_task_loss(scores, sample.labels);
        } catch (const NumericalError& e) {
          throw NumericalError("run_stage " + schedule.name + ", epoch " + std::to_string(epoch) +
                               ", sample " + sample.id + ": " + e.what());
        }
        loss_sum += loss.item();
        hits[0] += argmax(scores.verb.data()) == sample.labels.verb;
        hits[1] += argmax(scores.noun.data()) == sample.labels.noun;
        hits[2] += argmax(scores.action.data()) == sample.labels.action;

        const auto& leaves = bound.leaves();
        if (!loss.grad_enabled()) continue;  // no trainable parameter reaches the loss
        const Gradients grads = tape.backward(loss);
        if (sums.empty()) {
          sums.resize(leaves.size());
          for (std::size_t k = 0; k < leaves.size(); ++k) {
            const Parameter& p = model.params().items()[leaves[k].first];
            names.push_back(p.name);
            sums[k].assign(p.value.size(), 0.0);
          }
        }
        for (std::size_t k = 0; k < leaves.size(); ++k) {
          const Tensor grad = grads.of(leaves[k].second);
          auto g = grad.data();
          for (std::size_t i = 0; i < g.size(); ++i) sums[k][i] += g[i];
        }
      }

      const double inv = 1.0 / static_cast<double>(stop - start);
      std::unordered_map<std::string, Tensor> mean_grads;
      for (std::size_t k = 0; k < sums.size(); ++k) {
        for (double& v : sums[k]) v *= inv;
        const Shape& shape = model.params().get(names[k]).shape();
        try {
          mean_grads.emplace(names[k], Tensor(shape, std::move(sums[k])));
        } catch (const NumericalError&) {
          throw NumericalError("run_stage " + schedule.name + ", epoch " + std::to_string(epoch) +
                               ": non-finite gradient for " + names[k]);
        }
      }
      optimizer_step(opt, model.params(), mean_grads, lr, schedule.trainable_groups, state);
    }

    TrainLogRow row;
    row.epoch = epoch;
    row.lr = lr;
    const double n = static_cast<double>(train.samples.size());
    row.train_loss = loss_sum / n;
    row.train = {hits[0] / n, hits[1] / n, hits[2] / n};
    const bool last = epoch == schedule.epochs;
    if (options.eval_set && (last || (options.eval_every > 0 && epoch % options.eval_every == 0))) {
      row.eval = top1_accuracy(evaluate(model, *options.eval_set, options.eval),
                               labels_of(*options.eval_set));
    }
    if (!std::isfinite(row.train_loss)) {
      throw NumericalError("run_stage " + schedule.name + ": non-finite mean loss at epoch " +
                           std::to_string(epoch));
    }
    log.rows.push_back(row);
    if (options.on_epoch) options.on_epoch(row);
  }
  return log;
}

ScoreTable evaluate(const Model& model, const Dataset& data, const EvalOptions& options) {
  ScoreTable table;
  table.label_space_id = model.space().id();
  table.split = options.split;
  const BoundParams bound = BoundParams::constant(model.params());
  for (const Sample& s : data.samples) {
    const auto idx = sample_frames(s.frames.size(), options.frames_T, SampleMode::eval, 0);
    const auto views = eval_multiview_clip(s.frames, options.crops);
    std::vector<ScoreTriple> per_view;
    per_view.reserve(views.size());
    for (const auto& video : views) {
      per_view.push_back(model.forward(bound, make_input(model.config(), video, idx)));
    }
    table.rows.emplace(s.id, to_scores(mean_scores(per_view)));
  }
  return table;
}

}  // namespace vidrec
