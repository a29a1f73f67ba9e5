#include "desk_pipeline.hpp"

#include <chrono>
#include <cstdio>

#include "vidrec/schedule.hpp"
#include "vidrec/score_io.hpp"

namespace desk {

using namespace vidrec;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

StageOptions options(const Config& cfg, const Data& data, std::uint64_t seed,
                     const std::string& stage, const Logger& log) {
  StageOptions o;
  o.seed = seed;
  o.eval_set = &data.splits.test;
  o.eval_every = 5;
  o.eval.frames_T = cfg.frames_T;
  o.on_epoch = [stage, log](const TrainLogRow& r) {
    if (!log) return;
    char line[200];
    if (r.eval) {
      std::snprintf(line, sizeof line, "  %s epoch %zu lr %.3g loss %.4f train %.3f test %.3f",
                    stage.c_str(), r.epoch, r.lr, r.train_loss, r.train.action, r.eval->action);
    } else {
      std::snprintf(line, sizeof line, "  %s epoch %zu lr %.3g loss %.4f train %.3f", stage.c_str(),
                    r.epoch, r.lr, r.train_loss, r.train.action);
    }
    log(line);
  };
  return o;
}

StageSchedule stage(const StageSchedule& preset, std::size_t epochs, std::size_t frames_T) {
  ScheduleOverrides o;
  o.epochs = epochs;
  o.frames_T = frames_T;
  return with_overrides(preset, o);
}

Run finish(std::string name, Model model, const Config& cfg, const Data& data, double seconds) {
  Run r;
  r.name = std::move(name);
  r.model = std::move(model);
  EvalOptions eo;
  eo.frames_T = cfg.frames_T;
  r.scores = evaluate(r.model, data.splits.test, eo);
  r.accuracy = top1_accuracy(r.scores, data.test_labels);
  r.seconds = seconds;
  return r;
}

}  // namespace

Data make_data(const Config& cfg) {
  const LabelSpace space = desk_label_space(cfg.verbs, cfg.nouns, cfg.extra_pairs, cfg.seed);
  SyntheticSpec spec;
  spec.height = spec.width = cfg.size;
  spec.noise_sigma = cfg.noise_sigma;
  Data d{make_synthetic_splits(space, cfg.n_train, cfg.n_test, spec, cfg.seed), {}};
  d.test_labels = labels_of(d.splits.test);
  return d;
}

Run pretrain_tsn(const Config& cfg, const Data& data, const Logger& log) {
  const auto t0 = Clock::now();
  ModelConfig mc;
  mc.kind = ModelKind::hf_tsn;
  mc.hf_positions = {};
  Model m = Model::create(mc, data.splits.train.space, cfg.seed + 1);
  ScheduleOverrides o;
  o.epochs = cfg.pretrain_epochs;
  o.frames_T = cfg.frames_T;
  o.trainable_groups = std::set<std::string>{"backbone", "backbone_last_stage", "heads"};
  run_stage(m, data.splits.train, with_overrides(presets::hf_tsn(), o),
            options(cfg, data, cfg.seed + 2, "tsn", log));
  return finish("tsn", std::move(m), cfg, data, since(t0));
}

Run hf_tsn(const Config& cfg, const Data& data, const Logger& log) {
  const auto t0 = Clock::now();
  ModelConfig mc;
  mc.kind = ModelKind::hf_tsn;
  Model m = Model::create(mc, data.splits.train.space, cfg.seed + 3);
  run_stage(m, data.splits.train, stage(presets::hf_tsn(), cfg.hf_epochs, cfg.frames_T),
            options(cfg, data, cfg.seed + 4, "hf_tsn", log));
  return finish("hf_tsn", std::move(m), cfg, data, since(t0));
}

Run lsta_gru(const Config& cfg, const Data& data, const Run& pretrained, const Logger& log) {
  const auto t0 = Clock::now();
  Model m = make_lsta_gru(pretrained.model, cfg.memory, true, cfg.seed + 5);
  run_stage(m, data.splits.train, stage(presets::lsta_stage1(), cfg.lsta_epochs, cfg.frames_T),
            options(cfg, data, cfg.seed + 6, "lsta_stage1", log));
  return finish("lsta_gru", std::move(m), cfg, data, pretrained.seconds + since(t0));
}

Run motion(const Config& cfg, const Data& data, const Run& pretrained, const Logger& log) {
  const auto t0 = Clock::now();
  Model m = make_motion(pretrained.model, 5, cfg.seed + 7);
  run_stage(m, data.splits.train,
            stage(presets::flow_pretrain(), cfg.flow_pretrain_epochs, cfg.frames_T),
            options(cfg, data, cfg.seed + 8, "flow_pretrain", log));
  run_stage(m, data.splits.train,
            stage(presets::flow_stage2(), cfg.flow_stage2_epochs, cfg.frames_T),
            options(cfg, data, cfg.seed + 9, "flow_stage2", log));
  return finish("motion", std::move(m), cfg, data, pretrained.seconds + since(t0));
}

Run two_stream(const Config& cfg, const Data& data, const Run& appearance, const Run& motion,
               const Logger& log) {
  const auto t0 = Clock::now();
  Model m = make_two_stream(appearance.model, motion.model, cfg.seed + 10);
  ScheduleOverrides o;
  o.epochs = cfg.two_stream_epochs;
  o.frames_T = cfg.frames_T;
  o.base_lr = cfg.two_stream_lr;
  run_stage(m, data.splits.train, with_overrides(presets::two_stream(), o),
            options(cfg, data, cfg.seed + 11, "two_stream", log));
  // The fine-tuning stage is timed alone; the streams it starts from are timed separately.
  return finish("two_stream", std::move(m), cfg, data, since(t0));
}

void save_scores(const std::filesystem::path& dir, const Run& run) {
  save_score_json(dir / (run.name + ".json"), run.scores);
}

}  // namespace desk
