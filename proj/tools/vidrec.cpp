// vidrec: command-line front end.
//
//   vidrec [--seed N] [--config FILE] [--out-dir DIR] <command> [options]
//
// Exit codes: 0 success, 1 invalid input or malformed file, 2 numerical failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vidrec/errors.hpp"
#include "vidrec/gradcheck.hpp"
#include "vidrec/heads.hpp"
#include "vidrec/metrics.hpp"
#include "vidrec/models.hpp"
#include "vidrec/ops.hpp"
#include "vidrec/schedule.hpp"
#include "vidrec/score_io.hpp"
#include "vidrec/score_table.hpp"
#include "vidrec/synthetic.hpp"
#include "vidrec/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vidrec;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  fs::path config;
  fs::path out_dir = ".";
};

// Sections of the --config file: "synthetic", "model", "schedule".
json config_section(const Globals& g, const char* name) {
  if (g.config.empty()) return json::object();
  json j;
  try {
    j = json::parse(read_text_file(g.config));
  } catch (const json::parse_error& e) {
    throw FormatError(g.config.string() + ": " + e.what());
  }
  if (!j.is_object()) throw FormatError(g.config.string() + ": expected a JSON object");
  if (!j.contains(name)) return json::object();
  if (!j[name].is_object()) throw FormatError(g.config.string() + ": \"" + name + "\" must be an object");
  return j[name];
}

template <class T>
void take(const json& section, const char* key, T& dst) {
  if (!section.contains(key)) return;
  try {
    dst = section[key].get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config key ") + key + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

struct SyntheticArgs {
  std::size_t verbs = 6, nouns = 8, extra_pairs = 4;
  std::size_t n_train = 500, n_test = 200;
  std::size_t frames = 16, size = 16;
  double noise = 0.5;
};

void run_make_synthetic(const Globals& g, SyntheticArgs a, const std::vector<std::string>& set) {
  const json cfg = config_section(g, "synthetic");
  auto from_cfg = [&](const char* key, auto& dst, const std::string& flag) {
    if (std::find(set.begin(), set.end(), flag) == set.end()) take(cfg, key, dst);
  };
  from_cfg("verbs", a.verbs, "--verbs");
  from_cfg("nouns", a.nouns, "--nouns");
  from_cfg("extra_pairs", a.extra_pairs, "--extra-pairs");
  from_cfg("train", a.n_train, "--train");
  from_cfg("test", a.n_test, "--test");
  from_cfg("frames", a.frames, "--frames");
  from_cfg("size", a.size, "--size");
  from_cfg("noise_sigma", a.noise, "--noise");

  const LabelSpace space = desk_label_space(a.verbs, a.nouns, a.extra_pairs, g.seed);
  SyntheticSpec spec;
  spec.frames = a.frames;
  spec.height = spec.width = a.size;
  spec.noise_sigma = a.noise;
  const SyntheticSplits s = make_synthetic_splits(space, a.n_train, a.n_test, spec, g.seed);
  s.train.save(g.out_dir / "train");
  s.test.save(g.out_dir / "test");
  write_text_file(g.out_dir / "train_labels.json", write_labels_json(labels_of(s.train)));
  write_text_file(g.out_dir / "test_labels.json", write_labels_json(labels_of(s.test)));
  write_text_file(g.out_dir / "label_space.json", space.to_json() + "\n");
  std::printf("wrote %zu train and %zu test samples (A=%zu) to %s\n", s.train.size(),
              s.test.size(), space.num_actions(), g.out_dir.string().c_str());
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  fs::path data;
  fs::path eval_data;
  std::string schedule = "hf_tsn";
  std::string kind;
  fs::path from;
  fs::path from_motion;
  std::optional<std::size_t> epochs, frames_T, batch;
  std::optional<double> lr;
  std::vector<std::string> groups;
};

Model build_model(const Globals& g, const TrainArgs& a, const LabelSpace& space) {
  ModelConfig mc = ModelConfig::from_json(config_section(g, "model").dump());
  if (!a.kind.empty()) mc.kind = model_kind_from_string(a.kind);
  if (a.from.empty()) return Model::create(mc, space, g.seed);

  const Model base = Model::load(a.from);
  if (base.space() != space) throw ValidationError("--from model uses a different label space");
  switch (mc.kind) {
    case ModelKind::lsta_gru: return make_lsta_gru(base, mc.memory, mc.use_gru, g.seed);
    case ModelKind::motion:
      return base.config().kind == ModelKind::motion ? base
                                                     : make_motion(base, mc.flow_pairs, g.seed);
    case ModelKind::two_stream:
      if (a.from_motion.empty()) throw ValidationError("two_stream needs --from-motion");
      return make_two_stream(base, Model::load(a.from_motion), g.seed);
    case ModelKind::hf_tsn: return base;
  }
  return base;
}

void run_train(const Globals& g, const TrainArgs& a) {
  const Dataset train = Dataset::load(a.data);
  std::optional<Dataset> eval;
  if (!a.eval_data.empty()) eval = Dataset::load(a.eval_data);
  Model m = build_model(g, a, train.space);

  const json sc = config_section(g, "schedule");
  ScheduleOverrides o;
  std::size_t n = 0;
  double x = 0.0;
  if (sc.contains("epochs")) take(sc, "epochs", n), o.epochs = n;
  if (sc.contains("frames_T")) take(sc, "frames_T", n), o.frames_T = n;
  if (sc.contains("batch_size")) take(sc, "batch_size", n), o.batch_size = n;
  if (sc.contains("base_lr")) take(sc, "base_lr", x), o.base_lr = x;
  if (sc.contains("dropout_p")) take(sc, "dropout_p", x), o.dropout_p = x;
  if (sc.contains("trainable_groups")) {
    std::set<std::string> groups;
    take(sc, "trainable_groups", groups);
    o.trainable_groups = groups;
  }
  if (a.epochs) o.epochs = a.epochs;
  if (a.frames_T) o.frames_T = a.frames_T;
  if (a.batch) o.batch_size = a.batch;
  if (a.lr) o.base_lr = a.lr;
  if (!a.groups.empty()) o.trainable_groups = std::set<std::string>(a.groups.begin(), a.groups.end());
  const StageSchedule s = with_overrides(presets::by_name(a.schedule), o);

  StageOptions so;
  so.seed = g.seed;
  so.eval.frames_T = s.frames_T;
  if (eval) {
    so.eval_set = &*eval;
    so.eval_every = 5;
  }
  so.on_epoch = [](const TrainLogRow& r) {
    std::printf("epoch %zu lr %.4g loss %.5f train_action %.3f", r.epoch, r.lr, r.train_loss,
                r.train.action);
    if (r.eval) std::printf(" eval_action %.3f", r.eval->action);
    std::printf("\n");
    std::fflush(stdout);
  };
  const TrainLog log = run_stage(m, train, s, so);
  m.save(g.out_dir / "model");
  write_text_file(g.out_dir / "train_log.csv", log.to_csv());
  std::printf("saved %s model to %s\n", to_string(m.config().kind),
              (g.out_dir / "model").string().c_str());
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  fs::path model;
  fs::path data;
  std::size_t frames_T = 8;
  std::string crops = "center";
  std::size_t crop_size = 0;
  std::string split = "S1";
  std::string name = "scores.json";
};

void run_eval(const Globals& g, const EvalArgs& a) {
  const Model m = Model::load(a.model);
  const Dataset d = Dataset::load(a.data);
  EvalOptions eo;
  eo.frames_T = a.frames_T;
  eo.crops.mode = crop_mode_from_string(a.crops);
  eo.crops.crop_size = a.crop_size;
  eo.split = a.split;
  const ScoreTable t = evaluate(m, d, eo);
  save_score_json(g.out_dir / a.name, t);
  const EvalAccuracy acc = top1_accuracy(t, labels_of(d));
  std::printf("top-1 verb %.4f noun %.4f action %.4f (%zu segments) -> %s\n", acc.verb, acc.noun,
              acc.action, t.rows.size(), (g.out_dir / a.name).string().c_str());
}

// ---------------------------------------------------------------------------

struct GradArgs {
  std::string kind = "lsta_gru";
  std::vector<std::string> params;
  double eps = 1e-5;
  double tol = 1e-4;
};

// End-to-end check of a small randomly initialised model.
bool run_gradcheck(const Globals& g, const GradArgs& a) {
  ModelConfig mc;
  mc.kind = model_kind_from_string(a.kind);
  mc.stages = {3, 4};
  mc.hf_positions = {0, 1};
  mc.memory = 3;
  mc.flow_pairs = 2;
  const LabelSpace space = desk_label_space(3, 4, 2, g.seed);
  Model m = Model::create(mc, space, g.seed);
  std::vector<std::string> names = a.params;
  if (names.empty())
    for (const Parameter& p : m.params().items()) names.push_back(p.name);

  SyntheticSpec spec;
  spec.frames = 5;
  const Dataset d = make_synthetic(space, 1, spec, g.seed, "gradcheck");
  const std::vector<std::size_t> idx{0, 2};
  const ModelInput in = make_input(mc, d.samples[0].frames, idx);
  const Labels labels = d.samples[0].labels;

  std::vector<NamedTensor> params;
  for (const auto& n : names) params.push_back({n, m.params().get(n)});
  const GradReport r = grad_check(
      [&](auto v) {
        BoundParams bp = BoundParams::constant(m.params());
        for (std::size_t k = 0; k < names.size(); ++k) bp.assign(names[k], v[k]);
        return multi_task_loss(m.forward(bp, in), labels);
      },
      params, a.eps, a.tol);
  for (const GradEntry& e : r.entries) {
    std::printf("%-4s %-36s max_abs %.3e max_rel %.3e\n", e.passed ? "ok" : "FAIL", e.name.c_str(),
                e.max_abs_error, e.max_rel_error);
  }
  std::printf("%s: max relative error %.3e (tol %.1e)\n", r.passed() ? "passed" : "failed",
              r.max_rel_error(), a.tol);
  return r.passed();
}

// ---------------------------------------------------------------------------

void run_ensemble(const Globals& g, const std::vector<fs::path>& inputs, const std::string& name) {
  std::vector<ScoreTable> tables;
  for (const auto& p : inputs) tables.push_back(load_score_json(p));
  save_score_json(g.out_dir / name, average_tables(tables));
  std::printf("averaged %zu score files -> %s\n", tables.size(),
              (g.out_dir / name).string().c_str());
}

void run_metrics(const Globals& g, const fs::path& scores, const fs::path& labels,
                 const fs::path& space_file, const std::string& mode) {
  const ScoreTable t = load_score_json(scores);
  const LabelMap l = read_labels_json(read_text_file(labels));
  const MetricsReport r = compute_metrics(t, l);
  const std::string csv = r.to_csv();
  write_text_file(g.out_dir / "metrics.csv", csv);
  std::printf("%s", csv.c_str());
  if (!space_file.empty()) {
    const LabelSpace space = LabelSpace::from_json(read_text_file(space_file));
    const auto preds = decode(t, space, decode_mode_from_string(mode));
    std::size_t hits = 0, fallbacks = 0;
    for (const auto& [seg, p] : preds) {
      const auto it = l.find(seg);
      if (it == l.end()) throw ValidationError("metrics: segment " + seg + " has no label");
      hits += p.action == it->second.action;
      fallbacks += p.fallback;
    }
    std::printf("decode %s: action accuracy %.4f, fallback rate %.4f\n", mode.c_str(),
                static_cast<double>(hits) / static_cast<double>(preds.size()),
                static_cast<double>(fallbacks) / static_cast<double>(preds.size()));
  }
}

bool run_submit(const Globals& g, const fs::path& scores, const std::string& name) {
  const std::string doc = write_submission_json(load_score_json(scores));
  const auto problems = validate_submission(doc);
  for (const auto& p : problems) std::fprintf(stderr, "submission: %s\n", p.c_str());
  if (!problems.empty()) return false;
  write_text_file(g.out_dir / name, doc);
  std::printf("wrote %s\n", (g.out_dir / name).string().c_str());
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Egocentric action recognition toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Experiment seed")->capture_default_str();
  app.add_option("--config", g.config, "JSON file with \"synthetic\", \"model\", \"schedule\" sections")
      ->check(CLI::ExistingFile);
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();

  SyntheticArgs syn;
  auto* mk = app.add_subcommand("make-synthetic", "Generate train/test synthetic datasets");
  mk->add_option("--verbs", syn.verbs);
  mk->add_option("--nouns", syn.nouns);
  mk->add_option("--extra-pairs", syn.extra_pairs);
  mk->add_option("--train", syn.n_train);
  mk->add_option("--test", syn.n_test);
  mk->add_option("--frames", syn.frames);
  mk->add_option("--size", syn.size, "Frame side in pixels");
  mk->add_option("--noise", syn.noise, "Noise standard deviation");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train one stage of a model");
  train->add_option("--data", tr.data, "Training dataset directory")->required();
  train->add_option("--eval-data", tr.eval_data, "Dataset evaluated every 5 epochs");
  train->add_option("--schedule", tr.schedule, "Preset: " + [] {
    std::string s;
    for (const auto& n : presets::names()) s += (s.empty() ? "" : ", ") + n;
    return s;
  }())->capture_default_str();
  train->add_option("--model", tr.kind, "hf_tsn, lsta_gru, motion or two_stream");
  train->add_option("--from", tr.from, "Model directory to start from");
  train->add_option("--from-motion", tr.from_motion, "Motion model for two_stream");
  train->add_option("--epochs", tr.epochs);
  train->add_option("--frames-T", tr.frames_T);
  train->add_option("--batch-size", tr.batch);
  train->add_option("--lr", tr.lr, "Base learning rate");
  train->add_option("--groups", tr.groups, "Trainable parameter groups");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Score a dataset with a trained model");
  eval->add_option("--model", ev.model)->required();
  eval->add_option("--data", ev.data)->required();
  eval->add_option("--frames-T", ev.frames_T)->capture_default_str();
  eval->add_option("--crops", ev.crops, "center, lsta_10view or tsn_10crop")->capture_default_str();
  eval->add_option("--crop-size", ev.crop_size, "0 for the full frame");
  eval->add_option("--split", ev.split)->capture_default_str();
  eval->add_option("--name", ev.name, "Output file name")->capture_default_str();

  GradArgs ga;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of a small model");
  grad->add_option("--model", ga.kind)->capture_default_str();
  grad->add_option("--params", ga.params, "Parameter names (default all)");
  grad->add_option("--eps", ga.eps)->capture_default_str();
  grad->add_option("--tol", ga.tol)->capture_default_str();

  std::vector<fs::path> ens_inputs;
  std::string ens_name = "ensemble.json";
  auto* ens = app.add_subcommand("ensemble", "Average score files");
  ens->add_option("scores", ens_inputs)->required()->check(CLI::ExistingFile);
  ens->add_option("--name", ens_name)->capture_default_str();

  fs::path met_scores, met_labels, met_space;
  std::string met_mode = "direct";
  auto* met = app.add_subcommand("metrics", "Top-1/top-5 accuracy and macro precision/recall");
  met->add_option("--scores", met_scores)->required()->check(CLI::ExistingFile);
  met->add_option("--labels", met_labels)->required()->check(CLI::ExistingFile);
  met->add_option("--label-space", met_space, "Also report decoded action accuracy");
  met->add_option("--decode", met_mode, "direct or pair")->capture_default_str();

  fs::path sub_scores;
  std::string sub_name = "submission.json";
  auto* sub = app.add_subcommand("submit", "Write a submission file from scores");
  sub->add_option("--scores", sub_scores)->required()->check(CLI::ExistingFile);
  sub->add_option("--name", sub_name)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*mk) {
      std::vector<std::string> set;
      for (const CLI::Option* o : mk->get_options())
        if (o->count() > 0) set.push_back(o->get_name());
      run_make_synthetic(g, syn, set);
    } else if (*train) {
      run_train(g, tr);
    } else if (*eval) {
      run_eval(g, ev);
    } else if (*grad) {
      return run_gradcheck(g, ga) ? 0 : 2;
    } else if (*ens) {
      run_ensemble(g, ens_inputs, ens_name);
    } else if (*met) {
      run_metrics(g, met_scores, met_labels, met_space, met_mode);
    } else if (*sub) {
      return run_submit(g, sub_scores, sub_name) ? 0 : 1;
    }
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 2;
  } catch (const TapeError& e) {
    std::fprintf(stderr, "tape error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
