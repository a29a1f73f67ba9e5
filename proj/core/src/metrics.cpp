#include "vidrec/metrics.hpp"

#include <cstdio>

#include "vidrec/errors.hpp"

namespace vidrec {

const char* to_string(Task task) {
  switch (task) {
    case Task::verb: return "verb";
    case Task::noun: return "noun";
    case Task::action: return "action";
  }
  return "verb";
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw ValidationError("argmax: empty score vector");
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

bool in_top_k(std::span<const double> scores, std::size_t label, std::size_t k) {
  std::size_t ahead = 0;
  for (std::size_t c = 0; c < scores.size(); ++c) {
    if (scores[c] > scores[label] || (scores[c] == scores[label] && c < label)) ++ahead;
  }
  return ahead < k;
}

namespace {

const std::vector<double>& task_scores(const Scores& s, Task task) {
  switch (task) {
    case Task::verb: return s.verb;
    case Task::noun: return s.noun;
    case Task::action: return s.action;
  }
  return s.verb;
}

std::size_t task_label(const Labels& l, Task task) {
  switch (task) {
    case Task::verb: return l.verb;
    case Task::noun: return l.noun;
    case Task::action: return l.action;
  }
  return l.verb;
}

// (scores, true label) per segment, validated.
std::vector<std::pair<const std::vector<double>*, std::size_t>> gather(const ScoreTable& table,
                                                                       const LabelMap& labels,
                                                                       Task task) {
  if (table.rows.empty()) throw ValidationError("metrics: score table has no segments");
  std::vector<std::pair<const std::vector<double>*, std::size_t>> out;
  out.reserve(table.rows.size());
  for (const auto& [seg, s] : table.rows) {
    auto it = labels.find(seg);
    if (it == labels.end()) throw ValidationError("metrics: segment " + seg + " has no label");
    const auto& v = task_scores(s, task);
    const std::size_t y = task_label(it->second, task);
    if (y >= v.size()) {
      throw ValidationError("metrics: segment " + seg + " " + to_string(task) + " label " +
                            std::to_string(y) + " outside " + std::to_string(v.size()) +
                            " classes");
    }
    out.emplace_back(&v, y);
  }
  return out;
}

}  // namespace

double topk_accuracy(const ScoreTable& table, const LabelMap& labels, Task task, std::size_t k) {
  if (k < 1) throw ValidationError("topk_accuracy: k must be at least 1");
  const auto rows = gather(table, labels, task);
  std::size_t hits = 0;
  for (const auto& [scores, y] : rows) hits += in_top_k(*scores, y, k) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(rows.size());
}

PrecisionRecall macro_precision_recall(const ScoreTable& table, const LabelMap& labels, Task task) {
  const auto rows = gather(table, labels, task);
  const std::size_t classes = rows.front().first->size();
  std::vector<std::size_t> tp(classes, 0), gt(classes, 0), pred(classes, 0);
  for (const auto& [scores, y] : rows) {
    if (scores->size() != classes) throw ValidationError("metrics: segments differ in class count");
    const std::size_t p = argmax(*scores);
    ++gt[y];
    ++pred[p];
    if (p == y) ++tp[y];
  }
  double psum = 0.0, rsum = 0.0;
  std::size_t included = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (gt[c] == 0 && pred[c] == 0) continue;
    ++included;
    if (pred[c] > 0) psum += static_cast<double>(tp[c]) / static_cast<double>(pred[c]);
    if (gt[c] > 0) rsum += static_cast<double>(tp[c]) / static_cast<double>(gt[c]);
  }
  const double n = static_cast<double>(included);
  return {psum / n, rsum / n};
}

const TaskMetrics& MetricsReport::operator[](Task task) const {
  switch (task) {
    case Task::verb: return verb;
    case Task::noun: return noun;
    case Task::action: return action;
  }
  return verb;
}

std::string MetricsReport::to_csv() const {
  std::string out = "task,top1,top5,precision,recall\n";
  char line[160];
  for (Task t : {Task::verb, Task::noun, Task::action}) {
    const TaskMetrics& m = (*this)[t];
    std::snprintf(line, sizeof line, "%s,%.4f,%.4f,%.4f,%.4f\n", to_string(t), m.top1, m.top5,
                  m.precision, m.recall);
    out += line;
  }
  return out;
}

MetricsReport compute_metrics(const ScoreTable& table, const LabelMap& labels) {
  MetricsReport r;
  for (Task t : {Task::verb, Task::noun, Task::action}) {
    const auto pr = macro_precision_recall(table, labels, t);
    TaskMetrics m{100.0 * topk_accuracy(table, labels, t, 1),
                  100.0 * topk_accuracy(table, labels, t, 5), 100.0 * pr.precision,
                  100.0 * pr.recall};
    (t == Task::verb ? r.verb : t == Task::noun ? r.noun : r.action) = m;
  }
  return r;
}

DecodeMode decode_mode_from_string(const std::string& text) {
  if (text == "direct") return DecodeMode::direct;
  if (text == "pair") return DecodeMode::pair;
  throw ValidationError("unknown decode mode \"" + text + "\" (expected direct or pair)");
}

std::map<std::string, Prediction> decode(const ScoreTable& table, const LabelSpace& space,
                                         DecodeMode mode) {
  table.check_against(space);
  std::map<std::string, Prediction> out;
  for (const auto& [seg, s] : table.rows) {
    Prediction p;
    if (mode == DecodeMode::direct) {
      p.action = argmax(s.action);
      std::tie(p.verb, p.noun) = space.derive_pair(p.action);
    } else {
      p.verb = argmax(s.verb);
      p.noun = argmax(s.noun);
      if (auto a = space.action_of(p.verb, p.noun)) {
        p.action = *a;
      } else {
        p.fallback = true;
        bool found = false;
        for (std::size_t a = 0; a < space.num_actions(); ++a) {
          if (space.actions()[a].first != p.verb) continue;
          if (!found || s.action[a] > s.action[p.action]) p.action = a;
          found = true;
        }
        if (!found) p.action = argmax(s.action);
      }
    }
    out.emplace(seg, p);
  }
  return out;
}

}  // namespace vidrec
