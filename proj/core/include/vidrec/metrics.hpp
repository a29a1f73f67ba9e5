#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vidrec/heads.hpp"
#include "vidrec/score_table.hpp"

namespace vidrec {

enum class Task { verb, noun, action };
const char* to_string(Task task);

/// Ground truth per segment id.
using LabelMap = std::map<std::string, Labels>;

/// Index of the largest value; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

/// True iff fewer than k classes outrank `label`, where class c outranks the
/// label when its score is higher, or equal with a lower index.
bool in_top_k(std::span<const double> scores, std::size_t label, std::size_t k);

/// Fraction of segments whose true class is among the k best.
/// Throws ValidationError for k < 1, an empty table, or an unlabelled segment.
double topk_accuracy(const ScoreTable& table, const LabelMap& labels, Task task, std::size_t k);

struct PrecisionRecall {
  double precision = 0.0;  // fractions in [0, 1]
  double recall = 0.0;
};

/// Macro averages from top-1 predictions over the classes that occur in the
/// ground truth or the predictions. A class that is predicted but never true
/// has recall 0; one that is true but never predicted has precision 0.
PrecisionRecall macro_precision_recall(const ScoreTable& table, const LabelMap& labels, Task task);

/// Percentages, as reported per task.
struct TaskMetrics {
  double top1 = 0.0;
  double top5 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct MetricsReport {
  TaskMetrics verb;
  TaskMetrics noun;
  TaskMetrics action;

  const TaskMetrics& operator[](Task task) const;
  /// task,top1,top5,precision,recall (macro, artifact protocol).
  std::string to_csv() const;
};

MetricsReport compute_metrics(const ScoreTable& table, const LabelMap& labels);

enum class DecodeMode { direct, pair };
DecodeMode decode_mode_from_string(const std::string& text);

struct Prediction {
  std::size_t verb = 0;
  std::size_t noun = 0;
  std::size_t action = 0;
  bool fallback = false;  // pair mode: argmax pair was not an observed action
};

/// direct: action = argmax action logits, (verb, noun) from the action.
/// pair: verb and noun are their own argmaxes; the action is their pair when
/// observed, otherwise the best-scoring action with the predicted verb (or
/// the best action overall if no action has that verb).
std::map<std::string, Prediction> decode(const ScoreTable& table, const LabelSpace& space,
                                         DecodeMode mode);

}  // namespace vidrec
