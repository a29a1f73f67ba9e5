#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "vidrec/heads.hpp"

namespace vidrec {

/// Raw logits of one segment.
struct Scores {
  std::vector<double> verb;
  std::vector<double> noun;
  std::vector<double> action;

  bool operator==(const Scores&) const = default;
};

Scores to_scores(const ScoreTriple& s);

/// Per-segment scores of one model on one split.
struct ScoreTable {
  std::string label_space_id;
  std::string split = "S1";  // "S1", "S2" or a custom tag
  std::map<std::string, Scores> rows;

  /// Throws ValidationError if a row's extents disagree with `space` or the id differs.
  void check_against(const LabelSpace& space) const;
  bool operator==(const ScoreTable&) const = default;
};

/// Elementwise mean per segment and task. Tables are folded in list order
/// with the running mean m_1 = x_1, m_j = m_{j-1} + (x_j − m_{j-1}) / j, so
/// identical inputs average to themselves bit-exactly.
///
/// Throws ValidationError on an empty list or on label-space, split-size,
/// segment-set or extent mismatches. The split tag of the first table is kept.
ScoreTable average_tables(std::span<const ScoreTable> tables);

}  // namespace vidrec
