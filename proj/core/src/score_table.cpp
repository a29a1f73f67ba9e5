#include "vidrec/score_table.hpp"

#include "vidrec/errors.hpp"

namespace vidrec {

Scores to_scores(const ScoreTriple& s) {
  return {s.verb.values(), s.noun.values(), s.action.values()};
}

void ScoreTable::check_against(const LabelSpace& space) const {
  if (label_space_id != space.id()) {
    throw ValidationError("score table label space " + label_space_id +
                          " does not match label space " + space.id());
  }
  for (const auto& [seg, s] : rows) {
    if (s.verb.size() != space.num_verbs() || s.noun.size() != space.num_nouns() ||
        s.action.size() != space.num_actions()) {
      throw ValidationError("score table segment " + seg + " has extents (" +
                            std::to_string(s.verb.size()) + ", " + std::to_string(s.noun.size()) +
                            ", " + std::to_string(s.action.size()) + "), label space has (" +
                            std::to_string(space.num_verbs()) + ", " +
                            std::to_string(space.num_nouns()) + ", " +
                            std::to_string(space.num_actions()) + ")");
    }
  }
}

namespace {

void fold(std::vector<double>& m, const std::vector<double>& x, double j, const std::string& seg,
          const char* task) {
  if (m.size() != x.size()) {
    throw ValidationError("average_tables: segment " + seg + " " + task + " extents differ (" +
                          std::to_string(m.size()) + " vs " + std::to_string(x.size()) + ")");
  }
  for (std::size_t k = 0; k < m.size(); ++k) m[k] += (x[k] - m[k]) / j;
}

}  // namespace

ScoreTable average_tables(std::span<const ScoreTable> tables) {
  if (tables.empty()) throw ValidationError("average_tables: no tables given");
  ScoreTable out = tables.front();
  for (std::size_t t = 1; t < tables.size(); ++t) {
    const ScoreTable& next = tables[t];
    if (next.label_space_id != out.label_space_id) {
      throw ValidationError("average_tables: table " + std::to_string(t) + " uses label space " +
                            next.label_space_id + ", table 0 uses " + out.label_space_id);
    }
    if (next.rows.size() != out.rows.size()) {
      throw ValidationError("average_tables: table " + std::to_string(t) + " has " +
                            std::to_string(next.rows.size()) + " segments, table 0 has " +
                            std::to_string(out.rows.size()));
    }
    const double j = static_cast<double>(t + 1);
    for (auto& [seg, m] : out.rows) {
      auto it = next.rows.find(seg);
      if (it == next.rows.end()) {
        throw ValidationError("average_tables: segment " + seg + " missing from table " +
                              std::to_string(t));
      }
      fold(m.verb, it->second.verb, j, seg, "verb");
      fold(m.noun, it->second.noun, j, seg, "noun");
      fold(m.action, it->second.action, j, seg, "action");
    }
  }
  return out;
}

}  // namespace vidrec
