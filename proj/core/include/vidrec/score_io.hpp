#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vidrec/metrics.hpp"
#include "vidrec/score_table.hpp"

namespace vidrec {

inline constexpr const char* kScoreFormatVersion = "1.0";

/// {"version":"1.0","split":...,"label_space":...,"results":{seg:{"verb":[...],
/// "noun":[...],"action":[...]}}} with keys in that order, segments sorted,
/// and every value printed with 17 significant digits (exact round trip).
/// Throws NumericalError for a non-finite value.
std::string write_score_json(const ScoreTable& table);

/// Throws FormatError naming the offending field path (or the parse
/// position) for malformed documents.
ScoreTable read_score_json(const std::string& text);

void save_score_json(const std::filesystem::path& path, const ScoreTable& table);
ScoreTable load_score_json(const std::filesystem::path& path);

/// Score JSON without "action", plus "challenge":"action_recognition".
std::string write_submission_json(const ScoreTable& table);

/// Schema problems of a submission document, one message per violation;
/// empty when valid.
std::vector<std::string> validate_submission(const std::string& text);

/// {"<segment>":{"verb":v,"noun":n,"action":a},...}
std::string write_labels_json(const LabelMap& labels);
LabelMap read_labels_json(const std::string& text);

/// Whole-file helpers; throw ValidationError if the file cannot be opened.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace vidrec
