#include "vidrec/score_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vidrec/errors.hpp"

namespace vidrec {

namespace {

using nlohmann::json;

std::string quoted(const std::string& s) { return json(s).dump(); }

void append_array(std::string& out, const std::vector<double>& v, const std::string& where) {
  char buf[40];
  out += '[';
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!std::isfinite(v[k])) {
      throw NumericalError("score JSON: non-finite value at " + where + "[" + std::to_string(k) + "]");
    }
    std::snprintf(buf, sizeof buf, "%.17g", v[k]);
    if (k) out += ',';
    out += buf;
  }
  out += ']';
}

std::string write_document(const ScoreTable& table, bool submission) {
  std::string out = "{\"version\":";
  out += quoted(kScoreFormatVersion);
  if (submission) out += ",\"challenge\":\"action_recognition\"";
  out += ",\"split\":" + quoted(table.split);
  out += ",\"label_space\":" + quoted(table.label_space_id);
  out += ",\"results\":{";
  bool first = true;
  for (const auto& [seg, s] : table.rows) {
    if (!first) out += ',';
    first = false;
    out += "\n" + quoted(seg) + ":{\"verb\":";
    append_array(out, s.verb, "results." + seg + ".verb");
    out += ",\"noun\":";
    append_array(out, s.noun, "results." + seg + ".noun");
    if (!submission) {
      out += ",\"action\":";
      append_array(out, s.action, "results." + seg + ".action");
    }
    out += '}';
  }
  out += "}}\n";
  return out;
}

json parse_or_throw(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw FormatError("score JSON: missing field " + path + (path.empty() ? "" : ".") + key);
  }
  return obj.at(key);
}

std::string require_string(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_string()) throw FormatError("score JSON: field " + key + " must be a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const json& v, const std::string& path) {
  if (!v.is_array()) throw FormatError("score JSON: " + path + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v[k].is_number()) {
      throw FormatError("score JSON: " + path + "[" + std::to_string(k) + "] must be a number");
    }
    out.push_back(v[k].get<double>());
  }
  if (out.empty()) throw FormatError("score JSON: " + path + " is empty");
  return out;
}

}  // namespace

std::string write_score_json(const ScoreTable& table) { return write_document(table, false); }

ScoreTable read_score_json(const std::string& text) {
  const json j = parse_or_throw(text, "score JSON");
  if (!j.is_object()) throw FormatError("score JSON: top level must be an object");
  const std::string version = require_string(j, "version", "");
  if (version != kScoreFormatVersion) {
    throw FormatError("score JSON: unsupported version \"" + version + "\"");
  }
  ScoreTable t;
  t.split = require_string(j, "split", "");
  t.label_space_id = require_string(j, "label_space", "");
  const json& results = require(j, "results", "");
  if (!results.is_object()) throw FormatError("score JSON: results must be an object");
  for (const auto& [seg, row] : results.items()) {
    const std::string path = "results." + seg;
    if (!row.is_object()) throw FormatError("score JSON: " + path + " must be an object");
    Scores s;
    s.verb = numbers(require(row, "verb", path), path + ".verb");
    s.noun = numbers(require(row, "noun", path), path + ".noun");
    s.action = numbers(require(row, "action", path), path + ".action");
    t.rows.emplace(seg, std::move(s));
  }
  return t;
}

void save_score_json(const std::filesystem::path& path, const ScoreTable& table) {
  write_text_file(path, write_score_json(table));
}

ScoreTable load_score_json(const std::filesystem::path& path) {
  return read_score_json(read_text_file(path));
}

std::string write_submission_json(const ScoreTable& table) { return write_document(table, true); }

std::vector<std::string> validate_submission(const std::string& text) {
  std::vector<std::string> problems;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    return {std::string("not valid JSON: ") + e.what()};
  }
  if (!j.is_object()) return {"top level must be an object"};
  auto expect_string = [&](const char* key, const char* value) {
    if (!j.contains(key)) {
      problems.push_back(std::string("missing field ") + key);
    } else if (!j[key].is_string()) {
      problems.push_back(std::string(key) + " must be a string");
    } else if (value && j[key].get<std::string>() != value) {
      problems.push_back(std::string(key) + " must be \"" + value + "\"");
    }
  };
  expect_string("version", kScoreFormatVersion);
  expect_string("challenge", "action_recognition");
  expect_string("split", nullptr);
  expect_string("label_space", nullptr);
  for (const auto& [key, _] : j.items()) {
    if (key != "version" && key != "challenge" && key != "split" && key != "label_space" &&
        key != "results") {
      problems.push_back("unexpected field " + key);
    }
  }
  if (!j.contains("results") || !j["results"].is_object()) {
    problems.push_back("results must be an object");
    return problems;
  }
  std::size_t verbs = 0, nouns = 0;
  bool first = true;
  for (const auto& [seg, row] : j["results"].items()) {
    const std::string path = "results." + seg;
    if (!row.is_object()) {
      problems.push_back(path + " must be an object");
      continue;
    }
    for (const auto& [key, _] : row.items()) {
      if (key != "verb" && key != "noun") problems.push_back("unexpected field " + path + "." + key);
    }
    for (const char* task : {"verb", "noun"}) {
      if (!row.contains(task) || !row[task].is_array() || row[task].empty()) {
        problems.push_back(path + "." + task + " must be a nonempty array of numbers");
        continue;
      }
      for (std::size_t k = 0; k < row[task].size(); ++k) {
        if (!row[task][k].is_number()) {
          problems.push_back(path + "." + task + "[" + std::to_string(k) + "] must be a number");
        }
      }
    }
    if (row.contains("verb") && row.contains("noun") && row["verb"].is_array() &&
        row["noun"].is_array()) {
      if (first) {
        verbs = row["verb"].size();
        nouns = row["noun"].size();
        first = false;
      } else if (row["verb"].size() != verbs || row["noun"].size() != nouns) {
        problems.push_back(path + " has a different class count from earlier segments");
      }
    }
  }
  return problems;
}

std::string write_labels_json(const LabelMap& labels) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [seg, l] : labels) {
    j[seg] = {{"verb", l.verb}, {"noun", l.noun}, {"action", l.action}};
  }
  return j.dump(1) + "\n";
}

LabelMap read_labels_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("labels JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("labels JSON: top level must be an object");
  LabelMap out;
  for (const auto& [seg, row] : j.items()) {
    Labels l;
    for (const auto& [key, dst] : {std::pair<const char*, std::size_t*>{"verb", &l.verb},
                                   {"noun", &l.noun},
                                   {"action", &l.action}}) {
      if (!row.is_object() || !row.contains(key) || !row[key].is_number_unsigned()) {
        throw ValidationError("labels JSON: " + seg + "." + key +
                              " must be a non-negative integer");
      }
      *dst = row[key].get<std::size_t>();
    }
    out.emplace(seg, l);
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw ValidationError("cannot write " + path.string());
}

}  // namespace vidrec
