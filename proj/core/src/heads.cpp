#include "vidrec/heads.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "vidrec/errors.hpp"
#include "vidrec/ops.hpp"

namespace vidrec {

using nlohmann::ordered_json;

LabelSpace::LabelSpace(std::vector<std::string> verbs, std::vector<std::string> nouns,
                       std::vector<VerbNoun> actions)
    : verbs_(std::move(verbs)), nouns_(std::move(nouns)), actions_(std::move(actions)) {
  for (std::size_t a = 0; a < actions_.size(); ++a) {
    const auto [v, n] = actions_[a];
    if (v >= verbs_.size() || n >= nouns_.size()) {
      throw ValidationError("label space: action " + std::to_string(a) + " = (" +
                            std::to_string(v) + ", " + std::to_string(n) +
                            ") outside the verb/noun vocabularies");
    }
    if (!pair_to_action_.emplace(actions_[a], a).second) {
      throw ValidationError("label space: duplicate action pair (" + std::to_string(v) + ", " +
                            std::to_string(n) + ")");
    }
  }
}

std::optional<std::size_t> LabelSpace::action_of(std::size_t verb, std::size_t noun) const {
  auto it = pair_to_action_.find({verb, noun});
  if (it == pair_to_action_.end()) return std::nullopt;
  return it->second;
}

VerbNoun LabelSpace::derive_pair(std::size_t action) const {
  if (action >= actions_.size()) {
    throw ValidationError("derive_pair: action " + std::to_string(action) + " out of range for " +
                          std::to_string(actions_.size()) + " actions");
  }
  return actions_[action];
}

std::string LabelSpace::to_json() const {
  ordered_json j;
  j["verbs"] = verbs_;
  j["nouns"] = nouns_;
  ordered_json acts = ordered_json::array();
  for (const auto& [v, n] : actions_) acts.push_back({v, n});
  j["actions"] = std::move(acts);
  return j.dump();
}

std::string LabelSpace::id() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a64(to_json()));
  return buf;
}

LabelSpace LabelSpace::from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("label space: ") + e.what());
  }
  auto field = [&](const char* key) -> const ordered_json& {
    if (!j.is_object() || !j.contains(key) || !j.at(key).is_array()) {
      throw ValidationError(std::string("label space: missing array field \"") + key + "\"");
    }
    return j.at(key);
  };
  std::vector<std::string> verbs, nouns;
  std::vector<VerbNoun> actions;
  try {
    verbs = field("verbs").get<std::vector<std::string>>();
    nouns = field("nouns").get<std::vector<std::string>>();
    const auto& acts = field("actions");
    for (std::size_t k = 0; k < acts.size(); ++k) {
      const auto& a = acts[k];
      if (!a.is_array() || a.size() != 2 || !a[0].is_number_unsigned() ||
          !a[1].is_number_unsigned()) {
        throw ValidationError("label space: actions[" + std::to_string(k) +
                              "] must be a [verb_id, noun_id] pair of non-negative integers");
      }
      actions.emplace_back(a[0].get<std::size_t>(), a[1].get<std::size_t>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("label space: ") + e.what());
  }
  return LabelSpace(std::move(verbs), std::move(nouns), std::move(actions));
}

LabelSpace build_label_space(std::span<const Annotation> annotations,
                             std::vector<std::string> verbs, std::vector<std::string> nouns) {
  std::vector<VerbNoun> actions;
  std::map<VerbNoun, std::size_t> seen;
  for (const Annotation& a : annotations) {
    if (a.verb >= verbs.size() || a.noun >= nouns.size()) {
      throw ValidationError("build_label_space: segment " + a.segment_id + " has (" +
                            std::to_string(a.verb) + ", " + std::to_string(a.noun) +
                            ") outside the vocabularies (" + std::to_string(verbs.size()) +
                            " verbs, " + std::to_string(nouns.size()) + " nouns)");
    }
    if (seen.emplace(VerbNoun{a.verb, a.noun}, actions.size()).second) {
      actions.emplace_back(a.verb, a.noun);
    }
  }
  return LabelSpace(std::move(verbs), std::move(nouns), std::move(actions));
}

// ---------------------------------------------------------------------------

ScoreTriple structured_forward(const Tensor& feature, const StructuredHeadParams& p) {
  Tensor a = add(matvec(p.w_act, feature), p.b_act);
  Tensor verb = add(add(matvec(p.w_verb, feature), p.b_verb), matvec(p.bias_verb, a));
  Tensor noun = add(add(matvec(p.w_noun, feature), p.b_noun), matvec(p.bias_noun, a));
  return {std::move(verb), std::move(noun), std::move(a)};
}

Tensor multi_task_loss(const ScoreTriple& s, const Labels& y) {
  return add(add(cross_entropy(s.verb, y.verb), cross_entropy(s.noun, y.noun)),
             cross_entropy(s.action, y.action));
}

Tensor verb_loss(const ScoreTriple& s, const Labels& y) { return cross_entropy(s.verb, y.verb); }

ScoreTriple mean_scores(std::span<const ScoreTriple> parts) {
  if (parts.empty()) throw ShapeError("mean_scores: no score triples");
  std::vector<Tensor> v, n, a;
  for (const ScoreTriple& s : parts) {
    v.push_back(s.verb);
    n.push_back(s.noun);
    a.push_back(s.action);
  }
  return {mean_of(v), mean_of(n), mean_of(a)};
}

void init_structured_head(ParameterStore& store, const std::string& name, std::size_t features,
                          std::size_t verbs, std::size_t nouns, std::size_t actions,
                          std::uint64_t seed) {
  const std::string pre = "head." + name + ".";
  const double bound = std::sqrt(1.0 / static_cast<double>(features));
  auto weight = [&](const char* key, std::size_t rows) {
    store.add(pre + key, "heads", uniform_tensor({rows, features}, bound, seed_for(pre + key, seed)));
  };
  weight("w_verb", verbs);
  store.add(pre + "b_verb", "heads", Tensor::zeros({verbs}));
  weight("w_noun", nouns);
  store.add(pre + "b_noun", "heads", Tensor::zeros({nouns}));
  weight("w_act", actions);
  store.add(pre + "b_act", "heads", Tensor::zeros({actions}));
  store.add(pre + "bias_verb", "heads", Tensor::zeros({verbs, actions}));
  store.add(pre + "bias_noun", "heads", Tensor::zeros({nouns, actions}));
}

void init_structured_head(ParameterStore& store, const std::string& name, std::size_t features,
                          const LabelSpace& space, std::uint64_t seed) {
  init_structured_head(store, name, features, space.num_verbs(), space.num_nouns(),
                       space.num_actions(), seed);
}

StructuredHeadParams structured_head_params(const BoundParams& p, const std::string& name) {
  const std::string pre = "head." + name + ".";
  return {p[pre + "w_verb"], p[pre + "b_verb"], p[pre + "w_noun"], p[pre + "b_noun"],
          p[pre + "w_act"],  p[pre + "b_act"],  p[pre + "bias_verb"], p[pre + "bias_noun"]};
}

}  // namespace vidrec
