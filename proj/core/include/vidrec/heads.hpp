#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vidrec/params.hpp"
#include "vidrec/tensor.hpp"

namespace vidrec {

using VerbNoun = std::pair<std::size_t, std::size_t>;

/// Verb and noun vocabularies plus the observed (verb, noun) action vocabulary.
class LabelSpace {
 public:
  LabelSpace() = default;
  /// Throws ValidationError on out-of-range or duplicated pairs.
  LabelSpace(std::vector<std::string> verbs, std::vector<std::string> nouns,
             std::vector<VerbNoun> actions);

  std::size_t num_verbs() const { return verbs_.size(); }
  std::size_t num_nouns() const { return nouns_.size(); }
  std::size_t num_actions() const { return actions_.size(); }
  const std::vector<std::string>& verbs() const { return verbs_; }
  const std::vector<std::string>& nouns() const { return nouns_; }
  const std::vector<VerbNoun>& actions() const { return actions_; }

  std::optional<std::size_t> action_of(std::size_t verb, std::size_t noun) const;
  /// Stored pair of `action`; throws ValidationError for an invalid id.
  VerbNoun derive_pair(std::size_t action) const;

  /// 16 hex digits of FNV-1a over the canonical JSON form.
  std::string id() const;
  /// {"verbs":[...],"nouns":[...],"actions":[[v,n],...]}
  std::string to_json() const;
  static LabelSpace from_json(const std::string& text);

  bool operator==(const LabelSpace& other) const = default;

 private:
  std::vector<std::string> verbs_;
  std::vector<std::string> nouns_;
  std::vector<VerbNoun> actions_;
  std::map<VerbNoun, std::size_t> pair_to_action_;
};

struct Annotation {
  std::string segment_id;
  std::size_t verb = 0;
  std::size_t noun = 0;
};

/// Actions are the distinct annotated pairs in first-occurrence order.
LabelSpace build_label_space(std::span<const Annotation> annotations,
                             std::vector<std::string> verbs, std::vector<std::string> nouns);

/// Verb, noun and action logits of one segment.
struct ScoreTriple {
  Tensor verb;
  Tensor noun;
  Tensor action;
};

struct Labels {
  std::size_t verb = 0;
  std::size_t noun = 0;
  std::size_t action = 0;
};

struct StructuredHeadParams {
  Tensor w_verb;  // V × F
  Tensor b_verb;  // V
  Tensor w_noun;  // N × F
  Tensor b_noun;  // N
  Tensor w_act;   // A × F
  Tensor b_act;   // A
  Tensor bias_verb;  // V × A
  Tensor bias_noun;  // N × A
};

/// a = W_act f + b_act
/// verb = W_verb f + b_verb + B_v a,  noun = W_noun f + b_noun + B_n a,  action = a
ScoreTriple structured_forward(const Tensor& feature, const StructuredHeadParams& params);

/// Sum of the three cross-entropies with unit weights.
Tensor multi_task_loss(const ScoreTriple& scores, const Labels& labels);
/// Verb cross-entropy alone.
Tensor verb_loss(const ScoreTriple& scores, const Labels& labels);

/// Per-task elementwise mean of equally shaped triples, in list order.
ScoreTriple mean_scores(std::span<const ScoreTriple> parts);

/// Parameters `head.<name>.*` in group "heads". Classifier weights are uniform
/// in ±sqrt(1/F); biases and the bias maps B_v, B_n start at zero.
void init_structured_head(ParameterStore& store, const std::string& name, std::size_t features,
                          const LabelSpace& space, std::uint64_t seed);
void init_structured_head(ParameterStore& store, const std::string& name, std::size_t features,
                          std::size_t verbs, std::size_t nouns, std::size_t actions,
                          std::uint64_t seed);
StructuredHeadParams structured_head_params(const BoundParams& p, const std::string& name);

}  // namespace vidrec
