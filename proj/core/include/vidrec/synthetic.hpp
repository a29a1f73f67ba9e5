#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vidrec/heads.hpp"
#include "vidrec/tensor.hpp"

namespace vidrec {

/// One labelled video: `frames` holds every available frame (C×H×W each).
struct Sample {
  std::string id;
  Labels labels;
  std::vector<Tensor> frames;
};

struct Dataset {
  std::string split;  // "train", "test", or a custom tag
  LabelSpace space;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  std::vector<Annotation> annotations() const;

  /// frames.tnsf (S×F×C×H×W) plus samples.json (split, label space, ids, labels).
  void save(const std::filesystem::path& dir) const;
  static Dataset load(const std::filesystem::path& dir);
};

struct SyntheticSpec {
  std::size_t frames = 16;  // frames per video
  std::size_t channels = 3;
  std::size_t height = 16;
  std::size_t width = 16;
  double noise_sigma = 0.5;
};

/// Verb template over time: sin(π·t/(F−1) + π·v/V), added to all of channel 0.
std::vector<double> verb_signature(std::size_t verb, std::size_t num_verbs, std::size_t frames);

/// Noun template on channel 1: two square blobs mirrored at the left and right
/// edges (so it is flip-invariant). Noun n sits at the top rows when n is
/// even, has sign + when (n/2) is even, and side 3 + 2·(n/4).
/// Throws ValidationError if the blob does not fit in half the frame.
Tensor noun_signature(std::size_t noun, std::size_t height, std::size_t width);

/// Largest noun vocabulary with distinct, fitting templates.
std::size_t max_synthetic_nouns(std::size_t height, std::size_t width);

/// Verbs verb_0.., nouns noun_0..; actions (n mod V, n) for every noun, then
/// `extra_pairs` further distinct pairs drawn with `seed`.
LabelSpace desk_label_space(std::size_t verbs, std::size_t nouns, std::size_t extra_pairs,
                            std::uint64_t seed);

/// Samples with actions drawn uniformly from `space`, verb and noun templates
/// planted on channels 0 and 1, and N(0, σ²) noise on every value. Ids are
/// `<split>_00000`, ...
Dataset make_synthetic(const LabelSpace& space, std::size_t n_samples, const SyntheticSpec& spec,
                       std::uint64_t seed, const std::string& split);

/// Train and test sets drawn from independent streams of `seed`.
struct SyntheticSplits {
  Dataset train;
  Dataset test;
};
SyntheticSplits make_synthetic_splits(const LabelSpace& space, std::size_t n_train,
                                      std::size_t n_test, const SyntheticSpec& spec,
                                      std::uint64_t seed);

/// Flow surrogate: for each sampled index t, pairs l = 0..L−1 use
/// j = min(t + l, F − 2) and take frame[j+1] − frame[j] on channels 0 (x) and
/// 1 (y), interleaved into a 2L×H×W stack.
std::vector<Tensor> flow_stacks(std::span<const Tensor> frames, std::span<const std::size_t> indices,
                                std::size_t pairs);

}  // namespace vidrec
