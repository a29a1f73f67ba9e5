#include "vidrec/backbone.hpp"

#include <cmath>

#include "vidrec/errors.hpp"
#include "vidrec/ops.hpp"

namespace vidrec {

std::size_t BackboneSpec::stage_in_channels(std::size_t i) const {
  return i == 0 ? in_channels : stages.at(i - 1);
}

std::string BackboneSpec::group(std::size_t stage) const {
  return stage + 1 == stages.size() ? prefix + "_last_stage" : prefix;
}

std::string BackboneSpec::kernel_name(std::size_t stage) const {
  return prefix + ".stage" + std::to_string(stage) + ".kernel";
}

std::string BackboneSpec::bias_name(std::size_t stage) const {
  return prefix + ".stage" + std::to_string(stage) + ".bias";
}

void BackboneSpec::validate() const {
  if (stages.empty()) throw ValidationError("backbone: at least one stage is required");
  if (in_channels == 0) throw ValidationError("backbone: input channel count must be positive");
  for (std::size_t c : stages) {
    if (c == 0) throw ValidationError("backbone: stage channel counts must be positive");
  }
}

void init_backbone(ParameterStore& store, const BackboneSpec& spec, std::uint64_t seed) {
  spec.validate();
  for (std::size_t i = 0; i < spec.num_stages(); ++i) {
    const std::size_t cin = spec.stage_in_channels(i), cout = spec.stages[i];
    const double bound = std::sqrt(6.0 / static_cast<double>(cin * 9));
    const std::string kname = spec.kernel_name(i);
    store.add(kname, spec.group(i), uniform_tensor({cout, cin, 3, 3}, bound, seed_for(kname, seed)));
    store.add(spec.bias_name(i), spec.group(i), Tensor::zeros({cout}));
  }
}

Tensor stage_input(const Tensor& x, std::size_t stage) {
  return stage == 0 ? x : mean_downsample2(x);
}

Tensor stage_conv(const Tensor& x, const BoundParams& p, const BackboneSpec& spec,
                  std::size_t stage) {
  const Tensor& bias = p[spec.bias_name(stage)];
  Tensor y = conv2d(x, p[spec.kernel_name(stage)]);
  return relu(add(y, reshape(bias, {bias.dim(0), 1, 1})));
}

Tensor backbone_forward(const Tensor& frame, const BoundParams& p, const BackboneSpec& spec) {
  Tensor x = frame;
  for (std::size_t i = 0; i < spec.num_stages(); ++i) x = stage_conv(stage_input(x, i), p, spec, i);
  return x;
}

}  // namespace vidrec
