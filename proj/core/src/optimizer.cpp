#include "vidrec/optimizer.hpp"

#include <cmath>

#include "vidrec/errors.hpp"

namespace vidrec {

void optimizer_step(const OptimizerConfig& config, ParameterStore& store,
                    const std::unordered_map<std::string, Tensor>& grads, double lr,
                    const std::set<std::string>& trainable_groups, OptimizerState& state) {
  std::vector<const Parameter*> targets;
  for (const Parameter& p : store.items()) {
    if (trainable_groups.count(p.group) == 0) continue;
    auto it = grads.find(p.name);
    if (it == grads.end()) continue;
    if (it->second.shape() != p.value.shape()) {
      throw ShapeError("optimizer_step: gradient for " + p.name + " has shape " +
                       to_string(it->second.shape()) + ", parameter has " +
                       to_string(p.value.shape()));
    }
    for (double g : it->second.data()) {
      if (!std::isfinite(g)) throw NumericalError("optimizer_step: non-finite gradient for " + p.name);
    }
    targets.push_back(&p);
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);

  for (const Parameter* p : targets) {
    const std::string name = p->name;
    auto g = grads.at(name).data();
    std::vector<double> w = p->value.values();
    auto& m = state.first[name];
    if (m.empty()) m.assign(w.size(), 0.0);
    if (config.kind == OptimizerKind::sgd) {
      for (std::size_t k = 0; k < w.size(); ++k) {
        m[k] = config.momentum * m[k] + g[k];
        w[k] -= lr * m[k];
      }
    } else {
      auto& v = state.second[name];
      if (v.empty()) v.assign(w.size(), 0.0);
      for (std::size_t k = 0; k < w.size(); ++k) {
        m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
        v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
        const double mhat = m[k] / c1, vhat = v[k] / c2;
        w[k] -= lr * mhat / (std::sqrt(vhat) + config.epsilon);
      }
    }
    store.set(name, Tensor(p->value.shape(), std::move(w)));
  }
}

}  // namespace vidrec
