#include "vidrec/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "vidrec/errors.hpp"

namespace vidrec {

bool GradReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const GradEntry& e) { return e.passed; });
}

double GradReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_rel_error);
  return m;
}

namespace {

double evaluate(const ScalarFn& fn, std::vector<Tensor>& values) {
  Tensor out = fn(values);
  if (out.size() != 1) throw TapeError("grad_check: function must return a scalar");
  return out.item();
}

}  // namespace

GradReport grad_check(const ScalarFn& fn, const std::vector<NamedTensor>& params, double eps,
                      double tol) {
  std::vector<Tensor> plain;
  plain.reserve(params.size());
  for (const auto& p : params) plain.push_back(p.value.detach());

  const double base = evaluate(fn, plain);
  if (evaluate(fn, plain) != base) {
    throw NumericalError("grad_check: forward pass is not deterministic");
  }

  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Tensor> leaves;
    leaves.reserve(plain.size());
    for (const auto& p : plain) leaves.push_back(tape.leaf(p));
    Tensor loss = fn(leaves);
    if (loss.size() != 1) throw TapeError("grad_check: function must return a scalar");
    if (loss.tape() != &tape) {
      // Loss independent of every parameter: all gradients are zero.
      for (const auto& p : plain) analytic.push_back(Tensor::zeros(p.shape()));
    } else {
      Gradients grads = tape.backward(loss);
      for (const auto& leaf : leaves) analytic.push_back(grads.of(leaf));
    }
  }

  GradReport report;
  report.tolerance = tol;
  for (std::size_t p = 0; p < params.size(); ++p) {
    GradEntry entry;
    entry.name = params[p].name;
    const Shape shape = plain[p].shape();
    std::vector<double> work = plain[p].values();
    std::span<const double> ga = analytic[p].data();

    double scale = 0.0;
    for (double v : ga) scale = std::max(scale, std::abs(v));
    const double floor = std::max(1e-3 * scale, 1e-12);

    for (std::size_t k = 0; k < work.size(); ++k) {
      const double orig = work[k];
      work[k] = orig + eps;
      plain[p] = Tensor(shape, work);
      const double fp = evaluate(fn, plain);
      work[k] = orig - eps;
      plain[p] = Tensor(shape, work);
      const double fm = evaluate(fn, plain);
      work[k] = orig;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double abs_err = std::abs(ga[k] - numeric);
      const double denom = std::max({std::abs(ga[k]), std::abs(numeric), floor});
      entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
      entry.max_rel_error = std::max(entry.max_rel_error, abs_err / denom);
    }
    plain[p] = Tensor(shape, work);
    entry.passed = entry.max_rel_error <= tol;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace vidrec
