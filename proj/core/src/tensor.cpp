#include "vidrec/tensor.hpp"

#include <cmath>
#include <sstream>

#include "vidrec/errors.hpp"

namespace vidrec {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

void require_finite(std::span<const double> values, const char* where) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream os;
      os << where << ": non-finite value " << values[i] << " at index " << i;
      throw NumericalError(os.str());
    }
  }
}

namespace {

void check_shape(const Shape& shape, std::size_t payload) {
  for (std::size_t e : shape) {
    if (e == 0) throw ShapeError("tensor extent must be >= 1, got shape " + to_string(shape));
  }
  if (numel(shape) != payload) {
    throw ShapeError("shape " + to_string(shape) + " needs " + std::to_string(numel(shape)) +
                     " values, got " + std::to_string(payload));
  }
}

}  // namespace

Tensor::Tensor(Shape shape, std::vector<double> data) {
  check_shape(shape, data.size());
  require_finite(data, "Tensor");
  shape_ = std::move(shape);
  data_ = std::make_shared<const std::vector<double>>(std::move(data));
}

Tensor::Tensor(Unchecked, Shape shape, std::shared_ptr<const std::vector<double>> data)
    : shape_(std::move(shape)), data_(std::move(data)) {}

Tensor make_result(const char* op, Shape shape, std::vector<double> data) {
  check_shape(shape, data.size());
  require_finite(data, op);
  return Tensor(Tensor::Unchecked{}, std::move(shape),
                std::make_shared<const std::vector<double>>(std::move(data)));
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  std::vector<double> data(numel(shape), value);
  return Tensor(std::move(shape), std::move(data));
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  Shape shape{values.size()};
  return Tensor(std::move(shape), std::move(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     to_string(shape_));
  }
  return shape_[axis];
}

std::span<const double> Tensor::data() const {
  if (!data_) return {};
  return {data_->data(), data_->size()};
}

const std::vector<double>& Tensor::values() const {
  static const std::vector<double> empty;
  return data_ ? *data_ : empty;
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape_));
  return (*data_)[0];
}

Tensor Tensor::detach() const { return Tensor(Unchecked{}, shape_, data_); }

// ---------------------------------------------------------------------------

Tensor Gradients::of(const Tensor& leaf) const {
  if (leaf.tape() != tape_ || leaf.node() < 0) {
    throw TapeError("gradient requested for a tensor that is not a leaf of this tape");
  }
  auto it = by_node_.find(leaf.node());
  if (it == by_node_.end()) {
    if (!tape_->parents(leaf.node()).empty()) {
      throw TapeError("gradient requested for a non-leaf tensor");
    }
    return Tensor::zeros(leaf.shape());
  }
  return it->second;
}

bool Gradients::reached(const Tensor& leaf) const {
  return leaf.tape() == tape_ && by_node_.count(leaf.node()) != 0;
}

const char* Tape::op_name(int node) const { return nodes_.at(node).op; }

const std::vector<int>& Tape::parents(int node) const { return nodes_.at(node).parents; }

Tensor Tape::leaf(const Tensor& value) {
  if (!value.defined()) throw TapeError("cannot register an undefined tensor as a leaf");
  if (consumed_) throw TapeError("tape already consumed by backward()");
  Tensor out = value.detach();
  out.tape_ = this;
  out.node_ = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{"leaf", {}, value.size(), nullptr, true, value.shape()});
  return out;
}

Tensor Tape::record(const char* op, Tensor result, std::initializer_list<const Tensor*> inputs,
                    BackwardFn backward) {
  Tape* tape = nullptr;
  for (const Tensor* t : inputs) {
    if (t->tape() == nullptr) continue;
    if (tape != nullptr && tape != t->tape()) {
      throw TapeError(std::string(op) + ": inputs recorded on different tapes");
    }
    tape = t->tape();
  }
  if (tape == nullptr) return result;
  return tape->append(op, std::move(result), std::vector<const Tensor*>(inputs),
                      std::move(backward));
}

Tensor Tape::record(const char* op, Tensor result, std::span<const Tensor> inputs,
                    BackwardFn backward) {
  Tape* tape = nullptr;
  std::vector<const Tensor*> ptrs;
  ptrs.reserve(inputs.size());
  for (const Tensor& t : inputs) {
    ptrs.push_back(&t);
    if (t.tape() == nullptr) continue;
    if (tape != nullptr && tape != t.tape()) {
      throw TapeError(std::string(op) + ": inputs recorded on different tapes");
    }
    tape = t.tape();
  }
  if (tape == nullptr) return result;
  return tape->append(op, std::move(result), std::move(ptrs), std::move(backward));
}

Tensor Tape::append(const char* op, Tensor result, std::vector<const Tensor*> inputs,
                    BackwardFn backward) {
  if (consumed_) throw TapeError(std::string(op) + ": tape already consumed by backward()");
  Node node{op, {}, result.size(), std::move(backward), false, {}};
  node.parents.reserve(inputs.size());
  for (const Tensor* t : inputs) node.parents.push_back(t->tape() ? t->node() : -1);
  result.tape_ = this;
  result.node_ = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(node));
  return result;
}

Gradients Tape::backward(const Tensor& loss) {
  if (consumed_) throw TapeError("backward(): tape already consumed");
  if (loss.tape() != this) throw TapeError("backward(): loss is not recorded on this tape");
  if (loss.size() != 1) {
    throw TapeError("backward(): loss must be scalar, got shape " + to_string(loss.shape()));
  }
  consumed_ = true;

  const int root = loss.node();
  std::vector<std::vector<double>> grads(static_cast<std::size_t>(root) + 1);
  grads[root].assign(1, 1.0);

  std::vector<std::span<double>> in_spans;
  for (int id = root; id >= 0; --id) {
    Node& node = nodes_[id];
    if (grads[id].empty() || node.is_leaf) continue;
    in_spans.clear();
    for (int p : node.parents) {
      if (p < 0) {
        in_spans.emplace_back();
        continue;
      }
      auto& g = grads[p];
      if (g.empty()) g.assign(nodes_[p].numel, 0.0);
      in_spans.emplace_back(g.data(), g.size());
    }
    node.backward(grads[id], in_spans);
    if (id != root) std::vector<double>().swap(grads[id]);
  }

  Gradients out;
  out.tape_ = this;
  for (int id = 0; id <= root; ++id) {
    if (!nodes_[id].is_leaf || grads[id].empty()) continue;
    std::vector<double>& g = grads[id];
    require_finite(g, "backward");
    out.by_node_.emplace(id, Tensor(nodes_[id].leaf_shape, std::move(g)));
  }
  return out;
}

}  // namespace vidrec
