#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace vidrec {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

class Tape;

/// Dense row-major array of doubles, immutable after construction.
///
/// A tensor produced by an operation whose inputs live on a Tape carries a
/// node id on that tape; gradients flow back through it on Tape::backward.
/// Copies are cheap (the payload is shared).
class Tensor {
 public:
  Tensor() = default;
  /// Throws ShapeError if the payload length disagrees with the shape or an
  /// extent is zero, NumericalError if any value is non-finite.
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);

  bool defined() const { return data_ != nullptr; }
  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return data_ ? data_->size() : 0; }

  std::span<const double> data() const;
  const std::vector<double>& values() const;
  double operator[](std::size_t i) const { return (*data_)[i]; }
  /// Value of a one-element tensor.
  double item() const;

  bool grad_enabled() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int node() const { return node_; }

  /// Same values, detached from any tape.
  Tensor detach() const;

 private:
  friend class Tape;
  friend Tensor make_result(const char* op, Shape shape, std::vector<double> data);
  struct Unchecked {};
  Tensor(Unchecked, Shape shape, std::shared_ptr<const std::vector<double>> data);

  Shape shape_;
  std::shared_ptr<const std::vector<double>> data_;
  Tape* tape_ = nullptr;
  int node_ = -1;
};

/// Gradients of a scalar with respect to the leaves registered on a tape.
class Gradients {
 public:
  /// Gradient for `leaf`; zeros of the leaf's shape if the loss does not
  /// depend on it. Throws TapeError if `leaf` is not a leaf of the tape.
  Tensor of(const Tensor& leaf) const;
  bool reached(const Tensor& leaf) const;

 private:
  friend class Tape;
  const Tape* tape_ = nullptr;
  std::unordered_map<int, Tensor> by_node_;
};

/// Linear record of a forward computation for reverse-mode differentiation.
///
/// Nodes are appended in execution order, so the list is topologically sorted.
/// A tape supports exactly one backward traversal. Tensors recorded on a tape
/// hold a raw pointer to it; the tape must outlive them.
class Tape {
 public:
  /// Receives d(loss)/d(output) and one gradient buffer per op input (empty
  /// when that input does not need a gradient); accumulates into the buffers.
  using BackwardFn = std::function<void(std::span<const double> grad_out,
                                        std::span<const std::span<double>> grad_in)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers `value` as a differentiable leaf and returns it bound to this tape.
  Tensor leaf(const Tensor& value);

  Gradients backward(const Tensor& loss);

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }
  const char* op_name(int node) const;
  const std::vector<int>& parents(int node) const;

  /// Used by operations: returns `result` bound to a fresh node whose parents
  /// are the on-tape members of `inputs`, or `result` unchanged if none of the
  /// inputs lives on a tape. Throws TapeError on mixed tapes.
  static Tensor record(const char* op, Tensor result,
                       std::initializer_list<const Tensor*> inputs, BackwardFn backward);
  static Tensor record(const char* op, Tensor result, std::span<const Tensor> inputs,
                       BackwardFn backward);

 private:
  struct Node {
    const char* op;
    std::vector<int> parents;   // -1 for inputs that are not on the tape
    std::size_t numel;
    BackwardFn backward;
    bool is_leaf;
    Shape leaf_shape;
  };

  Tensor append(const char* op, Tensor result, std::vector<const Tensor*> inputs,
                BackwardFn backward);

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

/// Throws NumericalError naming `where` if any value is non-finite.
void require_finite(std::span<const double> values, const char* where);

/// Builds an op result, validating finiteness (the op name appears in errors).
Tensor make_result(const char* op, Shape shape, std::vector<double> data);

}  // namespace vidrec
