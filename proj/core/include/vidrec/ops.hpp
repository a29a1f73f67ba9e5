#pragma once

#include <cstddef>
#include <random>
#include <span>

#include "vidrec/tensor.hpp"

// Differentiable operations on Tensor. Every op records itself on the tape of
// its inputs (if any) and validates that its result is finite. All reductions
// accumulate in a fixed left-to-right order, so repeated calls are bit-identical.
namespace vidrec {

// -- elementwise -------------------------------------------------------------
//
// Binary ops broadcast numpy-style: shapes are right-aligned, and each axis
// must either agree or be 1 in one operand.

Shape broadcast_shape(const Shape& a, const Shape& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // hadamard
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor relu(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }

// -- linear algebra ------------------------------------------------------------

/// M×K · K×N -> M×N.
Tensor matmul(const Tensor& a, const Tensor& b);
/// M×K matrix times length-K vector -> length-M vector.
Tensor matvec(const Tensor& w, const Tensor& x);

// -- structure -----------------------------------------------------------------

Tensor reshape(const Tensor& a, Shape shape);
/// Concatenates along the leading axis; trailing extents must agree.
Tensor concat(std::span<const Tensor> parts);
Tensor concat(std::initializer_list<Tensor> parts);
/// Rows [begin, begin+count) of the leading axis.
Tensor slice(const Tensor& a, std::size_t begin, std::size_t count);
/// Element `index` of the leading axis, with that axis removed.
Tensor select(const Tensor& a, std::size_t index);
/// Stacks equally shaped tensors along a new leading axis.
Tensor stack(std::span<const Tensor> parts);
/// Swaps the first two axes: A×B×rest -> B×A×rest.
Tensor transpose01(const Tensor& a);

// -- reductions ----------------------------------------------------------------

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Arithmetic mean of equally shaped tensors, accumulated in list order.
Tensor mean_of(std::span<const Tensor> parts);

// -- spatial -------------------------------------------------------------------

/// Cross-correlation of C_in×H×W with C_out×C_in×kH×kW. With `same_padding`
/// the kernel extents must be odd and the output keeps H×W (zero padding);
/// otherwise the output is (H-kH+1)×(W-kW+1).
Tensor conv2d(const Tensor& input, const Tensor& kernel, bool same_padding = true);

/// Cross-correlation of C_in×T×H×W with C_out×C_in×kT×kH×kW, zero padding on
/// all three axes when `same_padding`.
Tensor conv3d(const Tensor& input, const Tensor& kernel, bool same_padding = true);

/// Softmax over all H×W cells of a 1×H×W map, stabilised by max subtraction,
/// scaled so the cells sum to `mass` (each cell is exp * mass / total).
Tensor softmax_spatial(const Tensor& map, double mass = 1.0);

/// C×H×W -> C, mean of each plane.
Tensor spatial_avg_pool(const Tensor& x);

/// C×H×W -> C×(H/2)×(W/2), mean of each 2×2 block (trailing odd row/column dropped).
Tensor mean_downsample2(const Tensor& x);

// -- regularisation ----------------------------------------------------------

/// Inverted dropout: multiplies by a 0/1 mask scaled by 1/(1-p). Identity when
/// `rng` is null or p == 0.
Tensor dropout(const Tensor& x, double p, std::mt19937_64* rng);

// -- losses --------------------------------------------------------------------

/// -log softmax(logits)[label] for a logit vector.
Tensor cross_entropy(const Tensor& logits, std::size_t label);

}  // namespace vidrec
