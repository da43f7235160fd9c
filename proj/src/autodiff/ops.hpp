#pragma once

#include <span>
#include <vector>

#include "autodiff/rng.hpp"
#include "autodiff/tensor.hpp"

namespace s2g::ad {

// Linear algebra

/// [m x k] * [k x n] -> [m x n].
Tensor matmul(const Tensor& a, const Tensor& b);

/// x [n x in] * w [in x out] + b [out], bias broadcast over rows.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// Pointwise. Binary kinds accept identical shapes or a one-element operand.

enum class Elementwise { Add, Sub, Mul, Sigmoid, Tanh, Relu };

Tensor elementwise(Elementwise kind, std::span<const Tensor> operands);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

// Reductions and normalisation

Tensor softmax(const Tensor& x, std::size_t axis);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// Mean over rows of -log softmax(logits[i])[targets[i]].
Tensor cross_entropy(const Tensor& logits, std::span<const int> targets);

// Convolution and pooling. Inputs are [C x H x W] or [B x C x H x W].

/// Stride-1 cross-correlation with zero "same" padding. For even kernel
/// extents the extra padding row/column goes after (bottom/right).
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias = {});

/// Max over the full spatial extent; `window` must equal (H, W).
Tensor max_pool2d(const Tensor& input, std::size_t window_h, std::size_t window_w);

Tensor dropout(const Tensor& input, double rate, bool training, Rng& rng);

// Layout

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length);
Tensor concat(std::span<const Tensor> parts, std::size_t axis);

/// Row gather from table [V x h]; the gradient never reaches `frozen_row`.
Tensor embedding(const Tensor& table, std::span<const int> ids, int frozen_row = -1);

// Nested-list grid primitives. Grids are [H x W x h] with E [h] and A [3], or
// batched [B x H x W x h] with E [B x h] and A [B x 3]. Action columns are
// ordered (TLU, NLP, NOP).

Tensor top_list_update(const Tensor& grid, const Tensor& symbol);
Tensor new_list_push(const Tensor& grid, const Tensor& symbol);
Tensor grid_step(const Tensor& grid, const Tensor& symbol, const Tensor& actions);

}  // namespace s2g::ad
