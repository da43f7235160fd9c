#pragma once

#include <span>
#include <vector>

#include "autodiff/tensor.hpp"

namespace s2g::grid {

using ad::Tensor;

/// Nested list of H lists with W slots of dimension h. `slots` is
/// [H x W x h] for a single grid or [B x H x W x h] for a batch. Row 0 is the
/// top list, column 0 the leftmost slot.
struct Grid {
  Tensor slots;

  bool batched() const { return slots.rank() == 4; }
  std::size_t batch() const { return batched() ? slots.dim(0) : 1; }
  std::size_t rows() const { return slots.dim(batched() ? 1 : 0); }
  std::size_t cols() const { return slots.dim(batched() ? 2 : 1); }
  std::size_t slot_dim() const { return slots.dim(batched() ? 3 : 2); }

  /// Slot vector (i, j) of batch item b.
  std::span<const double> slot(std::size_t i, std::size_t j, std::size_t b = 0) const;

  static Grid zeros(std::size_t rows, std::size_t cols, std::size_t slot_dim);
  static Grid zeros(std::size_t batch, std::size_t rows, std::size_t cols, std::size_t slot_dim);
};

enum class Action { TopListUpdate = 0, NewListPush = 1, NoOp = 2 };

/// (a_TLU, a_NLP, a_NOP) on the probability simplex.
struct ActionDistribution {
  double tlu = 0.0;
  double nlp = 0.0;
  double nop = 1.0;

  static ActionDistribution one_hot(Action a);
  bool on_simplex(double tolerance = 1e-9) const;
  Tensor as_tensor() const;
};

/// Top list shifted right by one (rightmost slot discarded), `symbol` at (0, 0).
Grid tlu(const Grid& grid, const Tensor& symbol);

/// Lists shifted down by one (bottom list discarded), new top list (symbol, 0, ..., 0).
Grid nlp(const Grid& grid, const Tensor& symbol);

/// a_TLU * tlu(grid, E) + a_NLP * nlp(grid, E) + a_NOP * grid.
Grid step(const Grid& grid, const Tensor& symbol, const Tensor& actions);
Grid step(const Grid& grid, const Tensor& symbol, const ActionDistribution& actions);

/// Folds `step` over t = 1..T from the zero grid. symbols[t] is [h] or
/// [B x h]; actions[t] is [3] or [B x 3].
Grid accumulate(std::span<const Tensor> symbols, std::span<const Tensor> actions, std::size_t rows,
                std::size_t cols);

/// Reference simulation with explicit list and slot moves. `embeddings` is
/// [T x h]. Returns an [H x W x h] grid.
Grid discrete_oracle(const Tensor& embeddings, std::span<const Action> actions, std::size_t rows, std::size_t cols);

}  // namespace s2g::grid
