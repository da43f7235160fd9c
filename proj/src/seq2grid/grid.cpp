#include "seq2grid/grid.hpp"

#include <cmath>
#include <deque>

#include "autodiff/ops.hpp"

namespace s2g::grid {

std::span<const double> Grid::slot(std::size_t i, std::size_t j, std::size_t b) const {
  const std::size_t h = slot_dim();
  const std::size_t offset = ((b * rows() + i) * cols() + j) * h;
  return slots.data().subspan(offset, h);
}

Grid Grid::zeros(std::size_t rows, std::size_t cols, std::size_t slot_dim) {
  return {Tensor::zeros({rows, cols, slot_dim})};
}

Grid Grid::zeros(std::size_t batch, std::size_t rows, std::size_t cols, std::size_t slot_dim) {
  return {Tensor::zeros({batch, rows, cols, slot_dim})};
}

ActionDistribution ActionDistribution::one_hot(Action a) {
  switch (a) {
    case Action::TopListUpdate: return {1.0, 0.0, 0.0};
    case Action::NewListPush: return {0.0, 1.0, 0.0};
    case Action::NoOp: return {0.0, 0.0, 1.0};
  }
  return {};
}

bool ActionDistribution::on_simplex(double tolerance) const {
  return tlu >= 0.0 && nlp >= 0.0 && nop >= 0.0 && std::abs(tlu + nlp + nop - 1.0) <= tolerance;
}

Tensor ActionDistribution::as_tensor() const { return Tensor::from({3}, {tlu, nlp, nop}); }

Grid tlu(const Grid& grid, const Tensor& symbol) { return {ad::top_list_update(grid.slots, symbol)}; }

Grid nlp(const Grid& grid, const Tensor& symbol) { return {ad::new_list_push(grid.slots, symbol)}; }

Grid step(const Grid& grid, const Tensor& symbol, const Tensor& actions) {
  return {ad::grid_step(grid.slots, symbol, actions)};
}

Grid step(const Grid& grid, const Tensor& symbol, const ActionDistribution& actions) {
  return step(grid, symbol, actions.as_tensor());
}

Grid accumulate(std::span<const Tensor> symbols, std::span<const Tensor> actions, std::size_t rows,
                std::size_t cols) {
  if (symbols.empty()) throw ad::ParameterError("accumulate: empty sequence");
  if (symbols.size() != actions.size()) throw ad::DimensionError("accumulate: one action per symbol required");
  const Tensor& first = symbols.front();
  Grid g = first.rank() == 1 ? Grid::zeros(rows, cols, first.dim(0))
                             : Grid::zeros(first.dim(0), rows, cols, first.dim(1));
  for (std::size_t t = 0; t < symbols.size(); ++t) g = step(g, symbols[t], actions[t]);
  return g;
}

Grid discrete_oracle(const Tensor& embeddings, std::span<const Action> actions, std::size_t rows, std::size_t cols) {
  if (embeddings.rank() != 2 || embeddings.dim(0) != actions.size()) {
    throw ad::DimensionError("discrete_oracle: embeddings must be [T x h] with one action per row");
  }
  const std::size_t h = embeddings.dim(1);
  using Slot = std::vector<double>;
  std::deque<std::deque<Slot>> lists(rows);
  for (std::size_t t = 0; t < actions.size(); ++t) {
    const auto row = embeddings.data().subspan(t * h, h);
    Slot symbol(row.begin(), row.end());
    switch (actions[t]) {
      case Action::TopListUpdate:
        lists.front().push_front(std::move(symbol));
        if (lists.front().size() > cols) lists.front().pop_back();
        break;
      case Action::NewListPush:
        lists.push_front(std::deque<Slot>{std::move(symbol)});
        if (lists.size() > rows) lists.pop_back();
        break;
      case Action::NoOp:
        break;
    }
  }
  std::vector<double> values(rows * cols * h, 0.0);
  for (std::size_t i = 0; i < lists.size(); ++i) {
    for (std::size_t j = 0; j < lists[i].size(); ++j) {
      std::copy(lists[i][j].begin(), lists[i][j].end(), values.begin() + static_cast<std::ptrdiff_t>((i * cols + j) * h));
    }
  }
  return {Tensor::from({rows, cols, h}, std::move(values))};
}

}  // namespace s2g::grid
