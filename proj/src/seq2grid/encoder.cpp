#include "seq2grid/encoder.hpp"

#include <algorithm>

#include "autodiff/ops.hpp"

namespace s2g::grid {

Tensor EmbeddingTable::lookup(std::span<const int> ids) const { return ad::embedding(matrix, ids, empty_id); }

EmbeddingTable EmbeddingTable::create(const EncoderConfig& config, ad::Rng& rng, ad::ParameterStore& store,
                                      const std::string& prefix) {
  if (config.empty_id < 0 || static_cast<std::size_t>(config.empty_id) >= config.vocab_size) {
    throw ad::ParameterError("seq2grid: empty symbol id outside vocabulary");
  }
  Tensor table = ad::uniform_tensor({config.vocab_size, config.embed_dim}, -0.1, 0.1, rng);
  auto rows = table.mutable_data();
  std::fill_n(rows.begin() + config.empty_id * static_cast<std::ptrdiff_t>(config.embed_dim), config.embed_dim, 0.0);
  return {store.add(prefix + "embedding", table), config.empty_id};
}

Seq2GridParams Seq2GridParams::create(const EncoderConfig& config, ad::Rng& rng, ad::ParameterStore& store,
                                      const std::string& prefix) {
  if (config.vocab_size == 0 || config.embed_dim == 0 || config.hidden == 0 || config.layers == 0) {
    throw ad::ParameterError("seq2grid: vocabulary, slot dimension, hidden size, and depth must be positive");
  }
  if (config.empty_id < 0 || static_cast<std::size_t>(config.empty_id) >= config.vocab_size) {
    throw ad::ParameterError("seq2grid: empty symbol id outside vocabulary");
  }
  Seq2GridParams p;
  p.pad_id = config.pad_id;
  p.embedding = EmbeddingTable::create(config, rng, store, prefix);

  const std::size_t h = config.hidden;
  std::size_t in = config.embed_dim;
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string name = prefix + "gru" + std::to_string(l) + ".";
    GruLayer layer;
    layer.w_x = store.add(name + "w_x", ad::glorot_uniform({in, 3 * h}, in, h, rng));
    layer.u_zr = store.add(name + "u_zr", ad::glorot_uniform({h, 2 * h}, h, h, rng));
    layer.u_h = store.add(name + "u_h", ad::glorot_uniform({h, h}, h, h, rng));
    layer.bias = store.add(name + "bias", Tensor::zeros({3 * h}));
    p.layers.push_back(layer);
    in = h;
  }
  p.w_action = store.add(prefix + "action.w", ad::glorot_uniform({h, 3}, h, 3, rng));
  p.b_action = store.add(prefix + "action.b", Tensor::zeros({3}));
  return p;
}

Tensor gru_cell(const Tensor& x, const Tensor& state, const GruLayer& layer) {
  const bool vector_form = x.rank() == 1;
  const Tensor xb = vector_form ? ad::reshape(x, {1, x.dim(0)}) : x;
  const Tensor sb = state.rank() == 1 ? ad::reshape(state, {1, state.dim(0)}) : state;
  const std::size_t h = layer.hidden();
  if (xb.rank() != 2 || sb.rank() != 2 || xb.dim(1) != layer.input_dim() || sb.dim(1) != h ||
      xb.dim(0) != sb.dim(0)) {
    throw ad::DimensionError("gru_cell: input " + ad::shape_str(x.shape()) + " / state " +
                             ad::shape_str(state.shape()) + " do not match layer " +
                             std::to_string(layer.input_dim()) + "->" + std::to_string(h));
  }
  const Tensor gx = ad::linear(xb, layer.w_x, layer.bias);
  const Tensor gs = ad::matmul(sb, layer.u_zr);
  const Tensor z = ad::sigmoid(ad::slice(gx, 1, 0, h) + ad::slice(gs, 1, 0, h));
  const Tensor r = ad::sigmoid(ad::slice(gx, 1, h, h) + ad::slice(gs, 1, h, h));
  const Tensor candidate = ad::tanh(ad::slice(gx, 1, 2 * h, h) + ad::matmul(r * sb, layer.u_h));
  const Tensor next = sb + z * (candidate - sb);
  return vector_form ? ad::reshape(next, {h}) : next;
}

namespace {

/// One encoder step over a batch of symbols [B x h]; updates `states`
/// in place and returns the action distribution [B x 3].
Tensor action_step(const Tensor& symbols, std::vector<Tensor>& states, const Seq2GridParams& params) {
  Tensor input = symbols;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    states[l] = gru_cell(input, states[l], params.layers[l]);
    input = states[l];
  }
  return ad::softmax(ad::linear(input, params.w_action, params.b_action), 1);
}

std::vector<Tensor> initial_states(const Seq2GridParams& params, std::size_t batch) {
  std::vector<Tensor> states;
  for (const auto& layer : params.layers) states.push_back(Tensor::zeros({batch, layer.hidden()}));
  return states;
}

}  // namespace

Tensor encode_actions(const Tensor& embeddings, const Seq2GridParams& params) {
  if (embeddings.rank() != 2) throw ad::DimensionError("encode_actions: embeddings must be [T x h]");
  const std::size_t steps = embeddings.dim(0);
  if (steps == 0) throw ad::ParameterError("encode_actions: empty sequence");
  auto states = initial_states(params, 1);
  std::vector<Tensor> rows;
  rows.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) rows.push_back(action_step(ad::slice(embeddings, 0, t, 1), states, params));
  return ad::concat(rows, 0);
}

BatchEncoding encode_batch(const std::vector<std::vector<int>>& sequences, const Seq2GridParams& params,
                           std::size_t rows, std::size_t cols) {
  if (sequences.empty()) throw ad::ParameterError("encode_batch: empty batch");
  if (rows == 0 || cols == 0) throw ad::ParameterError("encode_batch: grid dimensions must be positive");
  const std::size_t batch = sequences.size();
  std::size_t steps = 0;
  for (const auto& s : sequences) {
    if (s.empty()) throw ad::ParameterError("encode_batch: empty sequence");
    steps = std::max(steps, s.size());
  }
  const std::size_t vocab = params.embedding.vocab_size();
  for (const auto& s : sequences) {
    for (int id : s) {
      if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
        throw ad::IndexError("encode: token id " + std::to_string(id) + " outside vocabulary of " +
                             std::to_string(vocab));
      }
    }
  }

  auto states = initial_states(params, batch);
  Grid grid = Grid::zeros(batch, rows, cols, params.slot_dim());
  BatchEncoding out;
  out.actions.reserve(steps);
  std::vector<int> ids(batch);
  for (std::size_t t = 0; t < steps; ++t) {
    bool any_pad = false;
    for (std::size_t b = 0; b < batch; ++b) {
      ids[b] = t < sequences[b].size() ? sequences[b][t] : params.pad_id;
      any_pad = any_pad || ids[b] == params.pad_id;
    }
    const Tensor symbols = params.embedding.lookup(ids);
    Tensor actions = action_step(symbols, states, params);
    if (any_pad) {
      std::vector<double> keep(batch * 3, 1.0), forced(batch * 3, 0.0);
      for (std::size_t b = 0; b < batch; ++b) {
        if (ids[b] != params.pad_id) continue;
        std::fill_n(keep.begin() + static_cast<std::ptrdiff_t>(3 * b), 3, 0.0);
        forced[3 * b + 2] = 1.0;
      }
      actions = actions * Tensor::from({batch, 3}, std::move(keep)) + Tensor::from({batch, 3}, std::move(forced));
    }
    grid = step(grid, symbols, actions);
    out.actions.push_back(actions);
  }
  out.grid = grid;
  return out;
}

Grid encode_sequence_to_grid(std::span<const int> ids, const Seq2GridParams& params, std::size_t rows,
                             std::size_t cols) {
  if (ids.empty()) throw ad::ParameterError("encode_sequence_to_grid: empty sequence");
  const BatchEncoding enc = encode_batch({std::vector<int>(ids.begin(), ids.end())}, params, rows, cols);
  const Tensor& s = enc.grid.slots;
  return {ad::reshape(s, {s.dim(1), s.dim(2), s.dim(3)})};
}

}  // namespace s2g::grid
