#pragma once

#include <span>
#include <string>
#include <vector>

#include "autodiff/parameters.hpp"
#include "autodiff/rng.hpp"
#include "seq2grid/grid.hpp"

namespace s2g::grid {

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 64;  ///< slot dimension h
  std::size_t hidden = 128;    ///< GRU state size
  std::size_t layers = 3;
  int pad_id = 0;
  int empty_id = 1;
};

/// Token table [V x h]. The row of the empty symbol is zero and receives no
/// gradient.
struct EmbeddingTable {
  Tensor matrix;
  int empty_id = 1;

  std::size_t vocab_size() const { return matrix.dim(0); }
  std::size_t dim() const { return matrix.dim(1); }
  Tensor lookup(std::span<const int> ids) const;

  /// Uniform in +-0.1 with the empty row zeroed; registered as
  /// `prefix` + "embedding".
  static EmbeddingTable create(const EncoderConfig& config, ad::Rng& rng, ad::ParameterStore& store,
                               const std::string& prefix = "s2g.");
};

/// One GRU layer. Gate order inside the stacked matrices is (z, r, candidate).
struct GruLayer {
  Tensor w_x;   ///< [in x 3H]
  Tensor u_zr;  ///< [H x 2H]
  Tensor u_h;   ///< [H x H]
  Tensor bias;  ///< [3H]

  std::size_t input_dim() const { return w_x.dim(0); }
  std::size_t hidden() const { return u_h.dim(0); }
};

struct Seq2GridParams {
  EmbeddingTable embedding;
  std::vector<GruLayer> layers;
  Tensor w_action;  ///< [H x 3]
  Tensor b_action;  ///< [3]
  int pad_id = 0;

  std::size_t slot_dim() const { return embedding.dim(); }

  /// Registers tensors under `prefix` in `store`. Weights are Glorot-uniform,
  /// biases zero, embeddings uniform in +-0.1.
  static Seq2GridParams create(const EncoderConfig& config, ad::Rng& rng, ad::ParameterStore& store,
                               const std::string& prefix = "s2g.");
};

/// s' = (1 - z) * s + z * tanh(W_h x + U_h (r * s) + b_h). Accepts [in] / [H]
/// vectors or [B x in] / [B x H] batches.
Tensor gru_cell(const Tensor& x, const Tensor& state, const GruLayer& layer);

/// Runs the stacked GRU over `embeddings` [T x h] and returns the action rows
/// softmax(dense(r_top(t))) as [T x 3].
Tensor encode_actions(const Tensor& embeddings, const Seq2GridParams& params);

struct BatchEncoding {
  Grid grid;                   ///< [B x H x W x h]
  std::vector<Tensor> actions;  ///< one [B x 3] per timestep, after forced no-ops
};

/// Encodes B sequences (right-padded internally with pad_id). Padded
/// positions use the fixed action (0, 0, 1).
BatchEncoding encode_batch(const std::vector<std::vector<int>>& sequences, const Seq2GridParams& params,
                           std::size_t rows, std::size_t cols);

/// Single-sequence form; returns an [H x W x h] grid.
Grid encode_sequence_to_grid(std::span<const int> ids, const Seq2GridParams& params, std::size_t rows,
                             std::size_t cols);

}  // namespace s2g::grid
