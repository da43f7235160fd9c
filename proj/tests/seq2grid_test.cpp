#include <gtest/gtest.h>

#include <cmath>

#include "autodiff/ops.hpp"
#include "autodiff/parameters.hpp"
#include "common/vocab.hpp"
#include "seq2grid/encoder.hpp"
#include "seq2grid/grid.hpp"

using namespace s2g;
using namespace s2g::grid;
using ad::Tensor;

namespace {

using Cells = std::vector<std::vector<std::vector<double>>>;  // [H][W][h]

Cells to_cells(const Grid& g, std::size_t b = 0) {
  Cells c(g.rows(), std::vector<std::vector<double>>(g.cols()));
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) {
      auto s = g.slot(i, j, b);
      c[i][j].assign(s.begin(), s.end());
    }
  return c;
}

Cells zero_cells(std::size_t H, std::size_t W, std::size_t h) {
  return Cells(H, std::vector<std::vector<double>>(W, std::vector<double>(h, 0.0)));
}

// straightforward per-slot recursion with soft actions
Cells soft_oracle(const std::vector<std::vector<double>>& e, const std::vector<std::array<double, 3>>& a,
                  std::size_t H, std::size_t W) {
  const std::size_t h = e.empty() ? 1 : e[0].size();
  Cells g = zero_cells(H, W, h);
  for (std::size_t t = 0; t < e.size(); ++t) {
    Cells n = zero_cells(H, W, h);
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j)
        for (std::size_t d = 0; d < h; ++d) {
          double tlu_v = i == 0 ? (j == 0 ? e[t][d] : g[0][j - 1][d]) : g[i][j][d];
          double nlp_v = i == 0 ? (j == 0 ? e[t][d] : 0.0) : g[i - 1][j][d];
          n[i][j][d] = a[t][0] * tlu_v + a[t][1] * nlp_v + a[t][2] * g[i][j][d];
        }
    g = std::move(n);
  }
  return g;
}

double max_diff(const Cells& a, const Cells& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j)
      for (std::size_t d = 0; d < a[i][j].size(); ++d) m = std::max(m, std::abs(a[i][j][d] - b[i][j][d]));
  return m;
}

Tensor vec(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor::from({n}, std::move(v));
}

Tensor rows_tensor(const std::vector<std::vector<double>>& e) {
  std::vector<double> flat;
  for (const auto& r : e) flat.insert(flat.end(), r.begin(), r.end());
  return Tensor::from({e.size(), e.empty() ? 0 : e[0].size()}, std::move(flat));
}

std::vector<Tensor> row_list(const std::vector<std::vector<double>>& e) {
  std::vector<Tensor> out;
  for (const auto& r : e) out.push_back(vec(r));
  return out;
}

Seq2GridParams make_params(std::size_t V, std::size_t h, std::size_t hidden, std::size_t layers, std::uint64_t seed,
                           ad::ParameterStore& store) {
  EncoderConfig cfg;
  cfg.vocab_size = V;
  cfg.embed_dim = h;
  cfg.hidden = hidden;
  cfg.layers = layers;
  ad::Rng rng(seed);
  return Seq2GridParams::create(cfg, rng, store);
}

}  // namespace

TEST(GridOps, TluAndNlpExamples) {
  // 2x3 grid of scalars, top row [1,2,3], bottom [4,5,6]
  auto g = Grid{Tensor::from({2, 3, 1}, {1, 2, 3, 4, 5, 6})};
  auto e = vec({9});
  auto t = tlu(g, e);
  EXPECT_EQ(std::vector<double>(t.slots.data().begin(), t.slots.data().end()), (std::vector<double>{9, 1, 2, 4, 5, 6}));
  auto n = nlp(g, e);
  EXPECT_EQ(std::vector<double>(n.slots.data().begin(), n.slots.data().end()), (std::vector<double>{9, 0, 0, 1, 2, 3}));
  auto s = step(g, e, ActionDistribution::one_hot(Action::NoOp));
  EXPECT_EQ(std::vector<double>(s.slots.data().begin(), s.slots.data().end()), (std::vector<double>{1, 2, 3, 4, 5, 6}));
}

TEST(GridOps, StepMixesThreeOutcomes) {
  auto g = Grid{Tensor::from({2, 2, 1}, {1, 2, 3, 4})};
  auto e = vec({10});
  ActionDistribution a{0.5, 0.25, 0.25};
  ASSERT_TRUE(a.on_simplex());
  auto s = step(g, e, a);
  // tlu: [10,1,3,4]  nlp: [10,0,1,2]  nop: [1,2,3,4]
  const std::vector<double> want{0.5 * 10 + 0.25 * 10 + 0.25 * 1, 0.5 * 1 + 0.25 * 2, 0.5 * 3 + 0.25 * 1 + 0.25 * 3,
                                 0.5 * 4 + 0.25 * 2 + 0.25 * 4};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(s.slots.data()[i], want[i]);
}

TEST(GridOps, NlpAppliedRowsTimesClearsOldContent) {
  const std::size_t H = 4, W = 3;
  ad::Rng rng(21);
  Grid g{ad::uniform_tensor({H, W, 2}, -1, 1, rng)};
  auto e = vec({0.7, -0.3});
  for (std::size_t k = 0; k < H; ++k) g = nlp(g, e);
  // every row is now (e, 0, 0)
  for (std::size_t i = 0; i < H; ++i) {
    EXPECT_EQ(g.slot(i, 0)[0], 0.7);
    EXPECT_EQ(g.slot(i, 0)[1], -0.3);
    for (std::size_t j = 1; j < W; ++j) EXPECT_EQ(g.slot(i, j)[0], 0.0);
  }
}

TEST(GridOps, ActionDistributionSimplex) {
  EXPECT_TRUE(ActionDistribution::one_hot(Action::TopListUpdate).on_simplex());
  EXPECT_FALSE((ActionDistribution{0.5, 0.6, 0.0}).on_simplex());
  EXPECT_FALSE((ActionDistribution{-0.1, 0.6, 0.5}).on_simplex());
}

TEST(DiscreteOracle, DigitsAndOperands) {
  // "12 34" with scalar embeddings: digits TLU, space NLP
  auto emb = Tensor::from({5, 1}, {1, 2, 0.5, 3, 4});
  std::vector<Action> acts{Action::TopListUpdate, Action::TopListUpdate, Action::NewListPush, Action::TopListUpdate,
                           Action::TopListUpdate};
  auto g = discrete_oracle(emb, acts, 2, 3);
  // top list: 4 3 0.5 ; bottom: 2 1 0
  EXPECT_EQ(std::vector<double>(g.slots.data().begin(), g.slots.data().end()),
            (std::vector<double>{4, 3, 0.5, 2, 1, 0}));
  // right end of a full list falls off
  auto g2 = discrete_oracle(Tensor::from({3, 1}, {1, 2, 3}),
                            std::vector<Action>(3, Action::TopListUpdate), 1, 2);
  EXPECT_EQ(g2.slot(0, 0)[0], 3.0);
  EXPECT_EQ(g2.slot(0, 1)[0], 2.0);
}

TEST(DiscreteOracle, NoOpAndLengthMismatch) {
  auto emb = Tensor::from({2, 1}, {5, 6});
  auto g = discrete_oracle(emb, std::vector<Action>{Action::NoOp, Action::NoOp}, 2, 2);
  for (double v : g.slots.data()) EXPECT_EQ(v, 0.0);
  EXPECT_ANY_THROW(discrete_oracle(emb, std::vector<Action>{Action::NoOp}, 2, 2));
}

TEST(Accumulate, OneHotActionsMatchDiscreteOracle) {
  ad::Rng rng(22);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t T = rng.uniform_int(1, 20), H = rng.uniform_int(1, 6), W = rng.uniform_int(1, 6),
                      h = rng.uniform_int(1, 3);
    std::vector<std::vector<double>> e(T, std::vector<double>(h));
    for (auto& r : e)
      for (double& v : r) v = rng.uniform(-1, 1);
    std::vector<Action> acts;
    std::vector<Tensor> act_t;
    for (std::size_t t = 0; t < T; ++t) {
      acts.push_back(static_cast<Action>(rng.uniform_int(0, 2)));
      act_t.push_back(ActionDistribution::one_hot(acts.back()).as_tensor());
    }
    auto syms = row_list(e);
    auto soft = grid::accumulate(syms, act_t, H, W);
    auto hard = discrete_oracle(rows_tensor(e), acts, H, W);
    ASSERT_LE(max_diff(to_cells(soft), to_cells(hard)), 1e-12) << "trial " << trial;
  }
}

TEST(Accumulate, SoftActionsMatchSlotRecursion) {
  ad::Rng rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t T = rng.uniform_int(1, 12), H = rng.uniform_int(1, 4), W = rng.uniform_int(1, 5), h = 2;
    std::vector<std::vector<double>> e(T, std::vector<double>(h));
    std::vector<std::array<double, 3>> a(T);
    std::vector<Tensor> act_t;
    for (std::size_t t = 0; t < T; ++t) {
      for (double& v : e[t]) v = rng.uniform(-1, 1);
      double p = rng.uniform(), q = rng.uniform(), r = rng.uniform(), z = p + q + r;
      a[t] = {p / z, q / z, r / z};
      act_t.push_back(vec({a[t][0], a[t][1], a[t][2]}));
    }
    auto syms = row_list(e);
    auto g = grid::accumulate(syms, act_t, H, W);
    ASSERT_LE(max_diff(to_cells(g), soft_oracle(e, a, H, W)), 1e-12);
  }
}

TEST(Accumulate, ExpectationOfSampledDiscreteGrids) {
  // step is linear in the grid and in the action, so with independent per-step
  // sampling the soft grid is the mean of the discrete ones
  ad::Rng rng(24);
  const std::size_t T = 6, H = 2, W = 3, h = 1, N = 10000;
  std::vector<std::vector<double>> e(T, std::vector<double>(h));
  std::vector<std::array<double, 3>> a(T);
  std::vector<Tensor> act_t;
  for (std::size_t t = 0; t < T; ++t) {
    e[t][0] = rng.uniform(-1, 1);
    double p = rng.uniform(0.1, 1), q = rng.uniform(0.1, 1), r = rng.uniform(0.1, 1), z = p + q + r;
    a[t] = {p / z, q / z, r / z};
    act_t.push_back(vec({a[t][0], a[t][1], a[t][2]}));
  }
  auto syms = row_list(e);
  const auto soft = to_cells(grid::accumulate(syms, act_t, H, W));
  const auto emb = rows_tensor(e);
  std::vector<double> s1(H * W, 0.0), s2(H * W, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    std::vector<Action> acts;
    for (std::size_t t = 0; t < T; ++t) {
      const double u = rng.uniform();
      acts.push_back(u < a[t][0] ? Action::TopListUpdate : u < a[t][0] + a[t][1] ? Action::NewListPush : Action::NoOp);
    }
    auto g = discrete_oracle(emb, acts, H, W);
    for (std::size_t k = 0; k < H * W; ++k) {
      s1[k] += g.slots.data()[k];
      s2[k] += g.slots.data()[k] * g.slots.data()[k];
    }
  }
  for (std::size_t k = 0; k < H * W; ++k) {
    const double m = s1[k] / N, var = s2[k] / N - m * m, se = std::sqrt(std::max(var, 0.0) / N);
    EXPECT_LE(std::abs(m - soft[k / W][k % W][0]), 3.0 * se + 1e-12) << "slot " << k;
  }
}

TEST(Accumulate, LinearInSymbols) {
  ad::Rng rng(25);
  const std::size_t T = 8, H = 3, W = 4, h = 3;
  auto make = [&] {
    std::vector<std::vector<double>> e(T, std::vector<double>(h));
    for (auto& r : e)
      for (double& v : r) v = rng.uniform(-1, 1);
    return e;
  };
  auto e1 = make(), e2 = make();
  std::vector<Tensor> act_t;
  for (std::size_t t = 0; t < T; ++t) {
    double p = rng.uniform(), q = rng.uniform(), r = rng.uniform(), z = p + q + r;
    act_t.push_back(vec({p / z, q / z, r / z}));
  }
  const double alpha = 1.7, beta = -0.4;
  auto mix = e1;
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < h; ++d) mix[t][d] = alpha * e1[t][d] + beta * e2[t][d];
  auto r1 = row_list(e1), r2 = row_list(e2), rm = row_list(mix);
  auto g1 = grid::accumulate(r1, act_t, H, W), g2 = grid::accumulate(r2, act_t, H, W), gm = grid::accumulate(rm, act_t, H, W);
  for (std::size_t k = 0; k < gm.slots.numel(); ++k)
    EXPECT_NEAR(gm.slots.data()[k], alpha * g1.slots.data()[k] + beta * g2.slots.data()[k], 1e-10);
}

TEST(Accumulate, AllNoOpGivesZeroGrid) {
  std::vector<Tensor> syms{vec({1, 2}), vec({3, 4})};
  std::vector<Tensor> acts(2, ActionDistribution::one_hot(Action::NoOp).as_tensor());
  auto g = grid::accumulate(syms, acts, 2, 2);
  for (double v : g.slots.data()) EXPECT_EQ(v, 0.0);
}

TEST(GruCell, ZeroParametersHalveState) {
  GruLayer l{Tensor::zeros({2, 9}), Tensor::zeros({3, 6}), Tensor::zeros({3, 3}), Tensor::zeros({9})};
  auto s = gru_cell(vec({0.3, -0.2}), vec({1.0, -2.0, 0.5}), l);
  EXPECT_DOUBLE_EQ(s.at({0}), 0.5);
  EXPECT_DOUBLE_EQ(s.at({1}), -1.0);
  EXPECT_DOUBLE_EQ(s.at({2}), 0.25);
}

TEST(GruCell, MatchesGateFormula) {
  ad::Rng rng(26);
  const std::size_t in = 3, H = 4;
  GruLayer l{ad::uniform_tensor({in, 3 * H}, -1, 1, rng), ad::uniform_tensor({H, 2 * H}, -1, 1, rng),
             ad::uniform_tensor({H, H}, -1, 1, rng), ad::uniform_tensor({3 * H}, -1, 1, rng)};
  auto x = ad::uniform_tensor({in}, -1, 1, rng), s = ad::uniform_tensor({H}, -1, 1, rng);
  auto got = gru_cell(x, s, l);
  auto sig = [](long double v) { return 1.0L / (1.0L + std::exp(-v)); };
  std::vector<long double> z(H), r(H), rs(H);
  for (std::size_t k = 0; k < H; ++k) {
    long double az = l.bias.data()[k], ar = l.bias.data()[H + k];
    for (std::size_t i = 0; i < in; ++i) {
      az += x.data()[i] * l.w_x.at({i, k});
      ar += x.data()[i] * l.w_x.at({i, H + k});
    }
    for (std::size_t j = 0; j < H; ++j) {
      az += s.data()[j] * l.u_zr.at({j, k});
      ar += s.data()[j] * l.u_zr.at({j, H + k});
    }
    z[k] = sig(az);
    r[k] = sig(ar);
    rs[k] = r[k] * s.data()[k];
  }
  for (std::size_t k = 0; k < H; ++k) {
    long double ac = l.bias.data()[2 * H + k];
    for (std::size_t i = 0; i < in; ++i) ac += x.data()[i] * l.w_x.at({i, 2 * H + k});
    for (std::size_t j = 0; j < H; ++j) ac += rs[j] * l.u_h.at({j, k});
    const long double want = (1 - z[k]) * s.data()[k] + z[k] * std::tanh(ac);
    EXPECT_NEAR(got.data()[k], static_cast<double>(want), 1e-14);
  }
}

TEST(GruCell, BatchedRowsMatchSingle) {
  ad::Rng rng(27);
  GruLayer l{ad::uniform_tensor({2, 9}, -1, 1, rng), ad::uniform_tensor({3, 6}, -1, 1, rng),
             ad::uniform_tensor({3, 3}, -1, 1, rng), ad::uniform_tensor({9}, -1, 1, rng)};
  auto X = ad::uniform_tensor({4, 2}, -1, 1, rng), S = ad::uniform_tensor({4, 3}, -1, 1, rng);
  auto B = gru_cell(X, S, l);
  for (std::size_t b = 0; b < 4; ++b) {
    auto one = gru_cell(ad::reshape(ad::slice(X, 0, b, 1), {2}), ad::reshape(ad::slice(S, 0, b, 1), {3}), l);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(B.at({b, k}), one.data()[k], 1e-15);
  }
}

TEST(EncodeActions, ZeroDenseGivesUniformAndRowsSumToOne) {
  ad::ParameterStore store;
  auto p = make_params(10, 4, 6, 2, 28, store);
  ad::Rng rng(29);
  auto emb = ad::uniform_tensor({7, 4}, -1, 1, rng);
  auto a = encode_actions(emb, p);
  ASSERT_EQ(a.shape(), (ad::Shape{7, 3}));
  for (std::size_t t = 0; t < 7; ++t) EXPECT_NEAR(a.at({t, 0}) + a.at({t, 1}) + a.at({t, 2}), 1.0, 1e-12);

  auto z = p;
  z.w_action = Tensor::zeros({6, 3});
  z.b_action = Tensor::zeros({3});
  auto u = encode_actions(emb, z);
  for (double v : u.data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  EXPECT_THROW(encode_actions(Tensor::zeros({0, 4}), p), ad::ParameterError);
}

TEST(EncodeBatch, PaddingDoesNotChangeShorterSequences) {
  ad::ParameterStore store;
  auto p = make_params(12, 3, 5, 2, 30, store);
  std::vector<std::vector<int>> seqs{{5, 6, 7, 8, 9, 10, 2}, {5, 2}, {11, 7, 9, 2}};
  auto enc = encode_batch(seqs, p, 3, 4);
  ASSERT_EQ(enc.grid.slots.shape(), (ad::Shape{3, 3, 4, 3}));
  ASSERT_EQ(enc.actions.size(), 7u);
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    auto single = encode_sequence_to_grid(seqs[b], p, 3, 4);
    EXPECT_LE(max_diff(to_cells(enc.grid, b), to_cells(single)), 1e-12) << "item " << b;
  }
  // padded steps of item 1 are forced to NOP
  for (std::size_t t = 2; t < 7; ++t) {
    EXPECT_EQ(enc.actions[t].at({1, 0}), 0.0);
    EXPECT_EQ(enc.actions[t].at({1, 2}), 1.0);
  }
}

TEST(EncodeBatch, AllPadSequenceGivesZeroGrid) {
  ad::ParameterStore store;
  auto p = make_params(8, 3, 4, 1, 31, store);
  auto g = encode_sequence_to_grid(std::vector<int>{0, 0, 0}, p, 2, 3);
  for (double v : g.slots.data()) EXPECT_EQ(v, 0.0);
}

TEST(Embedding, EmptyRowIsZeroAndFrozen) {
  ad::ParameterStore store;
  auto p = make_params(9, 4, 4, 1, 32, store);
  for (std::size_t d = 0; d < 4; ++d) EXPECT_EQ(p.embedding.matrix.at({1, d}), 0.0);
  for (double v : p.embedding.matrix.data()) EXPECT_LE(std::abs(v), 0.1);
  std::vector<int> ids{1, 3, 1};
  ad::sum(p.embedding.lookup(ids)).backward();
  for (std::size_t d = 0; d < 4; ++d) {
    EXPECT_EQ(p.embedding.matrix.grad()[4 + d], 0.0);
    EXPECT_EQ(p.embedding.matrix.grad()[12 + d], 1.0);
  }
}

TEST(Vocab, ReservedIdsAndEscapes) {
  Vocabulary v;
  EXPECT_EQ(v.size(), 5u);
  EXPECT_EQ(v.id("<pad>"), 0);
  EXPECT_EQ(v.id("<empty>"), 1);
  EXPECT_EQ(v.id("$"), 2);
  EXPECT_EQ(v.id("<cls>"), 3);
  EXPECT_EQ(v.id("<sep>"), 4);
  const int a = v.add("a"), sp = v.add(" "), nl = v.add("\n");
  EXPECT_EQ(v.add("a"), a);
  EXPECT_EQ(escape_token(" "), "<sp>");
  EXPECT_EQ(escape_token("\n"), "<nl>");
  EXPECT_EQ(escape_token("\t"), "<tab>");
  EXPECT_EQ(unescape_token("<sp>"), " ");
  auto back = Vocabulary::parse(v.serialize());
  EXPECT_EQ(back, v);
  EXPECT_EQ(back.id(" "), sp);
  EXPECT_EQ(back.id("\n"), nl);
  EXPECT_THROW(v.id("zz"), TokenizationError);
}

TEST(Vocab, CharTokensEndWithEos) {
  auto t = char_tokens("12 3$");
  EXPECT_EQ(t, (std::vector<std::string>{"1", "2", " ", "3", "$"}));
  Vocabulary v;
  for (const auto& s : t) v.add(s);
  auto ids = v.encode(t);
  EXPECT_EQ(ids.back(), Vocabulary::kEos);
  EXPECT_EQ(v.decode(ids), t);
}
