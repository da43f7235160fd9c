#include "training/gradcheck_suite.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "autodiff/gradcheck.hpp"
#include "autodiff/ops.hpp"
#include "autodiff/parameters.hpp"
#include "decoders/cnn_head.hpp"
#include "seq2grid/encoder.hpp"
#include "training/model.hpp"

namespace s2g::train {

using ad::Rng;
using ad::Tensor;

namespace {

struct Instance {
  std::vector<Tensor> params;
  std::function<Tensor()> loss;
};

// Gated recurrences and the full models have gradient coordinates far below
// 1e-6 whose central difference at h=1e-5 is dominated by the rounding of
// an O(1) loss; these use the extrapolated stencil at a larger step.
const std::vector<std::string> kComposites{"encode_actions", "gru_cell", "s2g_cnn", "s2g_textcnn", "seq2grid"};

using Maker = std::function<Instance(Rng&)>;

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
}

Tensor rand(ad::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  return ad::uniform_tensor(std::move(shape), lo, hi, rng);
}

// Scalar loss sum(out * R) with a fixed random R.
std::function<Tensor()> project(std::function<Tensor()> f, Rng& rng) {
  auto probe = [&] {
    ad::NoGradGuard g;
    return f();
  }();
  Tensor r = rand(probe.shape(), rng);
  return [f = std::move(f), r] { return ad::sum(ad::mul(f(), r)); };
}

Instance unary(Rng& rng, Tensor (*op)(const Tensor&)) {
  Tensor x = rand({pick(rng, 1, 4), pick(rng, 1, 5)}, rng, -2.0, 2.0);
  return {{x}, project([x, op] { return op(x); }, rng)};
}

Instance binary(Rng& rng, Tensor (*op)(const Tensor&, const Tensor&)) {
  const ad::Shape shape{pick(rng, 1, 4), pick(rng, 1, 5)};
  Tensor a = rand(shape, rng);
  // every fourth instance broadcasts a one-element operand
  Tensor b = rng.uniform_int(0, 3) == 0 ? rand({1}, rng) : rand(shape, rng);
  return {{a, b}, project([a, b, op] { return op(a, b); }, rng)};
}

// x^2 with a backward of 3x: negative control for the checker.
Tensor faulty_square(const Tensor& x) {
  std::vector<double> v(x.data().begin(), x.data().end());
  for (double& e : v) e *= e;
  return ad::detail::make_result(ad::OpKind::Mul, x.shape(), std::move(v), {x}, [](ad::Node& n) {
    auto& p = *n.parents[0];
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * 3.0 * p.value[i];
  });
}

std::vector<int> random_ids(Rng& rng, std::size_t n, int lo, int hi) {
  std::vector<int> ids(n);
  for (auto& id : ids) id = static_cast<int>(rng.uniform_int(lo, hi));
  return ids;
}

// Zero biases put relu inputs of empty grid regions exactly on the kink.
void randomize_biases(ad::ParameterStore& store, Rng& rng) {
  for (const auto& p : store.items()) {
    const auto& n = p.name;
    const bool bias = n.ends_with(".b") || n.ends_with("bias");
    if (!bias) continue;
    Tensor t = p.tensor;
    for (double& v : t.mutable_data()) v = rng.uniform(-0.5, 0.5);
  }
}

grid::EncoderConfig tiny_encoder(Rng& rng) {
  grid::EncoderConfig c;
  c.vocab_size = 7;
  c.embed_dim = pick(rng, 2, 3);
  c.hidden = pick(rng, 2, 4);
  c.layers = pick(rng, 1, 2);
  return c;
}

std::map<std::string, Maker> cases() {
  std::map<std::string, Maker> m;
  m["matmul"] = [](Rng& rng) {
    const auto n = pick(rng, 1, 4), k = pick(rng, 1, 4), p = pick(rng, 1, 4);
    Tensor a = rand({n, k}, rng), b = rand({k, p}, rng);
    return Instance{{a, b}, project([a, b] { return ad::matmul(a, b); }, rng)};
  };
  m["linear"] = [](Rng& rng) {
    const auto n = pick(rng, 1, 4), in = pick(rng, 1, 4), out = pick(rng, 1, 4);
    Tensor x = rand({n, in}, rng), w = rand({in, out}, rng), b = rand({out}, rng);
    return Instance{{x, w, b}, project([x, w, b] { return ad::linear(x, w, b); }, rng)};
  };
  m["add"] = [](Rng& rng) { return binary(rng, ad::add); };
  m["sub"] = [](Rng& rng) { return binary(rng, ad::sub); };
  m["mul"] = [](Rng& rng) { return binary(rng, ad::mul); };
  m["sigmoid"] = [](Rng& rng) { return unary(rng, ad::sigmoid); };
  m["tanh"] = [](Rng& rng) { return unary(rng, ad::tanh); };
  m["relu"] = [](Rng& rng) { return unary(rng, ad::relu); };
  m["scale"] = [](Rng& rng) {
    Tensor x = rand({pick(rng, 1, 6)}, rng);
    const double f = rng.uniform(-3.0, 3.0), o = rng.uniform(-1.0, 1.0);
    return Instance{{x}, project([x, f, o] { return ad::add_scalar(ad::scale(x, f), o); }, rng)};
  };
  m["softmax"] = [](Rng& rng) {
    Tensor x = rand({pick(rng, 1, 4), pick(rng, 1, 5)}, rng, -3.0, 3.0);
    const std::size_t axis = pick(rng, 0, 1);
    return Instance{{x}, project([x, axis] { return ad::softmax(x, axis); }, rng)};
  };
  m["sum_mean"] = [](Rng& rng) {
    Tensor x = rand({pick(rng, 1, 4), pick(rng, 1, 4)}, rng);
    const double c = rng.uniform(-2.0, 2.0);
    return Instance{{x}, [x, c] { return ad::add(ad::sum(ad::mul(x, x)), ad::scale(ad::mean(x), c)); }};
  };
  m["cross_entropy"] = [](Rng& rng) {
    const auto n = pick(rng, 1, 5), v = pick(rng, 2, 6);
    Tensor x = rand({n, v}, rng, -3.0, 3.0);
    auto t = random_ids(rng, n, 0, static_cast<int>(v) - 1);
    return Instance{{x}, [x, t] { return ad::cross_entropy(x, t); }};
  };
  m["conv2d"] = [](Rng& rng) {
    const auto ci = pick(rng, 1, 3), co = pick(rng, 1, 3), h = pick(rng, 1, 4), w = pick(rng, 1, 5), k = pick(rng, 1, 4);
    const bool batched = rng.bernoulli(0.5);
    Tensor x = batched ? rand({2, ci, h, w}, rng) : rand({ci, h, w}, rng);
    Tensor kern = rand({co, ci, k, k}, rng), b = rand({co}, rng);
    return Instance{{x, kern, b}, project([x, kern, b] { return ad::conv2d(x, kern, b); }, rng)};
  };
  m["max_pool2d"] = [](Rng& rng) {
    const auto c = pick(rng, 1, 3), h = pick(rng, 1, 4), w = pick(rng, 1, 5);
    Tensor x = rand({c, h, w}, rng);
    return Instance{{x}, project([x, h, w] { return ad::max_pool2d(x, h, w); }, rng)};
  };
  m["dropout"] = [](Rng& rng) {
    Tensor x = rand({pick(rng, 1, 4), pick(rng, 1, 6)}, rng);
    const std::uint64_t seed = rng.next_u64();
    return Instance{{x}, project([x, seed] {
                      Rng r(seed);
                      return ad::dropout(x, 0.4, true, r);
                    }, rng)};
  };
  m["reshape_permute"] = [](Rng& rng) {
    const auto a = pick(rng, 1, 3), b = pick(rng, 1, 3), c = pick(rng, 1, 3);
    Tensor x = rand({a, b, c}, rng);
    return Instance{{x}, project([x, a, b, c] { return ad::permute(ad::reshape(x, {b, a, c}), {2, 0, 1}); }, rng)};
  };
  m["slice_concat"] = [](Rng& rng) {
    const auto r = pick(rng, 2, 4), c = pick(rng, 1, 4);
    Tensor x = rand({r, c}, rng), y = rand({r, c}, rng);
    const std::size_t start = pick(rng, 0, r - 1), len = pick(rng, 1, r - start);
    return Instance{{x, y}, project([x, y, start, len] {
                      std::vector<Tensor> parts{ad::slice(x, 0, start, len), y};
                      return ad::concat(parts, 0);
                    }, rng)};
  };
  m["embedding"] = [](Rng& rng) {
    Tensor table = rand({6, pick(rng, 1, 4)}, rng);
    // row 1 is frozen, so it is never looked up here
    auto ids = random_ids(rng, pick(rng, 1, 6), 2, 5);
    return Instance{{table}, project([table, ids] { return ad::embedding(table, ids, 1); }, rng)};
  };
  m["top_list_update"] = [](Rng& rng) {
    const auto h = pick(rng, 1, 3), w = pick(rng, 1, 4), d = pick(rng, 1, 3);
    Tensor g = rand({h, w, d}, rng), e = rand({d}, rng);
    return Instance{{g, e}, project([g, e] { return ad::top_list_update(g, e); }, rng)};
  };
  m["new_list_push"] = [](Rng& rng) {
    const auto h = pick(rng, 1, 3), w = pick(rng, 1, 4), d = pick(rng, 1, 3);
    Tensor g = rand({h, w, d}, rng), e = rand({d}, rng);
    return Instance{{g, e}, project([g, e] { return ad::new_list_push(g, e); }, rng)};
  };
  m["grid_step"] = [](Rng& rng) {
    const auto h = pick(rng, 1, 3), w = pick(rng, 1, 4), d = pick(rng, 1, 3);
    const bool batched = rng.bernoulli(0.5);
    Tensor g = batched ? rand({2, h, w, d}, rng) : rand({h, w, d}, rng);
    Tensor e = batched ? rand({2, d}, rng) : rand({d}, rng);
    Tensor logits = batched ? rand({2, 3}, rng) : rand({3}, rng);
    return Instance{{g, e, logits}, project([g, e, logits, batched] {
                      return ad::grid_step(g, e, ad::softmax(logits, batched ? 1 : 0));
                    }, rng)};
  };
  m["gru_cell"] = [](Rng& rng) {
    const auto in = pick(rng, 1, 4), hid = pick(rng, 1, 4);
    grid::GruLayer l{rand({in, 3 * hid}, rng), rand({hid, 2 * hid}, rng), rand({hid, hid}, rng), rand({3 * hid}, rng)};
    Tensor x = rand({in}, rng), s = rand({hid}, rng);
    return Instance{{x, s, l.w_x, l.u_zr, l.u_h, l.bias}, project([x, s, l] { return grid::gru_cell(x, s, l); }, rng)};
  };
  m["encode_actions"] = [](Rng& rng) {
    ad::ParameterStore store;
    auto params = grid::Seq2GridParams::create(tiny_encoder(rng), rng, store);
    Tensor emb = rand({pick(rng, 1, 5), params.slot_dim()}, rng);
    auto ps = store.tensors();
    ps.push_back(emb);
    return Instance{ps, project([emb, params] { return grid::encode_actions(emb, params); }, rng)};
  };
  m["bottleneck_block"] = [](Rng& rng) {
    ad::ParameterStore store;
    dec::CnnHeadConfig c;
    c.slot_dim = 2;
    c.channels = pick(rng, 2, 3);
    c.stacks = {pick(rng, 1, 2)};
    c.vocab_out = 3;
    auto head = dec::CnnHeadParams::create(c, rng, store);
    auto block = head.blocks.at(0);
    for (Tensor t : {block.reduce_b, block.conv_b, block.expand_b}) {
      for (double& v : t.mutable_data()) v = rng.uniform(-0.5, 0.5);
    }
    Tensor x = rand({c.channels, pick(rng, 1, 3), pick(rng, 1, 4)}, rng);
    std::vector<Tensor> ps{x, block.reduce_w, block.reduce_b, block.conv_w, block.conv_b, block.expand_w, block.expand_b};
    return Instance{ps, project([x, block] { return dec::bottleneck_block(x, block); }, rng)};
  };
  m["seq2grid"] = [](Rng& rng) {
    ad::ParameterStore store;
    auto params = grid::Seq2GridParams::create(tiny_encoder(rng), rng, store);
    auto ids = random_ids(rng, pick(rng, 1, 6), 2, 6);
    const auto rows = pick(rng, 1, 3), cols = pick(rng, 1, 4);
    return Instance{store.tensors(), project([ids, params, rows, cols] {
                      return grid::encode_sequence_to_grid(ids, params, rows, cols).slots;
                    }, rng)};
  };
  m["s2g_cnn"] = [](Rng& rng) {
    ModelSpec spec;
    spec.rows = pick(rng, 1, 3);
    spec.cols = pick(rng, 2, 4);
    spec.encoder = tiny_encoder(rng);
    spec.cnn.channels = 3;
    spec.cnn.stacks = {2, 2, 2};
    spec.cnn.vocab_out = spec.encoder.vocab_size;
    auto model = std::make_shared<Seq2GridModel>(spec, rng.next_u64());
    randomize_biases(model->parameters(), rng);
    // two sequences of different lengths so the padded path is exercised
    std::vector<std::vector<int>> batch{random_ids(rng, 5, 2, 6), random_ids(rng, pick(rng, 1, 4), 2, 6)};
    auto targets = random_ids(rng, 2 * spec.cols, 1, 6);
    const std::size_t n = 2 * spec.cols, v = spec.encoder.vocab_size;
    return Instance{model->parameters().tensors(), [model, batch, targets, n, v] {
                      return ad::cross_entropy(ad::reshape(model->sequence_logits(batch), {n, v}), targets);
                    }};
  };
  m["s2g_textcnn"] = [](Rng& rng) {
    ModelSpec spec;
    spec.head = HeadKind::TextCnn;
    spec.rows = pick(rng, 2, 4);
    spec.cols = pick(rng, 2, 5);
    spec.encoder = tiny_encoder(rng);
    spec.textcnn.channels = 2;
    spec.textcnn.labels = 3;
    auto model = std::make_shared<Seq2GridModel>(spec, rng.next_u64());
    randomize_biases(model->parameters(), rng);
    std::vector<std::vector<int>> batch{random_ids(rng, pick(rng, 1, 6), 2, 6), random_ids(rng, pick(rng, 1, 6), 2, 6)};
    auto targets = random_ids(rng, 2, 0, 2);
    const std::uint64_t seed = rng.next_u64();
    return Instance{model->parameters().tensors(), [model, batch, targets, seed] {
                      Rng r(seed);
                      return ad::cross_entropy(model->class_logits(batch, true, r), targets);
                    }};
  };
  return m;
}

Maker faulty_case() {
  return [](Rng& rng) {
    Tensor x = rand({pick(rng, 1, 4)}, rng, 0.5, 2.0);
    return Instance{{x}, project([x] { return faulty_square(x); }, rng)};
  };
}

}  // namespace

std::vector<std::string> gradcheck_case_names(bool include_faulty) {
  std::vector<std::string> names;
  for (const auto& [name, maker] : cases()) names.push_back(name);
  if (include_faulty) names.push_back("faulty_square");
  return names;
}

std::vector<GradRow> run_gradcheck_suite(const GradSuiteOptions& options) {
  auto all = cases();
  if (options.include_faulty) all["faulty_square"] = faulty_case();
  for (const auto& name : options.only) {
    if (!all.count(name)) throw std::invalid_argument("gradcheck: unknown case '" + name + "'");
  }
  std::vector<GradRow> rows;
  std::uint64_t stream = 0;
  for (const auto& [name, maker] : all) {
    ++stream;
    if (!options.only.empty() && std::find(options.only.begin(), options.only.end(), name) == options.only.end()) continue;
    Rng rng = Rng::derive(options.seed, stream);
    GradRow row;
    row.name = name;
    const bool composite = std::find(kComposites.begin(), kComposites.end(), name) != kComposites.end();
    ad::GradCheckOptions check;
    if (composite) check = {ad::kExtrapolatedStep, ad::Difference::Extrapolated};
    row.difference = composite ? "extrapolated" : "central";
    const std::size_t max_draws = options.instances * 20 + 20;
    for (std::size_t draw = 0; row.instances < options.instances; ++draw) {
      if (draw >= max_draws) throw ad::NumericError("gradcheck: too many instances crossing a kink for " + name);
      Instance inst = maker(rng);
      const auto res = ad::check_gradients(inst.loss, inst.params, check);
      if (res.kink_crossings > 0) {
        ++row.redrawn;
        continue;
      }
      ++row.instances;
      row.coordinates += res.coordinates;
      if (res.max_relative_error > row.max_relative_error) {
        row.max_relative_error = res.max_relative_error;
        row.worst_analytic = res.worst_analytic;
        row.worst_numeric = res.worst_numeric;
      }
    }
    row.pass = row.max_relative_error <= ad::kGradientTolerance;
    rows.push_back(row);
  }
  return rows;
}

std::string format_gradcheck(const std::vector<GradRow>& rows) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-18s %-12s %9s %8s %11s %14s  %s\n", "case", "difference", "instances", "redrawn",
                "coordinates", "max_rel_error", "result");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-18s %-12s %9zu %8zu %11zu %14.3e  %s\n", r.name.c_str(), r.difference.c_str(), r.instances,
                  r.redrawn, r.coordinates, r.max_relative_error, r.pass ? "PASS" : "FAIL");
    out << buf;
  }
  return out.str();
}

}  // namespace s2g::train
