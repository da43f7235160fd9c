#include "autodiff/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

namespace s2g::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using Vec = std::vector<double>;

using detail::make_result;

ConstMap as_matrix(const Vec& v, std::size_t rows, std::size_t cols) {
  return ConstMap(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

bool wants_grad(const NodePtr& p) { return p->requires_grad; }

// Eigen switches between packet and scalar paths by pointer alignment, so the
// operands are staged in Eigen-owned (aligned) storage to keep rounding
// independent of where a std::vector happened to land.
RowMat staged(const Vec& v, std::size_t rows, std::size_t cols) { return as_matrix(v, rows, cols); }

enum class Into { Assign, Accumulate };

void store(Vec& dst, const RowMat& src, Into mode) {
  const double* p = src.data();
  if (mode == Into::Assign) {
    std::copy(p, p + src.size(), dst.begin());
  } else {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += p[i];
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(t.shape()));
  }
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <class F, class D>
Tensor unary(OpKind op, const Tensor& a, F forward, D local_derivative) {
  Vec out(a.numel());
  const auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = forward(in[i]);
  return make_result(op, a.shape(), std::move(out), {a}, [local_derivative](Node& n) {
    auto& g = n.parents[0]->grad_buffer();
    const auto& x = n.parents[0]->value;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * local_derivative(x[i], n.value[i]);
  });
}

enum class Binary { Add, Sub, Mul };

Tensor binary(Binary kind, const Tensor& a, const Tensor& b) {
  const bool same = a.shape() == b.shape();
  const bool a_scalar = a.numel() == 1;
  const bool b_scalar = b.numel() == 1;
  if (!same && !a_scalar && !b_scalar) {
    throw DimensionError("elementwise: incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  const Shape shape = same ? a.shape() : (a_scalar ? b.shape() : a.shape());
  const std::size_t n = numel(shape);
  const auto x = a.data();
  const auto y = b.data();
  const std::size_t sx = a.numel() == n ? 1 : 0;
  const std::size_t sy = b.numel() == n ? 1 : 0;
  Vec out(n);
  switch (kind) {
    case Binary::Add:
      for (std::size_t i = 0; i < n; ++i) out[i] = x[i * sx] + y[i * sy];
      break;
    case Binary::Sub:
      for (std::size_t i = 0; i < n; ++i) out[i] = x[i * sx] - y[i * sy];
      break;
    case Binary::Mul:
      for (std::size_t i = 0; i < n; ++i) out[i] = x[i * sx] * y[i * sy];
      break;
  }
  const OpKind op = kind == Binary::Add ? OpKind::Add : (kind == Binary::Sub ? OpKind::Sub : OpKind::Mul);
  return make_result(op, shape, std::move(out), {a, b}, [kind, sx, sy](Node& node) {
    const auto& pa = node.parents[0];
    const auto& pb = node.parents[1];
    const std::size_t count = node.grad.size();
    if (wants_grad(pa)) {
      auto& ga = pa->grad_buffer();
      for (std::size_t i = 0; i < count; ++i) {
        const double local = kind == Binary::Mul ? pb->value[i * sy] : 1.0;
        ga[i * sx] += node.grad[i] * local;
      }
    }
    if (wants_grad(pb)) {
      auto& gb = pb->grad_buffer();
      for (std::size_t i = 0; i < count; ++i) {
        const double local = kind == Binary::Mul ? pa->value[i * sx] : (kind == Binary::Sub ? -1.0 : 1.0);
        gb[i * sy] += node.grad[i] * local;
      }
    }
  });
}

struct GridDims {
  std::size_t batch, rows, cols, slot;
  bool batched;
};

GridDims grid_dims(const Tensor& grid, const Tensor& symbol, const char* what) {
  GridDims d{};
  if (grid.rank() == 3) {
    d = {1, grid.dim(0), grid.dim(1), grid.dim(2), false};
    if (symbol.shape() != Shape{d.slot}) {
      throw DimensionError(std::string(what) + ": symbol shape " + shape_str(symbol.shape()) +
                           " does not match slot size " + std::to_string(d.slot));
    }
  } else if (grid.rank() == 4) {
    d = {grid.dim(0), grid.dim(1), grid.dim(2), grid.dim(3), true};
    if (symbol.shape() != Shape{d.batch, d.slot}) {
      throw DimensionError(std::string(what) + ": symbol shape " + shape_str(symbol.shape()) +
                           " does not match batch x slot " + std::to_string(d.batch) + "x" +
                           std::to_string(d.slot));
    }
  } else {
    throw DimensionError(std::string(what) + ": grid must be [H x W x h] or [B x H x W x h]");
  }
  return d;
}

struct ConvDims {
  std::size_t batch, in_ch, height, width, out_ch, kh, kw, pad_top, pad_left;
  bool batched;
};

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_str(a.shape()) + " * " + shape_str(b.shape()));
  }
  Vec out(m * n);
  store(out, staged(a.node()->value, m, k) * staged(b.node()->value, k, n), Into::Assign);
  return make_result(OpKind::MatMul, {m, n}, std::move(out), {a, b}, [m, k, n](Node& node) {
    const RowMat g = staged(node.grad, m, n);
    const auto& pa = node.parents[0];
    const auto& pb = node.parents[1];
    if (wants_grad(pa)) store(pa->grad_buffer(), g * staged(pb->value, k, n).transpose(), Into::Accumulate);
    if (wants_grad(pb)) store(pb->grad_buffer(), staged(pa->value, m, k).transpose() * g, Into::Accumulate);
  });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_rank(x, 2, "linear");
  require_rank(w, 2, "linear");
  const std::size_t rows = x.dim(0), in = x.dim(1), out_dim = w.dim(1);
  if (w.dim(0) != in || b.shape() != Shape{out_dim}) {
    throw DimensionError("linear: " + shape_str(x.shape()) + " * " + shape_str(w.shape()) + " + " +
                         shape_str(b.shape()));
  }
  Vec out(rows * out_dim);
  store(out, staged(x.node()->value, rows, in) * staged(w.node()->value, in, out_dim), Into::Assign);
  const auto bias = b.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < out_dim; ++c) out[r * out_dim + c] += bias[c];
  return make_result(OpKind::Linear, {rows, out_dim}, std::move(out), {x, w, b}, [rows, in, out_dim](Node& node) {
    const RowMat g = staged(node.grad, rows, out_dim);
    const auto& px = node.parents[0];
    const auto& pw = node.parents[1];
    const auto& pb = node.parents[2];
    if (wants_grad(px)) store(px->grad_buffer(), g * staged(pw->value, in, out_dim).transpose(), Into::Accumulate);
    if (wants_grad(pw)) store(pw->grad_buffer(), staged(px->value, rows, in).transpose() * g, Into::Accumulate);
    if (wants_grad(pb)) {
      auto& gb = pb->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < out_dim; ++c) gb[c] += node.grad[r * out_dim + c];
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) { return binary(Binary::Add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(Binary::Sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(Binary::Mul, a, b); }

Tensor scale(const Tensor& a, double factor) {
  return unary(
      OpKind::Scale, a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(
      OpKind::AddScalar, a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(OpKind::Sigmoid, a, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      OpKind::Tanh, a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
  if (KinkMonitor::active()) {
    for (double x : a.data()) {
      KinkMonitor::observe(std::abs(x));
      KinkMonitor::observe_branch(x > 0.0 ? 1 : 0);
    }
  }
  return unary(
      OpKind::Relu, a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor elementwise(Elementwise kind, std::span<const Tensor> operands) {
  const bool is_binary = kind == Elementwise::Add || kind == Elementwise::Sub || kind == Elementwise::Mul;
  const std::size_t expected = is_binary ? 2 : 1;
  if (operands.size() != expected) {
    throw ParameterError("elementwise: expected " + std::to_string(expected) + " operands");
  }
  switch (kind) {
    case Elementwise::Add: return add(operands[0], operands[1]);
    case Elementwise::Sub: return sub(operands[0], operands[1]);
    case Elementwise::Mul: return mul(operands[0], operands[1]);
    case Elementwise::Sigmoid: return sigmoid(operands[0]);
    case Elementwise::Tanh: return tanh(operands[0]);
    case Elementwise::Relu: return relu(operands[0]);
  }
  throw ParameterError("elementwise: unknown kind");
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) throw DimensionError("softmax: axis out of range for " + shape_str(x.shape()));
  const std::size_t n = x.dim(axis);
  if (n == 0) throw DimensionError("softmax: empty axis");
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const auto in = x.data();
  for (double v : in) {
    if (!std::isfinite(v)) throw NumericError("softmax: non-finite input");
  }
  Vec out(in.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * n * inner + i;
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) peak = std::max(peak, in[base + j * inner]);
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double e = std::exp(in[base + j * inner] - peak);
        out[base + j * inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < n; ++j) out[base + j * inner] /= total;
    }
  }
  return make_result(OpKind::Softmax, x.shape(), std::move(out), {x}, [outer, n, inner](Node& node) {
    auto& g = node.parents[0]->grad_buffer();
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < inner; ++i) {
        const std::size_t base = o * n * inner + i;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += node.grad[base + j * inner] * node.value[base + j * inner];
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t at = base + j * inner;
          g[at] += node.value[at] * (node.grad[at] - dot);
        }
      }
    }
  });
}

Tensor sum(const Tensor& x) {
  const auto in = x.data();
  const double total = std::accumulate(in.begin(), in.end(), 0.0);
  return make_result(OpKind::Sum, {1}, {total}, {x}, [](Node& node) {
    for (auto& g : node.parents[0]->grad_buffer()) g += node.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw DimensionError("mean: empty tensor");
  const auto in = x.data();
  const double count = static_cast<double>(in.size());
  const double total = std::accumulate(in.begin(), in.end(), 0.0);
  return make_result(OpKind::Mean, {1}, {total / count}, {x}, [count](Node& node) {
    for (auto& g : node.parents[0]->grad_buffer()) g += node.grad[0] / count;
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> targets) {
  require_rank(logits, 2, "cross_entropy");
  const std::size_t rows = logits.dim(0), classes = logits.dim(1);
  if (targets.size() != rows) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(rows) + " rows");
  }
  if (rows == 0) throw DimensionError("cross_entropy: no positions");
  const auto z = logits.data();
  auto probs = std::make_shared<Vec>(z.size());
  std::vector<int> labels(targets.begin(), targets.end());
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const int t = labels[r];
    if (t < 0 || static_cast<std::size_t>(t) >= classes) {
      throw IndexError("cross_entropy: target " + std::to_string(t) + " outside [0, " + std::to_string(classes) +
                       ")");
    }
    const double* row = z.data() + r * classes;
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < classes; ++c) peak = std::max(peak, row[c]);
    double denom = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      const double e = std::exp(row[c] - peak);
      (*probs)[r * classes + c] = e;
      denom += e;
    }
    for (std::size_t c = 0; c < classes; ++c) (*probs)[r * classes + c] /= denom;
    total += std::log(denom) + peak - row[t];
  }
  const double count = static_cast<double>(rows);
  return make_result(OpKind::CrossEntropy, {1}, {total / count}, {logits},
                     [probs, labels = std::move(labels), rows, classes, count](Node& node) {
                       auto& g = node.parents[0]->grad_buffer();
                       const double upstream = node.grad[0] / count;
                       for (std::size_t r = 0; r < rows; ++r) {
                         for (std::size_t c = 0; c < classes; ++c) {
                           const double onehot = static_cast<std::size_t>(labels[r]) == c ? 1.0 : 0.0;
                           g[r * classes + c] += upstream * ((*probs)[r * classes + c] - onehot);
                         }
                       }
                     });
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
  ConvDims d{};
  if (input.rank() == 3) {
    d.batch = 1;
    d.in_ch = input.dim(0);
    d.height = input.dim(1);
    d.width = input.dim(2);
    d.batched = false;
  } else if (input.rank() == 4) {
    d.batch = input.dim(0);
    d.in_ch = input.dim(1);
    d.height = input.dim(2);
    d.width = input.dim(3);
    d.batched = true;
  } else {
    throw DimensionError("conv2d: input must be [C x H x W] or [B x C x H x W], got " + shape_str(input.shape()));
  }
  require_rank(kernel, 4, "conv2d kernel");
  d.out_ch = kernel.dim(0);
  d.kh = kernel.dim(2);
  d.kw = kernel.dim(3);
  if (kernel.dim(1) != d.in_ch) {
    throw DimensionError("conv2d: kernel expects " + std::to_string(kernel.dim(1)) + " input channels, input has " +
                         std::to_string(d.in_ch));
  }
  if (d.kh == 0 || d.kw == 0) throw DimensionError("conv2d: empty kernel");
  const bool has_bias = bias.defined();
  if (has_bias && bias.shape() != Shape{d.out_ch}) {
    throw DimensionError("conv2d: bias shape " + shape_str(bias.shape()) + " does not match output channels");
  }
  d.pad_top = (d.kh - 1) / 2;
  d.pad_left = (d.kw - 1) / 2;

  const std::size_t plane = d.height * d.width;
  const std::size_t positions = d.batch * plane;
  const std::size_t patch = d.in_ch * d.kh * d.kw;

  // cols[patch x positions]; column (b, y, x) holds the receptive field.
  auto cols = std::make_shared<Vec>(patch * positions, 0.0);
  const auto in = input.data();
  for (std::size_t c = 0; c < d.in_ch; ++c) {
    for (std::size_t ky = 0; ky < d.kh; ++ky) {
      for (std::size_t kx = 0; kx < d.kw; ++kx) {
        double* row = cols->data() + ((c * d.kh + ky) * d.kw + kx) * positions;
        for (std::size_t b = 0; b < d.batch; ++b) {
          const double* src = in.data() + (b * d.in_ch + c) * plane;
          for (std::size_t y = 0; y < d.height; ++y) {
            const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - static_cast<std::ptrdiff_t>(d.pad_top);
            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(d.height)) continue;
            for (std::size_t x = 0; x < d.width; ++x) {
              const std::ptrdiff_t sx =
                  static_cast<std::ptrdiff_t>(x + kx) - static_cast<std::ptrdiff_t>(d.pad_left);
              if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(d.width)) continue;
              row[b * plane + y * d.width + x] = src[sy * d.width + sx];
            }
          }
        }
      }
    }
  }

  Vec result(d.out_ch * positions);
  store(result, staged(kernel.node()->value, d.out_ch, patch) * staged(*cols, patch, positions), Into::Assign);

  Vec out(d.batch * d.out_ch * plane);
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (std::size_t o = 0; o < d.out_ch; ++o) {
      const double offset = has_bias ? bias.data()[o] : 0.0;
      const double* src = result.data() + o * positions + b * plane;
      double* dst = out.data() + (b * d.out_ch + o) * plane;
      for (std::size_t p = 0; p < plane; ++p) dst[p] = src[p] + offset;
    }
  }

  Shape shape = d.batched ? Shape{d.batch, d.out_ch, d.height, d.width} : Shape{d.out_ch, d.height, d.width};
  std::vector<Tensor> parents{input, kernel};
  if (has_bias) parents.push_back(bias);
  return make_result(OpKind::Conv2d, std::move(shape), std::move(out), std::move(parents), [d, cols, has_bias](
                                                                                               Node& node) {
    const std::size_t plane = d.height * d.width;
    const std::size_t positions = d.batch * plane;
    const std::size_t patch = d.in_ch * d.kh * d.kw;
    Vec gout(d.out_ch * positions);
    for (std::size_t b = 0; b < d.batch; ++b) {
      for (std::size_t o = 0; o < d.out_ch; ++o) {
        const double* src = node.grad.data() + (b * d.out_ch + o) * plane;
        std::copy(src, src + plane, gout.data() + o * positions + b * plane);
      }
    }
    const RowMat g = staged(gout, d.out_ch, positions);
    const auto& pin = node.parents[0];
    const auto& pk = node.parents[1];
    if (wants_grad(pk)) store(pk->grad_buffer(), g * staged(*cols, patch, positions).transpose(), Into::Accumulate);
    if (has_bias && wants_grad(node.parents[2])) {
      auto& gb = node.parents[2]->grad_buffer();
      for (std::size_t o = 0; o < d.out_ch; ++o) {
        double acc = 0.0;
        for (std::size_t p = 0; p < positions; ++p) acc += gout[o * positions + p];
        gb[o] += acc;
      }
    }
    if (wants_grad(pin)) {
      Vec gcols(patch * positions);
      store(gcols, staged(pk->value, d.out_ch, patch).transpose() * g, Into::Assign);
      auto& gin = pin->grad_buffer();
      for (std::size_t c = 0; c < d.in_ch; ++c) {
        for (std::size_t ky = 0; ky < d.kh; ++ky) {
          for (std::size_t kx = 0; kx < d.kw; ++kx) {
            const double* row = gcols.data() + ((c * d.kh + ky) * d.kw + kx) * positions;
            for (std::size_t b = 0; b < d.batch; ++b) {
              double* dst = gin.data() + (b * d.in_ch + c) * plane;
              for (std::size_t y = 0; y < d.height; ++y) {
                const std::ptrdiff_t sy =
                    static_cast<std::ptrdiff_t>(y + ky) - static_cast<std::ptrdiff_t>(d.pad_top);
                if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(d.height)) continue;
                for (std::size_t x = 0; x < d.width; ++x) {
                  const std::ptrdiff_t sx =
                      static_cast<std::ptrdiff_t>(x + kx) - static_cast<std::ptrdiff_t>(d.pad_left);
                  if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(d.width)) continue;
                  dst[sy * d.width + sx] += row[b * plane + y * d.width + x];
                }
              }
            }
          }
        }
      }
    }
  });
}

Tensor max_pool2d(const Tensor& input, std::size_t window_h, std::size_t window_w) {
  std::size_t batch = 1, channels = 0, height = 0, width = 0;
  bool batched = false;
  if (input.rank() == 3) {
    channels = input.dim(0);
    height = input.dim(1);
    width = input.dim(2);
  } else if (input.rank() == 4) {
    batch = input.dim(0);
    channels = input.dim(1);
    height = input.dim(2);
    width = input.dim(3);
    batched = true;
  } else {
    throw DimensionError("max_pool2d: input must be [C x H x W] or [B x C x H x W]");
  }
  const std::size_t plane = height * width;
  if (plane == 0) throw DimensionError("max_pool2d: empty spatial extent");
  if (window_h != height || window_w != width) {
    throw DimensionError("max_pool2d: window must cover the full spatial extent " + std::to_string(height) + "x" +
                         std::to_string(width));
  }
  const auto in = input.data();
  const bool monitor = KinkMonitor::active();
  Vec out(batch * channels);
  std::vector<std::size_t> argmax(batch * channels);
  for (std::size_t bc = 0; bc < batch * channels; ++bc) {
    const double* src = in.data() + bc * plane;
    std::size_t best = 0;
    for (std::size_t p = 1; p < plane; ++p) {
      if (src[p] > src[best]) best = p;
    }
    argmax[bc] = best;
    out[bc] = src[best];
    if (monitor && plane > 1) {
      // exact ties come from identical windows (e.g. all-empty slots) and
      // move together, so the gap is taken to the next distinct value
      double runner_up = -std::numeric_limits<double>::infinity();
      for (std::size_t p = 0; p < plane; ++p) {
        if (src[p] != src[best]) runner_up = std::max(runner_up, src[p]);
      }
      KinkMonitor::observe(src[best] - runner_up);
      KinkMonitor::observe_branch(best);
    }
  }
  Shape shape = batched ? Shape{batch, channels, 1, 1} : Shape{channels, 1, 1};
  return make_result(OpKind::MaxPool2d, std::move(shape), std::move(out), {input},
                     [argmax = std::move(argmax), plane](Node& node) {
                       auto& g = node.parents[0]->grad_buffer();
                       for (std::size_t bc = 0; bc < argmax.size(); ++bc) g[bc * plane + argmax[bc]] += node.grad[bc];
                     });
}

Tensor dropout(const Tensor& input, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ParameterError("dropout: rate must lie in [0, 1)");
  if (!training || rate == 0.0) return input;
  const double keep_scale = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<Vec>(input.numel());
  for (auto& m : *mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
  Vec out(input.numel());
  const auto in = input.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] * (*mask)[i];
  return make_result(OpKind::Dropout, input.shape(), std::move(out), {input}, [mask](Node& node) {
    auto& g = node.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += node.grad[i] * (*mask)[i];
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw DimensionError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  Vec out(x.data().begin(), x.data().end());
  return make_result(OpKind::Reshape, std::move(shape), std::move(out), {x}, [](Node& node) {
    auto& g = node.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += node.grad[i];
  });
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes) {
  const std::size_t rank = x.rank();
  if (axes.size() != rank) throw DimensionError("permute: axis count does not match rank");
  std::vector<bool> seen(rank, false);
  for (auto a : axes) {
    if (a >= rank || seen[a]) throw DimensionError("permute: axes are not a permutation");
    seen[a] = true;
  }
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t i = rank; i-- > 1;) in_strides[i - 1] = in_strides[i] * x.dim(i);
  Shape shape(rank);
  std::vector<std::size_t> strides(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    shape[i] = x.dim(axes[i]);
    strides[i] = in_strides[axes[i]];
  }
  // source[i] = flat input offset of output element i
  const std::size_t n = x.numel();
  auto source = std::make_shared<std::vector<std::size_t>>(n);
  std::vector<std::size_t> index(rank, 0);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < n; ++i) {
    (*source)[i] = offset;
    for (std::size_t axis = rank; axis-- > 0;) {
      if (++index[axis] < shape[axis]) {
        offset += strides[axis];
        break;
      }
      offset -= strides[axis] * (shape[axis] - 1);
      index[axis] = 0;
    }
  }
  Vec out(n);
  const auto in = x.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = in[(*source)[i]];
  return make_result(OpKind::Permute, std::move(shape), std::move(out), {x}, [source](Node& node) {
    auto& g = node.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < source->size(); ++i) g[(*source)[i]] += node.grad[i];
  });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
  if (axis >= x.rank()) throw DimensionError("slice: axis out of range");
  if (start + length > x.dim(axis)) {
    throw DimensionError("slice: range [" + std::to_string(start) + ", " + std::to_string(start + length) +
                         ") exceeds extent " + std::to_string(x.dim(axis)));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const std::size_t extent = x.dim(axis);
  Shape shape = x.shape();
  shape[axis] = length;
  Vec out(outer * length * inner);
  const auto in = x.data();
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(in.data() + (o * extent + start) * inner, length * inner, out.data() + o * length * inner);
  }
  return make_result(OpKind::Slice, std::move(shape), std::move(out), {x},
                     [outer, inner, extent, start, length](Node& node) {
                       auto& g = node.parents[0]->grad_buffer();
                       for (std::size_t o = 0; o < outer; ++o) {
                         const double* src = node.grad.data() + o * length * inner;
                         double* dst = g.data() + (o * extent + start) * inner;
                         for (std::size_t i = 0; i < length * inner; ++i) dst[i] += src[i];
                       }
                     });
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no operands");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) throw DimensionError("concat: axis out of range");
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
  for (std::size_t i = axis + 1; i < first.size(); ++i) inner *= first[i];
  std::vector<std::size_t> extents;
  std::size_t total = 0;
  for (const auto& p : parts) {
    Shape probe = p.shape();
    if (probe.size() != first.size()) throw DimensionError("concat: rank mismatch");
    probe[axis] = first[axis];
    if (probe != first) throw DimensionError("concat: shapes differ off the concatenation axis");
    extents.push_back(p.dim(axis));
    total += p.dim(axis);
  }
  Shape shape = first;
  shape[axis] = total;
  Vec out(outer * total * inner);
  std::size_t at = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto in = parts[k].data();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(in.data() + o * extents[k] * inner, extents[k] * inner, out.data() + (o * total + at) * inner);
    }
    at += extents[k];
  }
  std::vector<Tensor> parents(parts.begin(), parts.end());
  return make_result(OpKind::Concat, std::move(shape), std::move(out), std::move(parents),
                     [extents = std::move(extents), outer, inner, total](Node& node) {
                       std::size_t at = 0;
                       for (std::size_t k = 0; k < extents.size(); ++k) {
                         const auto& p = node.parents[k];
                         if (wants_grad(p)) {
                           auto& g = p->grad_buffer();
                           for (std::size_t o = 0; o < outer; ++o) {
                             const double* src = node.grad.data() + (o * total + at) * inner;
                             double* dst = g.data() + o * extents[k] * inner;
                             for (std::size_t i = 0; i < extents[k] * inner; ++i) dst[i] += src[i];
                           }
                         }
                         at += extents[k];
                       }
                     });
}

Tensor embedding(const Tensor& table, std::span<const int> ids, int frozen_row) {
  require_rank(table, 2, "embedding");
  const std::size_t vocab = table.dim(0), width = table.dim(1);
  std::vector<int> rows(ids.begin(), ids.end());
  Vec out(rows.size() * width);
  const auto t = table.data();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || static_cast<std::size_t>(rows[i]) >= vocab) {
      throw IndexError("embedding: id " + std::to_string(rows[i]) + " outside vocabulary of " +
                       std::to_string(vocab));
    }
    std::copy_n(t.data() + rows[i] * width, width, out.data() + i * width);
  }
  const std::size_t count = rows.size();
  return make_result(OpKind::Embedding, {count, width}, std::move(out), {table},
                     [rows = std::move(rows), width, frozen_row](Node& node) {
                       auto& g = node.parents[0]->grad_buffer();
                       for (std::size_t i = 0; i < rows.size(); ++i) {
                         if (rows[i] == frozen_row) continue;
                         const double* src = node.grad.data() + i * width;
                         double* dst = g.data() + rows[i] * width;
                         for (std::size_t k = 0; k < width; ++k) dst[k] += src[k];
                       }
                     });
}

Tensor top_list_update(const Tensor& grid, const Tensor& symbol) {
  const GridDims d = grid_dims(grid, symbol, "top_list_update");
  const std::size_t list = d.cols * d.slot;
  const std::size_t block = d.rows * list;
  Vec out(grid.data().begin(), grid.data().end());
  const auto e = symbol.data();
  for (std::size_t b = 0; b < d.batch; ++b) {
    double* top = out.data() + b * block;
    std::copy_backward(top, top + (d.cols - 1) * d.slot, top + list);
    std::copy_n(e.data() + b * d.slot, d.slot, top);
  }
  return make_result(OpKind::TopListUpdate, grid.shape(), std::move(out), {grid, symbol}, [d, list, block](Node& node) {
    const auto& pg = node.parents[0];
    const auto& pe = node.parents[1];
    for (std::size_t b = 0; b < d.batch; ++b) {
      const double* g = node.grad.data() + b * block;
      if (wants_grad(pe)) {
        auto& ge = pe->grad_buffer();
        for (std::size_t k = 0; k < d.slot; ++k) ge[b * d.slot + k] += g[k];
      }
      if (wants_grad(pg)) {
        double* gg = pg->grad_buffer().data() + b * block;
        for (std::size_t i = 0; i + d.slot < list; ++i) gg[i] += g[i + d.slot];
        for (std::size_t i = list; i < block; ++i) gg[i] += g[i];
      }
    }
  });
}

Tensor new_list_push(const Tensor& grid, const Tensor& symbol) {
  const GridDims d = grid_dims(grid, symbol, "new_list_push");
  const std::size_t list = d.cols * d.slot;
  const std::size_t block = d.rows * list;
  Vec out(grid.numel(), 0.0);
  const auto in = grid.data();
  const auto e = symbol.data();
  for (std::size_t b = 0; b < d.batch; ++b) {
    const double* src = in.data() + b * block;
    double* dst = out.data() + b * block;
    std::copy_n(src, block - list, dst + list);
    std::copy_n(e.data() + b * d.slot, d.slot, dst);
  }
  return make_result(OpKind::NewListPush, grid.shape(), std::move(out), {grid, symbol}, [d, list, block](Node& node) {
    const auto& pg = node.parents[0];
    const auto& pe = node.parents[1];
    for (std::size_t b = 0; b < d.batch; ++b) {
      const double* g = node.grad.data() + b * block;
      if (wants_grad(pe)) {
        auto& ge = pe->grad_buffer();
        for (std::size_t k = 0; k < d.slot; ++k) ge[b * d.slot + k] += g[k];
      }
      if (wants_grad(pg)) {
        double* gg = pg->grad_buffer().data() + b * block;
        for (std::size_t i = 0; i + list < block; ++i) gg[i] += g[i + list];
      }
    }
  });
}

Tensor grid_step(const Tensor& grid, const Tensor& symbol, const Tensor& actions) {
  const GridDims d = grid_dims(grid, symbol, "grid_step");
  const Shape expected = d.batched ? Shape{d.batch, 3} : Shape{3};
  if (actions.shape() != expected) {
    throw DimensionError("grid_step: action shape " + shape_str(actions.shape()) + ", expected " +
                         shape_str(expected));
  }
  const std::size_t list = d.cols * d.slot;
  const std::size_t block = d.rows * list;
  const auto in = grid.data();
  const auto e = symbol.data();
  const auto a = actions.data();
  Vec out(grid.numel());
  for (std::size_t b = 0; b < d.batch; ++b) {
    const double tlu = a[3 * b], nlp = a[3 * b + 1], nop = a[3 * b + 2];
    const double* g = in.data() + b * block;
    const double* sym = e.data() + b * d.slot;
    double* dst = out.data() + b * block;
    for (std::size_t k = 0; k < d.slot; ++k) dst[k] = tlu * sym[k] + nlp * sym[k] + nop * g[k];
    for (std::size_t i = d.slot; i < list; ++i) dst[i] = tlu * g[i - d.slot] + nlp * 0.0 + nop * g[i];
    for (std::size_t i = list; i < block; ++i) dst[i] = tlu * g[i] + nlp * g[i - list] + nop * g[i];
  }
  return make_result(OpKind::GridStep, grid.shape(), std::move(out), {grid, symbol, actions},
                     [d, list, block](Node& node) {
                       const auto& pg = node.parents[0];
                       const auto& pe = node.parents[1];
                       const auto& pa = node.parents[2];
                       for (std::size_t b = 0; b < d.batch; ++b) {
                         const double* av = pa->value.data() + 3 * b;
                         const double tlu = av[0], nlp = av[1], nop = av[2];
                         const double* gv = pg->value.data() + b * block;
                         const double* sym = pe->value.data() + b * d.slot;
                         const double* up = node.grad.data() + b * block;
                         if (wants_grad(pa)) {
                           double d_tlu = 0.0, d_nlp = 0.0, d_nop = 0.0;
                           for (std::size_t k = 0; k < d.slot; ++k) {
                             d_tlu += up[k] * sym[k];
                             d_nlp += up[k] * sym[k];
                           }
                           for (std::size_t i = d.slot; i < list; ++i) d_tlu += up[i] * gv[i - d.slot];
                           for (std::size_t i = list; i < block; ++i) {
                             d_tlu += up[i] * gv[i];
                             d_nlp += up[i] * gv[i - list];
                           }
                           for (std::size_t i = 0; i < block; ++i) d_nop += up[i] * gv[i];
                           auto& ga = pa->grad_buffer();
                           ga[3 * b] += d_tlu;
                           ga[3 * b + 1] += d_nlp;
                           ga[3 * b + 2] += d_nop;
                         }
                         if (wants_grad(pe)) {
                           double* ge = pe->grad_buffer().data() + b * d.slot;
                           for (std::size_t k = 0; k < d.slot; ++k) ge[k] += (tlu + nlp) * up[k];
                         }
                         if (wants_grad(pg)) {
                           double* gg = pg->grad_buffer().data() + b * block;
                           for (std::size_t i = 0; i < block; ++i) gg[i] += nop * up[i];
                           for (std::size_t i = 0; i + d.slot < list; ++i) gg[i] += tlu * up[i + d.slot];
                           for (std::size_t i = list; i < block; ++i) gg[i] += tlu * up[i];
                           for (std::size_t i = 0; i + list < block; ++i) gg[i] += nlp * up[i + list];
                         }
                       }
                     });
}

}  // namespace s2g::ad
