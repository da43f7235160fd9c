#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace s2g::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Raised when operand shapes are incompatible with an operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for invalid argument values (rates, empty inputs, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for out-of-range indices (targets, token ids).
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Raised when a computation yields a non-finite value where one is not allowed.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OpKind {
  Leaf,
  MatMul,
  Linear,
  Add,
  Sub,
  Mul,
  Scale,
  AddScalar,
  Sigmoid,
  Tanh,
  Relu,
  Softmax,
  Conv2d,
  MaxPool2d,
  Dropout,
  CrossEntropy,
  Sum,
  Mean,
  Reshape,
  Permute,
  Slice,
  Concat,
  Embedding,
  TopListUpdate,
  NewListPush,
  GridStep,
};

const char* op_name(OpKind kind);

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of the reverse-mode graph. The backward closure reads `grad`
/// of this node and accumulates into the parents' `grad` buffers.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  OpKind op = OpKind::Leaf;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward;

  std::vector<double>& grad_buffer();
  ~Node();
};

/// Shared handle to a graph node. Copies alias the same storage.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }
  OpKind op() const { return node_->op; }

  std::span<const double> data() const { return node_->value; }
  std::span<double> mutable_data() { return node_->value; }
  double item() const;
  double at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool on);

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad_buffer(); }
  void zero_grad();

  /// Reverse sweep from this scalar. Gradients accumulate (+=) into every
  /// requires_grad ancestor.
  void backward() const;

  /// Detached copy of the value (no graph history).
  Tensor detach() const;

  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

/// Disables graph recording on the current thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Tracks the smallest distance of any relu / max-pool input to a point of
/// non-differentiability while active, plus a hash of the branch pattern
/// (relu signs, max-pool winners). Finite-difference checks use both to
/// reject instances that straddle a kink.
class KinkMonitor {
 public:
  KinkMonitor();
  ~KinkMonitor();
  KinkMonitor(const KinkMonitor&) = delete;
  KinkMonitor& operator=(const KinkMonitor&) = delete;

  double margin() const { return margin_; }
  std::uint64_t pattern() const { return pattern_; }
  static bool active();
  static void observe(double distance);
  static void observe_branch(std::uint64_t branch);

 private:
  double margin_;
  std::uint64_t pattern_;
  KinkMonitor* previous_;
};

namespace detail {

/// Builds a result node; records parents/backward only when recording is on
/// and some parent requires grad.
Tensor make_result(OpKind op, Shape shape, std::vector<double> value,
                   std::vector<Tensor> parents, std::function<void(Node&)> backward);

}  // namespace detail

}  // namespace s2g::ad
