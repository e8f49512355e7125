#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace adrf {

using Shape = std::vector<std::size_t>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Raised when a caller breaks a documented precondition (shape, size, range).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation produces NaN or Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {
struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
};
}  // namespace detail

/// Dense row-major tensor of doubles. Copies share storage; use clone() for a
/// deep copy. A tensor that requires grad is a leaf parameter unless it was
/// produced by a recorded operation.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0, bool requires_grad = false);
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor scalar(double value);
  static Tensor row(std::span<const double> values);
  static Tensor from_matrix(const RowMatrix& m);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  /// Mutable access for initialization and optimizer updates only.
  std::span<double> mutable_data();
  double item() const;
  double operator[](std::size_t i) const { return data()[i]; }

  bool requires_grad() const;
  void set_requires_grad(bool flag);

  bool has_grad() const;
  std::span<const double> grad() const;
  /// Grad buffer, allocated as zeros on first access.
  std::span<double> mutable_grad();
  void clear_grad();

  Tensor clone() const;
  /// Same values, no gradient tracking.
  Tensor detach() const;

  Eigen::Map<const RowMatrix> matrix() const;
  Eigen::Map<const Eigen::VectorXd> vector() const;

  bool same_storage(const Tensor& other) const { return node_ == other.node_; }
  const std::shared_ptr<detail::TensorNode>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::TensorNode> node_;

  friend class Tape;
  friend Tensor make_result(const char*, Shape, std::vector<double>, std::vector<Tensor>,
                            std::function<void(std::span<const double>)>);
};

/// Records operations for reverse-mode differentiation. Constructing a Tape
/// makes it the thread's active tape until it is destroyed; tapes nest.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* current();

  std::size_t size() const { return nodes_.size(); }
  /// Op names in recording order.
  std::vector<std::string> op_names() const;

  /// Seeds d(loss)/d(loss) = 1 and runs every node once, newest first.
  /// Leaves that are recorded but unreachable end up with a zero grad.
  void backward(const Tensor& loss);

  void record(const char* op, std::vector<Tensor> inputs, Tensor output,
              std::function<void(std::span<const double>)> backward_fn);

 private:
  struct Node {
    const char* op;
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void(std::span<const double>)> backward_fn;
  };
  std::vector<Node> nodes_;
  Tape* previous_ = nullptr;
  bool consumed_ = false;
};

void backward(Tape& tape, const Tensor& loss);

/// Disables recording for the lifetime of the guard.
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

/// Builds an op result. If a tape is active and any input requires grad, the
/// result is recorded with backward_fn, which receives d(loss)/d(result).
/// Throws NumericError if any value is non-finite.
Tensor make_result(const char* op, Shape shape, std::vector<double> values,
                   std::vector<Tensor> inputs,
                   std::function<void(std::span<const double>)> backward_fn);

}  // namespace adrf
