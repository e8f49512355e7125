#include "adrf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace adrf {

namespace {
thread_local Tape* active_tape = nullptr;
thread_local bool grad_mode = true;
}  // namespace

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill, bool requires_grad) {
  for (auto d : shape) {
    if (d == 0) throw ContractViolation("tensor dims must be positive, got " + shape_string(shape));
  }
  node_ = std::make_shared<detail::TensorNode>();
  node_->value.assign(shape_numel(shape), fill);
  node_->shape = std::move(shape);
  node_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  for (auto d : shape) {
    if (d == 0) throw ContractViolation("tensor dims must be positive, got " + shape_string(shape));
  }
  if (values.size() != shape_numel(shape)) {
    throw ContractViolation("tensor data length " + std::to_string(values.size()) +
                            " does not match shape " + shape_string(shape));
  }
  node_ = std::make_shared<detail::TensorNode>();
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

Tensor Tensor::row(std::span<const double> values) {
  return Tensor({1, values.size()}, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::from_matrix(const RowMatrix& m) {
  std::vector<double> v(m.data(), m.data() + m.size());
  return Tensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                std::move(v));
}

const Shape& Tensor::shape() const {
  if (!node_) throw ContractViolation("use of undefined tensor");
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw ContractViolation("axis out of range for " + shape_string(s));
  return s[axis];
}

std::size_t Tensor::numel() const { return shape_numel(shape()); }

std::span<const double> Tensor::data() const {
  if (!node_) throw ContractViolation("use of undefined tensor");
  return node_->value;
}

std::span<double> Tensor::mutable_data() {
  if (!node_) throw ContractViolation("use of undefined tensor");
  return node_->value;
}

double Tensor::item() const {
  if (numel() != 1) throw ContractViolation("item() on non-scalar " + shape_string(shape()));
  return node_->value[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool flag) {
  if (!node_) throw ContractViolation("use of undefined tensor");
  node_->requires_grad = flag;
}

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw ContractViolation("tensor has no gradient");
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
  if (!node_) throw ContractViolation("use of undefined tensor");
  if (node_->grad.empty()) node_->grad.assign(node_->value.size(), 0.0);
  return node_->grad;
}

void Tensor::clear_grad() {
  if (node_) node_->grad.clear();
}

Tensor Tensor::clone() const {
  Tensor t(shape(), node_->value, node_->requires_grad);
  return t;
}

Tensor Tensor::detach() const { return Tensor(shape(), node_->value, false); }

Eigen::Map<const RowMatrix> Tensor::matrix() const {
  const auto& s = shape();
  if (s.size() != 2) throw ContractViolation("matrix view needs rank 2, got " + shape_string(s));
  return {node_->value.data(), static_cast<Eigen::Index>(s[0]), static_cast<Eigen::Index>(s[1])};
}

Eigen::Map<const Eigen::VectorXd> Tensor::vector() const {
  return {data().data(), static_cast<Eigen::Index>(numel())};
}

// ---------------------------------------------------------------------------

Tape::Tape() : previous_(active_tape) { active_tape = this; }

Tape::~Tape() { active_tape = previous_; }

Tape* Tape::current() { return grad_mode ? active_tape : nullptr; }

std::vector<std::string> Tape::op_names() const {
  std::vector<std::string> names;
  names.reserve(nodes_.size());
  for (const auto& n : nodes_) names.emplace_back(n.op);
  return names;
}

void Tape::record(const char* op, std::vector<Tensor> inputs, Tensor output,
                  std::function<void(std::span<const double>)> backward_fn) {
  if (consumed_) throw ContractViolation("recording onto a tape that already ran backward");
  nodes_.push_back({op, std::move(inputs), std::move(output), std::move(backward_fn)});
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) throw ContractViolation("backward called twice on the same tape");
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractViolation("backward needs a scalar loss");
  }
  const bool on_tape = std::any_of(nodes_.begin(), nodes_.end(), [&](const Node& n) {
    return n.output.same_storage(loss);
  });
  if (!on_tape) throw ContractViolation("loss was not produced on this tape");
  consumed_ = true;

  for (auto& n : nodes_) {
    for (auto& in : n.inputs) {
      if (in.requires_grad()) in.mutable_grad();
    }
  }
  Tensor seed = loss;
  seed.mutable_grad()[0] += 1.0;

  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (!it->output.has_grad()) continue;
    it->backward_fn(it->output.grad());
  }
}

void backward(Tape& tape, const Tensor& loss) { tape.backward(loss); }

NoGradGuard::NoGradGuard() : previous_(grad_mode) { grad_mode = false; }
NoGradGuard::~NoGradGuard() { grad_mode = previous_; }

bool grad_enabled() { return grad_mode && active_tape != nullptr; }

Tensor make_result(const char* op, Shape shape, std::vector<double> values,
                   std::vector<Tensor> inputs,
                   std::function<void(std::span<const double>)> backward_fn) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value produced by ") + op);
    }
  }
  Tensor out(std::move(shape), std::move(values));
  Tape* tape = Tape::current();
  if (!tape) return out;
  const bool tracked = std::any_of(inputs.begin(), inputs.end(),
                                   [](const Tensor& t) { return t.requires_grad(); });
  if (!tracked) return out;
  out.set_requires_grad(true);
  tape->record(op, std::move(inputs), out, std::move(backward_fn));
  return out;
}

}  // namespace adrf
