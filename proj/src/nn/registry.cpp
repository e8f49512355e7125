#include "adrf/nn/registry.hpp"

#include <algorithm>

namespace adrf::nn {

void ParameterRegistry::add(std::string name, Tensor tensor) {
  if (contains(name)) throw ContractViolation("duplicate parameter name '" + name + "'");
  entries_.push_back({std::move(name), std::move(tensor)});
}

void ParameterRegistry::append(const std::string& prefix, const ParameterRegistry& other) {
  for (const auto& e : other.entries_) add(prefix + e.name, e.tensor);
}

std::vector<Tensor> ParameterRegistry::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.tensor);
  return out;
}

const Tensor& ParameterRegistry::at(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  throw ContractViolation("no parameter named '" + name + "'");
}

bool ParameterRegistry::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const NamedTensor& e) { return e.name == name; });
}

std::size_t ParameterRegistry::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

void ParameterRegistry::set_trainable(bool flag) {
  for (auto& e : entries_) e.tensor.set_requires_grad(flag);
}

std::vector<std::vector<double>> ParameterRegistry::snapshot() const {
  std::vector<std::vector<double>> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.emplace_back(e.tensor.data().begin(), e.tensor.data().end());
  return out;
}

void copy_parameters(const ParameterRegistry& source, ParameterRegistry& target) {
  if (source.size() != target.size()) {
    throw ContractViolation("parameter count mismatch: " + std::to_string(source.size()) + " vs " +
                            std::to_string(target.size()));
  }
  for (std::size_t i = 0; i < source.size(); ++i) {
    const auto& s = source.entries()[i];
    const auto& t = target.entries()[i];
    if (s.name != t.name || s.tensor.shape() != t.tensor.shape()) {
      throw ContractViolation("parameter '" + s.name + "' " + shape_string(s.tensor.shape()) +
                              " does not match '" + t.name + "' " + shape_string(t.tensor.shape()));
    }
    Tensor dst = t.tensor;
    std::copy(s.tensor.data().begin(), s.tensor.data().end(), dst.mutable_data().begin());
  }
}

}  // namespace adrf::nn
