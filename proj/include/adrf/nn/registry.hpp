#pragma once

#include "adrf/tensor.hpp"

#include <string>
#include <vector>

namespace adrf::nn {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Ordered list of named parameters. Names are unique; order is stable and
/// defines checkpoint layout.
class ParameterRegistry {
 public:
  void add(std::string name, Tensor tensor);
  void append(const std::string& prefix, const ParameterRegistry& other);

  const std::vector<NamedTensor>& entries() const { return entries_; }
  std::vector<Tensor> tensors() const;
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  void set_trainable(bool flag);
  /// Deep copy of all values, for before/after comparisons.
  std::vector<std::vector<double>> snapshot() const;

 private:
  std::vector<NamedTensor> entries_;
};

/// Copies every value from `source` into `target`; names and shapes must match.
void copy_parameters(const ParameterRegistry& source, ParameterRegistry& target);

}  // namespace adrf::nn
