#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lcnn/random.hpp"
#include "lcnn/tensor.hpp"

namespace lcnn {

using Initializer = std::function<void(std::span<double>, Rng&)>;

// Uniform in [-0.08, 0.08].
Initializer uniform_init(double limit = 0.08);
Initializer constant_init(double value);

// Named, ordered collection of trainable leaves. Order of registration fixes
// initialization order, optimizer state layout and checkpoint layout.
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
    Initializer init;
  };

  Tensor add(std::string name, Shape shape, Initializer init = uniform_init());

  void initialize(Rng& rng);
  void zero_grad();

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }
  Tensor find(const std::string& name) const;
  std::size_t scalar_count() const;

  // Flat copy of all parameter values, and its inverse.
  std::vector<double> snapshot() const;
  void restore(std::span<const double> values);

 private:
  std::vector<Entry> entries_;
};

}  // namespace lcnn
