#include "lcnn/parameters.hpp"

#include <algorithm>

#include "lcnn/errors.hpp"

namespace lcnn {

Initializer uniform_init(double limit) {
  return [limit](std::span<double> values, Rng& rng) {
    for (double& v : values) v = uniform(rng, -limit, limit);
  };
}

Initializer constant_init(double value) {
  return [value](std::span<double> values, Rng&) { std::fill(values.begin(), values.end(), value); };
}

Tensor ParameterSet::add(std::string name, Shape shape, Initializer init) {
  for (const Entry& e : entries_) {
    if (e.name == name) throw ContractError("duplicate parameter name '" + name + "'");
  }
  Tensor t = Tensor::zeros(std::move(shape), true);
  entries_.push_back({std::move(name), t, std::move(init)});
  return t;
}

void ParameterSet::initialize(Rng& rng) {
  for (Entry& e : entries_) e.init(e.tensor.data(), rng);
}

void ParameterSet::zero_grad() {
  for (Entry& e : entries_) e.tensor.zero_grad();
}

Tensor ParameterSet::find(const std::string& name) const {
  for (const Entry& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  throw ContractError("no parameter named '" + name + "'");
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const Entry& e : entries_) n += e.tensor.size();
  return n;
}

std::vector<double> ParameterSet::snapshot() const {
  std::vector<double> out;
  out.reserve(scalar_count());
  for (const Entry& e : entries_) out.insert(out.end(), e.tensor.data().begin(), e.tensor.data().end());
  return out;
}

void ParameterSet::restore(std::span<const double> values) {
  if (values.size() != scalar_count()) {
    throw DimensionError("restore: expected " + std::to_string(scalar_count()) + " values, got " +
                         std::to_string(values.size()));
  }
  std::size_t offset = 0;
  for (Entry& e : entries_) {
    auto dst = e.tensor.data();
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), dst.size(), dst.begin());
    offset += dst.size();
  }
}

}  // namespace lcnn
