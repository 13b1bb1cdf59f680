#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "lcnn/random.hpp"
#include "lcnn/tensor.hpp"

namespace lcnn::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = true, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = uniform(rng, lo, hi);
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

// Runs `loss` on a fresh tape and returns the gradient it leaves in each leaf.
inline std::vector<std::vector<double>> tape_grads(const std::function<Tensor()>& loss, std::vector<Tensor> leaves) {
  for (Tensor& l : leaves) l.zero_grad();
  Tape tape;
  Tensor out;
  {
    Tape::Scope scope(tape);
    out = loss();
  }
  tape.backward(out);
  std::vector<std::vector<double>> grads;
  for (const Tensor& l : leaves) grads.emplace_back(l.grad().begin(), l.grad().end());
  return grads;
}

// Central differences of the scalar `loss` with respect to every entry of x.
inline std::vector<double> numeric_grad(const std::function<Tensor()>& loss, Tensor x, double eps = 1e-5) {
  NoGradScope no_grad;
  std::vector<double> g(x.size());
  auto values = x.data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + eps;
    const double plus = loss().item();
    values[i] = saved - eps;
    const double minus = loss().item();
    values[i] = saved;
    g[i] = (plus - minus) / (2.0 * eps);
  }
  return g;
}

// max|a - n| / max(max|a|, max|n|).
inline double block_relative_error(std::span<const double> a, std::span<const double> n) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - n[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(n[i])});
  }
  return scale > 1e-12 ? diff / scale : diff;
}

// Worst block error of tape gradients against central differences.
inline double gradcheck(const std::function<Tensor()>& loss, const std::vector<Tensor>& leaves) {
  const auto analytic = tape_grads(loss, leaves);
  double worst = 0.0;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    worst = std::max(worst, block_relative_error(analytic[i], numeric_grad(loss, leaves[i])));
  }
  return worst;
}

inline std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace lcnn::testing
