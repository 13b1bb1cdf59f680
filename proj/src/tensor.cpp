#include "lcnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "lcnn/errors.hpp"

namespace lcnn {

Tensor make_result(Shape shape, std::vector<double> values, bool requires_grad);

namespace {

thread_local Tape* g_active_tape = nullptr;

using NodePtr = std::shared_ptr<TensorNode>;

bool should_record(std::initializer_list<const Tensor*> inputs) {
  if (g_active_tape == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t->requires_grad(); });
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor");
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  require_defined(t, op);
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + shape_to_string(t.shape()));
  }
}

// Unary elementwise op whose derivative is a function of (input, output).
template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv) {
  require_defined(x, "unary");
  std::vector<double> out(x.size());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(in[i]);
  const bool rec = should_record({&x});
  Tensor result = make_result(x.shape(), std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node(), on = result.node();
    g_active_tape->record(on, [xn, on, deriv] {
      for (std::size_t i = 0; i < on->data.size(); ++i) {
        xn->grad[i] += on->grad[i] * deriv(xn->data[i], on->data[i]);
      }
    });
  }
  return result;
}

enum class Broadcast { none, rows };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  require_defined(a, op);
  require_defined(b, op);
  if (a.shape() == b.shape()) return Broadcast::none;
  if (a.rank() == 2 && b.rank() == 1 && a.cols() == b.size()) return Broadcast::rows;
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_to_string(a.shape()) +
                       " and " + shape_to_string(b.shape()));
}

}  // namespace

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor make_result(Shape shape, std::vector<double> values, bool requires_grad) {
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->data.size(), 0.0);
  return Tensor(std::move(node));
}

// ---- Tensor ----------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return filled(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one extent");
  for (std::size_t extent : shape) {
    if (extent == 0) throw DimensionError("tensor extents must be positive: " + shape_to_string(shape));
  }
  if (shape_size(shape) != values.size()) {
    throw DimensionError("shape " + shape_to_string(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
  }
  return make_result(std::move(shape), std::move(values), requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  const std::size_t n = values.size();
  return from({n}, std::move(values), requires_grad);
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows, bool requires_grad) {
  std::vector<double> values;
  const std::size_t cols = rows.size() ? rows.begin()->size() : 0;
  for (const auto& row : rows) {
    if (row.size() != cols) throw DimensionError("ragged matrix literal");
    values.insert(values.end(), row.begin(), row.end());
  }
  return from({rows.size(), cols}, std::move(values), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({1}, {value}, requires_grad); }

std::size_t Tensor::rows() const {
  if (rank() != 2) throw DimensionError("rows() on non-matrix " + shape_to_string(shape()));
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw DimensionError("cols() on non-matrix " + shape_to_string(shape()));
  return node_->shape[1];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  if (row >= rows() || col >= cols()) throw IndexError("matrix index out of range");
  return node_->data[row * cols() + col];
}

double Tensor::item() const {
  if (size() != 1) throw ContractError("item() on non-scalar " + shape_to_string(shape()));
  return node_->data[0];
}

void Tensor::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

Tensor Tensor::clone(bool requires_grad) const {
  return make_result(node_->shape, node_->data, requires_grad);
}

// ---- Tape ------------------------------------------------------------------

void Tape::record(std::shared_ptr<TensorNode> output, std::function<void()> backward) {
  if (consumed_) throw ContractError("tape already replayed; start a new tape");
  records_.push_back({std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  require_defined(loss, "backward");
  if (loss.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got " + shape_to_string(loss.shape()));
  }
  if (consumed_) throw ContractError("tape already replayed");
  consumed_ = true;
  if (!loss.requires_grad()) return;
  loss.node()->grad[0] += 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) it->backward();
  records_.clear();
}

Tape* Tape::active() { return g_active_tape; }

Tape::Scope::Scope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
Tape::Scope::~Scope() { g_active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = previous_; }

// ---- linear algebra --------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
    throw DimensionError("matmul: cannot multiply " + shape_to_string(a.shape()) + " by " +
                         shape_to_string(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  auto A = a.data();
  auto B = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      const double* brow = &B[p * n];
      double* orow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  const bool rec = should_record({&a, &b});
  Tensor result = make_result({m, n}, std::move(out), rec);
  if (rec) {
    NodePtr an = a.node(), bn = b.node(), on = result.node();
    g_active_tape->record(on, [an, bn, on, m, k, n] {
      const auto& G = on->grad;
      if (an->requires_grad) {
        // grad_a = G · bᵀ
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += G[i * n + j] * bn->data[p * n + j];
            an->grad[i * k + p] += acc;
          }
        }
      }
      if (bn->requires_grad) {
        // grad_b = aᵀ · G
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = an->data[i * k + p];
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) bn->grad[p * n + j] += aip * G[i * n + j];
          }
        }
      }
    });
  }
  return result;
}

Tensor matvec(const Tensor& a, const Tensor& x) {
  require_defined(a, "matvec");
  require_defined(x, "matvec");
  if (a.rank() != 2 || x.rank() != 1 || a.cols() != x.size()) {
    throw DimensionError("matvec: cannot multiply " + shape_to_string(a.shape()) + " by " +
                         shape_to_string(x.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols();
  std::vector<double> out(m, 0.0);
  auto A = a.data();
  auto X = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = &A[i * k];
    double acc = 0.0;
    for (std::size_t p = 0; p < k; ++p) acc += row[p] * X[p];
    out[i] = acc;
  }
  const bool rec = should_record({&a, &x});
  Tensor result = make_result({m}, std::move(out), rec);
  if (rec) {
    NodePtr an = a.node(), xn = x.node(), on = result.node();
    g_active_tape->record(on, [an, xn, on, m, k] {
      const auto& G = on->grad;
      for (std::size_t i = 0; i < m; ++i) {
        const double g = G[i];
        if (g == 0.0) continue;
        if (an->requires_grad) {
          double* grow = &an->grad[i * k];
          for (std::size_t p = 0; p < k; ++p) grow[p] += g * xn->data[p];
        }
        if (xn->requires_grad) {
          const double* row = &an->data[i * k];
          for (std::size_t p = 0; p < k; ++p) xn->grad[p] += g * row[p];
        }
      }
    });
  }
  return result;
}

// ---- elementwise -----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  const Broadcast kind = broadcast_kind(a, b, "add");
  const std::size_t n = b.size();
  std::vector<double> out(a.data().begin(), a.data().end());
  auto B = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[kind == Broadcast::rows ? i % n : i];
  const bool rec = should_record({&a, &b});
  Tensor result = make_result(a.shape(), std::move(out), rec);
  if (rec) {
    NodePtr an = a.node(), bn = b.node(), on = result.node();
    g_active_tape->record(on, [an, bn, on, kind, n] {
      for (std::size_t i = 0; i < on->grad.size(); ++i) {
        const double g = on->grad[i];
        if (an->requires_grad) an->grad[i] += g;
        if (bn->requires_grad) bn->grad[kind == Broadcast::rows ? i % n : i] += g;
      }
    });
  }
  return result;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const Broadcast kind = broadcast_kind(a, b, "mul");
  const std::size_t n = b.size();
  std::vector<double> out(a.data().begin(), a.data().end());
  auto B = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[kind == Broadcast::rows ? i % n : i];
  const bool rec = should_record({&a, &b});
  Tensor result = make_result(a.shape(), std::move(out), rec);
  if (rec) {
    NodePtr an = a.node(), bn = b.node(), on = result.node();
    g_active_tape->record(on, [an, bn, on, kind, n] {
      for (std::size_t i = 0; i < on->grad.size(); ++i) {
        const double g = on->grad[i];
        const std::size_t j = kind == Broadcast::rows ? i % n : i;
        if (an->requires_grad) an->grad[i] += g * bn->data[j];
        if (bn->requires_grad) bn->grad[j] += g * an->data[i];
      }
    });
  }
  return result;
}

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double scaled_tanh_value(double x) { return kScaledTanhAmplitude * std::tanh(kScaledTanhSlope * x); }

Tensor sigmoid(const Tensor& x) {
  return unary(x, sigmoid_value, [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
  return unary(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor scaled_tanh(const Tensor& x) {
  return unary(x, scaled_tanh_value, [](double v, double) {
    const double t = std::tanh(kScaledTanhSlope * v);
    return kScaledTanhAmplitude * kScaledTanhSlope * (1.0 - t * t);
  });
}

Tensor affine(const Tensor& x, double scale, double shift) {
  return unary(x, [scale, shift](double v) { return scale * v + shift; },
               [scale](double, double) { return scale; });
}

Tensor elementwise(Elementwise op, std::span<const Tensor> args) {
  const std::size_t arity = (op == Elementwise::add || op == Elementwise::mul) ? 2 : 1;
  if (args.size() != arity) {
    throw ContractError("elementwise: expected " + std::to_string(arity) + " operands, got " +
                        std::to_string(args.size()));
  }
  switch (op) {
    case Elementwise::add: return add(args[0], args[1]);
    case Elementwise::mul: return mul(args[0], args[1]);
    case Elementwise::sigmoid: return sigmoid(args[0]);
    case Elementwise::tanh: return tanh(args[0]);
    case Elementwise::relu: return relu(args[0]);
    case Elementwise::scaled_tanh: return scaled_tanh(args[0]);
  }
  throw ContractError("elementwise: unknown op");
}

// ---- softmax / loss --------------------------------------------------------

std::vector<double> log_softmax(std::span<const double> logits) {
  const auto top = std::max_element(logits.begin(), logits.end());
  const double mx = *top;
  // The maximum contributes exactly 1 to the normalizer; log1p keeps the
  // small remainder accurate for confident predictions.
  double rest = 0.0;
  for (auto it = logits.begin(); it != logits.end(); ++it) {
    if (it != top) rest += std::exp(*it - mx);
  }
  const double log_z = std::log1p(rest);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (logits[i] - mx) - log_z;
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double denom = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    denom += out[i];
  }
  for (double& v : out) v /= denom;
  return out;
}

Tensor softmax_cross_entropy(const Tensor& logits, std::size_t target) {
  require_rank(logits, 1, "softmax_cross_entropy");
  if (target >= logits.size()) {
    throw IndexError("softmax_cross_entropy: target " + std::to_string(target) +
                     " out of range for " + std::to_string(logits.size()) + " classes");
  }
  const std::vector<double> logp = log_softmax(logits.data());
  const bool rec = should_record({&logits});
  Tensor result = make_result({1}, {-logp[target]}, rec);
  if (rec) {
    NodePtr ln = logits.node(), on = result.node();
    g_active_tape->record(on, [ln, on, target] {
      const double g = on->grad[0];
      const std::vector<double> p = softmax(ln->data);
      for (std::size_t i = 0; i < p.size(); ++i) {
        ln->grad[i] += g * (p[i] - (i == target ? 1.0 : 0.0));
      }
    });
  }
  return result;
}

// ---- indexing / reshaping --------------------------------------------------

Tensor embedding_lookup(const Tensor& table, std::size_t index) {
  require_rank(table, 2, "embedding_lookup");
  const std::size_t k = table.cols();
  if (index >= table.rows()) {
    throw IndexError("embedding_lookup: index " + std::to_string(index) + " out of range for " +
                     std::to_string(table.rows()) + " rows");
  }
  auto T = table.data();
  std::vector<double> out(T.begin() + static_cast<std::ptrdiff_t>(index * k),
                          T.begin() + static_cast<std::ptrdiff_t>((index + 1) * k));
  const bool rec = should_record({&table});
  Tensor result = make_result({k}, std::move(out), rec);
  if (rec) {
    NodePtr tn = table.node(), on = result.node();
    g_active_tape->record(on, [tn, on, index, k] {
      for (std::size_t j = 0; j < k; ++j) tn->grad[index * k + j] += on->grad[j];
    });
  }
  return result;
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no parts");
  const std::size_t k = parts[0].rank() == 1 ? parts[0].size() : parts[0].cols();
  std::size_t total_rows = 0;
  bool rec = false;
  for (const Tensor& p : parts) {
    require_defined(p, "concat_rows");
    const std::size_t pk = p.rank() == 1 ? p.size() : (p.rank() == 2 ? p.cols() : 0);
    if (pk != k) {
      throw DimensionError("concat_rows: column mismatch between " + shape_to_string(parts[0].shape()) +
                           " and " + shape_to_string(p.shape()));
    }
    total_rows += p.size() / k;
    rec = rec || should_record({&p});
  }
  std::vector<double> out;
  out.reserve(total_rows * k);
  for (const Tensor& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  Tensor result = make_result({total_rows, k}, std::move(out), rec);
  if (rec) {
    std::vector<NodePtr> nodes;
    for (const Tensor& p : parts) nodes.push_back(p.node());
    NodePtr on = result.node();
    g_active_tape->record(on, [nodes, on] {
      std::size_t offset = 0;
      for (const NodePtr& n : nodes) {
        if (n->requires_grad) {
          for (std::size_t i = 0; i < n->data.size(); ++i) n->grad[i] += on->grad[offset + i];
        }
        offset += n->data.size();
      }
    });
  }
  return result;
}

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat: no parts");
  std::vector<double> out;
  bool rec = false;
  for (const Tensor& p : parts) {
    require_rank(p, 1, "concat");
    out.insert(out.end(), p.data().begin(), p.data().end());
    rec = rec || should_record({&p});
  }
  const std::size_t n = out.size();
  Tensor result = make_result({n}, std::move(out), rec);
  if (rec) {
    std::vector<NodePtr> nodes;
    for (const Tensor& p : parts) nodes.push_back(p.node());
    NodePtr on = result.node();
    g_active_tape->record(on, [nodes, on] {
      std::size_t offset = 0;
      for (const NodePtr& n : nodes) {
        if (n->requires_grad) {
          for (std::size_t i = 0; i < n->data.size(); ++i) n->grad[i] += on->grad[offset + i];
        }
        offset += n->data.size();
      }
    });
  }
  return result;
}

Tensor slice(const Tensor& x, std::size_t offset, std::size_t length) {
  require_rank(x, 1, "slice");
  if (length == 0 || offset + length > x.size()) {
    throw DimensionError("slice: [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                         ") outside " + shape_to_string(x.shape()));
  }
  auto X = x.data();
  std::vector<double> out(X.begin() + static_cast<std::ptrdiff_t>(offset),
                          X.begin() + static_cast<std::ptrdiff_t>(offset + length));
  const bool rec = should_record({&x});
  Tensor result = make_result({length}, std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node(), on = result.node();
    g_active_tape->record(on, [xn, on, offset, length] {
      for (std::size_t i = 0; i < length; ++i) xn->grad[offset + i] += on->grad[i];
    });
  }
  return result;
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count) {
  require_rank(x, 2, "slice_rows");
  if (count == 0 || begin + count > x.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " + shape_to_string(x.shape()));
  }
  const std::size_t k = x.cols();
  auto X = x.data();
  std::vector<double> out(X.begin() + static_cast<std::ptrdiff_t>(begin * k),
                          X.begin() + static_cast<std::ptrdiff_t>((begin + count) * k));
  const bool rec = should_record({&x});
  Tensor result = make_result({count, k}, std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node(), on = result.node();
    const std::size_t offset = begin * k;
    g_active_tape->record(on, [xn, on, offset] {
      for (std::size_t i = 0; i < on->grad.size(); ++i) xn->grad[offset + i] += on->grad[i];
    });
  }
  return result;
}

Tensor flatten(const Tensor& x) {
  require_defined(x, "flatten");
  const bool rec = should_record({&x});
  std::vector<double> out(x.data().begin(), x.data().end());
  Tensor result = make_result({x.size()}, std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node(), on = result.node();
    g_active_tape->record(on, [xn, on] {
      for (std::size_t i = 0; i < on->grad.size(); ++i) xn->grad[i] += on->grad[i];
    });
  }
  return result;
}

Tensor unfold_rows(const Tensor& x, std::size_t kernel) {
  require_rank(x, 2, "unfold_rows");
  const std::size_t m = x.rows(), k = x.cols();
  if (kernel == 0 || kernel > m) {
    throw DimensionError("unfold_rows: kernel " + std::to_string(kernel) + " overruns " +
                         shape_to_string(x.shape()));
  }
  const std::size_t out_rows = m - kernel + 1;
  const std::size_t width = kernel * k;
  auto X = x.data();
  std::vector<double> out(out_rows * width);
  // Row i of the output is the contiguous block of input rows i..i+kernel-1.
  for (std::size_t i = 0; i < out_rows; ++i) {
    std::copy(X.begin() + static_cast<std::ptrdiff_t>(i * k),
              X.begin() + static_cast<std::ptrdiff_t>(i * k + width), out.begin() + static_cast<std::ptrdiff_t>(i * width));
  }
  const bool rec = should_record({&x});
  Tensor result = make_result({out_rows, width}, std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node(), on = result.node();
    g_active_tape->record(on, [xn, on, out_rows, width, k] {
      for (std::size_t i = 0; i < out_rows; ++i) {
        for (std::size_t j = 0; j < width; ++j) xn->grad[i * k + j] += on->grad[i * width + j];
      }
    });
  }
  return result;
}

Tensor max_pool_rows(const Tensor& x, std::size_t kernel, std::size_t stride) {
  require_rank(x, 2, "max_pool_rows");
  const std::size_t m = x.rows(), k = x.cols();
  if (kernel == 0 || stride == 0 || kernel > m) {
    throw DimensionError("max_pool_rows: kernel " + std::to_string(kernel) + " overruns " +
                         shape_to_string(x.shape()));
  }
  const std::size_t out_rows = (m - kernel) / stride + 1;
  auto X = x.data();
  std::vector<double> out(out_rows * k);
  std::vector<std::size_t> argmax(out_rows * k);
  for (std::size_t i = 0; i < out_rows; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      std::size_t best = i * stride * k + j;
      for (std::size_t r = 1; r < kernel; ++r) {
        const std::size_t idx = (i * stride + r) * k + j;
        if (X[idx] > X[best]) best = idx;
      }
      out[i * k + j] = X[best];
      argmax[i * k + j] = best;
    }
  }
  const bool rec = should_record({&x});
  Tensor result = make_result({out_rows, k}, std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node(), on = result.node();
    g_active_tape->record(on, [xn, on, argmax = std::move(argmax)] {
      for (std::size_t i = 0; i < argmax.size(); ++i) xn->grad[argmax[i]] += on->grad[i];
    });
  }
  return result;
}

Tensor mean_rows(const Tensor& x) {
  require_rank(x, 2, "mean_rows");
  const std::size_t m = x.rows(), k = x.cols();
  auto X = x.data();
  std::vector<double> out(k, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) out[j] += X[i * k + j];
  }
  const double inv = 1.0 / static_cast<double>(m);
  for (double& v : out) v *= inv;
  const bool rec = should_record({&x});
  Tensor result = make_result({k}, std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node(), on = result.node();
    g_active_tape->record(on, [xn, on, m, k, inv] {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < k; ++j) xn->grad[i * k + j] += on->grad[j] * inv;
      }
    });
  }
  return result;
}

Tensor sum(const Tensor& x) {
  require_defined(x, "sum");
  double total = 0.0;
  for (double v : x.data()) total += v;
  const bool rec = should_record({&x});
  Tensor result = make_result({1}, {total}, rec);
  if (rec) {
    NodePtr xn = x.node(), on = result.node();
    g_active_tape->record(on, [xn, on] {
      for (double& g : xn->grad) g += on->grad[0];
    });
  }
  return result;
}

}  // namespace lcnn
