#pragma once

// Dense float64 tensors with define-by-run reverse-mode differentiation.
//
// A Tensor is a shared handle: copies alias the same storage, use clone() for
// a deep copy. Operations record themselves on the thread's active Tape (see
// Tape::Scope) when at least one input requires a gradient. With no active
// tape, operations only compute values.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lcnn {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

struct TensorNode {
  Shape shape;
  std::vector<double> data;
  // Same length as data iff requires_grad.
  std::vector<double> grad;
  bool requires_grad = false;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                       bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->data.size(); }
  // Extents of a rank-2 tensor.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return node_->data; }
  std::span<double> data() { return node_->data; }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> grad() { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }

  double operator[](std::size_t i) const { return node_->data[i]; }
  double at(std::size_t row, std::size_t col) const;
  double item() const;

  void zero_grad();
  // Deep copy; the copy is a fresh leaf.
  Tensor clone(bool requires_grad = false) const;
  // Shares nothing with this tensor and never requires grad.
  Tensor detach() const { return clone(false); }

  const std::shared_ptr<TensorNode>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}
  friend Tensor make_result(Shape shape, std::vector<double> values, bool requires_grad);

  std::shared_ptr<TensorNode> node_;
};

// Records operations in creation order, which is a topological order of the
// computation. backward() replays the records once, newest first.
class Tape {
 public:
  struct Record {
    std::shared_ptr<TensorNode> output;
    std::function<void()> backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::shared_ptr<TensorNode> output, std::function<void()> backward);

  // Seeds d loss / d loss = 1 and propagates into every reachable leaf.
  // Leaves accumulate; call zero_grad() on parameters between steps.
  void backward(const Tensor& loss);

  std::size_t size() const { return records_.size(); }
  bool consumed() const { return consumed_; }

  static Tape* active();

  // Makes a tape active on this thread for the lifetime of the scope.
  class Scope {
   public:
    explicit Scope(Tape& tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* previous_;
  };

 private:
  std::vector<Record> records_;
  bool consumed_ = false;
};

// Disables recording on this thread (inference).
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

// ---- operations -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
// [m×k] · [k] -> [m]
Tensor matvec(const Tensor& a, const Tensor& x);

// Exact-shape operands, or a rank-2 [m×n] left operand with a rank-1 [n]
// right operand broadcast over rows.
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);
// 1.7159 * tanh(2x/3)
Tensor scaled_tanh(const Tensor& x);
// scale * x + shift
Tensor affine(const Tensor& x, double scale, double shift);

enum class Elementwise { add, mul, sigmoid, tanh, relu, scaled_tanh };
Tensor elementwise(Elementwise op, std::span<const Tensor> args);

inline constexpr double kScaledTanhAmplitude = 1.7159;
inline constexpr double kScaledTanhSlope = 2.0 / 3.0;
double scaled_tanh_value(double x);
double sigmoid_value(double x);

// -log softmax(logits)[target], max-subtracted.
Tensor softmax_cross_entropy(const Tensor& logits, std::size_t target);
std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);

Tensor embedding_lookup(const Tensor& table, std::size_t index);

// Stacks rank-2 [r×K] parts (rank-1 [K] parts count as one row).
Tensor concat_rows(std::span<const Tensor> parts);
// Concatenates rank-1 tensors.
Tensor concat(std::span<const Tensor> parts);
// Rank-1 slice [offset, offset+length).
Tensor slice(const Tensor& x, std::size_t offset, std::size_t length);
// Rank-2 row range [begin, begin+count).
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count);
Tensor flatten(const Tensor& x);

// [M×K] -> [(M-k+1) × kK]; row i is rows i..i+k-1 laid end to end.
Tensor unfold_rows(const Tensor& x, std::size_t kernel);
// Max over non-overlapping row windows: [M×K] -> [((M-k)/stride+1) × K].
Tensor max_pool_rows(const Tensor& x, std::size_t kernel, std::size_t stride);
Tensor mean_rows(const Tensor& x);
Tensor sum(const Tensor& x);

}  // namespace lcnn
