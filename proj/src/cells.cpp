#include "lcnn/cells.hpp"

#include <algorithm>
#include <array>

#include "lcnn/errors.hpp"

namespace lcnn {

namespace {

void check_step(const CellState& state, const Tensor& z, const CellParams& p, CellKind expected) {
  if (p.kind != expected) throw ContractError("cell parameters are for " + to_string(p.kind));
  if (!state.r.defined() || state.r.rank() != 1 || state.r.size() != p.hidden_dim) {
    throw DimensionError("recurrent state width does not match hidden size " + std::to_string(p.hidden_dim));
  }
  if (!z.defined() || z.rank() != 1 || z.size() != p.input_dim) {
    throw DimensionError("cell input " + (z.defined() ? shape_to_string(z.shape()) : std::string("<none>")) +
                         " does not match input width " + std::to_string(p.input_dim));
  }
}

constexpr std::array<std::pair<std::string_view, CellKind>, 4> kCellNames{{
    {"simple_rnn", CellKind::simple_rnn},
    {"lstm", CellKind::lstm},
    {"gru", CellKind::gru},
    {"rhn", CellKind::rhn},
}};

}  // namespace

std::string to_string(CellKind kind) {
  for (const auto& [name, k] : kCellNames) {
    if (k == kind) return std::string(name);
  }
  return "unknown";
}

CellKind parse_cell_kind(std::string_view name) {
  for (const auto& [n, k] : kCellNames) {
    if (n == name) return k;
  }
  if (name == "rnn") return CellKind::simple_rnn;
  throw ContractError("unknown cell kind '" + std::string(name) + "' (simple_rnn, lstm, gru, rhn)");
}

CellParams register_cell(ParameterSet& params, const std::string& prefix, CellKind kind, std::size_t input_dim,
                         std::size_t hidden_dim) {
  const std::size_t d = hidden_dim;
  CellParams p;
  p.kind = kind;
  p.input_dim = input_dim;
  p.hidden_dim = d;
  switch (kind) {
    case CellKind::simple_rnn:
      p.recurrent_weight = params.add(prefix + "W_r", {d, d});
      p.input_weight = params.add(prefix + "W_z", {d, input_dim});
      p.bias = params.add(prefix + "b", {d}, constant_init(0.0));
      break;
    case CellKind::lstm:
      p.input_weight = params.add(prefix + "W_x", {4 * d, input_dim});
      p.recurrent_weight = params.add(prefix + "W_h", {4 * d, d});
      p.bias = params.add(prefix + "b", {4 * d}, [d](std::span<double> v, Rng&) {
        std::fill(v.begin(), v.end(), 0.0);
        std::fill(v.begin() + static_cast<std::ptrdiff_t>(d), v.begin() + static_cast<std::ptrdiff_t>(2 * d),
                  kForgetBiasInit);
      });
      break;
    case CellKind::gru:
      p.input_weight = params.add(prefix + "W_x", {3 * d, input_dim});
      p.recurrent_weight = params.add(prefix + "U_gates", {2 * d, d});
      p.candidate_weight = params.add(prefix + "U_candidate", {d, d});
      p.bias = params.add(prefix + "b", {3 * d}, constant_init(0.0));
      break;
    case CellKind::rhn:
      p.input_weight = params.add(prefix + "M", {3 * d, d + input_dim});
      p.bias = params.add(prefix + "b", {3 * d}, constant_init(0.0));
      break;
  }
  return p;
}

std::size_t cell_parameter_count(CellKind kind, std::size_t input_dim, std::size_t hidden_dim) {
  const std::size_t d = hidden_dim, in = input_dim;
  switch (kind) {
    case CellKind::simple_rnn: return d * d + d * in + d;
    case CellKind::lstm: return 4 * d * in + 4 * d * d + 4 * d;
    case CellKind::gru: return 3 * d * in + 2 * d * d + d * d + 3 * d;
    case CellKind::rhn: return 3 * d * (d + in) + 3 * d;
  }
  return 0;
}

CellState initial_cell_state(CellKind kind, std::size_t hidden_dim) {
  CellState s;
  s.r = Tensor::zeros({hidden_dim});
  if (kind == CellKind::lstm) s.memory = Tensor::zeros({hidden_dim});
  return s;
}

Tensor make_input_z(const Tensor& m, const Tensor& x_prev) {
  if (!m.defined() || m.rank() != 1) throw DimensionError("make_input_z: m must be a vector");
  const Tensor x = x_prev.defined() ? x_prev : Tensor::zeros({m.size()});
  if (x.rank() != 1 || x.size() != m.size()) {
    throw DimensionError("make_input_z: widths " + shape_to_string(m.shape()) + " and " +
                         shape_to_string(x.shape()) + " differ");
  }
  const Tensor parts[] = {m, x};
  return concat(parts);
}

CellState rnn_step(const CellState& state, const Tensor& z, const CellParams& p) {
  check_step(state, z, p, CellKind::simple_rnn);
  const Tensor pre = add(add(matvec(p.recurrent_weight, state.r), matvec(p.input_weight, z)), p.bias);
  return {tanh(pre), {}};
}

CellState lstm_step(const CellState& state, const Tensor& z, const CellParams& p) {
  check_step(state, z, p, CellKind::lstm);
  if (!state.memory.defined() || state.memory.size() != p.hidden_dim) {
    throw DimensionError("LSTM state is missing its memory cell");
  }
  const std::size_t d = p.hidden_dim;
  const Tensor pre = add(add(matvec(p.input_weight, z), matvec(p.recurrent_weight, state.r)), p.bias);
  const Tensor input_gate = sigmoid(slice(pre, 0, d));
  const Tensor forget_gate = sigmoid(slice(pre, d, d));
  const Tensor output_gate = sigmoid(slice(pre, 2 * d, d));
  const Tensor candidate = tanh(slice(pre, 3 * d, d));
  const Tensor memory = add(mul(forget_gate, state.memory), mul(input_gate, candidate));
  return {mul(output_gate, tanh(memory)), memory};
}

CellState gru_step(const CellState& state, const Tensor& z, const CellParams& p) {
  check_step(state, z, p, CellKind::gru);
  const std::size_t d = p.hidden_dim;
  const Tensor from_input = add(matvec(p.input_weight, z), p.bias);
  const Tensor gates = sigmoid(add(slice(from_input, 0, 2 * d), matvec(p.recurrent_weight, state.r)));
  const Tensor update = slice(gates, 0, d);
  const Tensor reset = slice(gates, d, d);
  const Tensor candidate =
      tanh(add(slice(from_input, 2 * d, d), matvec(p.candidate_weight, mul(reset, state.r))));
  return {add(mul(affine(update, -1.0, 1.0), state.r), mul(update, candidate)), {}};
}

CellState rhn_step(const CellState& state, const Tensor& z, const CellParams& p) {
  check_step(state, z, p, CellKind::rhn);
  const std::size_t d = p.hidden_dim;
  const Tensor joined[] = {state.r, z};
  const Tensor pre = add(matvec(p.input_weight, concat(joined)), p.bias);
  const Tensor transform = sigmoid(slice(pre, 0, d));
  const Tensor carry = sigmoid(slice(pre, d, d));
  const Tensor candidate = tanh(slice(pre, 2 * d, d));
  return {add(mul(candidate, transform), mul(carry, state.r)), {}};
}

CellState cell_step(const CellState& state, const Tensor& z, const CellParams& p) {
  switch (p.kind) {
    case CellKind::simple_rnn: return rnn_step(state, z, p);
    case CellKind::lstm: return lstm_step(state, z, p);
    case CellKind::gru: return gru_step(state, z, p);
    case CellKind::rhn: return rhn_step(state, z, p);
  }
  throw ContractError("unknown cell kind");
}

}  // namespace lcnn
