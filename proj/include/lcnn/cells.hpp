#pragma once

// Recurrent transition functions r^[t] = f(r^[t-1], z^[t]).

#include <cstddef>
#include <string>
#include <string_view>

#include "lcnn/parameters.hpp"
#include "lcnn/tensor.hpp"

namespace lcnn {

enum class CellKind { simple_rnn, lstm, gru, rhn };

std::string to_string(CellKind kind);
CellKind parse_cell_kind(std::string_view name);

struct CellState {
  Tensor r;       // [d]
  Tensor memory;  // [d], LSTM only
};

// Gate order inside stacked weights: LSTM (i, f, o, g); GRU (update, reset,
// candidate); RHN (transform, carry, candidate).
struct CellParams {
  CellKind kind = CellKind::simple_rnn;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  // simple_rnn W_z [d x in]; lstm [4d x in]; gru [3d x in]; rhn M [3d x (d + in)]
  Tensor input_weight;
  // simple_rnn W_r [d x d]; lstm [4d x d]; gru gate part [2d x d]; unused for rhn
  Tensor recurrent_weight;
  // gru candidate part [d x d]
  Tensor candidate_weight;
  // d, 4d, 3d, 3d
  Tensor bias;
};

inline constexpr double kForgetBiasInit = 1.0;

CellParams register_cell(ParameterSet& params, const std::string& prefix, CellKind kind, std::size_t input_dim,
                         std::size_t hidden_dim);
std::size_t cell_parameter_count(CellKind kind, std::size_t input_dim, std::size_t hidden_dim);

CellState initial_cell_state(CellKind kind, std::size_t hidden_dim);

// [m; x_prev]. An undefined x_prev stands for the zero vector (t = 0).
Tensor make_input_z(const Tensor& m, const Tensor& x_prev);

CellState rnn_step(const CellState& state, const Tensor& z, const CellParams& params);
CellState lstm_step(const CellState& state, const Tensor& z, const CellParams& params);
CellState gru_step(const CellState& state, const Tensor& z, const CellParams& params);
CellState rhn_step(const CellState& state, const Tensor& z, const CellParams& params);
CellState cell_step(const CellState& state, const Tensor& z, const CellParams& params);

}  // namespace lcnn
