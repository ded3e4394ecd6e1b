#pragma once

#include "dl/nn/ops.hpp"

#include <utility>
#include <vector>

namespace dl::nn {

// One LSTM layer. Gate blocks are packed [input, forget, cell, output] along
// the first axis, so W_ih is {4*hidden, in}, W_hh is {4*hidden, hidden} and
// bias is {4*hidden}.
struct LstmLayer {
  Tensor W_ih;
  Tensor W_hh;
  Tensor bias;

  int hidden() const { return W_hh.shape()[1]; }
  int input() const { return W_ih.shape()[1]; }
};

struct LstmState {
  Tensor h;
  Tensor c;
};

inline LstmState lstm_step(const Tensor& x, const LstmState& prev, const LstmLayer& p) {
  const int H = p.hidden();
  Tensor z = add(affine(x, p.W_ih, p.bias), matmul(p.W_hh, prev.h));
  Tensor i = sigmoid(slice(z, 0, 0, H));
  Tensor f = sigmoid(slice(z, 0, H, H));
  Tensor g = tanh(slice(z, 0, 2 * H, H));
  Tensor o = sigmoid(slice(z, 0, 3 * H, H));
  Tensor c = add(mul(f, prev.c), mul(i, g));
  Tensor h = mul(o, tanh(c));
  return {h, c};
}

// Runs a layer stack over a sequence of 1D inputs with zero initial state and
// returns the top layer's final hidden vector.
inline Tensor lstm_forward(const std::vector<Tensor>& seq, const std::vector<LstmLayer>& layers) {
  require(!seq.empty() && !layers.empty(), "lstm_forward: empty sequence or layer stack");
  std::vector<LstmState> state(layers.size());
  for (size_t l = 0; l < layers.size(); ++l) {
    const int H = layers[l].hidden();
    state[l] = {Tensor::zeros({H}), Tensor::zeros({H})};
  }
  Tensor top;
  for (const Tensor& x : seq) {
    Tensor cur = x;
    for (size_t l = 0; l < layers.size(); ++l) {
      state[l] = lstm_step(cur, state[l], layers[l]);
      cur = state[l].h;
    }
    top = cur;
  }
  return top;
}

}  // namespace dl::nn
