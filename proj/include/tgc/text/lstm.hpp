#pragma once

#include <cmath>
#include <string>

#include "tgc/core/init.hpp"
#include "tgc/core/ops.hpp"
#include "tgc/core/params.hpp"

namespace tgc {

/// Parameters of one LSTM layer. Gates are packed [i | f | g | o] along the
/// columns of `w`, which multiplies the concatenation [x, h].
template <typename T>
struct LstmLayer {
  Var<T> w;  // [(in + hidden) x 4 hidden]
  Var<T> b;  // [4 hidden]
  std::size_t in = 0;
  std::size_t hidden = 0;

  static LstmLayer create(ParamSet<T>& ps, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng) {
    LstmLayer l;
    l.in = in;
    l.hidden = hidden;
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    l.w = ps.add(name + ".w", init_uniform<T>({in + hidden, 4 * hidden}, -bound, bound, rng));
    Tensor<T> b(Shape{4 * hidden});
    for (std::size_t j = hidden; j < 2 * hidden; ++j) b[j] = T{1};  // forget gate
    l.b = ps.add(name + ".b", std::move(b));
    return l;
  }

  static LstmLayer bind(const ParamSet<T>& ps, const std::string& name) {
    LstmLayer l;
    l.w = ps.get(name + ".w");
    l.b = ps.get(name + ".b");
    l.hidden = l.b.size() / 4;
    l.in = l.w.shape()[0] - l.hidden;
    return l;
  }
};

template <typename T>
struct LstmState {
  Var<T> h;
  Var<T> c;
};

template <typename T>
LstmState<T> lstm_zero_state(std::size_t batch, std::size_t hidden) {
  return {Var<T>::constant(Tensor<T>(Shape{batch, hidden})), Var<T>::constant(Tensor<T>(Shape{batch, hidden}))};
}

/// One step: x[B x in], state[B x hidden] -> next state.
template <typename T>
LstmState<T> lstm_step(const LstmLayer<T>& l, const Var<T>& x, const LstmState<T>& s) {
  const std::size_t H = l.hidden;
  auto gates = linear(concat<T>({x, s.h}, 1), l.w, l.b);
  auto i = sigmoid(slice(gates, 1, 0, H));
  auto f = sigmoid(slice(gates, 1, H, 2 * H));
  auto g = tanh(slice(gates, 1, 2 * H, 3 * H));
  auto o = sigmoid(slice(gates, 1, 3 * H, 4 * H));
  auto c = add(mul(f, s.c), mul(i, g));
  auto h = mul(o, tanh(c));
  return {h, c};
}

}  // namespace tgc
