#include "stance/encoder.hpp"

#include <stdexcept>

#include "stance/ops.hpp"

namespace stance {

namespace {

// Runs one LSTM direction over precomputed input projections xw [n x 4H],
// visiting rows in the given order. Returns the hidden state per row index.
std::vector<Tensor> run_lstm(const Tensor& xw, const LstmWeights& w, std::size_t hidden,
                             bool reverse) {
  const std::size_t n = xw.dim(0);
  const std::size_t h4 = 4 * hidden;
  std::vector<Tensor> states(n);
  Tensor h, c;
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t t = reverse ? n - 1 - step : step;
    Tensor z = add(slice(xw, t, 1, 0, h4), w.b);
    if (h.defined()) z = add(z, matmul(h, w.wh));
    Tensor in_gate = sigmoid(slice(z, 0, 1, 0, hidden));
    Tensor forget_gate = sigmoid(slice(z, 0, 1, hidden, hidden));
    Tensor cell = tanh(slice(z, 0, 1, 2 * hidden, hidden));
    Tensor out_gate = sigmoid(slice(z, 0, 1, 3 * hidden, hidden));
    c = c.defined() ? add(mul(forget_gate, c), mul(in_gate, cell)) : mul(in_gate, cell);
    h = mul(out_gate, tanh(c));
    states[t] = h;
  }
  return states;
}

}  // namespace

Tensor SimilarityMatrix::valid_block() const { return slice(values, 0, rows, 0, cols); }

EncodingMatrix encode(const Mention& m, const ModelParams& params) {
  const Hyperparams& hp = params.hp;
  if (m.ids.empty()) throw std::invalid_argument("encode: empty mention");
  if (m.ids.size() > hp.max_len) throw std::invalid_argument("encode: mention longer than L");
  if (!params.embedding.defined()) throw std::invalid_argument("encode: model has no encoder");

  Tensor x = gather_rows(params.embedding, m.ids);
  auto fwd = run_lstm(matmul(x, params.forward.wx), params.forward, hp.hidden, false);
  auto bwd = run_lstm(matmul(x, params.backward.wx), params.backward, hp.hidden, true);

  std::vector<Tensor> rows;
  rows.reserve(m.ids.size());
  for (std::size_t i = 0; i < m.ids.size(); ++i) rows.push_back(concat_cols(fwd[i], bwd[i]));
  Tensor stacked = concat_rows(rows);
  return {pad(stacked, hp.max_len, hp.encoding_dim()), m.ids.size()};
}

SimilarityMatrix similarity_matrix(const EncodingMatrix& a, const EncodingMatrix& b) {
  if (a.values.dim(1) != b.values.dim(1)) {
    throw DimensionError("similarity_matrix: encoding widths differ");
  }
  const std::size_t d = a.values.dim(1);
  Tensor ha = slice(a.values, 0, a.valid_len, 0, d);
  Tensor hb = slice(b.values, 0, b.valid_len, 0, d);
  Tensor s = matmul(ha, transpose(hb));
  return {pad(s, a.values.dim(0), b.values.dim(0)), a.valid_len, b.valid_len};
}

}  // namespace stance
