#pragma once

#include "stance/model.hpp"
#include "stance/tensor.hpp"
#include "stance/vocab.hpp"

namespace stance {

// Stacked bidirectional LSTM states, [L x 2H]. Rows at or past valid_len
// are exactly zero.
struct EncodingMatrix {
  Tensor values;
  std::size_t valid_len = 0;
};

// [L x L] Gram matrix of two encodings; zero outside the rows x cols block.
struct SimilarityMatrix {
  Tensor values;
  std::size_t rows = 0;
  std::size_t cols = 0;

  // The rows x cols top-left block, differentiable.
  Tensor valid_block() const;
};

// Row i is [forward state after c_0..c_i | backward state after c_n-1..c_i].
// Throws std::invalid_argument for an empty mention or one longer than L.
EncodingMatrix encode(const Mention& m, const ModelParams& params);

// Throws DimensionError when encoding widths differ.
SimilarityMatrix similarity_matrix(const EncodingMatrix& a, const EncodingMatrix& b);

}  // namespace stance
