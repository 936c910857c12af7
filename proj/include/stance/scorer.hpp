#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>
#include <string_view>

#include "stance/encoder.hpp"
#include "stance/model.hpp"
#include "stance/otalign.hpp"

namespace stance {

// Intermediate matrices of one scored pair, valid blocks only.
struct ScoreTrace {
  Tensor similarity;  // S
  Tensor plan;        // P-hat; undefined for variants without transport
  Tensor reweighted;  // S o P-hat (or the CNN input for other variants)
};

// layer_k = maxpool(relu(conv(layer_k-1))) for k = 1..3, then a linear head
// over the flattened last layer. Input is [L x L].
Tensor cnn_head(const Tensor& input, const ModelParams& params);

// Full f(m, m') for params.hp.variant, as a differentiable [1] tensor.
Tensor score_tensor(const Mention& m, const Mention& m2, const ModelParams& params,
                    ScoreTrace* trace = nullptr);

// Same, reusing precomputed encodings (ignored for kLstmToBinary).
Tensor score_encoded(const Mention& m, const EncodingMatrix& hm, const Mention& m2,
                     const EncodingMatrix& hm2, const ModelParams& params,
                     ScoreTrace* trace = nullptr);

// Convenience: builds mentions with the model's vocabulary and L. Throws
// std::invalid_argument for empty strings; longer strings are truncated with
// a warning.
double score(std::string_view a, std::string_view b, const ModelParams& params);

// Scores one query against many candidates without recording a graph; the
// query is encoded once.
std::vector<double> score_batch(std::string_view query, std::span<const std::string> candidates,
                                const ModelParams& params);

// The character-equality matrix used by kLstmToBinary, [L x L].
Tensor binary_similarity(const Mention& m, const Mention& m2, std::size_t max_len);

}  // namespace stance
