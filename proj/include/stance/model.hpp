#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stance/tensor.hpp"
#include "stance/vocab.hpp"

namespace stance {

enum class ScoreVariant {
  kFull,          // encode -> S -> transport plan -> S o P -> CNN -> linear
  kWithoutOt,     // CNN on S directly
  kCnnToLinear,   // linear head on flattened S
  kLstmToBinary,  // CNN on the character-equality matrix
  kLstmDot,       // dot product of the last encoding rows
};

std::string_view variant_name(ScoreVariant v);
std::optional<ScoreVariant> parse_variant(std::string_view name);
bool uses_encoder(ScoreVariant v);
bool uses_cnn(ScoreVariant v);
bool uses_transport(ScoreVariant v);

struct Hyperparams {
  std::size_t max_len = 64;
  std::size_t embed_dim = 32;
  std::size_t hidden = 64;  // per direction; d = 2 * hidden
  double lambda = 10.0;
  std::size_t sinkhorn_iters = 50;
  double sinkhorn_tol = 1e-6;
  std::size_t filter = 3;
  std::array<std::size_t, 3> channels = {16, 16, 16};
  ScoreVariant variant = ScoreVariant::kFull;

  std::size_t encoding_dim() const { return 2 * hidden; }
  // Side of the grid left after three 2x2 poolings of an L x L input.
  std::size_t pooled_side() const;
  void validate() const;
  bool operator==(const Hyperparams&) const = default;
};

// Gate blocks are laid out [input | forget | cell | output] along the 4H axis.
struct LstmWeights {
  Tensor wx;  // [e x 4H]
  Tensor wh;  // [H x 4H]
  Tensor b;   // [1 x 4H]
};

// Every trainable tensor of a scorer. Tensors a variant does not use are
// left undefined.
struct ModelParams {
  Hyperparams hp;
  Vocabulary vocab;

  Tensor embedding;  // [V x e]
  LstmWeights forward;
  LstmWeights backward;
  std::array<Tensor, 3> conv_w;  // [c_out x c_in x f x f]
  std::array<Tensor, 3> conv_b;  // [c_out]
  Tensor head_w;                 // [1 x n]
  Tensor head_b;                 // [1]

  // Forget-gate bias 1, LSTM weights uniform in +-1/sqrt(H), embeddings
  // uniform in +-0.5, conv filters He-uniform, head uniform in +-1/sqrt(n).
  static ModelParams init(Hyperparams hp, Vocabulary vocab, std::uint64_t seed);

  // Defined tensors in a fixed order with stable names; the order is the
  // checkpoint order.
  std::vector<std::pair<std::string, Tensor>> named() const;
  // Installs a tensor by name (used by the checkpoint loader).
  void set(const std::string& name, Tensor t);

  ModelParams clone() const;
  std::size_t parameter_count() const;
};

}  // namespace stance
