#include "stance/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace stance {

namespace {

struct VariantInfo {
  ScoreVariant variant;
  std::string_view name;
};

constexpr std::array<VariantInfo, 5> kVariants = {{
    {ScoreVariant::kFull, "stance"},
    {ScoreVariant::kWithoutOt, "without-ot"},
    {ScoreVariant::kCnnToLinear, "cnn-linear"},
    {ScoreVariant::kLstmToBinary, "lstm-binary"},
    {ScoreVariant::kLstmDot, "lstm-dot"},
}};

Tensor uniform(std::mt19937_64& rng, Shape shape, double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<Real> v(shape_size(shape));
  for (Real& x : v) x = static_cast<float>(dist(rng));
  return Tensor::from(std::move(shape), std::move(v), true);
}

LstmWeights init_lstm(std::mt19937_64& rng, std::size_t e, std::size_t h) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(h));
  LstmWeights w;
  w.wx = uniform(rng, {e, 4 * h}, bound);
  w.wh = uniform(rng, {h, 4 * h}, bound);
  w.b = uniform(rng, {1, 4 * h}, bound);
  auto b = w.b.mutable_data();
  for (std::size_t j = h; j < 2 * h; ++j) b[j] = 1.0;
  return w;
}

}  // namespace

std::string_view variant_name(ScoreVariant v) {
  for (const auto& info : kVariants) {
    if (info.variant == v) return info.name;
  }
  return "unknown";
}

std::optional<ScoreVariant> parse_variant(std::string_view name) {
  for (const auto& info : kVariants) {
    if (info.name == name) return info.variant;
  }
  return std::nullopt;
}

bool uses_encoder(ScoreVariant v) { return v != ScoreVariant::kLstmToBinary; }
bool uses_cnn(ScoreVariant v) {
  return v == ScoreVariant::kFull || v == ScoreVariant::kWithoutOt || v == ScoreVariant::kLstmToBinary;
}
bool uses_transport(ScoreVariant v) { return v == ScoreVariant::kFull; }

std::size_t Hyperparams::pooled_side() const {
  std::size_t side = max_len;
  for (int i = 0; i < 3; ++i) side = (side + 1) / 2;
  return side;
}

void Hyperparams::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("hyperparameters: " + what); };
  if (max_len == 0) fail("max_len must be positive");
  if (embed_dim == 0 || hidden == 0) fail("embedding and hidden sizes must be positive");
  if (!(lambda > 0.0)) fail("lambda must be positive");
  if (sinkhorn_iters == 0) fail("sinkhorn_iters must be at least 1");
  if (sinkhorn_tol < 0.0) fail("sinkhorn_tol must be nonnegative");
  if (filter % 2 == 0) fail("filter size must be odd");
  for (std::size_t c : channels) {
    if (c == 0) fail("channel counts must be positive");
  }
}

ModelParams ModelParams::init(Hyperparams hp, Vocabulary vocab, std::uint64_t seed) {
  hp.validate();
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.hp = hp;
  p.vocab = std::move(vocab);
  const ScoreVariant v = hp.variant;

  if (uses_encoder(v)) {
    p.embedding = uniform(rng, {p.vocab.size(), hp.embed_dim}, 0.5);
    // PAD never reaches the encoder; keep its row at zero.
    for (std::size_t j = 0; j < hp.embed_dim; ++j) p.embedding.mutable_data()[j] = 0.0;
    p.forward = init_lstm(rng, hp.embed_dim, hp.hidden);
    p.backward = init_lstm(rng, hp.embed_dim, hp.hidden);
  }
  if (uses_cnn(v)) {
    std::size_t cin = 1;
    for (std::size_t k = 0; k < 3; ++k) {
      const std::size_t cout = hp.channels[k];
      const double fan_in = static_cast<double>(cin * hp.filter * hp.filter);
      p.conv_w[k] = uniform(rng, {cout, cin, hp.filter, hp.filter}, std::sqrt(6.0 / fan_in));
      p.conv_b[k] = Tensor::zeros({cout}, true);
      cin = cout;
    }
    const std::size_t side = hp.pooled_side();
    const std::size_t n = hp.channels[2] * side * side;
    p.head_w = uniform(rng, {1, n}, 1.0 / std::sqrt(static_cast<double>(n)));
    p.head_b = Tensor::zeros({1}, true);
  } else if (v == ScoreVariant::kCnnToLinear) {
    const std::size_t n = hp.max_len * hp.max_len;
    p.head_w = uniform(rng, {1, n}, 1.0 / std::sqrt(static_cast<double>(n)));
    p.head_b = Tensor::zeros({1}, true);
  }
  return p;
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named() const {
  std::vector<std::pair<std::string, Tensor>> out;
  auto add = [&](const char* name, const Tensor& t) {
    if (t.defined()) out.emplace_back(name, t);
  };
  add("embedding", embedding);
  add("lstm.fwd.wx", forward.wx);
  add("lstm.fwd.wh", forward.wh);
  add("lstm.fwd.b", forward.b);
  add("lstm.bwd.wx", backward.wx);
  add("lstm.bwd.wh", backward.wh);
  add("lstm.bwd.b", backward.b);
  static constexpr std::array<const char*, 3> kConvW = {"conv1.w", "conv2.w", "conv3.w"};
  static constexpr std::array<const char*, 3> kConvB = {"conv1.b", "conv2.b", "conv3.b"};
  for (std::size_t k = 0; k < 3; ++k) {
    add(kConvW[k], conv_w[k]);
    add(kConvB[k], conv_b[k]);
  }
  add("head.w", head_w);
  add("head.b", head_b);
  return out;
}

void ModelParams::set(const std::string& name, Tensor t) {
  if (name == "embedding") embedding = std::move(t);
  else if (name == "lstm.fwd.wx") forward.wx = std::move(t);
  else if (name == "lstm.fwd.wh") forward.wh = std::move(t);
  else if (name == "lstm.fwd.b") forward.b = std::move(t);
  else if (name == "lstm.bwd.wx") backward.wx = std::move(t);
  else if (name == "lstm.bwd.wh") backward.wh = std::move(t);
  else if (name == "lstm.bwd.b") backward.b = std::move(t);
  else if (name == "conv1.w") conv_w[0] = std::move(t);
  else if (name == "conv2.w") conv_w[1] = std::move(t);
  else if (name == "conv3.w") conv_w[2] = std::move(t);
  else if (name == "conv1.b") conv_b[0] = std::move(t);
  else if (name == "conv2.b") conv_b[1] = std::move(t);
  else if (name == "conv3.b") conv_b[2] = std::move(t);
  else if (name == "head.w") head_w = std::move(t);
  else if (name == "head.b") head_b = std::move(t);
  else throw std::invalid_argument("unknown parameter tensor: " + name);
}

ModelParams ModelParams::clone() const {
  ModelParams p;
  p.hp = hp;
  p.vocab = vocab;
  for (const auto& [name, t] : named()) p.set(name, t.clone(true));
  return p;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named()) n += t.size();
  return n;
}

}  // namespace stance
