#include "stance/scorer.hpp"

#include <stdexcept>

#include "stance/ops.hpp"

namespace stance {

Tensor cnn_head(const Tensor& input, const ModelParams& params) {
  const std::size_t L = params.hp.max_len;
  Tensor x = reshape(input, {1, L, L});
  for (std::size_t k = 0; k < 3; ++k) {
    x = maxpool2d(relu(conv2d(x, params.conv_w[k], params.conv_b[k])));
  }
  Tensor flat = reshape(x, {x.size(), 1});
  return reshape(add(matmul(params.head_w, flat), params.head_b), {1});
}

std::vector<double> score_batch(std::string_view query, std::span<const std::string> candidates,
                                const ModelParams& params) {
  NoGradGuard no_grad;
  const std::size_t L = params.hp.max_len;
  const Mention q = Mention::make(query, params.vocab, L);
  const bool encoded = uses_encoder(params.hp.variant);
  const EncodingMatrix hq = encoded ? encode(q, params) : EncodingMatrix{};
  std::vector<double> out;
  out.reserve(candidates.size());
  for (const auto& text : candidates) {
    const Mention c = Mention::make(text, params.vocab, L);
    const EncodingMatrix hc = encoded ? encode(c, params) : EncodingMatrix{};
    out.push_back(score_encoded(q, hq, c, hc, params).item());
  }
  return out;
}

Tensor binary_similarity(const Mention& m, const Mention& m2, std::size_t max_len) {
  std::vector<Real> v(max_len * max_len, 0.0);
  for (std::size_t i = 0; i < m.chars.size(); ++i)
    for (std::size_t j = 0; j < m2.chars.size(); ++j)
      v[i * max_len + j] = m.chars[i] == m2.chars[j] ? 1.0 : 0.0;
  return Tensor::from({max_len, max_len}, std::move(v));
}

Tensor score_encoded(const Mention& m, const EncodingMatrix& hm, const Mention& m2,
                     const EncodingMatrix& hm2, const ModelParams& params, ScoreTrace* trace) {
  const Hyperparams& hp = params.hp;
  if (m.ids.empty() || m2.ids.empty()) throw std::invalid_argument("score: empty mention");

  switch (hp.variant) {
    case ScoreVariant::kLstmToBinary: {
      Tensor s = binary_similarity(m, m2, hp.max_len);
      if (trace) trace->similarity = trace->reweighted = slice(s, 0, m.length(), 0, m2.length());
      return cnn_head(s, params);
    }
    case ScoreVariant::kLstmDot: {
      const std::size_t d = hp.encoding_dim();
      Tensor last = slice(hm.values, hm.valid_len - 1, 1, 0, d);
      Tensor last2 = slice(hm2.values, hm2.valid_len - 1, 1, 0, d);
      if (trace) trace->similarity = similarity_matrix(hm, hm2).valid_block();
      return reshape(matmul(last, transpose(last2)), {1});
    }
    default:
      break;
  }

  SimilarityMatrix s = similarity_matrix(hm, hm2);
  if (trace) trace->similarity = s.valid_block();

  if (hp.variant == ScoreVariant::kCnnToLinear) {
    if (trace) trace->reweighted = trace->similarity;
    Tensor flat = reshape(s.values, {hp.max_len * hp.max_len, 1});
    return reshape(add(matmul(params.head_w, flat), params.head_b), {1});
  }
  if (hp.variant == ScoreVariant::kWithoutOt) {
    if (trace) trace->reweighted = trace->similarity;
    return cnn_head(s.values, params);
  }

  SinkhornOptions opt;
  opt.lambda = hp.lambda;
  opt.max_iters = hp.sinkhorn_iters;
  opt.tol = hp.sinkhorn_tol;
  TransportPlan plan = sinkhorn(cost_from_similarity(s), uniform_marginals(s.rows, s.cols), opt);
  SimilarityMatrix reweighted = reweight(s, plan);
  if (trace) {
    trace->plan = plan.values;
    trace->reweighted = reweighted.valid_block();
  }
  return cnn_head(reweighted.values, params);
}

Tensor score_tensor(const Mention& m, const Mention& m2, const ModelParams& params, ScoreTrace* trace) {
  if (!uses_encoder(params.hp.variant)) return score_encoded(m, {}, m2, {}, params, trace);
  return score_encoded(m, encode(m, params), m2, encode(m2, params), params, trace);
}

double score(std::string_view a, std::string_view b, const ModelParams& params) {
  NoGradGuard no_grad;
  Mention m = Mention::make(a, params.vocab, params.hp.max_len);
  Mention m2 = Mention::make(b, params.vocab, params.hp.max_len);
  return score_tensor(m, m2, params).item();
}

}  // namespace stance
