#include "stance/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "stance/encoder.hpp"
#include "stance/ops.hpp"
#include "stance/scorer.hpp"

namespace stance {

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("train config: ") + what);
  };
  require(learning_rate > 0 && std::isfinite(learning_rate), "learning rate must be positive");
  require(batch_size > 0, "batch size must be positive");
  require(epochs > 0, "epochs must be positive");
  require(beta1 > 0 && beta1 < 1, "beta1 must lie in (0, 1)");
  require(beta2 > 0 && beta2 < 1, "beta2 must lie in (0, 1)");
  require(epsilon > 0, "epsilon must be positive");
  require(clip_norm >= 0, "clip norm must be nonnegative");
  require(time_budget_s >= 0, "time budget must be nonnegative");
}

Tensor bpr_loss(const Tensor& s_pos, const Tensor& s_neg) {
  return neg(log(clamp_min(sigmoid(sub(s_pos, s_neg)), 1e-12)));
}

Adam::Adam(const ModelParams& params, const TrainConfig& config) : config_(config) {
  config_.validate();
  for (const auto& [name, t] : params.named()) {
    m_.emplace_back(t.size(), 0.0);
    v_.emplace_back(t.size(), 0.0);
  }
}

void Adam::step(ModelParams& params) {
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  auto named = params.named();
  if (named.size() != m_.size()) throw std::logic_error("Adam: parameter set changed");
  for (std::size_t k = 0; k < named.size(); ++k) {
    Tensor& t = named[k].second;
    auto w = t.mutable_data();
    auto g = t.grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1 - b1) * g[i];
      v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
      const double update = config_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
      w[i] = static_cast<float>(w[i] - update);
    }
  }
}

double clip_gradients(ModelParams& params, double max_norm) {
  double sq = 0.0;
  auto named = params.named();
  for (const auto& [name, t] : named)
    for (Real g : t.grad()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& [name, t] : named)
      for (Real& g : t.mutable_grad()) g *= scale;
  }
  return norm;
}

void zero_gradients(ModelParams& params) {
  for (auto& [name, t] : params.named()) t.zero_grad();
}

namespace {

struct PreparedTriple {
  Mention q, p, n;
};

PreparedTriple prepare(const TripleText& t, const ModelParams& params) {
  const auto& vocab = params.vocab;
  const std::size_t L = params.hp.max_len;
  return {Mention::make(t.q, vocab, L), Mention::make(t.p, vocab, L), Mention::make(t.n, vocab, L)};
}

Tensor prepared_loss(const PreparedTriple& t, const ModelParams& params) {
  if (!uses_encoder(params.hp.variant))
    return bpr_loss(score_encoded(t.q, {}, t.p, {}, params), score_encoded(t.q, {}, t.n, {}, params));
  const EncodingMatrix hq = encode(t.q, params);
  const EncodingMatrix hp = encode(t.p, params);
  const EncodingMatrix hn = encode(t.n, params);
  return bpr_loss(score_encoded(t.q, hq, t.p, hp, params), score_encoded(t.q, hq, t.n, hn, params));
}

std::string describe(const TripleText& t) { return "(" + t.q + " | " + t.p + " | " + t.n + ")"; }

}  // namespace

Tensor triple_loss(const TripleText& t, const ModelParams& params) { return prepared_loss(prepare(t, params), params); }

double mean_loss(std::span<const TripleText> triples, const ModelParams& params) {
  if (triples.empty()) throw std::invalid_argument("mean_loss: no triples");
  NoGradGuard no_grad;
  double total = 0.0;
  for (const auto& t : triples) total += triple_loss(t, params).item();
  return total / static_cast<double>(triples.size());
}

TrainResult train(std::span<const TripleText> triples, const TrainConfig& config, ModelParams params,
                  const DevMetric& dev, std::ostream* log) {
  config.validate();
  if (triples.empty()) throw std::invalid_argument("train: no triples");
  using Clock = std::chrono::steady_clock;
  const auto started = Clock::now();

  std::vector<PreparedTriple> prepared;
  prepared.reserve(triples.size());
  for (const auto& t : triples) prepared.push_back(prepare(t, params));

  Adam adam(params, config);
  TrainResult result;
  double best_dev = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(triples.size());
  bool out_of_budget = false;

  for (std::size_t epoch = 1; epoch <= config.epochs && !out_of_budget; ++epoch) {
    const auto epoch_start = Clock::now();
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(config.seed * 0x9E3779B97F4A7C15ULL + epoch);
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      zero_gradients(params);
      for (std::size_t k = start; k < end; ++k) {
        auto abort = [&](const std::string& why) {
          spdlog::error("{} on triple {}", why, describe(triples[order[k]]));
          throw NumericalError(why + " on triple " + describe(triples[order[k]]));
        };
        Tensor loss;
        try {
          loss = prepared_loss(prepared[order[k]], params);
        } catch (const DomainError& e) {
          abort(std::string("non-finite loss (") + e.what() + ")");
        } catch (const NumericalError& e) {
          abort(std::string("non-finite loss (") + e.what() + ")");
        }
        const double value = loss.item();
        if (!std::isfinite(value)) abort("non-finite loss");
        loss_sum += value;
        ++seen;
        mul_scalar(loss, scale).backward();
      }
      clip_gradients(params, config.clip_norm);
      adam.step(params);
      ++result.steps;
      if (config.max_steps > 0 && result.steps >= config.max_steps) out_of_budget = true;
      const double elapsed = std::chrono::duration<double>(Clock::now() - started).count();
      if (config.time_budget_s > 0 && elapsed >= config.time_budget_s) out_of_budget = true;
      if (out_of_budget) break;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(std::max<std::size_t>(1, seen));
    rec.dev_map = dev ? dev(params) : std::numeric_limits<double>::quiet_NaN();
    rec.seconds = std::chrono::duration<double>(Clock::now() - epoch_start).count();
    result.epochs.push_back(rec);
    if (log) *log << rec.epoch << '\t' << rec.loss << '\t' << rec.dev_map << '\t' << rec.seconds << std::endl;
    spdlog::info("epoch {} loss {:.5f} dev MAP {:.4f} ({:.1f} s)", rec.epoch, rec.loss, rec.dev_map, rec.seconds);

    if (!dev || rec.dev_map > best_dev) {
      best_dev = dev ? rec.dev_map : best_dev;
      result.best = params.clone();
      result.best_epoch = epoch;
    }
  }
  zero_gradients(result.best);
  return result;
}

std::vector<TripleText> sample_triples(const AliasGraph& g, NegativeBank& bank, std::size_t count,
                                       std::uint64_t seed, TripleReport* report) {
  TripleReport rep;
  std::vector<std::uint32_t> usable;
  for (std::uint32_t e = 0; e < g.entity_count(); ++e) {
    if (g.aliases_of(e).size() >= 2) {
      usable.push_back(e);
    } else {
      ++rep.single_alias_entities;
    }
  }
  if (usable.empty()) throw DataError("no entity has two or more aliases");

  std::mt19937_64 rng(seed);
  std::vector<TripleText> out;
  out.reserve(count);
  // Bounded so a graph without any negatives cannot loop forever.
  std::size_t attempts = 0;
  const std::size_t max_attempts = 20 * count + 100;
  while (out.size() < count && attempts++ < max_attempts) {
    const std::uint32_t e = usable[std::uniform_int_distribution<std::size_t>(0, usable.size() - 1)(rng)];
    const auto aliases = g.aliases_of(e);
    const std::size_t qi = std::uniform_int_distribution<std::size_t>(0, aliases.size() - 1)(rng);
    std::size_t pi = std::uniform_int_distribution<std::size_t>(0, aliases.size() - 2)(rng);
    if (pi >= qi) ++pi;
    const std::uint32_t q = aliases[qi], p = aliases[pi];

    const auto& lists = bank.for_query(q);
    std::vector<std::size_t> types;
    for (std::size_t t = 0; t < lists.size(); ++t)
      if (!lists[t].empty()) types.push_back(t);
    if (types.empty()) {
      ++rep.no_negatives;
      continue;
    }
    const auto& list = lists[types[std::uniform_int_distribution<std::size_t>(0, types.size() - 1)(rng)]];
    const std::uint32_t n = list[std::uniform_int_distribution<std::size_t>(0, list.size() - 1)(rng)];
    out.push_back({g.mention(q), g.mention(p), g.mention(n)});
  }
  if (out.size() < count) spdlog::warn("sampled {} of {} requested triples", out.size(), count);
  if (report) *report = rep;
  return out;
}

}  // namespace stance
