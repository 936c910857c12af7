#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "stance/aliasdata.hpp"
#include "stance/model.hpp"
#include "stance/tensor.hpp"

namespace stance {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 5.0;  // global gradient norm; 0 disables clipping
  std::uint64_t seed = 1;
  std::size_t max_steps = 0;     // 0 = no limit
  double time_budget_s = 0.0;    // 0 = no limit; checked between batches

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// -ln sigmoid(s_pos - s_neg), with sigmoid clamped at 1e-12 before the log.
Tensor bpr_loss(const Tensor& s_pos, const Tensor& s_neg);

// Adaptive moment estimation with bias correction. Parameters are rounded
// to float after every step so the checkpoint format loses nothing.
class Adam {
 public:
  Adam(const ModelParams& params, const TrainConfig& config);

  // Applies one update from the gradients currently stored in `params`.
  void step(ModelParams& params);
  std::size_t steps() const { return t_; }

 private:
  TrainConfig config_;
  std::size_t t_ = 0;
  std::vector<std::vector<Real>> m_, v_;
};

// Rescales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_gradients(ModelParams& params, double max_norm);
void zero_gradients(ModelParams& params);

// Mean BPR loss over the triples without building a graph.
double mean_loss(std::span<const TripleText> triples, const ModelParams& params);

// Loss of one triple as a differentiable scalar.
Tensor triple_loss(const TripleText& t, const ModelParams& params);

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double dev_map = 0.0;  // NaN without a dev metric
  double seconds = 0.0;
};

struct TrainResult {
  ModelParams best;  // parameters at the best dev MAP (last epoch without one)
  std::vector<EpochRecord> epochs;
  std::size_t steps = 0;
  std::size_t best_epoch = 0;
};

using DevMetric = std::function<double(const ModelParams&)>;

// Minibatch training on mean BPR loss. Each epoch visits the triples in a
// seeded shuffle. One tab-separated line per epoch (epoch, loss, dev MAP,
// seconds) goes to `log` when given. A non-finite loss throws NumericalError
// naming the triple.
TrainResult train(std::span<const TripleText> triples, const TrainConfig& config, ModelParams params,
                  const DevMetric& dev = {}, std::ostream* log = nullptr);

struct TripleReport {
  std::size_t single_alias_entities = 0;  // contribute no positives
  std::size_t no_negatives = 0;           // draws dropped for lack of negatives
};

// Draws `count` triples: an entity with at least two aliases uniformly, two
// distinct aliases as (q, p), a negative type uniformly among the types with
// candidates for q, then a negative uniformly from that list.
std::vector<TripleText> sample_triples(const AliasGraph& g, NegativeBank& bank, std::size_t count,
                                       std::uint64_t seed, TripleReport* report = nullptr);

}  // namespace stance
