#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "stance/aliasdata.hpp"
#include "stance/checkpoint.hpp"
#include "stance/classic.hpp"
#include "stance/coref.hpp"
#include "stance/encoder.hpp"
#include "stance/evalrank.hpp"
#include "stance/gradcheck.hpp"
#include "stance/otalign.hpp"
#include "stance/scorer.hpp"
#include "stance/synth.hpp"
#include "stance/training.hpp"

namespace stance::cli {

namespace fs = std::filesystem;

namespace {

// A flag value that parses but makes no sense.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

// Duplicates everything written to two streams.
class TeeBuf : public std::streambuf {
 public:
  TeeBuf(std::streambuf* a, std::streambuf* b) : a_(a), b_(b) {}

 protected:
  int overflow(int c) override {
    if (c == traits_type::eof()) return traits_type::not_eof(c);
    const auto ch = traits_type::to_char_type(c);
    if (a_->sputc(ch) == traits_type::eof()) return traits_type::eof();
    if (b_ && b_->sputc(ch) == traits_type::eof()) return traits_type::eof();
    return c;
  }
  int sync() override {
    int r = a_->pubsync();
    if (b_ && b_->pubsync() != 0) r = -1;
    return r;
  }

 private:
  std::streambuf* a_;
  std::streambuf* b_;
};

constexpr std::string_view kScorerNames = "stance, without-ot, cnn-linear, lstm-binary, lstm-dot, lev, jw, lcs, sdx";

// Either a classic metric or a trained model, behind one batch interface.
struct Scorer {
  std::optional<classic::Metric> metric;
  std::shared_ptr<const ModelParams> model;

  std::vector<double> batch(const std::string& q, std::span<const std::string> cands) const {
    if (model) return score_batch(q, cands, *model);
    std::vector<double> out;
    out.reserve(cands.size());
    for (const auto& c : cands) out.push_back(classic::similarity(*metric, q, c));
    return out;
  }
  BatchScorer as_batch() const {
    return [self = *this](const std::string& q, std::span<const std::string> c) { return self.batch(q, c); };
  }
};

Scorer make_scorer(const std::string& name, const std::string& model_path) {
  Scorer s;
  if (auto m = classic::parse_metric(name)) {
    s.metric = *m;
    return s;
  }
  auto variant = parse_variant(name);
  if (!variant) throw UsageError("unknown --scorer '" + name + "' (expected one of: " + std::string(kScorerNames) + ")");
  if (model_path.empty()) throw UsageError("--scorer " + name + " needs --model");
  auto params = std::make_shared<ModelParams>(load_checkpoint(fs::path(model_path)));
  if (params->hp.variant != *variant)
    throw CheckpointError("STNC1 checkpoint: " + model_path + " holds variant " +
                          std::string(variant_name(params->hp.variant)) + ", not " + name);
  s.model = std::move(params);
  return s;
}

std::array<double, 3> parse_splits(const std::string& text) {
  std::array<double, 3> r{};
  std::istringstream in(text);
  std::string part;
  std::size_t k = 0;
  while (std::getline(in, part, ',')) {
    if (k == 3) throw UsageError("--splits takes three comma-separated ratios");
    try {
      std::size_t used = 0;
      r[k++] = std::stod(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::logic_error&) {
      throw UsageError("--splits: '" + part + "' is not a number");
    }
  }
  if (k != 3) throw UsageError("--splits takes three comma-separated ratios");
  return r;
}

void print_precise(std::ostream& out, double v) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
}

// ---- synth-corpus ----

struct SynthOpts {
  std::string out;
  SynthConfig config;
  bool no_weights = false;
};

void cmd_synth(const SynthOpts& o, std::ostream&) {
  if (o.config.entities < 3) throw UsageError("--entities must be at least 3");
  auto f = open_out(o.out);
  write_graph(f, synthesize_corpus(o.config), !o.no_weights);
}

// ---- build-dataset ----

struct BuildOpts {
  std::string input, out_dir, splits = "0.8,0.1,0.1";
  std::uint64_t seed = 1;
  std::size_t neg_budget = 1000;
  std::size_t triples = 10000;
  std::size_t dev_queries = 300;
  std::size_t test_queries = 4000;
};

void cmd_build(const BuildOpts& o, std::ostream& out) {
  const auto ratios = parse_splits(o.splits);
  const AliasGraph g = load_graph(o.input);
  DataSplit split;
  try {
    split = split_entities(g, ratios, o.seed);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);

  const AliasGraph train_graph = subgraph(g, split.train);
  NegativeBank bank(train_graph, o.neg_budget, o.seed ^ 0x7452ULL);
  TripleReport trep;
  const auto triples = sample_triples(train_graph, bank, o.triples, o.seed, &trep);
  {
    auto f = open_out(dir / "train.triples.tsv");
    write_triples(f, triples);
  }
  EvalSetReport dev_rep, test_rep;
  const auto dev = build_eval_set(g, split.dev, o.dev_queries, o.neg_budget, o.seed + 1, &dev_rep);
  const auto test = build_eval_set(g, split.test, o.test_queries, o.neg_budget, o.seed + 2, &test_rep);
  {
    auto f = open_out(dir / "dev.eval.tsv");
    write_eval_file(f, dev);
  }
  {
    auto f = open_out(dir / "test.eval.tsv");
    write_eval_file(f, test);
  }
  {
    auto f = open_out(dir / "splits.tsv");
    const std::pair<const char*, const std::vector<std::uint32_t>*> parts[] = {
        {"train", &split.train}, {"dev", &split.dev}, {"test", &split.test}};
    for (const auto& [name, ids] : parts)
      for (std::uint32_t e : *ids) f << g.entity_id(e) << '\t' << name << '\n';
  }
  auto f = open_out(dir / "stats.tsv");
  write_stats(f, g.stats());
  f << "train_entities\t" << split.train.size() << '\n'
    << "dev_entities\t" << split.dev.size() << '\n'
    << "test_entities\t" << split.test.size() << '\n'
    << "train_triples\t" << triples.size() << '\n'
    << "single_alias_entities_skipped\t" << trep.single_alias_entities << '\n'
    << "dev_queries\t" << dev.size() << '\n'
    << "test_queries\t" << test.size() << '\n'
    << "negative_budget\t" << o.neg_budget << '\n';
  out << "wrote " << triples.size() << " triples, " << dev.size() << " dev and " << test.size()
      << " test queries to " << o.out_dir << '\n';
}

// ---- train ----

struct TrainOpts {
  std::string triples, dev, out, log, scorer = "stance";
  std::uint64_t seed = 1;
  TrainConfig config;
  Hyperparams hp;
  std::size_t dev_queries = 0;
};

void cmd_train(TrainOpts o, std::ostream& out) {
  auto variant = parse_variant(o.scorer);
  if (!variant) throw UsageError("train: --scorer must name a learned variant, got '" + o.scorer + "'");
  o.hp.variant = *variant;
  o.config.seed = o.seed;
  try {
    o.hp.validate();
    o.config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  auto tin = open_in(o.triples);
  const auto triples = read_triples(tin, o.triples);
  if (triples.empty()) throw DataError(o.triples + ": no triples");
  std::vector<EvalQuery> dev;
  if (!o.dev.empty()) {
    auto din = open_in(o.dev);
    dev = read_eval_file(din, o.dev);
    if (o.dev_queries > 0 && dev.size() > o.dev_queries) dev.resize(o.dev_queries);
  }

  std::vector<std::string> corpus;
  for (const auto& t : triples) corpus.insert(corpus.end(), {t.q, t.p, t.n});
  for (const auto& q : dev) {
    corpus.push_back(q.query);
    corpus.insert(corpus.end(), q.positives.begin(), q.positives.end());
  }
  ModelParams params = ModelParams::init(o.hp, Vocabulary::build(corpus), o.seed);

  DevMetric metric;
  if (!dev.empty()) {
    metric = [&dev](const ModelParams& p) {
      BatchScorer s = [&p](const std::string& q, std::span<const std::string> c) { return score_batch(q, c, p); };
      return evaluate(dev, s).overall.map;
    };
  }
  std::ofstream log_file;
  if (!o.log.empty()) log_file = open_out(o.log);
  TeeBuf tee(out.rdbuf(), o.log.empty() ? nullptr : log_file.rdbuf());
  std::ostream log(&tee);
  log << "epoch\tloss\tdev_map\tseconds" << std::endl;

  TrainResult r = train(triples, o.config, std::move(params), metric, &log);
  save_checkpoint(fs::path(o.out), r.best);
  out << "saved epoch " << r.best_epoch << " (" << r.steps << " steps) to " << o.out << '\n';
}

// ---- eval ----

struct EvalOpts {
  std::string test, scorer, model, out, per_query;
  unsigned threads = 1;
};

void cmd_eval(const EvalOpts& o, std::ostream& out) {
  const Scorer s = make_scorer(o.scorer, o.model);
  auto in = open_in(o.test);
  const auto queries = read_eval_file(in, o.test);
  const EvalSummary summary = evaluate(queries, s.as_batch(), o.threads);
  if (o.out.empty()) {
    write_summary(out, summary);
  } else {
    auto f = open_out(o.out);
    write_summary(f, summary);
  }
  if (!o.per_query.empty()) {
    auto f = open_out(o.per_query);
    write_per_query(f, summary);
  }
}

// ---- score ----

struct ScoreOpts {
  std::string scorer, model, pairs;
  std::vector<std::string> pair;
};

void cmd_score(const ScoreOpts& o, std::ostream& out) {
  const Scorer s = make_scorer(o.scorer, o.model);
  std::vector<std::pair<std::string, std::string>> pairs;
  if (!o.pairs.empty()) {
    auto in = open_in(o.pairs);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
        throw DataError(o.pairs + ":" + std::to_string(number) + ": expected two tab-separated mentions");
      pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
  }
  if (!o.pair.empty()) {
    if (o.pair.size() != 2) throw UsageError("score: give exactly two mentions or --pairs");
    pairs.emplace_back(o.pair[0], o.pair[1]);
  }
  if (pairs.empty()) throw UsageError("score: give two mentions or --pairs");
  for (const auto& [a, b] : pairs) {
    const std::string one[] = {b};
    print_precise(out, s.batch(a, one)[0]);
    out << '\n';
  }
}

// ---- rank ----

struct RankOpts {
  std::string scorer, model, query, candidates;
  std::size_t top = 0;
};

void cmd_rank(const RankOpts& o, std::ostream& out) {
  const Scorer s = make_scorer(o.scorer, o.model);
  auto in = open_in(o.candidates);
  std::vector<std::string> cands;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) cands.push_back(line);
  }
  if (cands.empty()) throw DataError(o.candidates + ": no candidates");
  const auto scores = s.batch(o.query, cands);
  std::vector<Candidate> list;
  for (std::size_t i = 0; i < cands.size(); ++i) list.push_back({cands[i], scores[i], false});
  const RankingResult r = rank_candidates(o.query, std::move(list));
  const std::size_t n = o.top == 0 ? r.ranked.size() : std::min(o.top, r.ranked.size());
  for (std::size_t i = 0; i < n; ++i) {
    out << (i + 1) << '\t';
    print_precise(out, r.ranked[i].score);
    out << '\t' << r.ranked[i].text << '\n';
  }
}

// ---- cluster ----

struct ClusterOpts {
  std::string mentions, gold, scorer, model, out, tune_mentions, tune_gold;
  std::optional<double> threshold;
  std::size_t grid_points = 101;
};

// Symmetrized pairwise scores: 0.5 * (f(a, b) + f(b, a)).
ScoreMatrix pairwise(const Scorer& s, const std::vector<std::string>& ms) {
  const std::size_t n = ms.size();
  std::vector<std::vector<double>> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = s.batch(ms[i], ms);
  return ScoreMatrix::from(n, [&](std::size_t i, std::size_t j) { return 0.5 * (rows[i][j] + rows[j][i]); });
}

std::pair<std::vector<std::string>, Clustering> read_labeled(const std::string& mentions_path,
                                                             const std::string& gold_path) {
  auto min = open_in(mentions_path);
  auto ms = read_mentions(min, mentions_path);
  if (gold_path.empty()) return {std::move(ms), {}};
  auto gin = open_in(gold_path);
  Clustering gold = read_gold(gin, ms.size(), gold_path);
  return {std::move(ms), std::move(gold)};
}

void print_bcubed(std::ostream& out, const BCubed& b) {
  out << "b3_precision\t" << b.precision << "\nb3_recall\t" << b.recall << "\nb3_f1\t" << b.f1 << '\n';
}

void cmd_cluster(const ClusterOpts& o, std::ostream& out) {
  const Scorer s = make_scorer(o.scorer, o.model);
  if (o.tune_mentions.empty() != o.tune_gold.empty())
    throw UsageError("cluster: --tune-mentions and --tune-gold go together");
  if (o.grid_points == 0) throw UsageError("cluster: --grid-points must be positive");
  auto [ms, gold] = read_labeled(o.mentions, o.gold);
  if (ms.empty()) throw DataError(o.mentions + ": no mentions");

  double threshold = 0.0;
  if (o.threshold) {
    threshold = *o.threshold;
  } else if (!o.tune_mentions.empty()) {
    auto [tm, tg] = read_labeled(o.tune_mentions, o.tune_gold);
    const ScoreMatrix tune_scores = pairwise(s, tm);
    const auto [lo, hi] = tune_scores.range();
    const ThresholdChoice c = tune_threshold(tune_scores, tg, linear_grid(lo, hi, o.grid_points));
    threshold = c.threshold;
    out << "tuned_threshold\t" << threshold << "\ntuning_b3_f1\t" << c.score.f1 << '\n';
  } else {
    throw UsageError("cluster: give --threshold or --tune-mentions with --tune-gold");
  }

  const ScoreMatrix scores = pairwise(s, ms);
  const Clustering predicted = hac_average(scores, threshold);
  if (o.out.empty()) {
    write_clustering(out, predicted);
  } else {
    auto f = open_out(o.out);
    write_clustering(f, predicted);
  }
  const std::size_t clusters =
      predicted.empty() ? 0 : *std::max_element(predicted.begin(), predicted.end()) + 1;
  out << "threshold\t" << threshold << "\nclusters\t" << clusters << '\n';
  if (!gold.empty()) print_bcubed(out, b_cubed(predicted, gold));
}

// ---- gradcheck ----

struct GradOpts {
  Hyperparams hp;
  std::uint64_t seed = 1;
  double eps = 1e-6;
  double tolerance = 1e-3;
  std::string scorer = "stance";
  std::vector<std::string> triple = {"Paul Lieber", "Lieber, Paul", "Paula Stein"};
};

int cmd_gradcheck(GradOpts o, std::ostream& out) {
  auto variant = parse_variant(o.scorer);
  if (!variant) throw UsageError("gradcheck: --scorer must name a learned variant");
  if (o.triple.size() != 3) throw UsageError("gradcheck: --triple takes query, positive and negative");
  o.hp.variant = *variant;
  try {
    o.hp.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto started = std::chrono::steady_clock::now();
  ModelParams p = ModelParams::init(o.hp, Vocabulary::build(o.triple), o.seed);
  // Zero-initialized conv biases put whole padded regions exactly on the
  // relu kink; check at a nearby generic point instead.
  std::mt19937_64 rng(o.seed ^ 0xB1A5ULL);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  for (Tensor& b : p.conv_b)
    if (b.defined())
      for (Real& x : b.mutable_data()) x = static_cast<float>(jitter(rng));

  const TripleText t{o.triple[0], o.triple[1], o.triple[2]};
  auto named = p.named();
  std::vector<Tensor> tensors;
  for (const auto& [name, tensor] : named) tensors.push_back(tensor);
  const GradCheckResult r = grad_check([&] { return triple_loss(t, p); }, tensors, o.eps);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  out << "max_rel_error\t" << r.max_rel_error << '\n'
      << "worst\t" << named[r.worst_param].first << '[' << r.worst_entry << "]\n"
      << "analytic\t" << r.analytic << "\nnumeric\t" << r.numeric << '\n'
      << "entries\t" << r.entries_checked << '\n'
      << "seconds\t" << seconds << '\n';
  const bool ok = r.max_rel_error < o.tolerance;
  out << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kOk : kNumerical;
}

// ---- dump-matrices ----

struct DumpOpts {
  std::string model, a, b, out_dir;
  std::uint64_t seed = 1;
};

void write_csv(const fs::path& path, const Tensor& m) {
  auto f = open_out(path);
  f << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < m.dim(0); ++i) {
    for (std::size_t j = 0; j < m.dim(1); ++j) {
      if (j) f << ',';
      f << m.at(i, j);
    }
    f << '\n';
  }
}

void cmd_dump(const DumpOpts& o, std::ostream& out) {
  ModelParams p;
  if (o.model.empty()) {
    const std::string corpus[] = {o.a, o.b};
    Hyperparams hp;
    hp.max_len = std::max<std::size_t>({16, o.a.size(), o.b.size()});
    p = ModelParams::init(hp, Vocabulary::build(corpus), o.seed);
  } else {
    p = load_checkpoint(fs::path(o.model));
  }
  if (!uses_encoder(p.hp.variant)) throw UsageError("dump-matrices: the model has no character encoder");
  NoGradGuard no_grad;
  const Mention m = Mention::make(o.a, p.vocab, p.hp.max_len);
  const Mention m2 = Mention::make(o.b, p.vocab, p.hp.max_len);
  const SimilarityMatrix s = similarity_matrix(encode(m, p), encode(m2, p));
  SinkhornOptions opt;
  opt.lambda = p.hp.lambda;
  opt.max_iters = p.hp.sinkhorn_iters;
  opt.tol = p.hp.sinkhorn_tol;
  const TransportPlan plan = sinkhorn(cost_from_similarity(s), uniform_marginals(s.rows, s.cols), opt);
  const SimilarityMatrix sp = reweight(s, plan);

  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);
  write_csv(dir / "S.csv", s.valid_block());
  write_csv(dir / "P.csv", plan.values);
  write_csv(dir / "Sprime.csv", sp.valid_block());
  out << "wrote " << s.rows << "x" << s.cols << " grids to " << o.out_dir << '\n';
}

void route_logs_to_stderr() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_logger_mt("stance-cli");
    spdlog::set_default_logger(logger);
  });
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  route_logs_to_stderr();
  CLI::App app{"Learned string similarity for alias detection", "stance"};
  app.require_subcommand(1);

  SynthOpts synth;
  auto* c_synth = app.add_subcommand("synth-corpus", "Generate a synthetic person-name alias corpus");
  c_synth->add_option("--out", synth.out, "Output TSV")->required();
  c_synth->add_option("--entities", synth.config.entities, "Number of entities")->capture_default_str();
  c_synth->add_option("--p-permutation", synth.config.p_permutation, "Chance of a 'Last, First' alias")
      ->capture_default_str();
  c_synth->add_option("--seed", synth.config.seed, "Random seed")->capture_default_str();
  c_synth->add_flag("--no-weights", synth.no_weights, "Omit the weight column");

  BuildOpts build;
  auto* c_build = app.add_subcommand("build-dataset", "Split a corpus and write triples and evaluation files");
  c_build->add_option("--input", build.input, "entity_id<TAB>mention[<TAB>weight] file")->required();
  c_build->add_option("--out-dir", build.out_dir, "Output directory")->required();
  c_build->add_option("--seed", build.seed, "Random seed")->capture_default_str();
  c_build->add_option("--splits", build.splits, "train,dev,test entity ratios")->capture_default_str();
  c_build->add_option("--neg-budget", build.neg_budget, "Cap per negative type and query")->capture_default_str();
  c_build->add_option("--triples", build.triples, "Training triples to draw")->capture_default_str();
  c_build->add_option("--dev-queries", build.dev_queries, "Dev evaluation queries")->capture_default_str();
  c_build->add_option("--test-queries", build.test_queries, "Test evaluation queries")->capture_default_str();

  TrainOpts tr;
  auto* c_train = app.add_subcommand("train", "Train a scorer on triples");
  c_train->add_option("--triples", tr.triples, "Triples file")->required();
  c_train->add_option("--dev", tr.dev, "Dev evaluation file for model selection");
  c_train->add_option("--dev-queries", tr.dev_queries, "Use at most this many dev queries (0 = all)");
  c_train->add_option("--out", tr.out, "Checkpoint path")->required();
  c_train->add_option("--log", tr.log, "Also write the epoch log here");
  c_train->add_option("--scorer", tr.scorer, "Learned variant")->capture_default_str();
  c_train->add_option("--seed", tr.seed, "Random seed")->capture_default_str();
  c_train->add_option("--epochs", tr.config.epochs)->capture_default_str();
  c_train->add_option("--batch", tr.config.batch_size)->capture_default_str();
  c_train->add_option("--lr", tr.config.learning_rate)->capture_default_str();
  c_train->add_option("--clip", tr.config.clip_norm)->capture_default_str();
  c_train->add_option("--max-steps", tr.config.max_steps, "Stop after this many updates (0 = no limit)");
  c_train->add_option("--time-budget", tr.config.time_budget_s, "Stop after this many seconds (0 = no limit)");
  c_train->add_option("--max-len", tr.hp.max_len)->capture_default_str();
  c_train->add_option("--embed", tr.hp.embed_dim)->capture_default_str();
  c_train->add_option("--hidden", tr.hp.hidden, "Per-direction LSTM width")->capture_default_str();
  c_train->add_option("--lambda", tr.hp.lambda, "Entropic regularizer")->capture_default_str();
  c_train->add_option("--sinkhorn-iters", tr.hp.sinkhorn_iters)->capture_default_str();

  EvalOpts ev;
  auto* c_eval = app.add_subcommand("eval", "Rank evaluation candidates and report MAP and Hits@K");
  c_eval->add_option("--test", ev.test, "Evaluation file")->required();
  c_eval->add_option("--scorer", ev.scorer, std::string(kScorerNames))->required();
  c_eval->add_option("--model", ev.model, "Checkpoint for learned scorers");
  c_eval->add_option("--out", ev.out, "Metric TSV (default: stdout)");
  c_eval->add_option("--per-query", ev.per_query, "Per-query JSONL");
  c_eval->add_option("--threads", ev.threads, "Worker threads (0 = all cores)")->capture_default_str();

  ScoreOpts sc;
  auto* c_score = app.add_subcommand("score", "Score mention pairs");
  c_score->add_option("--scorer", sc.scorer, std::string(kScorerNames))->required();
  c_score->add_option("--model", sc.model, "Checkpoint for learned scorers");
  c_score->add_option("--pairs", sc.pairs, "File of a<TAB>b lines");
  c_score->add_option("pair", sc.pair, "Two mentions");

  RankOpts rk;
  auto* c_rank = app.add_subcommand("rank", "Rank candidates for one query");
  c_rank->add_option("--scorer", rk.scorer, std::string(kScorerNames))->required();
  c_rank->add_option("--model", rk.model, "Checkpoint for learned scorers");
  c_rank->add_option("--query", rk.query)->required();
  c_rank->add_option("--candidates", rk.candidates, "One candidate per line")->required();
  c_rank->add_option("--top", rk.top, "Print only the first K (0 = all)");

  ClusterOpts cl;
  auto* c_cluster = app.add_subcommand("cluster", "Average-linkage clustering of mentions");
  c_cluster->add_option("--mentions", cl.mentions, "One mention per line; ids are line numbers")->required();
  c_cluster->add_option("--gold", cl.gold, "mention_id<TAB>entity_id, for B-cubed");
  c_cluster->add_option("--scorer", cl.scorer, std::string(kScorerNames))->required();
  c_cluster->add_option("--model", cl.model, "Checkpoint for learned scorers");
  c_cluster->add_option("--threshold", cl.threshold, "Stop merging below this linkage");
  c_cluster->add_option("--tune-mentions", cl.tune_mentions, "Held-out mentions for threshold tuning");
  c_cluster->add_option("--tune-gold", cl.tune_gold, "Gold clusters of the tuning mentions");
  c_cluster->add_option("--grid-points", cl.grid_points, "Thresholds tried when tuning")->capture_default_str();
  c_cluster->add_option("--out", cl.out, "Clustering output (default: stdout)");

  GradOpts gc;
  gc.hp.max_len = 16;
  gc.hp.embed_dim = 8;
  gc.hp.hidden = 4;
  gc.hp.lambda = 10.0;
  gc.hp.sinkhorn_iters = 20;
  auto* c_grad = app.add_subcommand("gradcheck", "Compare backprop gradients with central differences");
  c_grad->add_option("--scorer", gc.scorer, "Learned variant")->capture_default_str();
  c_grad->add_option("--max-len", gc.hp.max_len)->capture_default_str();
  c_grad->add_option("--embed", gc.hp.embed_dim)->capture_default_str();
  c_grad->add_option("--hidden", gc.hp.hidden, "Per-direction LSTM width")->capture_default_str();
  c_grad->add_option("--lambda", gc.hp.lambda)->capture_default_str();
  c_grad->add_option("--sinkhorn-iters", gc.hp.sinkhorn_iters)->capture_default_str();
  c_grad->add_option("--eps", gc.eps, "Finite-difference step")->capture_default_str();
  c_grad->add_option("--tolerance", gc.tolerance)->capture_default_str();
  c_grad->add_option("--seed", gc.seed)->capture_default_str();
  c_grad->add_option("--triple", gc.triple, "Query, positive and negative")->expected(3);

  DumpOpts dm;
  auto* c_dump = app.add_subcommand("dump-matrices", "Write S, P and S' of a pair as CSV grids");
  c_dump->add_option("--model", dm.model, "Checkpoint (default: a fresh model)");
  c_dump->add_option("--a", dm.a)->required();
  c_dump->add_option("--b", dm.b)->required();
  c_dump->add_option("--out-dir", dm.out_dir)->required();
  c_dump->add_option("--seed", dm.seed, "Initialization seed for a fresh model")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (app.exit(e, out, err) == 0) return kOk;
    return kUsage;
  }

  try {
    if (c_synth->parsed()) cmd_synth(synth, out);
    if (c_build->parsed()) cmd_build(build, out);
    if (c_train->parsed()) cmd_train(tr, out);
    if (c_eval->parsed()) cmd_eval(ev, out);
    if (c_score->parsed()) cmd_score(sc, out);
    if (c_rank->parsed()) cmd_rank(rk, out);
    if (c_cluster->parsed()) cmd_cluster(cl, out);
    if (c_grad->parsed()) return cmd_gradcheck(gc, out);
    if (c_dump->parsed()) cmd_dump(dm, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const DomainError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}

}  // namespace stance::cli
