#include "stance/aliasdata.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "stance/classic.hpp"
#include "stance/utf8.hpp"

namespace stance {

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (a + 1) + 0xbf58476d1ce4e5b9ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Efraimidis-Spirakis: the `k` items with the largest log(u)/w keys form a
// weighted sample without replacement. Returns them ordered by key.
std::vector<std::uint32_t> weighted_order(std::span<const std::uint32_t> items,
                                          const std::vector<double>& weights, std::size_t k,
                                          std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<double, std::uint32_t>> keyed;
  keyed.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const double u = std::max(unit(rng), 1e-300);
    if (weights[i] > 0.0) keyed.emplace_back(std::log(u) / weights[i], items[i]);
  }
  k = std::min(k, keyed.size());
  std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(k), keyed.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
  std::vector<std::uint32_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(keyed[i].second);
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw DataError(source + ":" + std::to_string(line) + ": " + what);
}

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

void deletion_variants(const std::u32string& s, std::size_t depth, std::unordered_set<std::u32string>& out) {
  if (!out.insert(s).second || depth == 0) return;
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::u32string shorter = s;
    shorter.erase(i, 1);
    deletion_variants(shorter, depth - 1, out);
  }
}

}  // namespace

// ---------------------------------------------------------------- graph

void AliasGraph::add(std::string_view entity, std::string_view mention, std::optional<double> weight) {
  if (weight && !(std::isfinite(*weight) && *weight >= 0.0))
    throw std::invalid_argument("entity weight must be finite and nonnegative");
  auto [eit, new_entity] = entity_index_.try_emplace(std::string(entity), static_cast<std::uint32_t>(entity_ids_.size()));
  if (new_entity) {
    entity_ids_.emplace_back(entity);
    entity_weights_.emplace_back();
    entity_mentions_.emplace_back();
  }
  const std::uint32_t e = eit->second;
  if (weight) entity_weights_[e] = std::max(entity_weights_[e].value_or(0.0), *weight);

  auto [mit, new_mention] = mention_lookup_.try_emplace(std::string(mention), static_cast<std::uint32_t>(mentions_.size()));
  if (new_mention) {
    mentions_.emplace_back(mention);
    mention_entities_.emplace_back();
  }
  const std::uint32_t m = mit->second;
  auto& ents = mention_entities_[m];
  if (std::find(ents.begin(), ents.end(), e) != ents.end()) return;
  ents.push_back(e);
  entity_mentions_[e].push_back(m);
  ++edges_;
}

double AliasGraph::entity_weight(std::uint32_t e) const { return entity_weights_.at(e).value_or(1.0); }

double AliasGraph::mention_weight(std::uint32_t m) const {
  double w = 0.0;
  for (std::uint32_t e : entities_of(m)) w = std::max(w, entity_weight(e));
  return w;
}

std::optional<std::uint32_t> AliasGraph::find_mention(std::string_view text) const {
  auto it = mention_lookup_.find(std::string(text));
  if (it == mention_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint32_t> AliasGraph::find_entity(std::string_view id) const {
  auto it = entity_index_.find(std::string(id));
  if (it == entity_index_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t AliasGraph::mention_index(std::string_view text) const {
  auto m = find_mention(text);
  if (!m) throw std::out_of_range("mention not in graph: " + std::string(text));
  return *m;
}

bool AliasGraph::co_aliased(std::uint32_t a, std::uint32_t b) const {
  for (std::uint32_t e : entities_of(a)) {
    auto ms = aliases_of(e);
    if (std::find(ms.begin(), ms.end(), b) != ms.end()) return true;
  }
  return false;
}

std::vector<std::uint32_t> AliasGraph::true_aliases(std::uint32_t m) const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t e : entities_of(m))
    for (std::uint32_t other : aliases_of(e))
      if (other != m) out.push_back(other);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

GraphStats AliasGraph::stats() const {
  GraphStats s;
  s.entities = entity_count();
  s.mentions = mention_count();
  s.edges = edges_;
  if (s.entities == 0) return s;
  double sum = 0.0, sq = 0.0;
  for (const auto& ms : entity_mentions_) {
    sum += static_cast<double>(ms.size());
    sq += static_cast<double>(ms.size()) * static_cast<double>(ms.size());
  }
  const double n = static_cast<double>(s.entities);
  s.mentions_per_entity_mean = sum / n;
  s.mentions_per_entity_sd = std::sqrt(std::max(0.0, sq / n - s.mentions_per_entity_mean * s.mentions_per_entity_mean));
  return s;
}

AliasGraph read_graph(std::istream& in, const std::string& source) {
  AliasGraph g;
  std::string line;
  std::size_t number = 0;
  while (next_line(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto fields = split_tabs(line);
    if (fields.size() < 2 || fields.size() > 3) fail(source, number, "expected 2 or 3 tab-separated fields");
    if (fields[0].empty()) fail(source, number, "empty entity id");
    if (fields[1].empty()) fail(source, number, "empty mention");
    std::optional<double> weight;
    if (fields.size() == 3) {
      try {
        std::size_t used = 0;
        weight = std::stod(fields[2], &used);
        if (used != fields[2].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        fail(source, number, "weight is not a number: '" + fields[2] + "'");
      }
      if (!std::isfinite(*weight) || *weight < 0.0) fail(source, number, "weight must be finite and nonnegative");
    }
    g.add(fields[0], fields[1], weight);
  }
  return g;
}

AliasGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_graph(in, path.string());
}

DataSplit split_entities(const AliasGraph& g, std::array<double, 3> ratios, std::uint64_t seed) {
  double total = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0)) throw std::invalid_argument("split ratios must be nonnegative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");
  const std::size_t n = g.entity_count();
  if (n < ratios.size()) throw std::invalid_argument("fewer entities than splits");

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto cut1 = static_cast<std::size_t>(std::llround(n * ratios[0]));
  const auto cut2 = std::max(cut1, std::min(n, static_cast<std::size_t>(std::llround(n * (ratios[0] + ratios[1])))));
  DataSplit s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut1));
  s.dev.assign(order.begin() + static_cast<std::ptrdiff_t>(cut1), order.begin() + static_cast<std::ptrdiff_t>(cut2));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(cut2), order.end());
  return s;
}

AliasGraph subgraph(const AliasGraph& g, std::span<const std::uint32_t> entities) {
  AliasGraph out;
  for (std::uint32_t e : entities) {
    const double w = g.entity_weight(e);
    for (std::uint32_t m : g.aliases_of(e)) out.add(g.entity_id(e), g.mention(m), w);
  }
  return out;
}

std::vector<std::optional<std::size_t>> hop_distances(const AliasGraph& g, std::uint32_t from) {
  std::vector<std::optional<std::size_t>> mention_dist(g.mention_count());
  std::vector<bool> entity_seen(g.entity_count(), false);
  std::deque<std::uint32_t> frontier{from};
  mention_dist.at(from) = 0;
  while (!frontier.empty()) {
    const std::uint32_t m = frontier.front();
    frontier.pop_front();
    const std::size_t d = *mention_dist[m];
    for (std::uint32_t e : g.entities_of(m)) {
      if (entity_seen[e]) continue;
      entity_seen[e] = true;
      for (std::uint32_t next : g.aliases_of(e)) {
        if (mention_dist[next]) continue;
        mention_dist[next] = d + 2;
        frontier.push_back(next);
      }
    }
  }
  return mention_dist;
}

std::optional<std::size_t> hop_distance(const AliasGraph& g, std::string_view a, std::string_view b) {
  const std::uint32_t ia = g.mention_index(a), ib = g.mention_index(b);
  return hop_distances(g, ia)[ib];
}

// ---------------------------------------------------------------- negatives

std::string_view negative_type_name(NegativeType t) {
  switch (t) {
    case NegativeType::kEdit: return "EDIT";
    case NegativeType::kOverlap: return "OVERLAP";
    case NegativeType::kHop4: return "HOP4";
    case NegativeType::kHop6: return "HOP6";
    case NegativeType::kRandom: return "RANDOM";
  }
  return "?";
}

std::optional<NegativeType> parse_negative_type(std::string_view name) {
  for (NegativeType t : kNegativeTypes)
    if (negative_type_name(t) == name) return t;
  return std::nullopt;
}

std::optional<std::u32string> word_prefix_key(std::u32string_view text) {
  auto toks = utf8::tokens(text);
  if (toks.empty() || toks.front().size() < 4) return std::nullopt;
  return toks.front().substr(0, 4);
}

std::optional<std::u32string> word_suffix_key(std::u32string_view text) {
  auto toks = utf8::tokens(text);
  if (toks.empty() || toks.back().size() < 4) return std::nullopt;
  return toks.back().substr(toks.back().size() - 4);
}

NegativeSampler::NegativeSampler(const AliasGraph& g) : graph_(&g) {
  decoded_.reserve(g.mention_count());
  for (std::uint32_t m = 0; m < g.mention_count(); ++m) {
    decoded_.push_back(utf8::decode(g.mention(m)));
    std::unordered_set<std::u32string> variants;
    deletion_variants(decoded_.back(), 2, variants);
    for (const auto& v : variants) deletions_[v].push_back(m);
    if (auto k = word_prefix_key(decoded_.back())) prefixes_[*k].push_back(m);
    if (auto k = word_suffix_key(decoded_.back())) suffixes_[*k].push_back(m);
  }
  double total = 0.0;
  for (std::uint32_t e = 0; e < g.entity_count(); ++e) {
    total += g.entity_weight(e);
    entity_cdf_.push_back(total);
  }
}

std::vector<std::uint32_t> NegativeSampler::candidates(std::uint32_t q, NegativeType type) const {
  const AliasGraph& g = *graph_;
  std::vector<std::uint32_t> out;
  switch (type) {
    case NegativeType::kEdit: {
      std::unordered_set<std::u32string> variants;
      deletion_variants(decoded_.at(q), 2, variants);
      for (const auto& v : variants) {
        auto it = deletions_.find(v);
        if (it == deletions_.end()) continue;
        out.insert(out.end(), it->second.begin(), it->second.end());
      }
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
      std::erase_if(out, [&](std::uint32_t m) {
        const std::size_t d = classic::levenshtein(decoded_[q], decoded_[m]);
        return d < 1 || d > 2;
      });
      break;
    }
    case NegativeType::kOverlap: {
      if (auto k = word_prefix_key(decoded_.at(q))) {
        const auto& hit = prefixes_.at(*k);
        out.insert(out.end(), hit.begin(), hit.end());
      }
      if (auto k = word_suffix_key(decoded_.at(q))) {
        const auto& hit = suffixes_.at(*k);
        out.insert(out.end(), hit.begin(), hit.end());
      }
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
      break;
    }
    case NegativeType::kHop4:
    case NegativeType::kHop6: {
      const std::size_t want = type == NegativeType::kHop4 ? 4 : 6;
      auto dist = hop_distances(g, q);
      for (std::uint32_t m = 0; m < dist.size(); ++m)
        if (dist[m] == want) out.push_back(m);
      break;
    }
    case NegativeType::kRandom: {
      out.resize(g.mention_count());
      std::iota(out.begin(), out.end(), 0u);
      break;
    }
  }
  std::erase_if(out, [&](std::uint32_t m) { return m == q || g.co_aliased(q, m); });
  return out;
}

std::vector<std::uint32_t> NegativeSampler::generate(std::uint32_t q, NegativeType type, std::size_t budget,
                                                     std::uint64_t seed) const {
  const AliasGraph& g = *graph_;
  std::mt19937_64 rng(mix(seed, q, static_cast<std::uint64_t>(type)));
  std::vector<std::uint32_t> out;
  if (budget == 0) return out;

  if (type == NegativeType::kRandom) {
    if (entity_cdf_.empty() || !(entity_cdf_.back() > 0.0)) return out;
    std::uniform_real_distribution<double> pick(0.0, entity_cdf_.back());
    std::set<std::uint32_t> chosen;
    const std::size_t attempts = 50 * budget + 100;
    for (std::size_t a = 0; a < attempts && chosen.size() < budget; ++a) {
      auto it = std::upper_bound(entity_cdf_.begin(), entity_cdf_.end(), pick(rng));
      if (it == entity_cdf_.end()) --it;
      const auto e = static_cast<std::uint32_t>(it - entity_cdf_.begin());
      auto ms = g.aliases_of(e);
      if (ms.empty()) continue;
      const std::uint32_t m = ms[std::uniform_int_distribution<std::size_t>(0, ms.size() - 1)(rng)];
      if (m == q || g.co_aliased(q, m)) continue;
      chosen.insert(m);
    }
    return {chosen.begin(), chosen.end()};
  }

  out = candidates(q, type);
  if (out.size() <= budget) return out;
  std::vector<double> weights;
  weights.reserve(out.size());
  for (std::uint32_t m : out) weights.push_back(g.mention_weight(m));
  out = weighted_order(out, weights, budget, rng);
  std::sort(out.begin(), out.end());
  return out;
}

NegativeBank::NegativeBank(const AliasGraph& g, std::size_t budget, std::uint64_t seed)
    : sampler_(g), budget_(budget), seed_(seed) {}

const std::array<std::vector<std::uint32_t>, 5>& NegativeBank::for_query(std::uint32_t q) {
  auto it = cache_.find(q);
  if (it != cache_.end()) return it->second;
  std::array<std::vector<std::uint32_t>, 5> lists;
  for (std::size_t t = 0; t < kNegativeTypes.size(); ++t)
    lists[t] = sampler_.generate(q, kNegativeTypes[t], budget_, seed_);
  return cache_.emplace(q, std::move(lists)).first->second;
}

// ---------------------------------------------------------------- eval sets

std::vector<EvalQuery> build_eval_set(const AliasGraph& g, std::span<const std::uint32_t> entities,
                                      std::size_t n_queries, std::size_t budget, std::uint64_t seed,
                                      EvalSetReport* report) {
  if (entities.empty()) throw std::invalid_argument("build_eval_set: empty split");
  const AliasGraph sub = subgraph(g, entities);
  const NegativeSampler sampler(sub);

  // Probability of a mention under "entity by weight, then a uniform alias".
  std::vector<std::uint32_t> pool(sub.mention_count());
  std::iota(pool.begin(), pool.end(), 0u);
  std::vector<double> weights(pool.size(), 0.0);
  for (std::uint32_t e = 0; e < sub.entity_count(); ++e) {
    auto ms = sub.aliases_of(e);
    for (std::uint32_t m : ms) weights[m] += sub.entity_weight(e) / static_cast<double>(ms.size());
  }
  std::mt19937_64 rng(mix(seed, 0x51));
  const std::vector<std::uint32_t> order = weighted_order(pool, weights, pool.size(), rng);

  EvalSetReport r;
  r.requested = n_queries;
  std::vector<EvalQuery> out;
  for (std::uint32_t q : order) {
    if (out.size() >= n_queries) break;
    const std::vector<std::uint32_t> positives = sub.true_aliases(q);
    if (positives.empty()) {
      ++r.skipped_no_positives;
      continue;
    }
    EvalQuery eq;
    eq.query = sub.mention(q);
    for (std::uint32_t p : positives) eq.positives.push_back(sub.mention(p));
    const std::uint32_t q_full = g.mention_index(eq.query);
    for (std::size_t t = 0; t < kNegativeTypes.size(); ++t) {
      for (std::uint32_t n : sampler.generate(q, kNegativeTypes[t], budget, seed)) {
        const std::uint32_t n_full = g.mention_index(sub.mention(n));
        if (!g.co_aliased(q_full, n_full)) eq.negatives[t].push_back(sub.mention(n));
      }
    }
    out.push_back(std::move(eq));
  }
  r.emitted = out.size();
  if (report) *report = r;
  return out;
}

void write_eval_file(std::ostream& out, std::span<const EvalQuery> queries) {
  for (const EvalQuery& q : queries) {
    for (const std::string& p : q.positives) out << q.query << '\t' << p << "\t1\tPOS\n";
    for (std::size_t t = 0; t < kNegativeTypes.size(); ++t)
      for (const std::string& n : q.negatives[t])
        out << q.query << '\t' << n << "\t0\t" << negative_type_name(kNegativeTypes[t]) << '\n';
  }
}

std::vector<EvalQuery> read_eval_file(std::istream& in, const std::string& source) {
  std::vector<EvalQuery> out;
  std::unordered_map<std::string, std::size_t> index;
  std::string line;
  std::size_t number = 0;
  while (next_line(in, line)) {
    ++number;
    if (line.empty()) continue;
    auto f = split_tabs(line);
    if (f.size() != 4) fail(source, number, "expected query, candidate, label, type");
    if (f[0].empty() || f[1].empty()) fail(source, number, "empty mention");
    auto [it, fresh] = index.try_emplace(f[0], out.size());
    if (fresh) out.push_back(EvalQuery{f[0], {}, {}});
    EvalQuery& q = out[it->second];
    if (f[2] == "1") {
      if (f[3] != "POS") fail(source, number, "positive rows must have type POS");
      q.positives.push_back(f[1]);
    } else if (f[2] == "0") {
      auto t = parse_negative_type(f[3]);
      if (!t) fail(source, number, "unknown negative type '" + f[3] + "'");
      q.negatives[static_cast<std::size_t>(*t)].push_back(f[1]);
    } else {
      fail(source, number, "label must be 0 or 1");
    }
  }
  return out;
}

void write_triples(std::ostream& out, std::span<const TripleText> triples) {
  for (const TripleText& t : triples) out << t.q << '\t' << t.p << '\t' << t.n << '\n';
}

std::vector<TripleText> read_triples(std::istream& in, const std::string& source) {
  std::vector<TripleText> out;
  std::string line;
  std::size_t number = 0;
  while (next_line(in, line)) {
    ++number;
    if (line.empty()) continue;
    auto f = split_tabs(line);
    if (f.size() != 3 || f[0].empty() || f[1].empty() || f[2].empty())
      fail(source, number, "expected three nonempty tab-separated mentions");
    out.push_back({f[0], f[1], f[2]});
  }
  return out;
}

void write_stats(std::ostream& out, const GraphStats& s) {
  std::ostringstream ms;
  ms.setf(std::ios::fixed);
  ms.precision(2);
  ms << s.mentions_per_entity_mean << " +/- " << s.mentions_per_entity_sd;
  out << "unique_strings\t" << s.mentions << '\n'
      << "entities\t" << s.entities << '\n'
      << "edges\t" << s.edges << '\n'
      << "mentions_per_entity\t" << ms.str() << '\n';
}

}  // namespace stance
