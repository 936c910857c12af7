#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace stance {

// Malformed input data. Messages carry file and line context when known.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GraphStats {
  std::size_t entities = 0;
  std::size_t mentions = 0;  // unique strings
  std::size_t edges = 0;
  double mentions_per_entity_mean = 0.0;
  double mentions_per_entity_sd = 0.0;  // population
};

// Bipartite mention/entity graph. An edge says the mention is an alias of
// the entity. Mentions and entities are addressed by dense indices in
// insertion order.
class AliasGraph {
 public:
  // Adds an edge; duplicates are ignored. An entity's weight is the largest
  // weight supplied on any of its lines, or 1 when none is.
  void add(std::string_view entity, std::string_view mention, std::optional<double> weight = {});

  std::size_t entity_count() const { return entity_ids_.size(); }
  std::size_t mention_count() const { return mentions_.size(); }
  std::size_t edge_count() const { return edges_; }

  const std::string& entity_id(std::uint32_t e) const { return entity_ids_.at(e); }
  const std::string& mention(std::uint32_t m) const { return mentions_.at(m); }
  double entity_weight(std::uint32_t e) const;
  // Largest weight among the mention's entities.
  double mention_weight(std::uint32_t m) const;

  std::span<const std::uint32_t> aliases_of(std::uint32_t entity) const { return entity_mentions_.at(entity); }
  std::span<const std::uint32_t> entities_of(std::uint32_t mention) const { return mention_entities_.at(mention); }

  std::optional<std::uint32_t> find_mention(std::string_view text) const;
  std::optional<std::uint32_t> find_entity(std::string_view id) const;
  // Index lookup that throws std::out_of_range for unknown strings.
  std::uint32_t mention_index(std::string_view text) const;

  // True when the two mentions share at least one entity.
  bool co_aliased(std::uint32_t a, std::uint32_t b) const;
  // Every mention sharing an entity with m, excluding m, ascending.
  std::vector<std::uint32_t> true_aliases(std::uint32_t m) const;

  GraphStats stats() const;

 private:
  std::vector<std::string> entity_ids_;
  std::vector<std::optional<double>> entity_weights_;
  std::vector<std::string> mentions_;
  std::vector<std::vector<std::uint32_t>> entity_mentions_;
  std::vector<std::vector<std::uint32_t>> mention_entities_;
  std::unordered_map<std::string, std::uint32_t> entity_index_;
  std::unordered_map<std::string, std::uint32_t> mention_lookup_;
  std::size_t edges_ = 0;
};

// Parses `entity_id \t mention [\t weight]` lines. Blank lines are skipped.
// Throws DataError naming the source and line for malformed input.
AliasGraph read_graph(std::istream& in, const std::string& source = "<stream>");
AliasGraph load_graph(const std::filesystem::path& path);

struct DataSplit {
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> dev;
  std::vector<std::uint32_t> test;
};

// Seeded shuffle of entity indices cut at round(n * cumulative ratio).
// Throws std::invalid_argument unless the ratios are nonnegative and sum to
// 1, or when there are fewer entities than splits.
DataSplit split_entities(const AliasGraph& g, std::array<double, 3> ratios, std::uint64_t seed);

// The graph restricted to the given entities and their mentions.
AliasGraph subgraph(const AliasGraph& g, std::span<const std::uint32_t> entities);

// Shortest path length between two mentions; nullopt when disconnected.
// Always even. Throws std::out_of_range for unknown mentions.
std::optional<std::size_t> hop_distance(const AliasGraph& g, std::string_view a, std::string_view b);
// Distances from one mention to every mention (nullopt = unreachable).
std::vector<std::optional<std::size_t>> hop_distances(const AliasGraph& g, std::uint32_t from);

enum class NegativeType { kEdit, kOverlap, kHop4, kHop6, kRandom };
inline constexpr std::array<NegativeType, 5> kNegativeTypes = {
    NegativeType::kEdit, NegativeType::kOverlap, NegativeType::kHop4, NegativeType::kHop6,
    NegativeType::kRandom};

std::string_view negative_type_name(NegativeType t);
std::optional<NegativeType> parse_negative_type(std::string_view name);

// Token-level overlap keys: the first four characters of the first token
// and the last four of the last token. Tokens shorter than four characters
// give no key.
std::optional<std::u32string> word_prefix_key(std::u32string_view text);
std::optional<std::u32string> word_suffix_key(std::u32string_view text);

// Candidate generation for the five heuristics over one graph. Builds a
// deletion-neighborhood index (edit distance <= 2) and overlap key indexes
// up front; the graph must outlive the sampler.
class NegativeSampler {
 public:
  explicit NegativeSampler(const AliasGraph& g);

  const AliasGraph& graph() const { return *graph_; }

  // Every qualifying mention for the type, ascending, with q and its true
  // aliases removed. kRandom returns all non-aliases.
  std::vector<std::uint32_t> candidates(std::uint32_t q, NegativeType type) const;

  // At most `budget` negatives. Deterministic in (q, type, seed). When more
  // candidates exist than the budget, a weighted sample without replacement
  // by mention weight is taken. kRandom draws an entity by weight, then one
  // of its aliases uniformly. Result is ascending.
  std::vector<std::uint32_t> generate(std::uint32_t q, NegativeType type, std::size_t budget,
                                      std::uint64_t seed) const;

 private:
  const AliasGraph* graph_;
  std::vector<std::u32string> decoded_;
  std::unordered_map<std::u32string, std::vector<std::uint32_t>> deletions_;
  std::unordered_map<std::u32string, std::vector<std::uint32_t>> prefixes_;
  std::unordered_map<std::u32string, std::vector<std::uint32_t>> suffixes_;
  std::vector<double> entity_cdf_;
};

// Per-query negatives by type, computed on first use and cached. Not safe
// for concurrent use.
class NegativeBank {
 public:
  NegativeBank(const AliasGraph& g, std::size_t budget, std::uint64_t seed);

  const std::array<std::vector<std::uint32_t>, 5>& for_query(std::uint32_t q);
  const AliasGraph& graph() const { return sampler_.graph(); }
  std::size_t budget() const { return budget_; }

 private:
  NegativeSampler sampler_;
  std::size_t budget_;
  std::uint64_t seed_;
  std::unordered_map<std::uint32_t, std::array<std::vector<std::uint32_t>, 5>> cache_;
};

struct EvalQuery {
  std::string query;
  std::vector<std::string> positives;
  // One list per NegativeType, in kNegativeTypes order. A mention may
  // qualify under several types.
  std::array<std::vector<std::string>, 5> negatives;
};

struct EvalSetReport {
  std::size_t requested = 0;
  std::size_t emitted = 0;
  std::size_t skipped_no_positives = 0;
};

// Samples up to n_queries distinct queries (entity by weight, then a
// uniform alias) from the given entities. Candidates come from the graph
// restricted to those entities; negatives exclude every alias of the query
// in the full graph.
std::vector<EvalQuery> build_eval_set(const AliasGraph& g, std::span<const std::uint32_t> entities,
                                      std::size_t n_queries, std::size_t budget, std::uint64_t seed,
                                      EvalSetReport* report = nullptr);

// `query \t candidate \t label \t type` lines; positives carry type POS.
void write_eval_file(std::ostream& out, std::span<const EvalQuery> queries);
std::vector<EvalQuery> read_eval_file(std::istream& in, const std::string& source = "<stream>");

struct TripleText {
  std::string q, p, n;
  bool operator==(const TripleText&) const = default;
};
void write_triples(std::ostream& out, std::span<const TripleText> triples);
std::vector<TripleText> read_triples(std::istream& in, const std::string& source = "<stream>");

// `name \t value` rows for each GraphStats field.
void write_stats(std::ostream& out, const GraphStats& s);

}  // namespace stance
