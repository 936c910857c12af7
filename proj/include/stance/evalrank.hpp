#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "stance/aliasdata.hpp"

namespace stance {

struct Candidate {
  std::string text;
  double score = 0.0;
  bool relevant = false;
};

// Candidates ordered by descending score, ties by ascending text.
struct RankingResult {
  std::string query;
  std::vector<Candidate> ranked;
};

RankingResult rank_candidates(std::string query, std::vector<Candidate> candidates);

// Mean precision at the ranks of relevant candidates. Throws
// std::invalid_argument when nothing is relevant.
double average_precision(const RankingResult& r);
// 1 when a relevant candidate sits in the top k, else 0. k >= 1.
int hits_at_k(const RankingResult& r, std::size_t k);

// Scores every candidate against one query.
using BatchScorer =
    std::function<std::vector<double>(const std::string& query, std::span<const std::string> candidates)>;

struct RankMetrics {
  std::size_t queries = 0;
  double map = 0.0;
  double hits1 = 0.0;
  double hits10 = 0.0;
  double hits50 = 0.0;
};

struct QueryOutcome {
  std::string query;
  double ap = 0.0;
  int hits1 = 0, hits10 = 0, hits50 = 0;
  std::size_t candidates = 0;
};

struct EvalSummary {
  RankMetrics overall;
  // Positives against one negative type only; queries with no negatives of
  // that type are left out of its row.
  std::array<RankMetrics, 5> by_type;
  std::size_t skipped = 0;  // queries without positives
  std::vector<QueryOutcome> per_query;
};

// Ranks positives plus the de-duplicated union of all negatives for each
// query. Queries are scored on `threads` workers (0 = hardware
// concurrency); the scorer must then be safe to call concurrently.
EvalSummary evaluate(std::span<const EvalQuery> queries, const BatchScorer& scorer, unsigned threads = 1);

// `metric \t value` rows, then `type \t metric \t value` rows per type.
void write_summary(std::ostream& out, const EvalSummary& s);
// One JSON object per query.
void write_per_query(std::ostream& out, const EvalSummary& s);

}  // namespace stance
