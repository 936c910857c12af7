#include "stance/evalrank.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace stance {

RankingResult rank_candidates(std::string query, std::vector<Candidate> candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.text < b.text;
  });
  return {std::move(query), std::move(candidates)};
}

double average_precision(const RankingResult& r) {
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < r.ranked.size(); ++i) {
    if (!r.ranked[i].relevant) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  if (hits == 0) throw std::invalid_argument("average_precision: no relevant candidate for '" + r.query + "'");
  return sum / static_cast<double>(hits);
}

int hits_at_k(const RankingResult& r, std::size_t k) {
  if (k == 0) throw std::invalid_argument("hits_at_k: k must be at least 1");
  const std::size_t n = std::min(k, r.ranked.size());
  for (std::size_t i = 0; i < n; ++i)
    if (r.ranked[i].relevant) return 1;
  return 0;
}

namespace {

struct Accumulator {
  double ap = 0.0, h1 = 0.0, h10 = 0.0, h50 = 0.0;
  std::size_t n = 0;

  void add(const RankingResult& r) {
    ap += average_precision(r);
    h1 += hits_at_k(r, 1);
    h10 += hits_at_k(r, 10);
    h50 += hits_at_k(r, 50);
    ++n;
  }
  RankMetrics mean() const {
    RankMetrics m;
    m.queries = n;
    if (n == 0) return m;
    const double d = static_cast<double>(n);
    m.map = ap / d;
    m.hits1 = h1 / d;
    m.hits10 = h10 / d;
    m.hits50 = h50 / d;
    return m;
  }
};

struct QueryWork {
  RankingResult overall;
  std::array<std::optional<RankingResult>, 5> by_type;
};

QueryWork score_query(const EvalQuery& q, const BatchScorer& scorer) {
  std::vector<std::string> texts;
  std::unordered_set<std::string> seen;
  for (const auto& p : q.positives)
    if (seen.insert(p).second) texts.push_back(p);
  const std::size_t n_pos = texts.size();
  for (const auto& list : q.negatives)
    for (const auto& n : list)
      if (seen.insert(n).second) texts.push_back(n);

  const std::vector<double> scores = scorer(q.query, texts);
  if (scores.size() != texts.size()) throw std::logic_error("scorer returned the wrong number of scores");
  std::unordered_map<std::string, double> by_text;
  std::vector<Candidate> all;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    by_text.emplace(texts[i], scores[i]);
    all.push_back({texts[i], scores[i], i < n_pos});
  }

  QueryWork w;
  w.overall = rank_candidates(q.query, all);
  for (std::size_t t = 0; t < q.negatives.size(); ++t) {
    if (q.negatives[t].empty()) continue;
    std::vector<Candidate> subset(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_pos));
    std::unordered_set<std::string> added(texts.begin(), texts.begin() + static_cast<std::ptrdiff_t>(n_pos));
    for (const auto& n : q.negatives[t])
      if (added.insert(n).second) subset.push_back({n, by_text.at(n), false});
    w.by_type[t] = rank_candidates(q.query, std::move(subset));
  }
  return w;
}

}  // namespace

EvalSummary evaluate(std::span<const EvalQuery> queries, const BatchScorer& scorer, unsigned threads) {
  std::vector<std::size_t> usable;
  EvalSummary s;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (queries[i].positives.empty()) {
      ++s.skipped;
    } else {
      usable.push_back(i);
    }
  }

  std::vector<QueryWork> work(usable.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, usable.size())));
  if (threads <= 1) {
    for (std::size_t k = 0; k < usable.size(); ++k) work[k] = score_query(queries[usable[k]], scorer);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
          for (std::size_t k = next++; k < usable.size(); k = next++) {
            try {
              work[k] = score_query(queries[usable[k]], scorer);
            } catch (...) {
              std::lock_guard lock(failure_mutex);
              if (!failure) failure = std::current_exception();
              next = usable.size();
            }
          }
        });
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  Accumulator overall;
  std::array<Accumulator, 5> by_type;
  for (const QueryWork& w : work) {
    overall.add(w.overall);
    QueryOutcome o;
    o.query = w.overall.query;
    o.ap = average_precision(w.overall);
    o.hits1 = hits_at_k(w.overall, 1);
    o.hits10 = hits_at_k(w.overall, 10);
    o.hits50 = hits_at_k(w.overall, 50);
    o.candidates = w.overall.ranked.size();
    s.per_query.push_back(std::move(o));
    for (std::size_t t = 0; t < by_type.size(); ++t)
      if (w.by_type[t]) by_type[t].add(*w.by_type[t]);
  }
  s.overall = overall.mean();
  for (std::size_t t = 0; t < by_type.size(); ++t) s.by_type[t] = by_type[t].mean();
  return s;
}

void write_summary(std::ostream& out, const EvalSummary& s) {
  out << "queries\t" << s.overall.queries << '\n'
      << "skipped\t" << s.skipped << '\n'
      << "MAP\t" << s.overall.map << '\n'
      << "Hits@1\t" << s.overall.hits1 << '\n'
      << "Hits@10\t" << s.overall.hits10 << '\n'
      << "Hits@50\t" << s.overall.hits50 << '\n';
  for (std::size_t t = 0; t < s.by_type.size(); ++t) {
    const RankMetrics& m = s.by_type[t];
    const std::string_view name = negative_type_name(kNegativeTypes[t]);
    out << name << "\tqueries\t" << m.queries << '\n'
        << name << "\tMAP\t" << m.map << '\n'
        << name << "\tHits@1\t" << m.hits1 << '\n'
        << name << "\tHits@10\t" << m.hits10 << '\n'
        << name << "\tHits@50\t" << m.hits50 << '\n';
  }
}

void write_per_query(std::ostream& out, const EvalSummary& s) {
  for (const QueryOutcome& q : s.per_query) {
    nlohmann::json j = {{"query", q.query},     {"ap", q.ap},         {"hits1", q.hits1},
                        {"hits10", q.hits10},   {"hits50", q.hits50}, {"candidates", q.candidates}};
    out << j.dump() << '\n';
  }
}

}  // namespace stance
