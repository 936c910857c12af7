#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "stance/aliasdata.hpp"
#include "stance/classic.hpp"
#include "stance/synth.hpp"
#include "stance/utf8.hpp"

using namespace stance;

namespace {

AliasGraph parse(const std::string& text) {
  std::istringstream in(text);
  return read_graph(in, "test.tsv");
}

AliasGraph random_graph(std::mt19937_64& rng, std::size_t entities, std::size_t pool) {
  std::vector<std::string> names;
  std::set<std::string> seen;
  while (names.size() < pool) {
    std::string s = oracle::random_string(rng, 6, "abcde", 2);
    if (seen.insert(s).second) names.push_back(s);
  }
  AliasGraph g;
  std::uniform_int_distribution<std::size_t> pick(0, pool - 1), count(1, 3);
  for (std::size_t e = 0; e < entities; ++e) {
    const std::size_t k = count(rng);
    for (std::size_t i = 0; i < k; ++i) g.add("e" + std::to_string(e), names[pick(rng)]);
  }
  return g;
}

// All-pairs shortest paths over mention and entity nodes (Floyd-Warshall).
std::vector<std::vector<std::size_t>> mention_distances(const AliasGraph& g) {
  const std::size_t M = g.mention_count(), N = M + g.entity_count(), inf = 1u << 30;
  std::vector<std::vector<std::size_t>> d(N, std::vector<std::size_t>(N, inf));
  for (std::size_t i = 0; i < N; ++i) d[i][i] = 0;
  for (std::uint32_t m = 0; m < M; ++m)
    for (std::uint32_t e : g.entities_of(m)) d[m][M + e] = d[M + e][m] = 1;
  for (std::size_t k = 0; k < N; ++k)
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  d.resize(M);
  for (auto& row : d) row.resize(M);
  return d;
}

bool shares_entity(const AliasGraph& g, const std::string& a, const std::string& b) {
  auto ia = g.find_mention(a), ib = g.find_mention(b);
  if (!ia || !ib) return false;
  for (std::uint32_t e = 0; e < g.entity_count(); ++e) {
    auto ms = g.aliases_of(e);
    if (std::count(ms.begin(), ms.end(), *ia) && std::count(ms.begin(), ms.end(), *ib)) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("load_graph") {
  AliasGraph g = parse("E1\talpha\nE1\tbeta\n");
  CHECK(g.entity_count() == 1);
  CHECK(g.mention_count() == 2);
  CHECK(g.edge_count() == 2);
  CHECK(g.entity_weight(0) == 1.0);

  AliasGraph dup = parse("E1\talpha\nE1\talpha\r\n\nE2\talpha\t2.5\n");
  CHECK(dup.edge_count() == 2);
  CHECK(dup.mention_count() == 1);
  CHECK(dup.entity_weight(1) == 2.5);
  CHECK(dup.mention_weight(0) == 2.5);

  auto error_of = [](const std::string& text) -> std::string {
    try {
      parse(text);
    } catch (const DataError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(error_of("E1\ta\nno tab here\n") == "test.tsv:2: expected 2 or 3 tab-separated fields");
  CHECK(error_of("E1\ta\nE2\tb\tx\n").starts_with("test.tsv:2: weight"));
  CHECK(error_of("E1\ta\nE2\tb\t-1\n").starts_with("test.tsv:2:"));
  CHECK(error_of("\tb\n").starts_with("test.tsv:1:"));
  CHECK_THROWS_AS(load_graph("/nonexistent/file.tsv"), DataError);
}

TEST_CASE("stats agree with an independent line count") {
  SynthConfig cfg;
  cfg.entities = 3000;
  cfg.seed = 9;
  std::ostringstream out;
  write_graph(out, synthesize_corpus(cfg));
  const std::string text = out.str();

  std::set<std::string> mentions;
  std::map<std::string, std::set<std::string>> per_entity;
  std::istringstream lines(text);
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) {
    ++count;
    const auto t1 = line.find('\t'), t2 = line.find('\t', t1 + 1);
    per_entity[line.substr(0, t1)].insert(line.substr(t1 + 1, t2 - t1 - 1));
    mentions.insert(line.substr(t1 + 1, t2 - t1 - 1));
  }
  CHECK(count >= 6000);
  CHECK(count <= 10000);
  double mean = 0.0, sq = 0.0;
  for (const auto& [e, ms] : per_entity) mean += static_cast<double>(ms.size());
  mean /= static_cast<double>(per_entity.size());
  for (const auto& [e, ms] : per_entity) sq += (ms.size() - mean) * (ms.size() - mean);
  const double sd = std::sqrt(sq / static_cast<double>(per_entity.size()));

  GraphStats s = parse(text).stats();
  CHECK(s.entities == per_entity.size());
  CHECK(s.mentions == mentions.size());
  CHECK(s.edges == count);
  CHECK(s.mentions_per_entity_mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(s.mentions_per_entity_sd == doctest::Approx(sd).epsilon(1e-9));

  std::ostringstream report;
  write_stats(report, s);
  CHECK(report.str().find("unique_strings\t" + std::to_string(mentions.size())) != std::string::npos);
}

TEST_CASE("split_entities") {
  AliasGraph g;
  for (int e = 0; e < 10; ++e) g.add("E" + std::to_string(e), "m" + std::to_string(e));
  DataSplit s = split_entities(g, {0.8, 0.1, 0.1}, 7);
  CHECK(s.train.size() == 8);
  CHECK(s.dev.size() == 1);
  CHECK(s.test.size() == 1);
  DataSplit again = split_entities(g, {0.8, 0.1, 0.1}, 7);
  CHECK(again.train == s.train);
  CHECK(again.dev == s.dev);
  CHECK(again.test == s.test);

  std::vector<std::uint32_t> all;
  for (const auto* part : {&s.train, &s.dev, &s.test}) all.insert(all.end(), part->begin(), part->end());
  std::sort(all.begin(), all.end());
  std::vector<std::uint32_t> expected(10);
  std::iota(expected.begin(), expected.end(), 0u);
  CHECK(all == expected);

  AliasGraph two;
  two.add("a", "x");
  two.add("b", "y");
  CHECK_THROWS_AS(split_entities(two, {0.8, 0.1, 0.1}, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_entities(g, {0.8, 0.1, 0.2}, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_entities(g, {1.2, -0.1, -0.1}, 1), std::invalid_argument);
}

TEST_CASE("hop_distance") {
  AliasGraph g;
  g.add("E1", "peace agreement");
  g.add("E1", "peace treaty");
  g.add("E2", "peace treaty");
  g.add("E2", "peace support operations");
  g.add("E3", "sudan");
  CHECK(hop_distance(g, "peace agreement", "peace treaty") == 2);
  CHECK(hop_distance(g, "peace agreement", "peace support operations") == 4);
  CHECK(hop_distance(g, "peace agreement", "peace agreement") == 0);
  CHECK_FALSE(hop_distance(g, "peace agreement", "sudan").has_value());
  CHECK_THROWS_AS(hop_distance(g, "peace agreement", "nowhere"), std::out_of_range);

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    AliasGraph r = random_graph(rng, 30, 40);
    auto oracle_d = mention_distances(r);
    for (std::uint32_t a = 0; a < r.mention_count(); ++a) {
      auto d = hop_distances(r, a);
      for (std::uint32_t b = 0; b < r.mention_count(); ++b) {
        if (d[b]) {
          CHECK(*d[b] % 2 == 0);
          CHECK(*d[b] == oracle_d[a][b]);
        } else {
          CHECK(oracle_d[a][b] >= (1u << 30));
        }
      }
    }
  }
}

TEST_CASE("overlap keys") {
  CHECK(word_prefix_key(U"Barack Obama") == U"Bara");
  CHECK(word_suffix_key(U"Barack Obama") == U"bama");
  CHECK_FALSE(word_prefix_key(U"Bo Obama").has_value());
  CHECK_FALSE(word_suffix_key(U"Barack Oba").has_value());
  CHECK_FALSE(word_prefix_key(U"   ").has_value());
}

TEST_CASE("negative candidates match brute-force scans") {
  AliasGraph small;
  small.add("E1", "abc");
  small.add("E1", "abx");
  small.add("E2", "abd");
  small.add("E3", "zzzzzz");
  NegativeSampler s(small);
  const std::uint32_t q = small.mention_index("abc");
  auto edit = s.candidates(q, NegativeType::kEdit);
  CHECK(std::count(edit.begin(), edit.end(), small.mention_index("abd")) == 1);
  CHECK(std::count(edit.begin(), edit.end(), small.mention_index("abx")) == 0);

  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    AliasGraph g = random_graph(rng, 150, 300);
    NegativeSampler sampler(g);
    auto dist = mention_distances(g);
    for (std::uint32_t q = 0; q < g.mention_count(); q += 7) {
      std::array<std::vector<std::uint32_t>, 4> expected;
      const auto uq = utf8::decode(g.mention(q));
      for (std::uint32_t m = 0; m < g.mention_count(); ++m) {
        if (m == q || shares_entity(g, g.mention(q), g.mention(m))) continue;
        const auto um = utf8::decode(g.mention(m));
        const std::size_t lev = oracle::levenshtein_dp(uq, um);
        if (lev >= 1 && lev <= 2) expected[0].push_back(m);
        const bool prefix = uq.size() >= 4 && um.size() >= 4 && uq.substr(0, 4) == um.substr(0, 4);
        const bool suffix = uq.size() >= 4 && um.size() >= 4 && uq.substr(uq.size() - 4) == um.substr(um.size() - 4);
        if (prefix || suffix) expected[1].push_back(m);
        if (dist[q][m] == 4) expected[2].push_back(m);
        if (dist[q][m] == 6) expected[3].push_back(m);
      }
      CHECK(sampler.candidates(q, NegativeType::kEdit) == expected[0]);
      CHECK(sampler.candidates(q, NegativeType::kOverlap) == expected[1]);
      CHECK(sampler.candidates(q, NegativeType::kHop4) == expected[2]);
      CHECK(sampler.candidates(q, NegativeType::kHop6) == expected[3]);

      for (std::uint32_t m : sampler.candidates(q, NegativeType::kHop4)) CHECK(dist[q][m] != 2);
    }
  }
}

TEST_CASE("generate respects budgets and exclusions") {
  SynthConfig cfg;
  cfg.entities = 400;
  cfg.seed = 4;
  AliasGraph g = synthesize_corpus(cfg);
  NegativeSampler sampler(g);
  for (std::uint32_t q = 0; q < g.mention_count(); q += 37) {
    for (NegativeType t : kNegativeTypes) {
      for (std::size_t budget : {0u, 3u, 1000u}) {
        auto negs = sampler.generate(q, t, budget, 5);
        CHECK(negs.size() <= budget);
        CHECK(std::is_sorted(negs.begin(), negs.end()));
        CHECK(negs == sampler.generate(q, t, budget, 5));
        auto cands = sampler.candidates(q, t);
        for (std::uint32_t n : negs) {
          CHECK_FALSE(g.co_aliased(q, n));
          CHECK(n != q);
          CHECK(std::binary_search(cands.begin(), cands.end(), n));
        }
        if (t != NegativeType::kRandom && cands.size() <= budget) CHECK(negs == cands);
      }
    }
  }

  NegativeBank bank(g, 10, 3);
  const auto* first = &bank.for_query(5);
  CHECK(first == &bank.for_query(5));
  CHECK((*first)[0] == sampler.generate(5, NegativeType::kEdit, 10, 3));
}

TEST_CASE("build_eval_set") {
  AliasGraph tiny;
  tiny.add("E1", "anna smith");
  tiny.add("E1", "smith, anna");
  tiny.add("E2", "anne smith");
  EvalSetReport report;
  std::vector<std::uint32_t> both = {0, 1};
  auto one = build_eval_set(tiny, both, 1, 1000, 3, &report);
  REQUIRE(one.size() == 1);
  CHECK(report.emitted == 1);
  CHECK(one[0].positives.size() == 1);
  for (const auto& list : one[0].negatives)
    for (const auto& n : list) CHECK(n == "anne smith");

  SynthConfig cfg;
  cfg.entities = 600;
  cfg.seed = 21;
  AliasGraph g = synthesize_corpus(cfg);
  DataSplit split = split_entities(g, {0.6, 0.2, 0.2}, 2);
  auto queries = build_eval_set(g, split.test, 100, 50, 8, &report);
  CHECK(queries.size() == 100);
  CHECK(report.requested == 100);
  for (const EvalQuery& q : queries) {
    CHECK_FALSE(q.positives.empty());
    for (const auto& p : q.positives) CHECK(shares_entity(g, q.query, p));
    for (const auto& list : q.negatives) {
      CHECK(list.size() <= 50);
      for (const auto& n : list) {
        CHECK_FALSE(shares_entity(g, q.query, n));
        CHECK(std::find(q.positives.begin(), q.positives.end(), n) == q.positives.end());
      }
    }
  }

  std::ostringstream a, b;
  write_eval_file(a, queries);
  write_eval_file(b, build_eval_set(g, split.test, 100, 50, 8));
  CHECK(a.str() == b.str());

  std::istringstream in(a.str());
  auto back = read_eval_file(in);
  REQUIRE(back.size() == queries.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].query == queries[i].query);
    CHECK(back[i].positives == queries[i].positives);
    CHECK(back[i].negatives == queries[i].negatives);
  }

  std::istringstream bad("q\tc\t2\tPOS\n");
  CHECK_THROWS_AS(read_eval_file(bad), DataError);
  std::istringstream bad_type("q\tc\t0\tNEAR\n");
  CHECK_THROWS_AS(read_eval_file(bad_type), DataError);
}

TEST_CASE("triples round trip") {
  std::vector<TripleText> t = {{"a b", "b, a", "c d"}, {"x", "y", "z"}};
  std::ostringstream out;
  write_triples(out, t);
  std::istringstream in(out.str());
  CHECK(read_triples(in) == t);
  std::istringstream bad("a\tb\n");
  CHECK_THROWS_AS(read_triples(bad), DataError);
}

TEST_CASE("synthetic corpus") {
  SynthConfig cfg;
  cfg.entities = 200;
  AliasGraph g = synthesize_corpus(cfg);
  CHECK(g.entity_count() == 200);
  for (std::uint32_t e = 0; e < g.entity_count(); ++e) CHECK(g.aliases_of(e).size() >= 2);
  std::ostringstream a, b;
  write_graph(a, g);
  write_graph(b, synthesize_corpus(cfg));
  CHECK(a.str() == b.str());
}
