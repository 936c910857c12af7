#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cli.hpp"
#include "doctest.h"
#include "stance/aliasdata.hpp"
#include "stance/checkpoint.hpp"
#include "stance/coref.hpp"
#include "stance/scorer.hpp"

namespace fs = std::filesystem;
using namespace stance;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

struct TempDir {
  fs::path path = fs::temp_directory_path() / ("stance_cli_" + std::to_string(::getpid()));
  TempDir() {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

const char* kToyCorpus =
    "E1\tBarack Obama\n"
    "E1\tObama, Barack\n"
    "E1\tB. Obama\n"
    "E2\tMichelle Obama\n"
    "E2\tObama, Michelle\n"
    "E3\tJoe Biden\n"
    "E3\tBiden, Joe\n"
    "E3\tJ. Biden\n"
    "E4\tJill Biden\n"
    "E4\tJ. Biden\n"
    "E5\tAngela Merkel\n"
    "E5\tMerkel\n"
    "E6\tOlaf Scholz\n"
    "E6\tScholz, Olaf\n"
    "E7\tEmmanuel Macron\n"
    "E7\tMacron, Emmanuel\n"
    "E8\tBrigitte Macron\n"
    "E8\tB. Macron\n"
    "E9\tJustin Trudeau\n"
    "E9\tTrudeau\n";

}  // namespace

TEST_CASE("usage and data errors map to exit codes") {
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"--help"}).code == cli::kOk);
  CHECK(run({"frobnicate"}).code == cli::kUsage);
  CHECK(run({"score", "--scorer", "nope", "a", "b"}).code == cli::kUsage);
  CHECK(run({"score", "--scorer", "stance", "a", "b"}).code == cli::kUsage);
  CHECK(run({"eval", "--scorer", "lev"}).code == cli::kUsage);
  CHECK(run({"eval", "--scorer", "lev", "--test", "/nonexistent/file"}).code == cli::kDataError);
  CHECK(run({"score", "--scorer", "stance", "--model", "/nonexistent/ckpt", "a", "b"}).code == cli::kDataError);
}

TEST_CASE("score with classic metrics") {
  Result r = run({"score", "--scorer", "lev", "kitten", "sitting"});
  REQUIRE(r.code == 0);
  CHECK(std::stod(r.out) == doctest::Approx(1.0 - 3.0 / 7).epsilon(1e-12));
  CHECK(std::stod(run({"score", "--scorer", "jw", "MARTHA", "MARHTA"}).out) == doctest::Approx(0.9611).epsilon(1e-4));
  CHECK(std::stod(run({"score", "--scorer", "sdx", "Robert", "Rupert"}).out) == 1.0);

  TempDir tmp;
  spit(tmp / "pairs.tsv", "kitten\tsitting\nabc\tabc\n");
  r = run({"score", "--scorer", "lcs", "--pairs", tmp / "pairs.tsv"});
  CHECK(r.code == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 2);
  spit(tmp / "bad.tsv", "only one field\n");
  r = run({"score", "--scorer", "lcs", "--pairs", tmp / "bad.tsv"});
  CHECK(r.code == cli::kDataError);
  CHECK(r.err.find("bad.tsv:1") != std::string::npos);
}

TEST_CASE("build-dataset on a toy corpus") {
  TempDir tmp;
  spit(tmp / "corpus.tsv", kToyCorpus);
  auto build = [&](const std::string& dir, const std::string& budget) {
    return run({"build-dataset", "--input", tmp / "corpus.tsv", "--out-dir", tmp / dir, "--seed", "5", "--splits",
                "0.5,0.25,0.25", "--neg-budget", budget, "--triples", "200", "--dev-queries", "10", "--test-queries", "10"});
  };
  REQUIRE(build("a", "1000").code == 0);
  REQUIRE(build("b", "1000").code == 0);
  for (const char* f : {"train.triples.tsv", "dev.eval.tsv", "test.eval.tsv", "stats.tsv", "splits.tsv"}) {
    CAPTURE(f);
    CHECK(!slurp(tmp.path / "a" / f).empty());
    CHECK(slurp(tmp.path / "a" / f) == slurp(tmp.path / "b" / f));
  }

  std::ifstream cin(tmp / "corpus.tsv");
  const AliasGraph g = read_graph(cin);
  auto co_alias = [&](const std::string& a, const std::string& b) {
    return g.co_aliased(g.mention_index(a), g.mention_index(b));
  };
  std::ifstream tin(tmp.path / "a" / "train.triples.tsv");
  const auto triples = read_triples(tin);
  CHECK(triples.size() == 200);
  for (const auto& t : triples) {
    CHECK(co_alias(t.q, t.p));
    CHECK(!co_alias(t.q, t.n));
  }
  for (const char* f : {"dev.eval.tsv", "test.eval.tsv"}) {
    std::ifstream ein(tmp.path / "a" / f);
    for (const auto& q : read_eval_file(ein)) {
      for (const auto& p : q.positives) CHECK(co_alias(q.query, p));
      for (const auto& list : q.negatives)
        for (const auto& n : list) CHECK(!co_alias(q.query, n));
    }
  }
  CHECK(slurp(tmp.path / "a" / "stats.tsv").find("entities\t9") != std::string::npos);

  REQUIRE(build("capped", "1").code == 0);
  std::ifstream capped(tmp.path / "capped" / "test.eval.tsv");
  for (const auto& q : read_eval_file(capped))
    for (const auto& list : q.negatives) CHECK(list.size() <= 1);

  CHECK(build("bad", "x").code == cli::kUsage);
  CHECK(run({"build-dataset", "--input", tmp / "corpus.tsv", "--out-dir", tmp / "c", "--splits", "0.5,0.5"}).code ==
        cli::kUsage);
  spit(tmp / "broken.tsv", "E1\n");
  Result broken = run({"build-dataset", "--input", tmp / "broken.tsv", "--out-dir", tmp / "d"});
  CHECK(broken.code == cli::kDataError);
  CHECK(broken.err.find("broken.tsv:1") != std::string::npos);
}

TEST_CASE("train, eval, score, rank and dump with a learned scorer") {
  TempDir tmp;
  spit(tmp / "corpus.tsv", kToyCorpus);
  REQUIRE(run({"build-dataset", "--input", tmp / "corpus.tsv", "--out-dir", tmp / "data", "--splits", "0.5,0.25,0.25",
               "--triples", "40", "--dev-queries", "5", "--test-queries", "5"})
              .code == 0);
  auto train = [&](const std::string& ckpt, const std::string& log) {
    return run({"train", "--triples", tmp / "data/train.triples.tsv", "--dev", tmp / "data/dev.eval.tsv", "--out",
                tmp / ckpt, "--log", tmp / log, "--epochs", "2", "--batch", "8", "--max-len", "20", "--embed", "4",
                "--hidden", "4", "--sinkhorn-iters", "5", "--seed", "3"});
  };
  Result t1 = train("m1.ckpt", "log1.tsv");
  REQUIRE(t1.code == 0);
  REQUIRE(train("m2.ckpt", "log2.tsv").code == 0);
  CHECK(slurp(tmp / "m1.ckpt") == slurp(tmp / "m2.ckpt"));
  CHECK(slurp(tmp / "m1.ckpt").starts_with("STNC1"));
  const std::string log = slurp(tmp / "log1.tsv");
  CHECK(log.starts_with("epoch\tloss\tdev_map\tseconds\n1\t"));
  CHECK(std::count(log.begin(), log.end(), '\n') == 3);
  CHECK(t1.out.find(log.substr(0, 30)) != std::string::npos);

  Result ev = run({"eval", "--test", tmp / "data/test.eval.tsv", "--scorer", "stance", "--model", tmp / "m1.ckpt",
                   "--per-query", tmp / "pq.jsonl"});
  REQUIRE(ev.code == 0);
  CHECK(ev.out.starts_with("queries\t"));
  CHECK(ev.out.find("MAP\t") != std::string::npos);
  CHECK(!slurp(tmp / "pq.jsonl").empty());

  Result wrong = run({"eval", "--test", tmp / "data/test.eval.tsv", "--scorer", "lstm-dot", "--model", tmp / "m1.ckpt"});
  CHECK(wrong.code == cli::kDataError);
  CHECK(wrong.err.find("STNC1") != std::string::npos);

  Result s1 = run({"score", "--scorer", "stance", "--model", tmp / "m1.ckpt", "Barack Obama", "Obama, Barack"});
  Result s2 = run({"score", "--scorer", "stance", "--model", tmp / "m2.ckpt", "Barack Obama", "Obama, Barack"});
  REQUIRE(s1.code == 0);
  CHECK(s1.out == s2.out);
  const ModelParams loaded = load_checkpoint(fs::path(tmp / "m1.ckpt"));
  CHECK(std::stod(s1.out) == score("Barack Obama", "Obama, Barack", loaded));

  spit(tmp / "cands.txt", "Obama, Barack\nJoe Biden\nB. Obama\n");
  Result rk = run({"rank", "--scorer", "lev", "--query", "Barack Obama", "--candidates", tmp / "cands.txt"});
  REQUIRE(rk.code == 0);
  CHECK(std::count(rk.out.begin(), rk.out.end(), '\n') == 3);
  CHECK(rk.out.starts_with("1\t"));
  Result top = run({"rank", "--scorer", "stance", "--model", tmp / "m1.ckpt", "--query", "Barack Obama",
                    "--candidates", tmp / "cands.txt", "--top", "2"});
  CHECK(std::count(top.out.begin(), top.out.end(), '\n') == 2);

  Result dump = run({"dump-matrices", "--model", tmp / "m1.ckpt", "--a", "Obama", "--b", "Barack Obama", "--out-dir",
                     tmp / "dump"});
  REQUIRE(dump.code == 0);
  for (const char* f : {"S.csv", "P.csv", "Sprime.csv"}) {
    const std::string grid = slurp(tmp.path / "dump" / f);
    CHECK(std::count(grid.begin(), grid.end(), '\n') == 5);
    const std::string first = grid.substr(0, grid.find('\n'));
    CHECK(std::count(first.begin(), first.end(), ',') == 11);
  }
  CHECK(run({"dump-matrices", "--a", "ab", "--b", "abc", "--out-dir", tmp / "fresh"}).code == 0);
  CHECK(slurp(tmp.path / "fresh" / "P.csv").size() > 0);
}

TEST_CASE("cluster") {
  TempDir tmp;
  spit(tmp / "m.txt", "Barack Obama\nObama, Barack\nB. Obama\nAngela Merkel\nMerkel, Angela\nA. Merkel\n");
  spit(tmp / "g.tsv", "1\tE1\n2\tE1\n3\tE1\n4\tE2\n5\tE2\n6\tE2\n");
  Result r = run({"cluster", "--mentions", tmp / "m.txt", "--gold", tmp / "g.tsv", "--scorer", "sdx",
                  "--tune-mentions", tmp / "m.txt", "--tune-gold", tmp / "g.tsv", "--out", tmp / "c.tsv"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("b3_f1\t") != std::string::npos);
  std::ifstream cin(tmp / "c.tsv");
  const Clustering c = read_gold(cin, 6);
  std::ifstream gin(tmp / "g.tsv");
  CHECK(b_cubed(c, read_gold(gin, 6)).f1 > 0.5);

  Result fixed = run({"cluster", "--mentions", tmp / "m.txt", "--scorer", "lev", "--threshold", "2"});
  REQUIRE(fixed.code == 0);
  CHECK(fixed.out.find("clusters\t6") != std::string::npos);
  CHECK(run({"cluster", "--mentions", tmp / "m.txt", "--scorer", "lev"}).code == cli::kUsage);
  spit(tmp / "short.tsv", "1\tE1\n");
  CHECK(run({"cluster", "--mentions", tmp / "m.txt", "--gold", tmp / "short.tsv", "--scorer", "lev", "--threshold",
             "0.5"})
            .code == cli::kDataError);
}

TEST_CASE("gradcheck on the tiny configuration") {
  Result r = run({"gradcheck"});
  CHECK(r.code == 0);
  const auto at = r.out.find("max_rel_error\t");
  REQUIRE(at != std::string::npos);
  CHECK(std::stod(r.out.substr(at + 14)) < 1e-3);
  CHECK(r.out.find("PASS") != std::string::npos);

  Result strict = run({"gradcheck", "--scorer", "lstm-dot", "--tolerance", "0"});
  CHECK(strict.code == cli::kNumerical);
  CHECK(strict.out.find("FAIL") != std::string::npos);
  CHECK(run({"gradcheck", "--max-len", "0"}).code == cli::kUsage);
}
