#include "stance/coref.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "stance/aliasdata.hpp"
#include "stance/tensor.hpp"

namespace stance {

Clustering canonical(std::span<const std::uint32_t> labels) {
  std::unordered_map<std::uint32_t, std::uint32_t> remap;
  Clustering out;
  out.reserve(labels.size());
  for (std::uint32_t l : labels) {
    auto [it, fresh] = remap.try_emplace(l, static_cast<std::uint32_t>(remap.size()));
    out.push_back(it->second);
  }
  return out;
}

ScoreMatrix ScoreMatrix::from(std::size_t n, const std::function<double(std::size_t, std::size_t)>& score) {
  ScoreMatrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m.set(i, j, score(i, j));
  return m;
}

void ScoreMatrix::set(std::size_t i, std::size_t j, double value) {
  if (!std::isfinite(value))
    throw NumericalError("non-finite score for pair (" + std::to_string(i) + ", " + std::to_string(j) + ")");
  v_.at(i * n_ + j) = value;
  v_.at(j * n_ + i) = value;
}

std::pair<double, double> ScoreMatrix::range() const {
  if (n_ < 2) return {0.0, 0.0};
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j) {
      lo = std::min(lo, (*this)(i, j));
      hi = std::max(hi, (*this)(i, j));
    }
  return {lo, hi};
}

Clustering Dendrogram::cut(double threshold) const {
  // union-find over leaf and merged ids
  std::vector<std::uint32_t> parent(leaves + merges.size());
  for (std::uint32_t i = 0; i < parent.size(); ++i) parent[i] = i;
  auto root = [&](std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t k = 0; k < merges.size(); ++k) {
    if (merges[k].linkage < threshold) break;
    const auto id = static_cast<std::uint32_t>(leaves + k);
    parent[root(merges[k].a)] = id;
    parent[root(merges[k].b)] = id;
  }
  Clustering labels(leaves);
  for (std::uint32_t i = 0; i < leaves; ++i) labels[i] = root(i);
  return canonical(labels);
}

namespace {

struct Best {
  double value = -std::numeric_limits<double>::infinity();
  std::uint32_t partner = std::numeric_limits<std::uint32_t>::max();
};

// Larger value wins; equal values go to the smaller partner id.
bool better(double v, std::uint32_t p, const Best& b) {
  return v > b.value || (v == b.value && p < b.partner);
}

}  // namespace

Dendrogram hac_average_tree(const ScoreMatrix& scores) {
  const std::size_t n = scores.size();
  Dendrogram d;
  d.leaves = n;
  if (n < 2) return d;

  // Slots hold active clusters; slot s initially holds leaf s. sum[s][t] is
  // the total pairwise score between the two clusters.
  std::vector<std::vector<double>> sum(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) sum[i][j] = scores(i, j);
  std::vector<double> size(n, 1.0);
  std::vector<std::uint32_t> id(n);
  std::vector<bool> active(n, true);
  for (std::uint32_t i = 0; i < n; ++i) id[i] = i;

  auto linkage = [&](std::size_t s, std::size_t t) { return sum[s][t] / (size[s] * size[t]); };
  std::vector<Best> best(n);
  auto refresh = [&](std::size_t s) {
    best[s] = Best{};
    for (std::size_t t = 0; t < n; ++t)
      if (t != s && active[t] && better(linkage(s, t), id[t], best[s])) best[s] = {linkage(s, t), id[t]};
  };
  std::unordered_map<std::uint32_t, std::size_t> slot_of;
  for (std::size_t s = 0; s < n; ++s) {
    refresh(s);
    slot_of[id[s]] = s;
  }

  for (std::size_t step = 0; step + 1 < n; ++step) {
    // global choice: max linkage, then smallest (id, id) pair
    std::size_t pick = n;
    for (std::size_t s = 0; s < n; ++s) {
      if (!active[s]) continue;
      if (pick == n) {
        pick = s;
        continue;
      }
      const auto pair_s = std::minmax(id[s], best[s].partner);
      const auto pair_p = std::minmax(id[pick], best[pick].partner);
      if (best[s].value > best[pick].value || (best[s].value == best[pick].value && pair_s < pair_p)) pick = s;
    }
    const std::size_t s1 = pick, s2 = slot_of.at(best[pick].partner);
    const double value = best[pick].value;
    d.merges.push_back({std::min(id[s1], id[s2]), std::max(id[s1], id[s2]), value});

    // merged cluster takes slot s1
    const auto merged_id = static_cast<std::uint32_t>(n + step);
    active[s2] = false;
    slot_of.erase(id[s1]);
    slot_of.erase(id[s2]);
    for (std::size_t t = 0; t < n; ++t) {
      if (!active[t] || t == s1) continue;
      sum[s1][t] = sum[t][s1] = sum[s1][t] + sum[s2][t];
    }
    size[s1] += size[s2];
    const std::uint32_t old1 = id[s1], old2 = id[s2];
    id[s1] = merged_id;
    slot_of[merged_id] = s1;

    refresh(s1);
    for (std::size_t t = 0; t < n; ++t) {
      if (!active[t] || t == s1) continue;
      if (best[t].partner == old1 || best[t].partner == old2) {
        refresh(t);
      } else if (better(linkage(t, s1), merged_id, best[t])) {
        best[t] = {linkage(t, s1), merged_id};
      }
    }
  }
  return d;
}

Clustering hac_average(const ScoreMatrix& scores, double threshold) {
  return hac_average_tree(scores).cut(threshold);
}

BCubed b_cubed(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> gold) {
  if (predicted.size() != gold.size())
    throw std::invalid_argument("b_cubed: predicted and gold cover different mention sets");
  const std::size_t n = predicted.size();
  BCubed r;
  if (n == 0) return r;

  std::unordered_map<std::uint32_t, double> pred_size, gold_size;
  std::unordered_map<std::uint64_t, double> overlap;
  for (std::size_t i = 0; i < n; ++i) {
    pred_size[predicted[i]] += 1;
    gold_size[gold[i]] += 1;
    overlap[(static_cast<std::uint64_t>(predicted[i]) << 32) | gold[i]] += 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double both = overlap[(static_cast<std::uint64_t>(predicted[i]) << 32) | gold[i]];
    r.precision += both / pred_size[predicted[i]];
    r.recall += both / gold_size[gold[i]];
  }
  r.precision /= static_cast<double>(n);
  r.recall /= static_cast<double>(n);
  r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
  if (points == 0) return {};
  if (points == 1) return {lo};
  std::vector<double> g(points);
  for (std::size_t k = 0; k < points; ++k)
    g[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
  g.back() = hi;
  return g;
}

ThresholdChoice tune_threshold(const ScoreMatrix& scores, std::span<const std::uint32_t> gold,
                               std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("tune_threshold: empty grid");
  const Dendrogram tree = hac_average_tree(scores);
  std::vector<double> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());
  ThresholdChoice best{sorted.front(), b_cubed(tree.cut(sorted.front()), gold)};
  for (double t : sorted) {
    const BCubed s = b_cubed(tree.cut(t), gold);
    if (s.f1 > best.score.f1) best = {t, s};
  }
  return best;
}

std::vector<std::string> read_mentions(std::istream& in, const std::string& source) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw DataError(source + ":" + std::to_string(out.size() + 1) + ": empty mention");
    out.push_back(line);
  }
  return out;
}

Clustering read_gold(std::istream& in, std::size_t mentions, const std::string& source) {
  std::vector<std::int64_t> label(mentions, -1);
  std::unordered_map<std::string, std::uint32_t> entity;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    const std::string where = source + ":" + std::to_string(number) + ": ";
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw DataError(where + "expected mention_id and entity_id");
    std::size_t id = 0;
    try {
      std::size_t used = 0;
      id = std::stoul(line.substr(0, tab), &used);
      if (used != tab) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw DataError(where + "mention id is not a number");
    }
    if (id < 1 || id > mentions) throw DataError(where + "mention id out of range");
    if (label[id - 1] >= 0) throw DataError(where + "mention listed twice");
    label[id - 1] = entity.try_emplace(line.substr(tab + 1), static_cast<std::uint32_t>(entity.size())).first->second;
  }
  Clustering out;
  for (std::size_t i = 0; i < mentions; ++i) {
    if (label[i] < 0) throw DataError(source + ": mention " + std::to_string(i + 1) + " has no gold entity");
    out.push_back(static_cast<std::uint32_t>(label[i]));
  }
  return canonical(out);
}

void write_clustering(std::ostream& out, std::span<const std::uint32_t> clusters) {
  for (std::size_t i = 0; i < clusters.size(); ++i) out << (i + 1) << "\tC" << clusters[i] << '\n';
}

}  // namespace stance
