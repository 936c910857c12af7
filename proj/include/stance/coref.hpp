#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace stance {

// Cluster label per mention, numbered 0, 1, ... by first occurrence.
using Clustering = std::vector<std::uint32_t>;

// Relabels any labelling into first-occurrence order.
Clustering canonical(std::span<const std::uint32_t> labels);

// Symmetric n x n pairwise scores, row-major. The diagonal is unused.
class ScoreMatrix {
 public:
  explicit ScoreMatrix(std::size_t n) : n_(n), v_(n * n, 0.0) {}
  // Fills entry (i, j) and (j, i) with score(i, j) for i < j. Throws
  // NumericalError naming the pair when a score is not finite.
  static ScoreMatrix from(std::size_t n, const std::function<double(std::size_t, std::size_t)>& score);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return v_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double value);
  // Smallest and largest off-diagonal entry; {0, 0} below two points.
  std::pair<double, double> range() const;

 private:
  std::size_t n_;
  std::vector<double> v_;
};

// Leaves are clusters 0..n-1; the k-th merge creates cluster n+k.
struct Merge {
  std::uint32_t a;  // smaller id
  std::uint32_t b;
  double linkage;
};

struct Dendrogram {
  std::size_t leaves = 0;
  std::vector<Merge> merges;

  // Replays merges up to the first one with linkage below the threshold.
  Clustering cut(double threshold) const;
};

// Average-linkage agglomeration down to a single cluster. Each step merges
// the pair with the largest mean pairwise score; ties go to the smallest
// (id, id) pair. O(n^2) memory; a per-cluster best-partner cache keeps
// most steps linear.
Dendrogram hac_average_tree(const ScoreMatrix& scores);
Clustering hac_average(const ScoreMatrix& scores,
                       double threshold = -std::numeric_limits<double>::infinity());

struct BCubed {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Throws std::invalid_argument when the two labellings differ in length.
BCubed b_cubed(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> gold);

// `points` evenly spaced values from lo to hi inclusive.
std::vector<double> linear_grid(double lo, double hi, std::size_t points = 101);

struct ThresholdChoice {
  double threshold = 0.0;
  BCubed score;
};

// Best B-cubed F1 over the grid; ties go to the smallest threshold. Throws
// std::invalid_argument for an empty grid.
ThresholdChoice tune_threshold(const ScoreMatrix& scores, std::span<const std::uint32_t> gold,
                               std::span<const double> grid);

// Coreference inputs. Mention ids are 1-based line numbers of the
// mentions file.
std::vector<std::string> read_mentions(std::istream& in, const std::string& source = "<stream>");
// `mention_id \t entity_id` rows covering every mention exactly once.
Clustering read_gold(std::istream& in, std::size_t mentions, const std::string& source = "<stream>");
void write_clustering(std::ostream& out, std::span<const std::uint32_t> clusters);

}  // namespace stance
