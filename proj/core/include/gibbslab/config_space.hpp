#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gibbslab/errors.hpp"

namespace gibbslab {

// A word lists letters as grid indices, leftmost coordinate first.
using Word = std::vector<int>;
using WordView = std::span<const int>;

// Finite spin alphabet M with a metric of diameter at most 1 and a strictly
// positive a-priori weight vector summing to 1.
struct SpinGrid {
  std::vector<double> points;
  std::vector<std::vector<double>> distance;
  std::vector<double> nu;

  int size() const { return static_cast<int>(points.size()); }
};

// Coordinate metric |p_i - p_j| on a point list. Rescales nothing: callers
// must supply points inside [0, 1] so the diameter stays admissible.
std::vector<std::vector<double>> coordinate_distance(
    const std::vector<double>& points);

std::vector<double> uniform_weights(int n);

SpinGrid make_grid(std::vector<double> points,
                   std::vector<std::vector<double>> distance,
                   std::vector<double> nu);

// Closed interval [lo, hi]; membership is tested with slack 1e-12 on both
// ends so constraint sets written in decimal stay stable across platforms.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const;
};

// Nearest-neighbour admissibility: the pair (a, b) may appear consecutively
// iff the interaction value A(a, b) lies in one of the constraint intervals.
// successor[b] lists the letters that may be prepended in front of b, which
// is exactly the index set of the transfer sum at b.
struct AdmissibilitySystem {
  SpinGrid grid;
  std::vector<std::vector<double>> a_values;
  std::vector<Interval> constraint_set;

  std::vector<std::vector<char>> admissible;
  std::vector<std::vector<int>> successor;   // successor[b] = s(b)
  std::vector<std::vector<int>> extensions;  // extensions[a] = {c : (a,c) ok}
  std::vector<std::vector<int>> partition_blocks;
  std::vector<int> block_of;  // letter -> index into partition_blocks

  bool pair_admissible(int a, int b) const {
    return admissible[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] != 0;
  }
  bool word_admissible(WordView w) const;
};

AdmissibilitySystem build_system(SpinGrid grid,
                                 std::vector<std::vector<double>> a_values,
                                 std::vector<Interval> constraint_set);

// Exhaustive lexicographic table of admissible words of one fixed depth.
// Words are stored flat, stride = depth.
struct AdmissibleWordTable {
  int depth = 0;
  std::vector<int> flat;

  std::int64_t size() const {
    return depth == 0 ? 1 : static_cast<std::int64_t>(flat.size()) / depth;
  }
  WordView word(std::int64_t i) const {
    return WordView(flat.data() + i * depth, static_cast<std::size_t>(depth));
  }
  // Index of w in lexicographic order, or -1 when w is not admissible.
  std::int64_t find(WordView w) const;
  // Same, but throws validation_error when absent.
  std::int64_t index_of(WordView w) const;
};

inline constexpr std::int64_t kDefaultWordBudget = 8'000'000;

AdmissibleWordTable enumerate_words(const AdmissibilitySystem& sys, int depth,
                                    std::int64_t budget = kDefaultWordBudget);

// Caching provider for word tables and the two depth-lowering index maps.
// Tables are built on demand under a lock; once built they are immutable,
// so concurrent readers are safe after a warm-up call.
class WordSpace {
 public:
  explicit WordSpace(AdmissibilitySystem sys,
                     std::int64_t budget = kDefaultWordBudget);

  const AdmissibilitySystem& system() const { return sys_; }
  std::int64_t budget() const { return budget_; }

  const AdmissibleWordTable& table(int depth);
  // prefix_index(d)[i] = index of word(i).first(d-1) in table(d-1).
  const std::vector<std::int64_t>& prefix_index(int depth);
  // suffix_index(d)[i] = index of word(i).last(d-1) in table(d-1).
  const std::vector<std::int64_t>& suffix_index(int depth);

  // Exact admissible word count at the given depth, saturating at the
  // budget bound; used to reject oversized enumeration requests early.
  std::int64_t projected_count(int depth) const;

 private:
  struct Level {
    AdmissibleWordTable table;
    std::vector<std::int64_t> prefix;
    std::vector<std::int64_t> suffix;
    bool built = false;
  };

  const Level& level(int depth);

  AdmissibilitySystem sys_;
  std::int64_t budget_;
  std::vector<Level> levels_;
  std::mutex mutex_;
};

// Prefix sum of the sequence metric over the first `horizon` coordinates,
// plus the geometric tail bound valid for any admissible continuation.
struct TruncatedDistance {
  double partial = 0.0;
  double tail = 0.0;
  int horizon = 0;

  double lower() const { return partial; }
  double upper() const { return partial + tail; }
};

TruncatedDistance seq_distance(const SpinGrid& grid, WordView x, WordView y,
                               int horizon);

// Scale for the bounded metric; valid whenever 0 < delta and, for Lipschitz
// constants >= 1, delta < 1/2.
struct MetricConfig {
  double delta = 0.0;
  double lip_e_phi = 0.0;
};

MetricConfig choose_delta(double lip_e_phi);

// min{1, d/delta} applied to an exact metric value.
double bounded_distance(const MetricConfig& cfg, double raw_distance);
// Interval form honouring the truncation tail.
struct BoundedDistance {
  double lower = 0.0;
  double upper = 0.0;
};
BoundedDistance bounded_distance(const MetricConfig& cfg,
                                 const TruncatedDistance& d);

// Least p such that every letter pair is joined by an admissible path of
// length exactly p; empty when no p <= max_p works.
std::optional<int> mixing_exponent(const AdmissibilitySystem& sys, int max_p);

// Cylinder constraining coordinates 1..depth to per-coordinate letter sets.
struct CylinderSet {
  int depth = 0;
  std::vector<std::vector<int>> coordinate_sets;

  bool contains(WordView w) const;
};

CylinderSet make_cylinder(const AdmissibilitySystem& sys,
                          std::vector<std::vector<int>> coordinate_sets);

// Cylinder fixing an exact word prefix.
CylinderSet word_cylinder(WordView w);

std::string format_word(const SpinGrid& grid, WordView w);

}  // namespace gibbslab
