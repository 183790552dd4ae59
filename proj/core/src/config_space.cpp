#include "gibbslab/config_space.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace gibbslab {

namespace {

constexpr double kIntervalSlack = 1e-12;
constexpr double kMetricSlack = 1e-12;

std::string letter_list(const std::vector<int>& letters) {
  std::ostringstream os;
  for (std::size_t i = 0; i < letters.size(); ++i) {
    if (i) os << ", ";
    os << letters[i];
  }
  return os.str();
}

}  // namespace

std::vector<std::vector<double>> coordinate_distance(
    const std::vector<double>& points) {
  const std::size_t n = points.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d[i][j] = std::fabs(points[i] - points[j]);
  return d;
}

std::vector<double> uniform_weights(int n) {
  if (n <= 0) fail(errc::empty_system, "weight vector over empty alphabet");
  return std::vector<double>(static_cast<std::size_t>(n), 1.0 / n);
}

SpinGrid make_grid(std::vector<double> points,
                   std::vector<std::vector<double>> distance,
                   std::vector<double> nu) {
  const std::size_t n = points.size();
  if (n == 0) fail(errc::empty_system, "grid has no points");
  for (double p : points)
    if (!(p >= 0.0 && p <= 1.0))
      fail(errc::validation_error, "grid points must lie in [0, 1]");
  if (distance.size() != n)
    fail(errc::validation_error, "distance matrix must be square of grid size");
  for (std::size_t i = 0; i < n; ++i) {
    if (distance[i].size() != n)
      fail(errc::validation_error, "distance matrix must be square of grid size");
    if (distance[i][i] != 0.0)
      fail(errc::validation_error, "distance diagonal must be zero");
    for (std::size_t j = 0; j < n; ++j) {
      const double d = distance[i][j];
      if (!std::isfinite(d) || d < 0.0 || d > 1.0)
        fail(errc::validation_error,
             "distances must be finite, nonnegative and at most 1");
      if (i != j && d == 0.0)
        fail(errc::validation_error, "distinct grid points need positive distance");
      if (std::fabs(d - distance[j][i]) > kMetricSlack)
        fail(errc::validation_error, "distance matrix must be symmetric");
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        if (distance[i][j] > distance[i][k] + distance[k][j] + kMetricSlack)
          fail(errc::validation_error, "distance matrix violates triangle inequality");
  if (nu.size() != n)
    fail(errc::validation_error, "weight vector must match grid size");
  double total = 0.0;
  for (double w : nu) {
    if (!(w > 0.0)) fail(errc::validation_error, "weights must be positive");
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-12)
    fail(errc::validation_error, "weights must sum to 1");
  return SpinGrid{std::move(points), std::move(distance), std::move(nu)};
}

bool Interval::contains(double v) const {
  return v >= lo - kIntervalSlack && v <= hi + kIntervalSlack;
}

bool AdmissibilitySystem::word_admissible(WordView w) const {
  const int n = grid.size();
  for (std::size_t j = 0; j < w.size(); ++j)
    if (w[j] < 0 || w[j] >= n) return false;
  for (std::size_t j = 0; j + 1 < w.size(); ++j)
    if (!pair_admissible(w[j], w[j + 1])) return false;
  return true;
}

AdmissibilitySystem build_system(SpinGrid grid,
                                 std::vector<std::vector<double>> a_values,
                                 std::vector<Interval> constraint_set) {
  const std::size_t n = static_cast<std::size_t>(grid.size());
  if (a_values.size() != n)
    fail(errc::validation_error, "interaction matrix must be square of grid size");
  for (const auto& row : a_values) {
    if (row.size() != n)
      fail(errc::validation_error, "interaction matrix must be square of grid size");
    for (double v : row)
      if (!std::isfinite(v))
        fail(errc::validation_error, "interaction values must be finite");
  }
  if (constraint_set.empty())
    fail(errc::empty_constraint_set, "constraint set has no intervals");
  for (const auto& iv : constraint_set)
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi + kIntervalSlack)
      fail(errc::validation_error, "constraint interval bounds out of order");

  AdmissibilitySystem sys;
  sys.grid = std::move(grid);
  sys.a_values = std::move(a_values);
  sys.constraint_set = std::move(constraint_set);

  sys.admissible.assign(n, std::vector<char>(n, 0));
  bool any = false;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (const auto& iv : sys.constraint_set)
        if (iv.contains(sys.a_values[a][b])) {
          sys.admissible[a][b] = 1;
          any = true;
          break;
        }
  if (!any) fail(errc::empty_system, "no admissible letter pair");

  sys.successor.assign(n, {});
  sys.extensions.assign(n, {});
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (sys.admissible[a][b]) {
        sys.successor[b].push_back(static_cast<int>(a));
        sys.extensions[a].push_back(static_cast<int>(b));
      }

  std::vector<int> orphaned, dead_ends;
  for (std::size_t b = 0; b < n; ++b) {
    if (sys.successor[b].empty()) orphaned.push_back(static_cast<int>(b));
    if (sys.extensions[b].empty()) dead_ends.push_back(static_cast<int>(b));
  }
  if (!orphaned.empty())
    fail(errc::empty_system,
         "letters with empty transfer sum index set: " + letter_list(orphaned));
  if (!dead_ends.empty())
    fail(errc::empty_system,
         "letters admitting no continuation: " + letter_list(dead_ends));

  sys.block_of.assign(n, -1);
  std::map<std::vector<int>, int> seen;
  for (std::size_t b = 0; b < n; ++b) {
    auto [it, inserted] =
        seen.emplace(sys.successor[b], static_cast<int>(sys.partition_blocks.size()));
    if (inserted) sys.partition_blocks.push_back({});
    sys.block_of[b] = it->second;
    sys.partition_blocks[static_cast<std::size_t>(it->second)].push_back(
        static_cast<int>(b));
  }
  return sys;
}

std::int64_t AdmissibleWordTable::find(WordView w) const {
  if (static_cast<int>(w.size()) != depth) return -1;
  if (depth == 0) return 0;
  std::int64_t lo = 0, hi = size();
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    const WordView m = word(mid);
    if (std::lexicographical_compare(m.begin(), m.end(), w.begin(), w.end()))
      lo = mid + 1;
    else
      hi = mid;
  }
  if (lo < size()) {
    const WordView m = word(lo);
    if (std::equal(m.begin(), m.end(), w.begin())) return lo;
  }
  return -1;
}

std::int64_t AdmissibleWordTable::index_of(WordView w) const {
  const std::int64_t i = find(w);
  if (i < 0) fail(errc::validation_error, "word not in admissible table");
  return i;
}

namespace {

// Exact admissible word count, saturating just above the budget.
std::int64_t count_words(const AdmissibilitySystem& sys, int depth,
                         std::int64_t budget) {
  const std::size_t n = static_cast<std::size_t>(sys.grid.size());
  const std::int64_t cap = budget + 1;
  std::vector<std::int64_t> cnt(n, 1);
  for (int k = 1; k < depth; ++k) {
    std::vector<std::int64_t> next(n, 0);
    for (std::size_t a = 0; a < n; ++a) {
      std::int64_t s = 0;
      for (int c : sys.extensions[a]) {
        s += cnt[static_cast<std::size_t>(c)];
        if (s >= cap) {
          s = cap;
          break;
        }
      }
      next[a] = s;
    }
    cnt.swap(next);
  }
  std::int64_t total = 0;
  for (std::int64_t v : cnt) {
    total += v;
    if (total >= cap) return cap;
  }
  return total;
}

}  // namespace

AdmissibleWordTable enumerate_words(const AdmissibilitySystem& sys, int depth,
                                    std::int64_t budget) {
  if (depth < 0) fail(errc::validation_error, "word depth must be nonnegative");
  AdmissibleWordTable t;
  t.depth = depth;
  if (depth == 0) return t;
  if (count_words(sys, depth, budget) > budget)
    fail(errc::depth_overflow, "admissible word count exceeds enumeration budget at depth " +
                                   std::to_string(depth));
  const int n = sys.grid.size();
  std::vector<int> cur;
  cur.reserve(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) cur.push_back(a);
  for (int k = 2; k <= depth; ++k) {
    std::vector<int> next;
    const std::int64_t rows = static_cast<std::int64_t>(cur.size()) / (k - 1);
    for (std::int64_t i = 0; i < rows; ++i) {
      const int* w = cur.data() + i * (k - 1);
      for (int c : sys.extensions[static_cast<std::size_t>(w[k - 2])]) {
        next.insert(next.end(), w, w + (k - 1));
        next.push_back(c);
      }
    }
    cur.swap(next);
  }
  t.flat = std::move(cur);
  return t;
}

WordSpace::WordSpace(AdmissibilitySystem sys, std::int64_t budget)
    : sys_(std::move(sys)), budget_(budget) {}

std::int64_t WordSpace::projected_count(int depth) const {
  return count_words(sys_, depth, budget_);
}

const WordSpace::Level& WordSpace::level(int depth) {
  if (depth < 0) fail(errc::validation_error, "word depth must be nonnegative");
  std::scoped_lock lock(mutex_);
  if (static_cast<std::size_t>(depth) >= levels_.size())
    levels_.resize(static_cast<std::size_t>(depth) + 1);
  for (int d = 0; d <= depth; ++d) {
    Level& lv = levels_[static_cast<std::size_t>(d)];
    if (lv.built) continue;
    lv.table = enumerate_words(sys_, d, budget_);
    const std::int64_t m = lv.table.size();
    // Depth-0 and depth-1 words project onto the single empty word.
    lv.prefix.assign(static_cast<std::size_t>(m), 0);
    lv.suffix.assign(static_cast<std::size_t>(m), 0);
    if (d >= 2) {
      const AdmissibleWordTable& shallow = levels_[static_cast<std::size_t>(d - 1)].table;
      for (std::int64_t i = 0; i < m; ++i) {
        const WordView w = lv.table.word(i);
        lv.prefix[static_cast<std::size_t>(i)] = shallow.index_of(w.first(w.size() - 1));
        lv.suffix[static_cast<std::size_t>(i)] = shallow.index_of(w.subspan(1));
      }
    }
    lv.built = true;
  }
  return levels_[static_cast<std::size_t>(depth)];
}

const AdmissibleWordTable& WordSpace::table(int depth) { return level(depth).table; }

const std::vector<std::int64_t>& WordSpace::prefix_index(int depth) {
  if (depth < 1) fail(errc::validation_error, "prefix map needs depth >= 1");
  return level(depth).prefix;
}

const std::vector<std::int64_t>& WordSpace::suffix_index(int depth) {
  if (depth < 1) fail(errc::validation_error, "suffix map needs depth >= 1");
  return level(depth).suffix;
}

TruncatedDistance seq_distance(const SpinGrid& grid, WordView x, WordView y,
                               int horizon) {
  if (horizon < 0) fail(errc::validation_error, "horizon must be nonnegative");
  if (static_cast<int>(x.size()) < horizon || static_cast<int>(y.size()) < horizon)
    fail(errc::word_too_short, "words shorter than the comparison horizon");
  double sum = 0.0;
  double w = 0.5;
  for (int k = 0; k < horizon; ++k, w *= 0.5)
    sum += grid.distance[static_cast<std::size_t>(x[k])]
                        [static_cast<std::size_t>(y[k])] *
           w;
  TruncatedDistance d;
  d.partial = sum;
  d.tail = std::ldexp(1.0, -horizon);
  d.horizon = horizon;
  return d;
}

MetricConfig choose_delta(double lip_e_phi) {
  if (!(lip_e_phi >= 0.0))
    fail(errc::validation_error, "Lipschitz constant must be nonnegative");
  if (lip_e_phi == 0.0)
    fail(errc::degenerate_potential, "constant transfer weights give no metric scale");
  MetricConfig cfg;
  cfg.lip_e_phi = lip_e_phi;
  cfg.delta = std::min(0.9 / (2.0 * lip_e_phi), 0.45);
  return cfg;
}

double bounded_distance(const MetricConfig& cfg, double raw_distance) {
  return std::min(1.0, raw_distance / cfg.delta);
}

BoundedDistance bounded_distance(const MetricConfig& cfg,
                                 const TruncatedDistance& d) {
  return BoundedDistance{bounded_distance(cfg, d.lower()),
                         bounded_distance(cfg, d.upper())};
}

std::optional<int> mixing_exponent(const AdmissibilitySystem& sys, int max_p) {
  if (max_p < 1) fail(errc::validation_error, "path length bound must be positive");
  const std::size_t n = static_cast<std::size_t>(sys.grid.size());
  std::vector<std::vector<char>> power = sys.admissible;
  for (int p = 1; p <= max_p; ++p) {
    bool full = true;
    for (std::size_t i = 0; i < n && full; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (!power[i][j]) {
          full = false;
          break;
        }
    if (full) return p;
    std::vector<std::vector<char>> next(n, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        if (power[i][k])
          for (std::size_t j = 0; j < n; ++j)
            if (sys.admissible[k][j]) next[i][j] = 1;
    power.swap(next);
  }
  return std::nullopt;
}

bool CylinderSet::contains(WordView w) const {
  if (static_cast<int>(w.size()) < depth) return false;
  for (int k = 0; k < depth; ++k) {
    const auto& set = coordinate_sets[static_cast<std::size_t>(k)];
    if (!std::binary_search(set.begin(), set.end(), w[static_cast<std::size_t>(k)]))
      return false;
  }
  return true;
}

CylinderSet make_cylinder(const AdmissibilitySystem& sys,
                          std::vector<std::vector<int>> coordinate_sets) {
  if (coordinate_sets.empty())
    fail(errc::validation_error, "cylinder needs at least one coordinate set");
  const int n = sys.grid.size();
  for (auto& set : coordinate_sets) {
    if (set.empty()) fail(errc::validation_error, "cylinder coordinate set is empty");
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    for (int v : set)
      if (v < 0 || v >= n)
        fail(errc::validation_error, "cylinder letter outside the grid");
  }
  CylinderSet c;
  c.depth = static_cast<int>(coordinate_sets.size());
  c.coordinate_sets = std::move(coordinate_sets);
  return c;
}

CylinderSet word_cylinder(WordView w) {
  if (w.empty()) fail(errc::validation_error, "cylinder needs a nonempty word");
  CylinderSet c;
  c.depth = static_cast<int>(w.size());
  c.coordinate_sets.reserve(w.size());
  for (int a : w) c.coordinate_sets.push_back({a});
  return c;
}

std::string format_word(const SpinGrid& grid, WordView w) {
  std::ostringstream os;
  const bool compact = grid.size() <= 10;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!compact && i) os << '-';
    os << w[i];
  }
  return os.str();
}

}  // namespace gibbslab
