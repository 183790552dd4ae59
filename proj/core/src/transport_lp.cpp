#include "gibbslab/transport_lp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "gibbslab/errors.hpp"

namespace gibbslab {

namespace {

constexpr double kReducedCostTol = 1e-12;

struct Arc {
  int row;
  int col;
  double flow;
};

}  // namespace

TransportSolution solve_transport(const std::vector<double>& supply,
                                  const std::vector<double>& demand,
                                  const CostFn& cost, bool want_plan) {
  double total_s = 0.0, total_d = 0.0;
  for (double v : supply) {
    if (!(v >= 0.0)) fail(errc::validation_error, "negative supply mass");
    total_s += v;
  }
  for (double v : demand) {
    if (!(v >= 0.0)) fail(errc::validation_error, "negative demand mass");
    total_d += v;
  }
  if (total_s <= 0.0 || total_d <= 0.0)
    fail(errc::validation_error, "transport endpoints must carry mass");
  if (std::fabs(total_s - total_d) > 1e-9 * std::max(total_s, total_d))
    fail(errc::validation_error, "transport problem is unbalanced");

  // Active atoms only; rescale demand so the reduced problem balances exactly.
  std::vector<int> rows, cols;
  for (std::size_t i = 0; i < supply.size(); ++i)
    if (supply[i] > 0.0) rows.push_back(static_cast<int>(i));
  for (std::size_t j = 0; j < demand.size(); ++j)
    if (demand[j] > 0.0) cols.push_back(static_cast<int>(j));
  const int R = static_cast<int>(rows.size());
  const int C = static_cast<int>(cols.size());
  std::vector<double> s(static_cast<std::size_t>(R)), d(static_cast<std::size_t>(C));
  for (int i = 0; i < R; ++i) s[static_cast<std::size_t>(i)] = supply[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])];
  const double scale = total_s / total_d;
  for (int j = 0; j < C; ++j)
    d[static_cast<std::size_t>(j)] = demand[static_cast<std::size_t>(cols[static_cast<std::size_t>(j)])] * scale;

  std::vector<double> c(static_cast<std::size_t>(R) * static_cast<std::size_t>(C));
  for (int i = 0; i < R; ++i)
    for (int j = 0; j < C; ++j) {
      const double v = cost(static_cast<std::size_t>(rows[static_cast<std::size_t>(i)]),
                            static_cast<std::size_t>(cols[static_cast<std::size_t>(j)]));
      if (!std::isfinite(v)) fail(errc::validation_error, "transport cost must be finite");
      c[static_cast<std::size_t>(i) * static_cast<std::size_t>(C) + static_cast<std::size_t>(j)] = v;
    }
  auto cc = [&](int i, int j) -> double {
    return c[static_cast<std::size_t>(i) * static_cast<std::size_t>(C) + static_cast<std::size_t>(j)];
  };

  // Northwest-corner start; ties advance the row only, keeping R+C-1 arcs.
  std::vector<Arc> basis;
  basis.reserve(static_cast<std::size_t>(R + C));
  {
    std::vector<double> sr = s, dr = d;
    int i = 0, j = 0;
    while (i < R && j < C) {
      const double q = std::min(sr[static_cast<std::size_t>(i)], dr[static_cast<std::size_t>(j)]);
      basis.push_back(Arc{i, j, q});
      sr[static_cast<std::size_t>(i)] -= q;
      dr[static_cast<std::size_t>(j)] -= q;
      if (i == R - 1 && j == C - 1) break;
      if (sr[static_cast<std::size_t>(i)] <= dr[static_cast<std::size_t>(j)] && i < R - 1)
        ++i;
      else if (j < C - 1)
        ++j;
      else
        ++i;
    }
  }

  const std::int64_t pivot_cap =
      10000 + 50LL * (R + C) * (R + C);
  std::int64_t pivots = 0;
  std::int64_t degenerate_run = 0;
  std::vector<double> u(static_cast<std::size_t>(R)), v(static_cast<std::size_t>(C));
  std::vector<char> u_set(static_cast<std::size_t>(R)), v_set(static_cast<std::size_t>(C));
  std::vector<std::vector<int>> row_arcs(static_cast<std::size_t>(R));
  std::vector<std::vector<int>> col_arcs(static_cast<std::size_t>(C));

  auto rebuild_adjacency = [&]() {
    for (auto& a : row_arcs) a.clear();
    for (auto& a : col_arcs) a.clear();
    for (int t = 0; t < static_cast<int>(basis.size()); ++t) {
      row_arcs[static_cast<std::size_t>(basis[static_cast<std::size_t>(t)].row)].push_back(t);
      col_arcs[static_cast<std::size_t>(basis[static_cast<std::size_t>(t)].col)].push_back(t);
    }
  };

  auto compute_potentials = [&]() {
    std::fill(u_set.begin(), u_set.end(), 0);
    std::fill(v_set.begin(), v_set.end(), 0);
    std::deque<int> queue;  // node ids: rows [0,R), cols [R, R+C)
    u[0] = 0.0;
    u_set[0] = 1;
    queue.push_back(0);
    while (!queue.empty()) {
      const int node = queue.front();
      queue.pop_front();
      if (node < R) {
        for (int t : row_arcs[static_cast<std::size_t>(node)]) {
          const Arc& a = basis[static_cast<std::size_t>(t)];
          if (!v_set[static_cast<std::size_t>(a.col)]) {
            v[static_cast<std::size_t>(a.col)] = cc(a.row, a.col) - u[static_cast<std::size_t>(a.row)];
            v_set[static_cast<std::size_t>(a.col)] = 1;
            queue.push_back(R + a.col);
          }
        }
      } else {
        const int col = node - R;
        for (int t : col_arcs[static_cast<std::size_t>(col)]) {
          const Arc& a = basis[static_cast<std::size_t>(t)];
          if (!u_set[static_cast<std::size_t>(a.row)]) {
            u[static_cast<std::size_t>(a.row)] = cc(a.row, a.col) - v[static_cast<std::size_t>(a.col)];
            u_set[static_cast<std::size_t>(a.row)] = 1;
            queue.push_back(a.row);
          }
        }
      }
    }
    for (int i = 0; i < R; ++i)
      if (!u_set[static_cast<std::size_t>(i)])
        fail(errc::solver_failure, "basis tree disconnected");
    for (int j = 0; j < C; ++j)
      if (!v_set[static_cast<std::size_t>(j)])
        fail(errc::solver_failure, "basis tree disconnected");
  };

  while (true) {
    rebuild_adjacency();
    compute_potentials();

    int er = -1, ecol = -1;
    const bool bland = degenerate_run > 50 + 4 * (R + C);
    double best = -kReducedCostTol;
    for (int i = 0; i < R && (er < 0 || !bland); ++i) {
      for (int j = 0; j < C; ++j) {
        const double rc = cc(i, j) - u[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)];
        if (bland) {
          if (rc < -kReducedCostTol) {
            er = i;
            ecol = j;
            break;
          }
        } else if (rc < best) {
          best = rc;
          er = i;
          ecol = j;
        }
      }
    }
    if (er < 0) break;  // optimal
    if (++pivots > pivot_cap)
      fail(errc::solver_failure, "pivot budget exhausted");

    // Cycle: tree path from entering row to entering column.
    std::vector<int> parent_arc(static_cast<std::size_t>(R + C), -1);
    std::vector<int> parent_node(static_cast<std::size_t>(R + C), -1);
    std::vector<char> seen(static_cast<std::size_t>(R + C), 0);
    std::deque<int> queue;
    seen[static_cast<std::size_t>(er)] = 1;
    queue.push_back(er);
    const int target = R + ecol;
    while (!queue.empty() && !seen[static_cast<std::size_t>(target)]) {
      const int node = queue.front();
      queue.pop_front();
      const auto& arcs =
          node < R ? row_arcs[static_cast<std::size_t>(node)]
                   : col_arcs[static_cast<std::size_t>(node - R)];
      for (int t : arcs) {
        const Arc& a = basis[static_cast<std::size_t>(t)];
        const int other = node < R ? R + a.col : a.row;
        if (!seen[static_cast<std::size_t>(other)]) {
          seen[static_cast<std::size_t>(other)] = 1;
          parent_arc[static_cast<std::size_t>(other)] = t;
          parent_node[static_cast<std::size_t>(other)] = node;
          queue.push_back(other);
        }
      }
    }
    if (!seen[static_cast<std::size_t>(target)])
      fail(errc::solver_failure, "no pivot cycle found");

    // Walk back: arcs alternate -, +, -, ... starting from the column end.
    std::vector<int> path;
    for (int node = target; node != er; node = parent_node[static_cast<std::size_t>(node)])
      path.push_back(parent_arc[static_cast<std::size_t>(node)]);
    // path[0] touches the entering column; entering arc has sign +, so the
    // arc adjacent to the column end carries sign -.
    double theta = std::numeric_limits<double>::infinity();
    int leave = -1;
    for (std::size_t p = 0; p < path.size(); p += 2) {
      const Arc& a = basis[static_cast<std::size_t>(path[p])];
      if (a.flow < theta - 1e-18 ||
          (std::fabs(a.flow - theta) <= 1e-18 && leave >= 0 &&
           (a.row < basis[static_cast<std::size_t>(leave)].row ||
            (a.row == basis[static_cast<std::size_t>(leave)].row &&
             a.col < basis[static_cast<std::size_t>(leave)].col)))) {
        theta = a.flow;
        leave = path[p];
      }
    }
    if (leave < 0) fail(errc::solver_failure, "pivot found no leaving arc");
    degenerate_run = theta == 0.0 ? degenerate_run + 1 : 0;
    for (std::size_t p = 0; p < path.size(); ++p) {
      Arc& a = basis[static_cast<std::size_t>(path[p])];
      a.flow += (p % 2 == 0) ? -theta : theta;
      if (a.flow < 0.0) a.flow = 0.0;
    }
    Arc& out = basis[static_cast<std::size_t>(leave)];
    out.row = er;
    out.col = ecol;
    out.flow = theta;
  }

  TransportSolution sol;
  sol.pivots = pivots;
  double primal = 0.0;
  for (const Arc& a : basis) primal += a.flow * cc(a.row, a.col);
  sol.cost = primal;
  double dual = 0.0;
  for (int i = 0; i < R; ++i) dual += u[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(i)];
  for (int j = 0; j < C; ++j) dual += v[static_cast<std::size_t>(j)] * d[static_cast<std::size_t>(j)];
  sol.dual_value = dual;
  double slack = 0.0;
  for (int i = 0; i < R; ++i)
    for (int j = 0; j < C; ++j)
      slack = std::max(slack, u[static_cast<std::size_t>(i)] + v[static_cast<std::size_t>(j)] - cc(i, j));
  sol.duality_gap = std::fabs(primal - dual) + slack * total_s;
  if (want_plan) {
    sol.plan.assign(supply.size() * demand.size(), 0.0);
    for (const Arc& a : basis)
      sol.plan[static_cast<std::size_t>(rows[static_cast<std::size_t>(a.row)]) * demand.size() +
               static_cast<std::size_t>(cols[static_cast<std::size_t>(a.col)])] += a.flow;
  }
  return sol;
}

}  // namespace gibbslab
