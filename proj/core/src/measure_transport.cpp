#include "gibbslab/measure_transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gibbslab {

namespace {

// Orientation rule making symmetric solves bit-identical: solve with the
// lexicographically smaller (depth, masses) side as supply.
bool measure_less(const WordMeasure& a, const WordMeasure& b) {
  if (a.depth != b.depth) return a.depth < b.depth;
  return std::lexicographical_compare(a.masses.begin(), a.masses.end(),
                                      b.masses.begin(), b.masses.end());
}

bool support_less(const SupportMeasure& a, const SupportMeasure& b) {
  if (a.length != b.length) return a.length < b.length;
  if (a.atoms.size() != b.atoms.size()) return a.atoms.size() < b.atoms.size();
  if (a.atoms != b.atoms) return a.atoms < b.atoms;
  return std::lexicographical_compare(a.masses.begin(), a.masses.end(),
                                      b.masses.begin(), b.masses.end());
}

double ground_cost(const SpinGrid& grid, const MetricConfig& cfg,
                   GroundMetric metric, WordView x, WordView y, int horizon) {
  const double partial = seq_distance(grid, x, y, horizon).partial;
  return metric == GroundMetric::bounded ? bounded_distance(cfg, partial)
                                         : partial;
}

}  // namespace

WordMeasure uniform_measure(WordSpace& ws, int depth) {
  if (depth < 1) fail(errc::validation_error, "measure depth must be positive");
  const std::int64_t n = ws.table(depth).size();
  WordMeasure mu;
  mu.depth = depth;
  mu.masses.assign(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
  return mu;
}

WordMeasure dirac_measure(WordSpace& ws, WordView w) {
  if (w.empty()) fail(errc::validation_error, "point mass needs a nonempty word");
  WordMeasure mu;
  mu.depth = static_cast<int>(w.size());
  mu.masses.assign(static_cast<std::size_t>(ws.table(mu.depth).size()), 0.0);
  mu.masses[static_cast<std::size_t>(ws.table(mu.depth).index_of(w))] = 1.0;
  return mu;
}

void validate_measure(WordSpace& ws, const WordMeasure& mu, double tol) {
  if (mu.depth < 1) fail(errc::validation_error, "measure depth must be positive");
  if (static_cast<std::int64_t>(mu.masses.size()) != ws.table(mu.depth).size())
    fail(errc::depth_mismatch, "measure vector does not match its word table");
  double sum = 0.0;
  for (double v : mu.masses) {
    if (!(v >= 0.0)) fail(errc::validation_error, "measure mass must be nonnegative");
    sum += v;
  }
  if (std::fabs(sum - 1.0) > tol)
    fail(errc::validation_error, "measure mass must sum to 1");
}

double total_mass(const WordMeasure& mu) {
  double s = 0.0;
  for (double v : mu.masses) s += v;
  return s;
}

WordMeasure prefix_marginal(WordSpace& ws, const WordMeasure& mu, int depth) {
  if (depth < 1 || depth > mu.depth)
    fail(errc::depth_mismatch, "marginal depth out of range");
  const std::vector<std::int64_t> chain = prefix_chain(ws, mu.depth, depth);
  WordMeasure out;
  out.depth = depth;
  out.masses.assign(static_cast<std::size_t>(ws.table(depth).size()), 0.0);
  for (std::size_t i = 0; i < mu.masses.size(); ++i)
    out.masses[static_cast<std::size_t>(chain[i])] += mu.masses[i];
  return out;
}

WordMeasure shift_marginal(WordSpace& ws, const WordMeasure& mu) {
  if (mu.depth < 2)
    fail(errc::depth_mismatch, "shifted marginal needs depth >= 2");
  const std::vector<std::int64_t>& tail = ws.suffix_index(mu.depth);
  WordMeasure out;
  out.depth = mu.depth - 1;
  out.masses.assign(static_cast<std::size_t>(ws.table(mu.depth - 1).size()), 0.0);
  for (std::size_t i = 0; i < mu.masses.size(); ++i)
    out.masses[static_cast<std::size_t>(tail[i])] += mu.masses[i];
  return out;
}

double integrate(WordSpace& ws, const DepthKFunction& f, const WordMeasure& mu) {
  if (f.depth > mu.depth)
    fail(errc::depth_mismatch, "observable deeper than the measure");
  const std::vector<std::int64_t> chain = prefix_chain(ws, mu.depth, f.depth);
  double s = 0.0;
  for (std::size_t i = 0; i < mu.masses.size(); ++i)
    s += mu.masses[i] * f.values[static_cast<std::size_t>(chain[i])];
  return s;
}

WordMeasure dual_apply(WordSpace& ws, const DepthKFunction& phi_bar,
                       const WordMeasure& mu) {
  if (phi_bar.depth > mu.depth)
    fail(errc::depth_mismatch, "potential deeper than the measure");
  const int k = mu.depth;
  const AdmissibleWordTable& t = ws.table(k);
  const std::vector<double>& nu = ws.system().grid.nu;

  WordMeasure out;
  out.depth = k;
  out.masses.assign(mu.masses.size(), 0.0);

  if (k == 1) {
    // (L*mu)([b]) integrates over the first letter of the source sequence.
    const AdmissibilitySystem& sys = ws.system();
    const std::vector<std::int64_t> to_phi = prefix_chain(ws, 1, phi_bar.depth);
    for (std::int64_t b = 0; b < t.size(); ++b) {
      double reachable = 0.0;
      for (int a : sys.extensions[static_cast<std::size_t>(b)])
        reachable += mu.masses[static_cast<std::size_t>(a)];
      out.masses[static_cast<std::size_t>(b)] =
          nu[static_cast<std::size_t>(b)] *
          std::exp(phi_bar.values[static_cast<std::size_t>(to_phi[static_cast<std::size_t>(b)])]) *
          reachable;
    }
    return out;
  }

  // Mass of mu on the (k-1)-prefix cylinders.
  std::vector<double> pm(static_cast<std::size_t>(ws.table(k - 1).size()), 0.0);
  const std::vector<std::int64_t>& pref = ws.prefix_index(k);
  for (std::size_t i = 0; i < mu.masses.size(); ++i)
    pm[static_cast<std::size_t>(pref[i])] += mu.masses[i];

  const std::vector<std::int64_t>& tail = ws.suffix_index(k);
  const std::vector<std::int64_t> to_phi = prefix_chain(ws, k, phi_bar.depth);
  for (std::int64_t v = 0; v < t.size(); ++v) {
    const int b = t.word(v)[0];
    out.masses[static_cast<std::size_t>(v)] =
        nu[static_cast<std::size_t>(b)] *
        std::exp(phi_bar.values[static_cast<std::size_t>(to_phi[static_cast<std::size_t>(v)])]) *
        pm[static_cast<std::size_t>(tail[static_cast<std::size_t>(v)])];
  }
  return out;
}

WassersteinResult wasserstein(WordSpace& ws, const WordMeasure& mu,
                              const WordMeasure& eta, GroundMetric metric,
                              const MetricConfig& cfg, int horizon) {
  if (mu.depth != eta.depth)
    fail(errc::depth_mismatch, "transport endpoints must share a depth");
  if (horizon < 1 || horizon > mu.depth)
    fail(errc::validation_error, "horizon must lie in [1, depth]");
  if (static_cast<std::int64_t>(mu.masses.size()) != ws.table(mu.depth).size() ||
      mu.masses.size() != eta.masses.size())
    fail(errc::depth_mismatch, "measure vector does not match its word table");

  WassersteinResult res;
  res.cost_tail = metric == GroundMetric::bounded
                      ? std::ldexp(1.0, -horizon) / cfg.delta
                      : std::ldexp(1.0, -horizon);
  if (mu.masses == eta.masses) return res;

  const WordMeasure* lhs = &mu;
  const WordMeasure* rhs = &eta;
  if (measure_less(eta, mu)) std::swap(lhs, rhs);

  const AdmissibleWordTable& t = ws.table(mu.depth);
  const SpinGrid& grid = ws.system().grid;
  const TransportSolution sol = solve_transport(
      lhs->masses, rhs->masses,
      [&](std::size_t i, std::size_t j) {
        return ground_cost(grid, cfg, metric, t.word(static_cast<std::int64_t>(i)),
                           t.word(static_cast<std::int64_t>(j)), horizon);
      },
      false);
  if (sol.duality_gap > 1e-9)
    fail(errc::solver_failure, "transport duality gap above 1e-9");
  res.value = sol.cost;
  res.duality_gap = sol.duality_gap;
  res.pivots = sol.pivots;
  return res;
}

Coupling optimal_plan(WordSpace& ws, const WordMeasure& mu,
                      const WordMeasure& eta, GroundMetric metric,
                      const MetricConfig& cfg, int horizon) {
  if (mu.depth != eta.depth)
    fail(errc::depth_mismatch, "transport endpoints must share a depth");
  if (horizon < 1 || horizon > mu.depth)
    fail(errc::validation_error, "horizon must lie in [1, depth]");

  const AdmissibleWordTable& t = ws.table(mu.depth);
  const std::int64_t n = t.size();
  Coupling plan;
  plan.depth = mu.depth;
  plan.rows = n;
  plan.cols = n;

  if (mu.masses == eta.masses) {
    plan.joint.assign(static_cast<std::size_t>(n * n), 0.0);
    for (std::int64_t i = 0; i < n; ++i)
      plan.joint[static_cast<std::size_t>(i * n + i)] = mu.masses[static_cast<std::size_t>(i)];
    return plan;
  }

  const bool swapped = measure_less(eta, mu);
  const WordMeasure* lhs = swapped ? &eta : &mu;
  const WordMeasure* rhs = swapped ? &mu : &eta;
  const SpinGrid& grid = ws.system().grid;
  const TransportSolution sol = solve_transport(
      lhs->masses, rhs->masses,
      [&](std::size_t i, std::size_t j) {
        return ground_cost(grid, cfg, metric, t.word(static_cast<std::int64_t>(i)),
                           t.word(static_cast<std::int64_t>(j)), horizon);
      },
      true);
  if (sol.duality_gap > 1e-9)
    fail(errc::solver_failure, "transport duality gap above 1e-9");
  plan.cost = sol.cost;
  plan.joint.assign(static_cast<std::size_t>(n * n), 0.0);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j) {
      const double v = sol.plan[static_cast<std::size_t>(i * n + j)];
      if (swapped)
        plan.joint[static_cast<std::size_t>(j * n + i)] = v;
      else
        plan.joint[static_cast<std::size_t>(i * n + j)] = v;
    }

  double resid = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    double row = 0.0, col = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
      row += plan.joint[static_cast<std::size_t>(i * n + j)];
      col += plan.joint[static_cast<std::size_t>(j * n + i)];
    }
    resid = std::max(resid, std::fabs(row - mu.masses[static_cast<std::size_t>(i)]));
    resid = std::max(resid, std::fabs(col - eta.masses[static_cast<std::size_t>(i)]));
  }
  plan.marginal_residual = resid;
  return plan;
}

double diagonal_mass(WordSpace& ws, const WordMeasure& mu,
                     const WordMeasure& eta, int k) {
  if (k < 1) fail(errc::validation_error, "diagonal depth must be positive");
  if (mu.depth < k || eta.depth < k)
    fail(errc::depth_mismatch, "measures shallower than the diagonal depth");
  const AdmissibleWordTable& ta = ws.table(mu.depth);
  const AdmissibleWordTable& tb = ws.table(eta.depth);
  const TransportSolution sol = solve_transport(
      mu.masses, eta.masses,
      [&](std::size_t i, std::size_t j) {
        const WordView x = ta.word(static_cast<std::int64_t>(i));
        const WordView y = tb.word(static_cast<std::int64_t>(j));
        return std::equal(x.begin(), x.begin() + k, y.begin()) ? 0.0 : 1.0;
      },
      false);
  if (sol.duality_gap > 1e-9)
    fail(errc::solver_failure, "transport duality gap above 1e-9");
  return 1.0 - sol.cost;
}

SupportMeasure iterate_dirac(WordSpace& ws, const DepthKFunction& phi_bar,
                             WordView x, int m) {
  if (m < 0) fail(errc::validation_error, "iterate count must be nonnegative");
  if (phi_bar.depth > static_cast<int>(x.size()))
    fail(errc::depth_mismatch, "potential deeper than the base word");
  if (!ws.system().word_admissible(x))
    fail(errc::validation_error, "base word must be admissible");
  const AdmissibilitySystem& sys = ws.system();
  const AdmissibleWordTable& tphi = ws.table(phi_bar.depth);

  SupportMeasure cur;
  cur.length = static_cast<int>(x.size());
  cur.atoms.push_back(Word(x.begin(), x.end()));
  cur.masses.push_back(1.0);
  for (int step = 0; step < m; ++step) {
    SupportMeasure next;
    next.length = cur.length + 1;
    for (std::size_t i = 0; i < cur.atoms.size(); ++i) {
      const Word& w = cur.atoms[i];
      for (int a : sys.successor[static_cast<std::size_t>(w.front())]) {
        Word grown;
        grown.reserve(w.size() + 1);
        grown.push_back(a);
        grown.insert(grown.end(), w.begin(), w.end());
        const double weight =
            sys.grid.nu[static_cast<std::size_t>(a)] *
            std::exp(phi_bar.values[static_cast<std::size_t>(tphi.index_of(
                WordView(grown.data(), static_cast<std::size_t>(phi_bar.depth))))]);
        next.atoms.push_back(std::move(grown));
        next.masses.push_back(cur.masses[i] * weight);
      }
    }
    cur = std::move(next);
  }
  return cur;
}

namespace {

WassersteinResult support_wasserstein(const SpinGrid& grid,
                                      const SupportMeasure& a,
                                      const SupportMeasure& b,
                                      GroundMetric metric,
                                      const MetricConfig& cfg, int horizon) {
  WassersteinResult res;
  res.cost_tail = metric == GroundMetric::bounded
                      ? std::ldexp(1.0, -horizon) / cfg.delta
                      : std::ldexp(1.0, -horizon);
  if (a.length == b.length && a.atoms == b.atoms && a.masses == b.masses)
    return res;
  const SupportMeasure* lhs = &a;
  const SupportMeasure* rhs = &b;
  if (support_less(b, a)) std::swap(lhs, rhs);
  const TransportSolution sol = solve_transport(
      lhs->masses, rhs->masses,
      [&](std::size_t i, std::size_t j) {
        return ground_cost(grid, cfg, metric, lhs->atoms[i], rhs->atoms[j],
                           horizon);
      },
      false);
  if (sol.duality_gap > 1e-9)
    fail(errc::solver_failure, "transport duality gap above 1e-9");
  res.value = sol.cost;
  res.duality_gap = sol.duality_gap;
  res.pivots = sol.pivots;
  return res;
}

}  // namespace

int required_iterate_count(const MetricConfig& cfg) {
  if (!(cfg.delta > 0.0)) fail(errc::validation_error, "delta must be positive");
  const int m0 = 1;
  int m1 = m0;
  while (std::ldexp(1.0, -m1) > cfg.delta / 2.0) ++m1;
  return m1;
}

ContractionCertificate certify_contraction(
    WordSpace& ws, const DepthKFunction& phi_bar, const MetricConfig& cfg,
    const std::vector<std::pair<Word, Word>>& dirac_pairs, int m) {
  const int m1 = required_iterate_count(cfg);
  if (m < m1)
    fail(errc::validation_error,
         "iterate count below the certified threshold m1 = " + std::to_string(m1));

  ContractionCertificate cert;
  cert.m0 = 1;
  cert.m1 = m1;
  cert.steps = m;
  const double lip_phi = lipschitz_seminorm(ws, phi_bar, phi_bar.depth);
  cert.alpha = std::max(1.0 - std::exp(-lip_phi) / 2.0, 0.75);

  const SpinGrid& grid = ws.system().grid;
  for (const auto& [x, y] : dirac_pairs) {
    if (x.size() != y.size())
      fail(errc::validation_error, "point-mass pair must share a length");
    if (x == y) continue;  // zero base distance carries no ratio
    const int k = static_cast<int>(x.size());
    const double base =
        bounded_distance(cfg, seq_distance(grid, x, y, k).partial);
    if (base <= 0.0) continue;
    const SupportMeasure px = iterate_dirac(ws, phi_bar, x, m);
    const SupportMeasure py = iterate_dirac(ws, phi_bar, y, m);
    const double moved =
        support_wasserstein(grid, px, py, GroundMetric::bounded, cfg, k + m)
            .value;
    const double ratio = moved / base;
    cert.measured_ratios.push_back(ratio);
    cert.beta = std::max(cert.beta, ratio);
    if (ratio > cert.alpha + 1e-12) ++cert.violations;
  }
  return cert;
}

GibbsSolution solve_gibbs(WordSpace& ws, const DepthKFunction& phi_bar,
                          const WordMeasure& mu0, double tol, int max_outer,
                          const NormalizationData* origin) {
  validate_measure(ws, mu0);
  if (phi_bar.depth > mu0.depth)
    fail(errc::depth_mismatch, "potential deeper than the iterated measure");
  if (!(tol > 0.0)) fail(errc::validation_error, "tolerance must be positive");
  if (max_outer < 2) fail(errc::validation_error, "need at least two iterations");
  const double resid = normalization_residual(ws, phi_bar);
  if (resid > 1e-8)
    fail(errc::not_normalized,
         "transfer operator does not fix constants; residual " +
             std::to_string(resid));

  const int k = mu0.depth;
  const double lip_e = lipschitz_seminorm(
      ws,
      [&] {
        DepthKFunction e = phi_bar;
        for (double& v : e.values) v = std::exp(v);
        return e;
      }(),
      phi_bar.depth);
  const MetricConfig cfg = choose_delta(std::max(1.0, lip_e));
  const bool exact = ws.table(k).size() <= 4096;

  GibbsSolution sol;
  sol.exact_steps = exact;
  WordMeasure mu = mu0;
  bool converged = false;
  double prev_step = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_outer; ++it) {
    WordMeasure next = dual_apply(ws, phi_bar, mu);
    double step;
    if (exact) {
      step = wasserstein(ws, mu, next, GroundMetric::bounded, cfg, k).value;
    } else {
      step = 0.0;
      for (std::size_t i = 0; i < mu.masses.size(); ++i)
        step += std::fabs(mu.masses[i] - next.masses[i]);
      step *= 0.5;
    }
    sol.step_history.push_back(step);
    sol.iterations = it;
    mu = std::move(next);
    if (step <= tol && prev_step <= tol) {
      converged = true;
      break;
    }
    prev_step = step;
  }
  if (!converged)
    fail(errc::no_convergence,
         "dual iteration did not stabilize; last step " +
             std::to_string(sol.step_history.back()));

  {
    const WordMeasure image = dual_apply(ws, phi_bar, mu);
    if (exact) {
      sol.final_gap = wasserstein(ws, mu, image, GroundMetric::bounded, cfg, k).value;
    } else {
      double tv = 0.0;
      for (std::size_t i = 0; i < mu.masses.size(); ++i)
        tv += std::fabs(mu.masses[i] - image.masses[i]);
      sol.final_gap = 0.5 * tv;
    }
  }

  // Stationarity of the truncated marginals under the coordinate shift.
  if (k >= 2) {
    const WordMeasure head = prefix_marginal(ws, mu, k - 1);
    const WordMeasure tail = shift_marginal(ws, mu);
    double r = 0.0;
    for (std::size_t i = 0; i < head.masses.size(); ++i)
      r = std::max(r, std::fabs(head.masses[i] - tail.masses[i]));
    sol.shift_residual = r;
  }

  sol.measure = std::move(mu);
  if (origin) {
    sol.normalization = *origin;
  } else {
    sol.normalization.lambda = 1.0;
    sol.normalization.h = constant_function(ws, 1, 1.0);
    sol.normalization.residual = resid;
  }

  // Light default certificate on shallow point-mass pairs.
  {
    int dc = std::min(k, 3);
    while (dc > 1 && ws.table(dc).size() > 40) --dc;
    const AdmissibleWordTable& t = ws.table(dc);
    std::vector<std::pair<Word, Word>> pairs;
    for (std::int64_t i = 0; i < t.size(); ++i)
      for (std::int64_t j = i + 1; j < t.size(); ++j) {
        const WordView a = t.word(i), b = t.word(j);
        pairs.emplace_back(Word(a.begin(), a.end()), Word(b.begin(), b.end()));
      }
    sol.certificate =
        certify_contraction(ws, phi_bar, cfg, pairs, required_iterate_count(cfg));
  }
  return sol;
}

}  // namespace gibbslab
