#include "gibbslab/gibbs_diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gibbslab {

double cylinder_mass(WordSpace& ws, const WordMeasure& mu, const CylinderSet& c) {
  if (c.depth > mu.depth)
    fail(errc::depth_mismatch, "cylinder deeper than the measure");
  const WordMeasure margin = prefix_marginal(ws, mu, c.depth);
  const AdmissibleWordTable& t = ws.table(c.depth);
  double mass = 0.0;
  for (std::int64_t i = 0; i < t.size(); ++i)
    if (c.contains(t.word(i))) mass += margin.masses[static_cast<std::size_t>(i)];
  return mass;
}

namespace {

// Lexicographically least admissible right-extension of w to `target` letters.
Word least_extension(const AdmissibilitySystem& sys, WordView w, int target) {
  Word out(w.begin(), w.end());
  while (static_cast<int>(out.size()) < target)
    out.push_back(sys.extensions[static_cast<std::size_t>(out.back())].front());
  return out;
}

}  // namespace

BowenReport bowen_scan(WordSpace& ws, const GibbsSolution& solution,
                       const DepthKFunction& phi_bar, int max_depth) {
  if (max_depth < 1) fail(errc::validation_error, "scan depth must be positive");
  if (max_depth >= solution.measure.depth)
    fail(errc::validation_error,
         "scan depth must stay below the solution depth");

  const AdmissibilitySystem& sys = ws.system();
  BowenReport rep;
  rep.max_depth = max_depth;
  rep.lip_phi_bar = lipschitz_seminorm(ws, phi_bar, phi_bar.depth);
  rep.inf_weight = std::numeric_limits<double>::infinity();
  for (double v : phi_bar.values)
    rep.inf_weight = std::min(rep.inf_weight, std::exp(v));
  rep.mixing_p = mixing_exponent(sys, 64);
  if (rep.mixing_p) {
    rep.theory_c = std::exp(rep.lip_phi_bar) *
                   std::max(1.0, std::pow(rep.inf_weight, -*rep.mixing_p));
  }

  rep.c_lower = std::numeric_limits<double>::infinity();
  rep.c_upper = 0.0;
  for (int m = 1; m <= max_depth; ++m) {
    const WordMeasure margin = prefix_marginal(ws, solution.measure, m);
    const AdmissibleWordTable& t = ws.table(m);
    for (std::int64_t i = 0; i < t.size(); ++i) {
      const WordView w = t.word(i);
      const Word rep_word = least_extension(sys, w, m + phi_bar.depth - 1);
      const double birkhoff = ergodic_sum(ws, phi_bar, rep_word);
      double weight = std::exp(birkhoff);
      for (int a : w) weight *= sys.grid.nu[static_cast<std::size_t>(a)];
      const double ratio = margin.masses[static_cast<std::size_t>(i)] / weight;
      rep.entries.push_back(BowenEntry{m, i, ratio});
      rep.c_lower = std::min(rep.c_lower, ratio);
      rep.c_upper = std::max(rep.c_upper, ratio);
    }
  }
  return rep;
}

namespace {

DepthKFunction centred_copy(WordSpace& ws, const GibbsSolution& solution,
                            const DepthKFunction& f) {
  DepthKFunction g = f;
  const double mean = integrate(ws, f, solution.measure);
  for (double& v : g.values) v -= mean;
  return g;
}

}  // namespace

CorrelationValue correlation_detail(WordSpace& ws, const GibbsSolution& solution,
                                    const DepthKFunction& phi_obs,
                                    const DepthKFunction& psi_obs, int m,
                                    const DepthKFunction& phi_bar) {
  if (m < 0) fail(errc::validation_error, "lag must be nonnegative");
  const DepthKFunction psi_c = centred_copy(ws, solution, psi_obs);

  DepthKFunction iter = psi_c;
  for (int j = 0; j < m; ++j) iter = apply_ruelle(ws, phi_bar, iter);
  const int join = std::max(phi_obs.depth, iter.depth);
  if (join > solution.measure.depth)
    fail(errc::depth_exhausted, "lag product deeper than the solution");
  DepthKFunction prod = embed(ws, phi_obs, join);
  const DepthKFunction rhs = embed(ws, iter, join);
  for (std::size_t i = 0; i < prod.values.size(); ++i)
    prod.values[i] *= rhs.values[i];

  CorrelationValue out;
  out.operator_form = integrate(ws, prod, solution.measure);
  if (m + phi_obs.depth <= solution.measure.depth)
    out.direct_form = direct_correlation(ws, solution, phi_obs, psi_obs, m);
  return out;
}

double correlation(WordSpace& ws, const GibbsSolution& solution,
                   const DepthKFunction& phi_obs, const DepthKFunction& psi_obs,
                   int m, const DepthKFunction& phi_bar) {
  return correlation_detail(ws, solution, phi_obs, psi_obs, m, phi_bar)
      .operator_form;
}

double direct_correlation(WordSpace& ws, const GibbsSolution& solution,
                          const DepthKFunction& phi_obs,
                          const DepthKFunction& psi_obs, int m) {
  if (m < 0) fail(errc::validation_error, "lag must be nonnegative");
  const int k = solution.measure.depth;
  if (m + phi_obs.depth > k)
    fail(errc::depth_exhausted,
         "direct form needs depth " + std::to_string(m + phi_obs.depth) +
             ", solution has " + std::to_string(k));
  if (psi_obs.depth > k)
    fail(errc::depth_exhausted, "right observable deeper than the solution");

  const AdmissibleWordTable& t = ws.table(k);
  const AdmissibleWordTable& tp = ws.table(phi_obs.depth);
  const std::vector<std::int64_t> to_psi = prefix_chain(ws, k, psi_obs.depth);
  double joint = 0.0;
  for (std::int64_t i = 0; i < t.size(); ++i) {
    const double mass = solution.measure.masses[static_cast<std::size_t>(i)];
    if (mass == 0.0) continue;
    const WordView w = t.word(i);
    const double shifted = phi_obs.values[static_cast<std::size_t>(tp.index_of(
        w.subspan(static_cast<std::size_t>(m), static_cast<std::size_t>(phi_obs.depth))))];
    joint += mass * shifted *
             psi_obs.values[static_cast<std::size_t>(to_psi[static_cast<std::size_t>(i)])];
  }
  const double mp = integrate(ws, phi_obs, solution.measure);
  const double mq = integrate(ws, psi_obs, solution.measure);
  return joint - mp * mq;
}

CorrelationCurve decay_fit(WordSpace& ws, const GibbsSolution& solution,
                           const DepthKFunction& phi_obs,
                           const DepthKFunction& psi_obs, int M,
                           const DepthKFunction& phi_bar) {
  if (M < 0) fail(errc::validation_error, "lag bound must be nonnegative");
  CorrelationCurve curve;

  const DepthKFunction psi_c = centred_copy(ws, solution, psi_obs);
  double sup_psi = 0.0;
  for (double v : psi_c.values) sup_psi = std::max(sup_psi, std::fabs(v));
  double l1_phi = 0.0;
  {
    DepthKFunction a = phi_obs;
    for (double& v : a.values) v = std::fabs(v);
    l1_phi = integrate(ws, a, solution.measure);
  }
  curve.c_theory = l1_phi * sup_psi;

  DepthKFunction iter = psi_c;
  for (int m = 0; m <= M; ++m) {
    const int join = std::max(phi_obs.depth, iter.depth);
    DepthKFunction prod = embed(ws, phi_obs, join);
    const DepthKFunction rhs = embed(ws, iter, join);
    for (std::size_t i = 0; i < prod.values.size(); ++i)
      prod.values[i] *= rhs.values[i];
    curve.values.push_back(integrate(ws, prod, solution.measure));
    if (m < M) iter = apply_ruelle(ws, phi_bar, iter);
  }

  // Log-linear fit over points above the numerical floor.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (int m = 0; m <= M; ++m) {
    const double a = std::fabs(curve.values[static_cast<std::size_t>(m)]);
    if (a <= kCorrelationFloor) continue;
    const double y = std::log(a);
    sx += m;
    sy += y;
    sxx += static_cast<double>(m) * m;
    sxy += m * y;
    ++n;
  }
  curve.usable_points = n;
  if (n < 3)
    fail(errc::insufficient_decay_data,
         "fewer than 3 correlation points above the floor");
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0)
    fail(errc::insufficient_decay_data, "degenerate lag design for the fit");
  curve.slope = (n * sxy - sx * sy) / denom;
  curve.lambda_fit = std::exp(curve.slope);
  curve.c_fit = std::exp((sy - curve.slope * sx) / n);
  return curve;
}

}  // namespace gibbslab
