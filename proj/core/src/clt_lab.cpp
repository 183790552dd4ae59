#include "gibbslab/clt_lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <string>
#include <thread>

#include "gibbslab/rng.hpp"

namespace gibbslab {

DepthKFunction center(WordSpace& ws, const DepthKFunction& psi,
                      const GibbsSolution& solution) {
  DepthKFunction out = psi;
  // Normalizing by the total mass keeps the centred integral at machine
  // zero even when the solved masses carry the solver tolerance.
  const double mean =
      integrate(ws, psi, solution.measure) / total_mass(solution.measure);
  for (double& v : out.values) v -= mean;
  return out;
}

DepthKFunction compact(WordSpace& ws, const DepthKFunction& f) {
  DepthKFunction cur = f;
  while (cur.depth > 1) {
    const std::vector<std::int64_t>& pref = ws.prefix_index(cur.depth);
    std::vector<double> down(static_cast<std::size_t>(ws.table(cur.depth - 1).size()));
    std::vector<char> set(down.size(), 0);
    bool constant = true;
    for (std::size_t i = 0; i < cur.values.size() && constant; ++i) {
      const std::size_t g = static_cast<std::size_t>(pref[i]);
      if (!set[g]) {
        down[g] = cur.values[i];
        set[g] = 1;
      } else if (down[g] != cur.values[i]) {
        constant = false;
      }
    }
    if (!constant) break;
    cur.depth -= 1;
    cur.values = std::move(down);
  }
  return cur;
}

namespace {

std::vector<std::int64_t> suffix_chain(WordSpace& ws, int from, int steps) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(ws.table(from).size()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::int64_t>(i);
  for (int d = from; d > from - steps; --d) {
    const std::vector<std::int64_t>& sm = ws.suffix_index(d);
    for (auto& v : idx) v = sm[static_cast<std::size_t>(v)];
  }
  return idx;
}

DepthKFunction shift_compose(WordSpace& ws, const DepthKFunction& f) {
  DepthKFunction out;
  out.depth = f.depth + 1;
  const std::vector<std::int64_t>& tail = ws.suffix_index(out.depth);
  out.values.resize(static_cast<std::size_t>(ws.table(out.depth).size()));
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = f.values[static_cast<std::size_t>(tail[i])];
  return out;
}

}  // namespace

DepthKFunction conditional_expectation(WordSpace& ws,
                                       const DepthKFunction& psi_tilde, int m,
                                       const DepthKFunction& phi_bar,
                                       const GibbsSolution& solution) {
  if (m < 0) fail(errc::validation_error, "conditioning lag must be nonnegative");
  if (m == 0) return psi_tilde;
  DepthKFunction f = psi_tilde;
  for (int j = 0; j < m; ++j) f = apply_ruelle(ws, phi_bar, f);
  f = compact(ws, f);
  const int D = m + f.depth;
  if (D > solution.measure.depth)
    fail(errc::depth_exhausted,
         "conditioned function needs depth " + std::to_string(D) +
             ", solution has " + std::to_string(solution.measure.depth));
  const std::vector<std::int64_t> strip = suffix_chain(ws, D, m);
  DepthKFunction out;
  out.depth = D;
  out.values.resize(static_cast<std::size_t>(ws.table(D).size()));
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = f.values[static_cast<std::size_t>(strip[i])];
  return out;
}

int default_probe_count(WordSpace& ws) {
  const std::int64_t n = ws.table(1).size() + ws.table(2).size();
  return static_cast<int>(std::min<std::int64_t>(n, 34));
}

MartingaleDecomposition build_decomposition(WordSpace& ws,
                                            const DepthKFunction& psi,
                                            const GibbsSolution& solution,
                                            const DepthKFunction& phi_bar,
                                            double tol) {
  if (!(tol > 0.0)) fail(errc::validation_error, "tolerance must be positive");
  MartingaleDecomposition dec;
  dec.psi_tilde = center(ws, psi, solution);
  dec.gap = spectral_gap_estimate(ws, phi_bar, default_probe_count(ws));
  if (dec.gap >= 1.0 - 1e-6)
    fail(errc::no_gap, "no decay-rate gap measured; series cannot be truncated");

  const int w = std::max(phi_bar.depth, dec.psi_tilde.depth);
  const double factor = dec.gap < 1e-300 ? 0.0 : dec.gap / (1.0 - dec.gap);
  DepthKFunction iter = embed(ws, dec.psi_tilde, w);
  DepthKFunction zeta = constant_function(ws, w, 0.0);
  constexpr int kMaxTerms = 2000;
  int terms = 0;
  double tail = std::numeric_limits<double>::infinity();
  for (int j = 1; j <= kMaxTerms; ++j) {
    iter = apply_ruelle(ws, phi_bar, iter);
    for (std::size_t i = 0; i < zeta.values.size(); ++i)
      zeta.values[i] -= iter.values[i];
    tail = sup_norm(iter) * factor;
    terms = j;
    if (tail <= tol) break;
  }
  if (tail > tol)
    fail(errc::no_gap, "series tail did not certify below tolerance");
  dec.series_terms = terms;
  dec.tail_bound = tail;
  dec.zeta = std::move(zeta);

  const DepthKFunction zshift = shift_compose(ws, dec.zeta);
  DepthKFunction rho = embed(ws, dec.psi_tilde, dec.zeta.depth + 1);
  const DepthKFunction zdeep = embed(ws, dec.zeta, dec.zeta.depth + 1);
  for (std::size_t i = 0; i < rho.values.size(); ++i)
    rho.values[i] += zshift.values[i] - zdeep.values[i];
  dec.rho = std::move(rho);
  return dec;
}

VarianceReport green_kubo_variance(WordSpace& ws, const DepthKFunction& psi,
                                   const GibbsSolution& solution,
                                   const DepthKFunction& phi_bar, int J) {
  if (J < 1) fail(errc::validation_error, "need at least one lag");
  VarianceReport rep;
  rep.lags = J;

  const DepthKFunction psi_c = center(ws, psi, solution);
  DepthKFunction sq = psi_c;
  for (double& v : sq.values) v *= v;
  const double e2 = integrate(ws, sq, solution.measure);
  double sup = 0.0;
  for (double v : psi_c.values) sup = std::max(sup, std::fabs(v));

  // The series plateaus near the solution's own convergence level, so the
  // truncation target must sit above it or certification can never finish.
  const double series_tol = std::max(1e-12, 100.0 * solution.final_gap);
  const MartingaleDecomposition dec =
      build_decomposition(ws, psi, solution, phi_bar, series_tol);
  rep.gap = dec.gap;
  rep.series_terms = dec.series_terms;
  {
    DepthKFunction r2 = dec.rho;
    for (double& v : r2.values) v *= v;
    rep.sigma2_rho = integrate(ws, r2, solution.measure);
  }

  rep.partial_sums.push_back(e2);
  DepthKFunction iter = embed(ws, psi_c, std::max(phi_bar.depth, psi_c.depth));
  double acc = e2;
  for (int j = 1; j <= J; ++j) {
    iter = apply_ruelle(ws, phi_bar, iter);
    const int join = std::max(psi_c.depth, iter.depth);
    DepthKFunction prod = embed(ws, psi_c, join);
    const DepthKFunction rhs = embed(ws, iter, join);
    for (std::size_t i = 0; i < prod.values.size(); ++i)
      prod.values[i] *= rhs.values[i];
    acc += 2.0 * integrate(ws, prod, solution.measure);
    rep.partial_sums.push_back(acc);
  }
  rep.sigma2_green_kubo = acc;
  rep.tail_bound = 2.0 * std::sqrt(std::max(e2, 0.0)) * sup *
                   std::pow(rep.gap, J + 1) / (1.0 - rep.gap);
  return rep;
}

CoboundaryVerdict coboundary_test(WordSpace& ws, const DepthKFunction& psi,
                                  const GibbsSolution& solution,
                                  const DepthKFunction& phi_bar, double tol) {
  if (!(tol > 0.0)) fail(errc::validation_error, "tolerance must be positive");
  const MartingaleDecomposition dec =
      build_decomposition(ws, psi, solution, phi_bar, tol);
  DepthKFunction r2 = dec.rho;
  for (double& v : r2.values) v *= v;
  const double s2 = integrate(ws, r2, solution.measure);

  CoboundaryVerdict verdict;
  verdict.sigma2_rho = s2;
  if (s2 <= tol) {
    verdict.is_coboundary = true;
    verdict.u = dec.zeta;
    verdict.residual = sup_norm(dec.rho);
  }
  return verdict;
}

namespace {

// Context-indexed transition table for the prepend kernel.
struct OrbitKernel {
  int context_depth = 0;
  std::int64_t start = 0;
  std::vector<std::int64_t> row_start;  // per context
  std::vector<double> cumulative;       // within-row cumulative probabilities
  std::vector<int> symbol;
  std::vector<std::int64_t> next;
};

OrbitKernel build_kernel(WordSpace& ws, const DepthKFunction& phi_bar,
                         const GibbsSolution& solution) {
  OrbitKernel kern;
  const int d = phi_bar.depth;
  kern.context_depth = d - 1;
  const AdmissibleWordTable& t = ws.table(d);
  const std::vector<std::int64_t>& tail = ws.suffix_index(d);
  const std::vector<std::int64_t>& head = ws.prefix_index(d);
  const std::int64_t contexts = ws.table(d - 1).size();
  const std::vector<double>& nu = ws.system().grid.nu;

  std::vector<std::vector<std::int64_t>> rows(static_cast<std::size_t>(contexts));
  for (std::int64_t u = 0; u < t.size(); ++u)
    rows[static_cast<std::size_t>(tail[static_cast<std::size_t>(u)])].push_back(u);

  kern.row_start.push_back(0);
  for (std::int64_t c = 0; c < contexts; ++c) {
    double acc = 0.0;
    for (std::int64_t u : rows[static_cast<std::size_t>(c)]) {
      const int a = t.word(u)[0];
      acc += nu[static_cast<std::size_t>(a)] *
             std::exp(phi_bar.values[static_cast<std::size_t>(u)]);
      kern.cumulative.push_back(acc);
      kern.symbol.push_back(a);
      kern.next.push_back(head[static_cast<std::size_t>(u)]);
    }
    kern.row_start.push_back(static_cast<std::int64_t>(kern.cumulative.size()));
  }

  // Start from the heaviest context of the solution's marginal.
  if (kern.context_depth >= 1) {
    const WordMeasure margin =
        prefix_marginal(ws, solution.measure, kern.context_depth);
    std::int64_t best = 0;
    for (std::int64_t i = 1; i < static_cast<std::int64_t>(margin.masses.size()); ++i)
      if (margin.masses[static_cast<std::size_t>(i)] >
          margin.masses[static_cast<std::size_t>(best)])
        best = i;
    kern.start = best;
  }
  return kern;
}

void run_orbit(const OrbitKernel& kern, std::int64_t total, Rng& rng,
               const std::function<void(std::int64_t, int)>& sink) {
  std::int64_t ctx = kern.start;
  for (std::int64_t t = 0; t < total; ++t) {
    const double r = rng.next_double();
    const std::int64_t lo = kern.row_start[static_cast<std::size_t>(ctx)];
    const std::int64_t hi = kern.row_start[static_cast<std::size_t>(ctx) + 1];
    std::int64_t pick = hi - 1;
    for (std::int64_t p = lo; p < hi; ++p)
      if (r < kern.cumulative[static_cast<std::size_t>(p)]) {
        pick = p;
        break;
      }
    sink(t, kern.symbol[static_cast<std::size_t>(pick)]);
    ctx = kern.next[static_cast<std::size_t>(pick)];
  }
}

int thread_budget() {
  if (const char* env = std::getenv("GIBBSLAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1 && v <= 256) return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(std::min(hw, 16u));
}

}  // namespace

std::vector<int> sample_orbit(WordSpace& ws, const DepthKFunction& phi_bar,
                              const GibbsSolution& solution, std::int64_t length,
                              std::int64_t burn_in, std::uint64_t seed) {
  if (length < 1) fail(errc::validation_error, "orbit length must be positive");
  if (burn_in < 0) fail(errc::validation_error, "burn-in must be nonnegative");
  if (length + burn_in > 200'000'000)
    fail(errc::validation_error, "orbit budget exceeded");
  if (normalization_residual(ws, phi_bar) > 1e-8)
    fail(errc::not_normalized, "orbit kernel needs a normalized potential");

  const OrbitKernel kern = build_kernel(ws, phi_bar, solution);
  const std::int64_t total = burn_in + length;
  std::vector<int> ring(static_cast<std::size_t>(length));
  Rng rng(seed);
  run_orbit(kern, total, rng, [&](std::int64_t t, int a) {
    ring[static_cast<std::size_t>(t % length)] = a;
  });
  std::vector<int> out(static_cast<std::size_t>(length));
  for (std::int64_t i = 0; i < length; ++i)
    out[static_cast<std::size_t>(i)] =
        ring[static_cast<std::size_t>((total - 1 - i) % length)];
  return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double kolmogorov_p_proxy(double x) {
  if (x <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

CltReport empirical_clt(WordSpace& ws, const DepthKFunction& phi_bar,
                        const GibbsSolution& solution, const DepthKFunction& psi,
                        int block_m, std::int64_t n_samples, std::uint64_t seed) {
  if (block_m < 1) fail(errc::validation_error, "block length must be positive");
  if (n_samples < 1000)
    fail(errc::validation_error, "need at least 1000 sample blocks");

  const VarianceReport var =
      green_kubo_variance(ws, psi, solution, phi_bar, kDefaultVarianceLags);
  const double sigma2 = var.sigma2_green_kubo;
  if (sigma2 <= 1e-12)
    fail(errc::zero_variance,
         "observable has vanishing asymptotic variance; it is a coboundary");

  CltReport rep;
  rep.samples = n_samples;
  rep.block = block_m;
  rep.sigma2_reference = sigma2;

  std::int64_t mixing_time = 1;
  if (var.gap > 0.0 && var.gap < 1.0)
    mixing_time = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::ceil(-1.0 / std::log(var.gap))));
  rep.burn_in = std::max<std::int64_t>(5 * mixing_time, 100);

  const DepthKFunction psi_c = center(ws, psi, solution);
  const OrbitKernel kern = build_kernel(ws, phi_bar, solution);
  const AdmissibleWordTable& tpsi = ws.table(psi_c.depth);
  const int d = psi_c.depth;
  const std::int64_t block_len = static_cast<std::int64_t>(block_m) + d - 1;
  const std::int64_t total = rep.burn_in + block_len;

  std::vector<double> stats(static_cast<std::size_t>(n_samples));
  const int threads = std::min<int>(thread_budget(),
                                    static_cast<int>(std::max<std::int64_t>(1, n_samples)));
  auto worker = [&](std::int64_t lo, std::int64_t hi) {
    std::vector<int> ring(static_cast<std::size_t>(block_len));
    std::vector<int> word(static_cast<std::size_t>(block_len));
    for (std::int64_t b = lo; b < hi; ++b) {
      Rng child = Rng::derive(seed, static_cast<std::uint64_t>(b));
      run_orbit(kern, total, child, [&](std::int64_t t, int a) {
        ring[static_cast<std::size_t>(t % block_len)] = a;
      });
      for (std::int64_t i = 0; i < block_len; ++i)
        word[static_cast<std::size_t>(i)] =
            ring[static_cast<std::size_t>((total - 1 - i) % block_len)];
      double s = 0.0;
      for (int j = 0; j < block_m; ++j)
        s += psi_c.values[static_cast<std::size_t>(tpsi.index_of(
            WordView(word.data() + j, static_cast<std::size_t>(d))))];
      stats[static_cast<std::size_t>(b)] = s / std::sqrt(static_cast<double>(block_m));
    }
  };
  if (threads <= 1) {
    worker(0, n_samples);
  } else {
    std::vector<std::thread> pool;
    const std::int64_t chunk = (n_samples + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::int64_t lo = t * chunk;
      const std::int64_t hi = std::min<std::int64_t>(n_samples, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  double mean = 0.0;
  for (double v : stats) mean += v;
  mean /= static_cast<double>(n_samples);
  double varb = 0.0;
  for (double v : stats) varb += (v - mean) * (v - mean);
  varb /= static_cast<double>(n_samples - 1);
  rep.batch_mean = mean;
  rep.batch_variance = varb;

  std::vector<double> sorted = stats;
  std::sort(sorted.begin(), sorted.end());
  const double sd = std::sqrt(sigma2);
  double ks = 0.0;
  for (std::int64_t i = 0; i < n_samples; ++i) {
    const double f = normal_cdf(sorted[static_cast<std::size_t>(i)] / sd);
    const double lo = static_cast<double>(i) / static_cast<double>(n_samples);
    const double hi = static_cast<double>(i + 1) / static_cast<double>(n_samples);
    ks = std::max(ks, std::max(f - lo, hi - f));
  }
  rep.ks = ks;
  rep.p_value_proxy =
      kolmogorov_p_proxy(std::sqrt(static_cast<double>(n_samples)) * ks);

  const int bins = 41;
  const double span = 4.0 * sd;
  rep.bin_edges.resize(bins + 1);
  for (int i = 0; i <= bins; ++i)
    rep.bin_edges[static_cast<std::size_t>(i)] =
        -span + 2.0 * span * static_cast<double>(i) / bins;
  rep.bin_masses.assign(bins, 0.0);
  const double width = 2.0 * span / bins;
  for (double v : stats) {
    int idx = static_cast<int>(std::floor((v + span) / width));
    idx = std::clamp(idx, 0, bins - 1);
    rep.bin_masses[static_cast<std::size_t>(idx)] += 1.0 / static_cast<double>(n_samples);
  }
  return rep;
}

}  // namespace gibbslab
