#include "gibbslab/transfer_operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace gibbslab {

namespace {

void check_sized(WordSpace& ws, const DepthKFunction& f, const char* role) {
  if (f.depth < 1)
    fail(errc::validation_error, std::string(role) + " needs depth >= 1");
  if (static_cast<std::int64_t>(f.values.size()) != ws.table(f.depth).size())
    fail(errc::depth_mismatch,
         std::string(role) + " value vector does not match its word table");
}

// nu-product weight of each word in the table, unnormalized.
std::vector<double> product_weights(WordSpace& ws, int depth) {
  const AdmissibleWordTable& t = ws.table(depth);
  const std::vector<double>& nu = ws.system().grid.nu;
  std::vector<double> w(static_cast<std::size_t>(t.size()), 1.0);
  for (std::int64_t i = 0; i < t.size(); ++i)
    for (int a : t.word(i)) w[static_cast<std::size_t>(i)] *= nu[static_cast<std::size_t>(a)];
  return w;
}

}  // namespace

DepthKFunction constant_function(WordSpace& ws, int depth, double value) {
  if (depth < 1) fail(errc::validation_error, "function depth must be positive");
  DepthKFunction f;
  f.depth = depth;
  f.values.assign(static_cast<std::size_t>(ws.table(depth).size()), value);
  return f;
}

std::vector<std::int64_t> prefix_chain(WordSpace& ws, int from, int to) {
  if (to < 0 || to > from)
    fail(errc::validation_error, "prefix chain needs 0 <= to <= from");
  std::vector<std::int64_t> idx(static_cast<std::size_t>(ws.table(from).size()));
  std::iota(idx.begin(), idx.end(), std::int64_t{0});
  for (int d = from; d > to; --d) {
    const std::vector<std::int64_t>& pm = ws.prefix_index(d);
    for (auto& v : idx) v = pm[static_cast<std::size_t>(v)];
  }
  return idx;
}

DepthKFunction embed(WordSpace& ws, const DepthKFunction& f, int depth) {
  check_sized(ws, f, "embedded function");
  if (depth < f.depth)
    fail(errc::depth_mismatch, "cannot embed into a shallower table");
  if (depth == f.depth) return f;
  const std::vector<std::int64_t> chain = prefix_chain(ws, depth, f.depth);
  DepthKFunction g;
  g.depth = depth;
  g.values.resize(chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i)
    g.values[i] = f.values[static_cast<std::size_t>(chain[i])];
  return g;
}

double eval_on_word(WordSpace& ws, const DepthKFunction& f, WordView w) {
  check_sized(ws, f, "function");
  if (static_cast<int>(w.size()) < f.depth)
    fail(errc::word_too_short, "word shorter than function depth");
  const std::int64_t i =
      ws.table(f.depth).index_of(w.first(static_cast<std::size_t>(f.depth)));
  return f.values[static_cast<std::size_t>(i)];
}

double sup_norm(const DepthKFunction& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::fabs(v));
  return m;
}

DepthKFunction apply_ruelle(WordSpace& ws, const DepthKFunction& phi,
                            const DepthKFunction& psi) {
  check_sized(ws, phi, "potential");
  check_sized(ws, psi, "operand");
  const int k = std::max(phi.depth, psi.depth);
  const AdmissibleWordTable& deep = ws.table(k + 1);
  const std::vector<std::int64_t>& tail = ws.suffix_index(k + 1);
  const std::vector<std::int64_t> to_phi = prefix_chain(ws, k + 1, phi.depth);
  const std::vector<std::int64_t> to_psi = prefix_chain(ws, k + 1, psi.depth);
  const std::vector<double>& nu = ws.system().grid.nu;

  DepthKFunction out;
  out.depth = k;
  out.values.assign(static_cast<std::size_t>(ws.table(k).size()), 0.0);
  for (std::int64_t u = 0; u < deep.size(); ++u) {
    const int a = deep.word(u)[0];
    out.values[static_cast<std::size_t>(tail[static_cast<std::size_t>(u)])] +=
        nu[static_cast<std::size_t>(a)] *
        std::exp(phi.values[static_cast<std::size_t>(to_phi[static_cast<std::size_t>(u)])]) *
        psi.values[static_cast<std::size_t>(to_psi[static_cast<std::size_t>(u)])];
  }
  return out;
}

double ergodic_sum(WordSpace& ws, const DepthKFunction& phi, WordView word) {
  check_sized(ws, phi, "potential");
  const int m = static_cast<int>(word.size()) - phi.depth + 1;
  if (m < 1) fail(errc::word_too_short, "word shorter than one evaluation window");
  if (!ws.system().word_admissible(word))
    fail(errc::validation_error, "ergodic sum needs an admissible word");
  const AdmissibleWordTable& t = ws.table(phi.depth);
  double s = 0.0;
  for (int j = 0; j < m; ++j)
    s += phi.values[static_cast<std::size_t>(t.index_of(
        word.subspan(static_cast<std::size_t>(j), static_cast<std::size_t>(phi.depth))))];
  return s;
}

NormalizationData leading_eigendata(WordSpace& ws, const DepthKFunction& phi,
                                    double tol, int max_iters) {
  check_sized(ws, phi, "potential");
  for (double v : phi.values)
    if (!std::isfinite(v)) fail(errc::validation_error, "potential must be finite");
  if (max_iters < 1) fail(errc::validation_error, "need at least one iteration");

  const int hd = std::max(1, phi.depth - 1);
  const std::vector<double> weights = product_weights(ws, hd);

  DepthKFunction h = constant_function(ws, hd, 1.0);
  auto proxy_integral = [&](const DepthKFunction& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) s += weights[i] * f.values[i];
    return s;
  };
  {
    const double s = proxy_integral(h);
    for (double& v : h.values) v /= s;
  }

  double lambda = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iters; ++it) {
    const DepthKFunction lifted = apply_ruelle(ws, phi, h);  // depth k = max(phi.depth, hd)
    // lifted depends on its first k-1 >= hd-? coordinates; project to hd.
    DepthKFunction next;
    next.depth = hd;
    next.values.assign(h.values.size(), 0.0);
    if (lifted.depth == hd) {
      next.values = lifted.values;
    } else {
      const std::vector<std::int64_t> down = prefix_chain(ws, lifted.depth, hd);
      for (std::size_t i = 0; i < lifted.values.size(); ++i)
        next.values[static_cast<std::size_t>(down[i])] = lifted.values[i];
    }
    lambda = proxy_integral(next);
    if (!(lambda > 0.0))
      fail(errc::no_convergence, "power iteration lost positivity");
    residual = 0.0;
    for (std::size_t i = 0; i < next.values.size(); ++i)
      residual = std::max(residual, std::fabs(next.values[i] - lambda * h.values[i]));
    for (std::size_t i = 0; i < next.values.size(); ++i)
      next.values[i] /= lambda;
    h = std::move(next);
    if (residual <= tol) {
      NormalizationData data;
      data.lambda = lambda;
      data.h = embed(ws, h, phi.depth);
      data.residual = residual;
      for (double v : data.h.values)
        if (!(v > 0.0))
          fail(errc::no_convergence, "eigenfunction lost strict positivity");
      return data;
    }
  }
  fail(errc::no_convergence,
       "power iteration did not reach tolerance; last residual " +
           std::to_string(residual));
}

DepthKFunction normalize_potential(WordSpace& ws, const DepthKFunction& phi,
                                   const NormalizationData& data) {
  check_sized(ws, phi, "potential");
  check_sized(ws, data.h, "eigenfunction");
  if (!(data.lambda > 0.0))
    fail(errc::validation_error, "leading eigenvalue must be positive");
  for (double v : data.h.values)
    if (!(v > 0.0)) fail(errc::validation_error, "eigenfunction must be positive");
  if (data.h.depth > phi.depth + 1)
    fail(errc::depth_mismatch, "eigenfunction deeper than the result depth");

  const int D = phi.depth + 1;
  const std::vector<std::int64_t> to_phi = prefix_chain(ws, D, phi.depth);
  const std::vector<std::int64_t> to_h = prefix_chain(ws, D, data.h.depth);
  const std::vector<std::int64_t>& tail = ws.suffix_index(D);
  const std::vector<std::int64_t> tail_to_h = prefix_chain(ws, D - 1, data.h.depth);
  const double log_lambda = std::log(data.lambda);

  DepthKFunction out;
  out.depth = D;
  out.values.resize(static_cast<std::size_t>(ws.table(D).size()));
  for (std::size_t w = 0; w < out.values.size(); ++w) {
    const double lh = std::log(data.h.values[static_cast<std::size_t>(to_h[w])]);
    const double lhs = std::log(
        data.h
            .values[static_cast<std::size_t>(tail_to_h[static_cast<std::size_t>(tail[w])])]);
    out.values[w] =
        phi.values[static_cast<std::size_t>(to_phi[w])] + lh - lhs - log_lambda;
  }
  return out;
}

double normalization_residual(WordSpace& ws, const DepthKFunction& phi_bar) {
  const DepthKFunction one = constant_function(ws, 1, 1.0);
  const DepthKFunction img = apply_ruelle(ws, phi_bar, one);
  double r = 0.0;
  for (double v : img.values) r = std::max(r, std::fabs(v - 1.0));
  return r;
}

double lipschitz_seminorm(WordSpace& ws, const DepthKFunction& psi,
                          int table_depth) {
  check_sized(ws, psi, "function");
  if (table_depth < psi.depth)
    fail(errc::validation_error, "seminorm table shallower than the function");
  const DepthKFunction f = embed(ws, psi, table_depth);
  const AdmissibleWordTable& t = ws.table(table_depth);
  const std::int64_t n = t.size();
  if (n > 20000)
    fail(errc::depth_overflow, "seminorm pair scan too large at this depth");
  const SpinGrid& grid = ws.system().grid;
  double best = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i + 1; j < n; ++j) {
      const double diff = std::fabs(f.values[static_cast<std::size_t>(i)] -
                                    f.values[static_cast<std::size_t>(j)]);
      if (diff == 0.0) continue;
      const double d = seq_distance(grid, t.word(i), t.word(j), table_depth).partial;
      best = std::max(best, diff / d);
    }
  }
  return best;
}

double spectral_gap_estimate(WordSpace& ws, const DepthKFunction& phi_bar,
                             int probe_count) {
  check_sized(ws, phi_bar, "normalized potential");
  if (normalization_residual(ws, phi_bar) > 1e-8)
    fail(errc::not_normalized, "gap probe needs a normalized potential");
  if (probe_count < 1) fail(errc::invalid_probe, "probe set empty");

  // Candidate probes: indicators of 1-words, then of 2-words.
  std::vector<DepthKFunction> probes;
  const std::int64_t n1 = ws.table(1).size();
  for (std::int64_t i = 0; i < n1 && static_cast<int>(probes.size()) < probe_count; ++i) {
    DepthKFunction p = constant_function(ws, 1, 0.0);
    p.values[static_cast<std::size_t>(i)] = 1.0;
    probes.push_back(std::move(p));
  }
  const std::int64_t n2 = ws.table(2).size();
  for (std::int64_t i = 0; i < n2 && static_cast<int>(probes.size()) < probe_count; ++i) {
    DepthKFunction p = constant_function(ws, 2, 0.0);
    p.values[static_cast<std::size_t>(i)] = 1.0;
    probes.push_back(std::move(p));
  }
  if (probes.empty()) fail(errc::invalid_probe, "probe set empty");

  const int m = kGapProbeSteps;
  const int extra = 16;
  double estimate = 0.0;
  bool usable = false;
  for (const DepthKFunction& probe : probes) {
    std::vector<DepthKFunction> iterates;
    iterates.reserve(static_cast<std::size_t>(m + extra) + 1);
    iterates.push_back(embed(ws, probe, std::max(probe.depth, phi_bar.depth)));
    for (int j = 1; j <= m + extra; ++j)
      iterates.push_back(apply_ruelle(ws, phi_bar, iterates.back()));
    const double center = iterates.back().values.front();
    auto centred_sup = [&](const DepthKFunction& f) {
      double s = 0.0;
      for (double v : f.values) s = std::max(s, std::fabs(v - center));
      return s;
    };
    const double a0 = centred_sup(iterates.front());
    if (a0 < 1e-14) continue;
    usable = true;
    for (int j = (m + 1) / 2; j <= m; ++j) {
      const double aj = centred_sup(iterates[static_cast<std::size_t>(j)]) / a0;
      if (aj <= 0.0) continue;
      estimate = std::max(estimate, std::pow(aj, 1.0 / j));
    }
  }
  if (!usable) fail(errc::invalid_probe, "all probes constant after centring");
  return estimate;
}

}  // namespace gibbslab
