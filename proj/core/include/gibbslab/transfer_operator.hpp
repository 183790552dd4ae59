#pragma once

#include <vector>

#include "gibbslab/config_space.hpp"

namespace gibbslab {

// Locally constant function determined by the first `depth` coordinates,
// stored as one value per word of the matching admissible table.
struct DepthKFunction {
  int depth = 0;
  std::vector<double> values;
};

DepthKFunction constant_function(WordSpace& ws, int depth, double value);

// Exact cylinder extension to a deeper table; evaluations are unchanged.
DepthKFunction embed(WordSpace& ws, const DepthKFunction& f, int depth);

// Value of f on any admissible word with at least f.depth letters.
double eval_on_word(WordSpace& ws, const DepthKFunction& f, WordView w);

double sup_norm(const DepthKFunction& f);

// Composition map table(from) -> table(to), to <= from, following prefixes.
std::vector<std::int64_t> prefix_chain(WordSpace& ws, int from, int to);

// Transfer operator with weights nu_a e^{phi(a x)} summed over the letters
// admissible in front of x. The result depends on the first k-1 coordinates
// only (k = max of the input depths, at least 1) and is returned embedded
// at depth k.
DepthKFunction apply_ruelle(WordSpace& ws, const DepthKFunction& phi,
                            const DepthKFunction& psi);

// Sum of phi over the first m = len(word) - depth(phi) + 1 shifted windows.
double ergodic_sum(WordSpace& ws, const DepthKFunction& phi, WordView word);

struct NormalizationData {
  double lambda = 0.0;
  DepthKFunction h;  // strictly positive, embedded at depth(phi)
  double residual = 0.0;
};

// Power iteration for the leading eigenpair of the transfer operator,
// deterministic start h = 1. h is scaled so that its nu-product average
// over the words of its table equals 1.
NormalizationData leading_eigendata(WordSpace& ws, const DepthKFunction& phi,
                                    double tol = 1e-12, int max_iters = 10000);

// phi_bar = phi + log h - log(h o shift) - log lambda, one level deeper
// than phi; satisfies L 1 = 1 up to the eigen residual.
DepthKFunction normalize_potential(WordSpace& ws, const DepthKFunction& phi,
                                   const NormalizationData& data);

// Certified upper bound for the Lipschitz seminorm of the locally constant
// function psi, scanned over word pairs of the given table depth.
double lipschitz_seminorm(WordSpace& ws, const DepthKFunction& psi,
                          int table_depth);

// Max residual of L1 = 1 on the deepest table psi_bar touches.
double normalization_residual(WordSpace& ws, const DepthKFunction& phi_bar);

inline constexpr int kGapProbeSteps = 24;

// Decay-rate probe: upper envelope of sup-norm decay of iterates of
// centred, sup-normalised indicator probes (1-words first, then 2-words,
// truncated to probe_count). Values near or above 1 mean no visible gap.
double spectral_gap_estimate(WordSpace& ws, const DepthKFunction& phi_bar,
                             int probe_count);

}  // namespace gibbslab
