#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "gibbslab/transfer_operator.hpp"
#include "gibbslab/transport_lp.hpp"

namespace gibbslab {

// Probability vector over the admissible words of one depth.
struct WordMeasure {
  int depth = 0;
  std::vector<double> masses;
};

WordMeasure uniform_measure(WordSpace& ws, int depth);
WordMeasure dirac_measure(WordSpace& ws, WordView w);
void validate_measure(WordSpace& ws, const WordMeasure& mu, double tol = 1e-12);

double total_mass(const WordMeasure& mu);

// Marginal on the first `depth` coordinates.
WordMeasure prefix_marginal(WordSpace& ws, const WordMeasure& mu, int depth);
// Marginal of the shifted measure: mass of the last k-1 coordinates.
WordMeasure shift_marginal(WordSpace& ws, const WordMeasure& mu);

double integrate(WordSpace& ws, const DepthKFunction& f, const WordMeasure& mu);

// Dual transfer action at the measure's depth. Mass is preserved exactly
// when phi_bar is normalized; otherwise the output mass is the integral of
// L1, left unrescaled so callers can detect the drift.
WordMeasure dual_apply(WordSpace& ws, const DepthKFunction& phi_bar,
                       const WordMeasure& mu);

enum class GroundMetric { bounded, raw };

struct WassersteinResult {
  double value = 0.0;
  double cost_tail = 0.0;  // per-pair truncation slack of the ground cost
  double duality_gap = 0.0;
  std::int64_t pivots = 0;
};

// Exact optimal transport cost between two measures of equal depth under
// the truncated sequence metric (optionally rescaled into the bounded
// metric). The result is orientation-independent bit for bit.
WassersteinResult wasserstein(WordSpace& ws, const WordMeasure& mu,
                              const WordMeasure& eta, GroundMetric metric,
                              const MetricConfig& cfg, int horizon);

struct Coupling {
  int depth = 0;
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<double> joint;  // row-major, rows index mu's table
  double cost = 0.0;
  double marginal_residual = 0.0;
};

Coupling optimal_plan(WordSpace& ws, const WordMeasure& mu,
                      const WordMeasure& eta, GroundMetric metric,
                      const MetricConfig& cfg, int horizon);

// Maximal coupling mass on the set of pairs agreeing on the first k
// coordinates; measures may live at different depths >= k.
double diagonal_mass(WordSpace& ws, const WordMeasure& mu,
                     const WordMeasure& eta, int k);

// Finitely supported measure on words of one length, not necessarily a
// full table; atoms are explicit words.
struct SupportMeasure {
  int length = 0;
  std::vector<Word> atoms;
  std::vector<double> masses;
};

// Exact m-fold dual iterate of the Dirac mass at word x: atoms are the
// admissible prepends a_m ... a_1 x with their transfer weights.
SupportMeasure iterate_dirac(WordSpace& ws, const DepthKFunction& phi_bar,
                             WordView x, int m);

struct ContractionCertificate {
  double alpha = 0.0;
  int m0 = 0;
  int m1 = 0;
  int steps = 0;  // the m actually used
  std::vector<double> measured_ratios;
  double beta = 0.0;  // max measured ratio over nonzero base distances
  int violations = 0;
};

int required_iterate_count(const MetricConfig& cfg);

ContractionCertificate certify_contraction(
    WordSpace& ws, const DepthKFunction& phi_bar, const MetricConfig& cfg,
    const std::vector<std::pair<Word, Word>>& dirac_pairs, int m);

struct GibbsSolution {
  WordMeasure measure;
  NormalizationData normalization;
  ContractionCertificate certificate;
  int iterations = 0;
  double final_gap = 0.0;
  double shift_residual = 0.0;
  std::vector<double> step_history;
  bool exact_steps = true;  // false when steps used the mass-difference bound
};

// Banach iteration of the dual operator from mu0 until two consecutive
// steps fall below tol; certifies contraction on a default pair family.
GibbsSolution solve_gibbs(WordSpace& ws, const DepthKFunction& phi_bar,
                          const WordMeasure& mu0, double tol, int max_outer,
                          const NormalizationData* origin = nullptr);

}  // namespace gibbslab
