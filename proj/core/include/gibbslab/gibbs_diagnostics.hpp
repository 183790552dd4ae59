#pragma once

#include <optional>
#include <vector>

#include "gibbslab/measure_transport.hpp"

namespace gibbslab {

double cylinder_mass(WordSpace& ws, const WordMeasure& mu, const CylinderSet& c);

struct BowenEntry {
  int m = 0;
  std::int64_t word = 0;  // index into table(m)
  double ratio = 0.0;
};

// Cylinder-mass comparison against the weighted Birkhoff weight
// e^{S_m phi_bar(x~)} * prod_j nu(w_j), x~ the lexicographically least
// admissible extension of the cylinder word.
struct BowenReport {
  int min_depth = 1;
  int max_depth = 0;
  std::vector<BowenEntry> entries;
  double c_lower = 0.0;
  double c_upper = 0.0;
  std::optional<double> theory_c;  // absent when the mixing exponent is unknown
  std::optional<int> mixing_p;
  double lip_phi_bar = 0.0;
  double inf_weight = 0.0;  // inf e^{phi_bar}
};

BowenReport bowen_scan(WordSpace& ws, const GibbsSolution& solution,
                       const DepthKFunction& phi_bar, int max_depth);

struct CorrelationValue {
  double operator_form = 0.0;
  std::optional<double> direct_form;  // absent beyond the direct-depth budget
};

// Signed correlation at lag m between phi_obs and psi_obs under the
// solution measure, via the transfer identity with the centred right factor.
CorrelationValue correlation_detail(WordSpace& ws, const GibbsSolution& solution,
                                    const DepthKFunction& phi_obs,
                                    const DepthKFunction& psi_obs, int m,
                                    const DepthKFunction& phi_bar);

double correlation(WordSpace& ws, const GibbsSolution& solution,
                   const DepthKFunction& phi_obs, const DepthKFunction& psi_obs,
                   int m, const DepthKFunction& phi_bar);

// Direct word-expansion form; throws DepthExhausted when m + depth(phi_obs)
// exceeds the solution depth.
double direct_correlation(WordSpace& ws, const GibbsSolution& solution,
                          const DepthKFunction& phi_obs,
                          const DepthKFunction& psi_obs, int m);

inline constexpr double kCorrelationFloor = 1e-14;

struct CorrelationCurve {
  std::vector<double> values;  // Cor(m), m = 0..M, signed
  double slope = 0.0;          // least-squares slope of log|Cor|
  double lambda_fit = 0.0;
  double c_fit = 0.0;
  int usable_points = 0;
  double c_theory = 0.0;  // L1 norm of phi_obs times sup of centred psi_obs
};

CorrelationCurve decay_fit(WordSpace& ws, const GibbsSolution& solution,
                           const DepthKFunction& phi_obs,
                           const DepthKFunction& psi_obs, int M,
                           const DepthKFunction& phi_bar);

}  // namespace gibbslab
