#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gibbslab/measure_transport.hpp"

namespace gibbslab {

// psi minus its solution-measure average.
DepthKFunction center(WordSpace& ws, const DepthKFunction& psi,
                      const GibbsSolution& solution);

// Exactly reduce an embedded function to its minimal depth.
DepthKFunction compact(WordSpace& ws, const DepthKFunction& f);

// E(psi_tilde | B_m) realized as (L^m psi_tilde) o shift^m; the result
// depends on coordinates m+1 onward only.
DepthKFunction conditional_expectation(WordSpace& ws,
                                       const DepthKFunction& psi_tilde, int m,
                                       const DepthKFunction& phi_bar,
                                       const GibbsSolution& solution);

struct MartingaleDecomposition {
  DepthKFunction psi_tilde;
  DepthKFunction zeta;  // minus the truncated series of transfer iterates
  DepthKFunction rho;   // psi_tilde - zeta + zeta o shift
  int series_terms = 0;
  double tail_bound = 0.0;
  double gap = 0.0;  // measured decay-rate estimate used for the tail
};

int default_probe_count(WordSpace& ws);

MartingaleDecomposition build_decomposition(WordSpace& ws,
                                            const DepthKFunction& psi,
                                            const GibbsSolution& solution,
                                            const DepthKFunction& phi_bar,
                                            double tol);

inline constexpr int kDefaultVarianceLags = 64;

struct VarianceReport {
  double sigma2_green_kubo = 0.0;
  double sigma2_rho = 0.0;
  std::optional<double> sigma2_batch;  // filled by the empirical stage
  std::vector<double> partial_sums;    // running series value, lag 0..J
  double tail_bound = 0.0;
  double gap = 0.0;
  int lags = 0;
  int series_terms = 0;  // terms in the decomposition behind sigma2_rho
};

VarianceReport green_kubo_variance(WordSpace& ws, const DepthKFunction& psi,
                                   const GibbsSolution& solution,
                                   const DepthKFunction& phi_bar, int J);

struct CoboundaryVerdict {
  bool is_coboundary = false;
  DepthKFunction u;       // transfer function when is_coboundary
  double residual = 0.0;  // sup |psi_tilde - (u - u o shift)|
  double sigma2_rho = 0.0;
};

CoboundaryVerdict coboundary_test(WordSpace& ws, const DepthKFunction& psi,
                                  const GibbsSolution& solution,
                                  const DepthKFunction& phi_bar, double tol);

// Gibbs-kernel orbit: symbols are prepended with probability
// nu(a) e^{phi_bar(a x)} and returned newest-first after burn-in.
std::vector<int> sample_orbit(WordSpace& ws, const DepthKFunction& phi_bar,
                              const GibbsSolution& solution, std::int64_t length,
                              std::int64_t burn_in, std::uint64_t seed);

struct CltReport {
  std::int64_t samples = 0;
  int block = 0;
  double ks = 0.0;
  double p_value_proxy = 0.0;
  double sigma2_reference = 0.0;  // variance of the comparison normal
  double batch_mean = 0.0;
  double batch_variance = 0.0;
  std::int64_t burn_in = 0;
  std::vector<double> bin_edges;
  std::vector<double> bin_masses;
};

CltReport empirical_clt(WordSpace& ws, const DepthKFunction& phi_bar,
                        const GibbsSolution& solution, const DepthKFunction& psi,
                        int block_m, std::int64_t n_samples, std::uint64_t seed);

// Standard normal CDF and the asymptotic Kolmogorov tail series.
double normal_cdf(double z);
double kolmogorov_p_proxy(double sqrt_n_times_d);

}  // namespace gibbslab
