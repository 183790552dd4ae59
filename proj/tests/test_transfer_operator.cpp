#include <doctest.h>

#include <cmath>
#include <vector>

#include "builders.hpp"
#include "gibbslab/transfer_operator.hpp"
#include "oracles.hpp"

using namespace gibbslab;

namespace {

DepthKFunction gm_normalized(WordSpace& ws) {
  DepthKFunction phi = constant_function(ws, 1, 0.0);
  NormalizationData nd = leading_eigendata(ws, phi);
  return normalize_potential(ws, phi, nd);
}

}  // namespace

TEST_CASE("embedding preserves evaluations") {
  AdmissibilitySystem gm = testbed::golden_mean_system();
  WordSpace ws(gm);
  DepthKFunction f = constant_function(ws, 1, 0.0);
  f.values = {2.0, -1.0};
  DepthKFunction g = embed(ws, f, 4);
  CHECK(g.depth == 4);
  const AdmissibleWordTable& t = ws.table(4);
  for (std::int64_t i = 0; i < t.size(); ++i) {
    double expect = t.word(i)[0] == 0 ? 2.0 : -1.0;
    CHECK(g.values[static_cast<std::size_t>(i)] == expect);
    CHECK(eval_on_word(ws, f, t.word(i)) == expect);
  }
  CHECK(sup_norm(f) == 2.0);
}

TEST_CASE("transfer operator sums weighted prepends") {
  AdmissibilitySystem full = testbed::full_shift_system();
  WordSpace wf(full);
  DepthKFunction phi0 = constant_function(wf, 1, 0.0);
  DepthKFunction one = constant_function(wf, 1, 1.0);
  DepthKFunction lf = apply_ruelle(wf, phi0, one);
  CHECK(lf.depth == 1);
  for (double v : lf.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));

  AdmissibilitySystem gm = testbed::golden_mean_system();
  WordSpace wg(gm);
  DepthKFunction gphi = constant_function(wg, 1, 0.0);
  DepthKFunction gone = constant_function(wg, 1, 1.0);
  DepthKFunction glf = apply_ruelle(wg, gphi, gone);
  const AdmissibleWordTable& t1 = wg.table(1);
  for (std::int64_t i = 0; i < t1.size(); ++i) {
    double expect = t1.word(i)[0] == 0 ? 1.0 : 0.5;
    CHECK(glf.values[static_cast<std::size_t>(i)] ==
          doctest::Approx(expect).epsilon(1e-15));
  }

  // depth contract: the result lives at max of the input depths
  DepthKFunction psi2 = constant_function(wg, 3, 1.0);
  DepthKFunction out = apply_ruelle(wg, gphi, psi2);
  CHECK(out.depth == 3);
}

TEST_CASE("ergodic sums stack shifted windows") {
  AdmissibilitySystem gm = testbed::golden_mean_system();
  WordSpace ws(gm);
  DepthKFunction phi_bar = gm_normalized(ws);
  oracle::GoldenMean g = oracle::golden_mean();
  Word w = {0, 0, 1, 0};
  // The windows carry the power-iteration tolerance of phi_bar.
  double expect = std::log(g.e00) + std::log(g.e01) + std::log(g.e10);
  CHECK(ergodic_sum(ws, phi_bar, w) == doctest::Approx(expect).epsilon(1e-11));
}

TEST_CASE("leading eigendata matches the quadratic-formula reference") {
  AdmissibilitySystem full = testbed::full_shift_system();
  WordSpace wf(full);
  DepthKFunction phi0 = constant_function(wf, 1, 0.0);
  NormalizationData already = leading_eigendata(wf, phi0);
  CHECK(already.lambda == doctest::Approx(1.0).epsilon(1e-13));
  for (double v : already.h.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

  AdmissibilitySystem gm = testbed::golden_mean_system();
  WordSpace wg(gm);
  DepthKFunction gphi = constant_function(wg, 1, 0.0);
  NormalizationData nd = leading_eigendata(wg, gphi);
  oracle::GoldenMean g = oracle::golden_mean();
  CHECK(nd.lambda == doctest::Approx(g.lambda).epsilon(1e-13));
  CHECK(nd.h.depth == 1);
  CHECK(nd.h.values[0] == doctest::Approx(g.h0).epsilon(1e-12));
  CHECK(nd.h.values[1] == doctest::Approx(g.h1).epsilon(1e-12));
  CHECK(nd.residual <= 1e-12);
}

TEST_CASE("normalization produces unit transfer sums") {
  AdmissibilitySystem gm = testbed::golden_mean_system();
  WordSpace ws(gm);
  DepthKFunction phi = constant_function(ws, 1, 0.0);
  NormalizationData nd = leading_eigendata(ws, phi);
  DepthKFunction phi_bar = normalize_potential(ws, phi, nd);
  CHECK(phi_bar.depth == phi.depth + 1);
  CHECK(normalization_residual(ws, phi_bar) <= 1e-10);

  oracle::GoldenMean g = oracle::golden_mean();
  const AdmissibleWordTable& t2 = ws.table(2);
  Word w00 = {0, 0};
  Word w01 = {0, 1};
  Word w10 = {1, 0};
  CHECK(std::exp(phi_bar.values[static_cast<std::size_t>(t2.index_of(w00))]) ==
        doctest::Approx(g.e00).epsilon(1e-12));
  CHECK(std::exp(phi_bar.values[static_cast<std::size_t>(t2.index_of(w01))]) ==
        doctest::Approx(g.e01).epsilon(1e-12));
  CHECK(std::exp(phi_bar.values[static_cast<std::size_t>(t2.index_of(w10))]) ==
        doctest::Approx(g.e10).epsilon(1e-12));

  // normalizing an already-normalized potential changes nothing
  NormalizationData nd2 = leading_eigendata(ws, phi_bar);
  CHECK(nd2.lambda == doctest::Approx(1.0).epsilon(1e-12));
  DepthKFunction again = normalize_potential(ws, phi_bar, nd2);
  DepthKFunction lift = embed(ws, phi_bar, again.depth);
  for (std::size_t i = 0; i < lift.values.size(); ++i) {
    CHECK(again.values[i] == doctest::Approx(lift.values[i]).epsilon(1e-11));
  }
}

TEST_CASE("Lipschitz seminorm of the normalized weights") {
  AdmissibilitySystem gm = testbed::golden_mean_system();
  WordSpace ws(gm);
  DepthKFunction phi_bar = gm_normalized(ws);
  DepthKFunction expw = phi_bar;
  for (double& v : expw.values) v = std::exp(v);
  CHECK(lipschitz_seminorm(ws, expw, 2) ==
        doctest::Approx(3.055728090000841).epsilon(1e-12));
  DepthKFunction c = constant_function(ws, 2, 3.0);
  CHECK(lipschitz_seminorm(ws, c, 3) == 0.0);
}

TEST_CASE("decay-rate probe finds the subleading ratio") {
  AdmissibilitySystem gm = testbed::golden_mean_system();
  WordSpace wg(gm);
  DepthKFunction gm_bar = gm_normalized(wg);
  oracle::GoldenMean g = oracle::golden_mean();
  // The probe window divides by r^12, so the eigen residual of phi_bar
  // enters the envelope amplified by roughly four orders of magnitude.
  double est = spectral_gap_estimate(wg, gm_bar, 5);
  CHECK(est == doctest::Approx(oracle::gm_gap_envelope(g)).epsilon(1e-7));
  CHECK(est >= std::abs(g.r));
  CHECK(est < 0.5);

  AdmissibilitySystem full = testbed::full_shift_system();
  WordSpace wf(full);
  DepthKFunction f_bar = gm_normalized(wf);  // zero potential is normalized here
  CHECK(spectral_gap_estimate(wf, f_bar, 5) <= 1e-12);

  AdmissibilitySystem p2 = testbed::period2_system();
  WordSpace wp(p2);
  DepthKFunction p_bar = gm_normalized(wp);
  CHECK(spectral_gap_estimate(wp, p_bar, 5) >= 1.0 - 1e-9);

  DepthKFunction raw = constant_function(wg, 1, 0.3);
  CHECK(testbed::thrown_code([&] { spectral_gap_estimate(wg, raw, 5); }) ==
        errc::not_normalized);
  CHECK(testbed::thrown_code([&] { spectral_gap_estimate(wg, gm_bar, 0); }) ==
        errc::invalid_probe);
}
