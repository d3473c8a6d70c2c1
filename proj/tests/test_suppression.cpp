#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <paa/rng.hpp>
#include <paa/simulate.hpp>
#include <paa/suppression.hpp>

#include "oracles.hpp"

using namespace paa;
using Catch::Approx;

namespace {

std::vector<double> folded_sample(Rng& rng, std::size_t n, double true_ratio) {
  std::vector<double> radii(n);
  for (double& r : radii) r = std::abs(true_ratio + rng.normal());
  return radii;
}

}  // namespace

// ---------------------------------------------------------------------------
// Sample quantile
// ---------------------------------------------------------------------------

TEST_CASE("sample_quantile interpolates order statistics") {
  const std::vector<double> v = {4.0, 1.0, 3.0, 2.0};  // order does not matter
  // n = 4: probability p sits at position (n+1)p among the order statistics.
  CHECK(sample_quantile(v, 0.5) == Approx(2.5).margin(1e-15));   // h = 2.5
  CHECK(sample_quantile(v, 0.75) == Approx(3.75).margin(1e-15)); // h = 3.75
  CHECK(sample_quantile(v, 0.2) == Approx(1.0).margin(1e-15));   // h = 1 (clamped edge)
  CHECK(sample_quantile(v, 0.0) == 1.0);                          // clamp to minimum
  CHECK(sample_quantile(v, 1.0) == 4.0);                          // clamp to maximum

  const std::vector<double> odd = {5.0, 1.0, 3.0};
  CHECK(sample_quantile(odd, 0.5) == 3.0);  // h = 2 exactly: middle value

  CHECK_THROWS_AS(sample_quantile({}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(sample_quantile(v, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(sample_quantile(v, 1.1), std::invalid_argument);
}

TEST_CASE("normal third-quartile constant matches an inverse-cdf oracle") {
  CHECK(kNormalQ3 == Approx(oracle::inverse_normal_cdf(0.75)).margin(1e-12));
}

// ---------------------------------------------------------------------------
// Robust ratio estimator
// ---------------------------------------------------------------------------

TEST_CASE("robust_ratio recovers location and scale from normal deciles") {
  // Exact 10%..90% deciles of Normal(3, 1); all positive, so folding is
  // negligible and the estimator should see mu ~ 3, sigma ~ 1.
  std::vector<double> radii;
  for (int k = 1; k <= 9; ++k) {
    radii.push_back(3.0 + oracle::inverse_normal_cdf(0.1 * k));
  }
  const RatioEstimate est = robust_ratio(radii);
  CHECK(est.method == RatioMethod::Robust);
  CHECK(est.mu_hat == Approx(3.0).margin(0.05));
  CHECK(est.sigma_hat == Approx(1.0).margin(0.05));
  CHECK(est.ratio == Approx(3.0).margin(0.2));
  CHECK_FALSE(est.degenerate_spread());
}

TEST_CASE("robust_ratio reports infinite ratio for constant radii") {
  const std::vector<double> radii(8, 0.7);
  const RatioEstimate est = robust_ratio(radii);
  CHECK(est.mu_hat == 0.7);
  CHECK(est.sigma_hat == 0.0);
  CHECK(std::isinf(est.ratio));
  CHECK(est.ratio > 0.0);
  CHECK(est.degenerate_spread());
}

TEST_CASE("robust_ratio input validation") {
  CHECK_THROWS_AS(robust_ratio({1.0, 2.0, 3.0}), std::invalid_argument);   // n < 4
  CHECK_THROWS_AS(robust_ratio({1.0, -0.5, 2.0, 3.0}), std::invalid_argument);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(robust_ratio({1.0, nan, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("robust_ratio is scale equivariant") {
  Rng rng(101);
  const std::vector<double> radii = folded_sample(rng, 37, 2.0);
  const RatioEstimate base = robust_ratio(radii);

  // Power-of-two scaling is exact in binary floating point.
  std::vector<double> by4 = radii;
  for (double& r : by4) r *= 4.0;
  const RatioEstimate est4 = robust_ratio(by4);
  CHECK(est4.mu_hat == 4.0 * base.mu_hat);
  CHECK(est4.sigma_hat == 4.0 * base.sigma_hat);
  CHECK(est4.ratio == base.ratio);

  std::vector<double> by3 = radii;
  for (double& r : by3) r *= 3.0;
  const RatioEstimate est3 = robust_ratio(by3);
  CHECK(est3.mu_hat == Approx(3.0 * base.mu_hat).epsilon(1e-12));
  CHECK(est3.sigma_hat == Approx(3.0 * base.sigma_hat).epsilon(1e-12));
  CHECK(est3.ratio == Approx(base.ratio).epsilon(1e-12));
}

TEST_CASE("robust_ratio is permutation invariant") {
  Rng rng(55);
  std::vector<double> radii = folded_sample(rng, 25, 1.0);
  const RatioEstimate base = robust_ratio(radii);
  std::reverse(radii.begin(), radii.end());
  std::rotate(radii.begin(), radii.begin() + 7, radii.end());
  const RatioEstimate shuffled = robust_ratio(radii);
  CHECK(shuffled.mu_hat == base.mu_hat);
  CHECK(shuffled.sigma_hat == base.sigma_hat);
  CHECK(shuffled.ratio == base.ratio);
}

// ---------------------------------------------------------------------------
// EM estimator
// ---------------------------------------------------------------------------

TEST_CASE("em_folded_normal matches moments in the no-folding limit") {
  // All radii far from zero: the sign posterior saturates at 1 and the fixed
  // point is the plain sample mean / biased standard deviation.
  Rng rng(7);
  std::vector<double> radii(200);
  for (double& r : radii) r = 5.0 + 0.1 * rng.normal();

  const auto [est, trace] = em_folded_normal(radii);
  const double n = static_cast<double>(radii.size());
  const double mean = std::accumulate(radii.begin(), radii.end(), 0.0) / n;
  double var = 0.0;
  for (double r : radii) var += (r - mean) * (r - mean);
  var /= n;

  CHECK(est.method == RatioMethod::EM);
  CHECK(est.mu_hat == Approx(mean).margin(1e-6));
  CHECK(est.sigma_hat == Approx(std::sqrt(var)).margin(1e-6));
  for (double p : trace.responsibilities) CHECK(p > 1.0 - 1e-12);
}

TEST_CASE("em_folded_normal log-likelihood is non-decreasing") {
  Rng rng(11);
  const std::vector<double> radii = folded_sample(rng, 60, 1.0);  // real folding
  const auto [est, trace] = em_folded_normal(radii);
  REQUIRE(trace.iterations.size() >= 2);
  for (std::size_t i = 1; i < trace.iterations.size(); ++i) {
    CHECK(trace.iterations[i].log_likelihood >=
          trace.iterations[i - 1].log_likelihood - 1e-12);
  }
  CHECK(est.ratio > 0.0);
}

TEST_CASE("em_folded_normal approaches the zero-location boundary under the cap") {
  // When the sample's fourth moment exceeds 3 * (second moment)^2 the
  // likelihood is maximized at mu = 0, which EM approaches sublinearly; the
  // iteration then runs to the cap and the final iterate is the estimate.
  std::vector<double> radii;
  for (std::uint64_t seed = 0;; ++seed) {
    Rng rng(seed);
    radii = folded_sample(rng, 20, 0.0);
    double m2 = 0.0, m4 = 0.0;
    for (double r : radii) {
      m2 += r * r;
      m4 += r * r * r * r;
    }
    m2 /= radii.size();
    m4 /= radii.size();
    if (m4 > 3.0 * m2 * m2) break;
    REQUIRE(seed < 50);  // the moment condition occurs with high probability
  }

  const auto [est, trace] = em_folded_normal(radii);
  CHECK(trace.iterations.size() == 100001);  // initial point + capped iterations
  CHECK(est.mu_hat < 0.05);
  CHECK(est.ratio < 0.1);
  // The location iterates decrease monotonically toward the boundary.
  for (std::size_t i = 1; i < trace.iterations.size(); ++i) {
    CHECK(trace.iterations[i].mu <= trace.iterations[i - 1].mu);
  }
  // The early-exit decision procedure agrees with the full iteration.
  CHECK_FALSE(detail::em_ratio_exceeds(radii, 2.0));
}

TEST_CASE("em_folded_normal input validation") {
  CHECK_THROWS_AS(em_folded_normal({1.0}), std::invalid_argument);  // n < 2
  CHECK_THROWS_AS(em_folded_normal({1.0, -1.0}), std::invalid_argument);
  // 0.5 squares exactly in binary, so the initial variance is exactly zero.
  CHECK_THROWS_AS(em_folded_normal({0.5, 0.5, 0.5}), DegenerateDataError);
}

TEST_CASE("em early-exit decision agrees with the full iteration") {
  // The M-step is a one-dimensional increasing map of mu, so the iterate
  // sequence is monotone and a threshold crossing in the matching direction
  // settles the final comparison; spot-check agreement on converging samples.
  Rng rng(77);
  for (double true_ratio : {2.0, 3.0}) {
    for (int rep = 0; rep < 50; ++rep) {
      const std::vector<double> radii = folded_sample(rng, 50, true_ratio);
      const auto [est, trace] = em_folded_normal(radii);
      CHECK(detail::em_ratio_exceeds(radii, 2.0) == (est.ratio > 2.0));
    }
  }
}

// ---------------------------------------------------------------------------
// Circle-kind decision
// ---------------------------------------------------------------------------

TEST_CASE("decide_circle_kind keeps concentrated rings and suppresses caps") {
  Rng rng(13);
  const std::vector<double> ring = folded_sample(rng, 200, 3.0);
  CHECK(decide_circle_kind(ring) == CircleKind::SmallCircle);

  // Radii whose spread is comparable to their level (ratio ~ 1.55, as for
  // distances from a fitted center to points of a concentrated cap).
  const std::vector<double> cap = folded_sample(rng, 200, 1.55);
  const double cap_ratio = robust_ratio(cap).ratio;
  REQUIRE(cap_ratio < 2.0);
  REQUIRE(cap_ratio > 1.0);
  CHECK(decide_circle_kind(cap) == CircleKind::GreatCircle);

  // The threshold is a parameter: lowering it below the observed ratio keeps
  // the small circle.
  CHECK(decide_circle_kind(cap, cap_ratio - 0.1) == CircleKind::SmallCircle);

  const std::vector<double> constant(10, 0.4);  // infinite ratio
  CHECK(decide_circle_kind(constant) == CircleKind::SmallCircle);
}

TEST_CASE("decide_circle_kind is permutation invariant") {
  Rng rng(29);
  std::vector<double> radii = folded_sample(rng, 40, 2.0);
  const CircleKind base = decide_circle_kind(radii);
  std::reverse(radii.begin(), radii.end());
  CHECK(decide_circle_kind(radii) == base);
}

// ---------------------------------------------------------------------------
// Radial conditional densities and mode analysis
// ---------------------------------------------------------------------------

TEST_CASE("wrapped conditional density decreases from the pole when mu = 0") {
  const double sigma = 0.4;
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 200; ++i) {
    const double r = kPi * static_cast<double>(i) / 200.0;
    const double f = conditional_density_wrapped(r, 0.0, sigma, 3);
    CHECK(f < prev);
    prev = f;
  }
}

TEST_CASE("wrapped conditional density argument validation") {
  CHECK_THROWS_AS(conditional_density_wrapped(0.0, 1.0, 0.5, 0), std::domain_error);
  CHECK_THROWS_AS(conditional_density_wrapped(-0.1, 1.0, 0.5, 0), std::domain_error);
  CHECK_THROWS_AS(conditional_density_wrapped(1.0, 1.0, 0.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(conditional_density_wrapped(1.0, 1.0, 0.5, -1), std::invalid_argument);
  CHECK_THROWS_AS(conditional_density_truncated(0.0, 1.0, 0.5), std::domain_error);
  CHECK_THROWS_AS(conditional_density_truncated(1.0, 1.0, -0.5), std::invalid_argument);
}

TEST_CASE("wrap terms beyond the first are negligible for concentrated data") {
  // The nearest neglected wrap image sits a distance 2*pi - mu - r away, so
  // truncating at k = 0 is uniformly accurate only when sigma is small; for
  // moderate sigma the wrap terms become visible near r = pi, and the claim
  // holds on the inner flank r <= mu where the data density lives.
  SECTION("small sigma: absolute agreement over the whole range") {
    for (double sigma : {0.05, 0.1, 0.2}) {
      for (double mu : {0.2, 0.8, kPi / 2.0}) {
        for (int i = 1; i <= 50; ++i) {
          const double r = kPi * static_cast<double>(i) / 50.0;
          const double f0 = conditional_density_wrapped(r, mu, sigma, 0);
          const double f5 = conditional_density_wrapped(r, mu, sigma, 5);
          CHECK(std::abs(f0 - f5) < 1e-12);
        }
      }
    }
  }
  SECTION("moderate sigma: relative agreement on the inner flank") {
    for (double sigma : {0.3, 0.4, 0.5}) {
      for (double mu : {0.2, 0.8, kPi / 2.0}) {
        for (int i = 1; i <= 50; ++i) {
          const double r = mu * static_cast<double>(i) / 50.0;
          const double f0 = conditional_density_wrapped(r, mu, sigma, 0);
          const double f5 = conditional_density_wrapped(r, mu, sigma, 5);
          CHECK(std::abs(f0 - f5) < 1e-8 * f0);
        }
      }
    }
  }
}

TEST_CASE("truncated stationary radii match a direct density maximization") {
  Rng rng(97);
  for (int trial = 0; trial < 20; ++trial) {
    const double mu = rng.uniform(0.5, 1.5);
    const double ratio = rng.uniform(2.05, 4.0);
    const double sigma = mu / ratio;
    const auto roots = truncated_mode_radii(mu, sigma);
    REQUIRE(roots.has_value());
    const auto [r_minus, r_plus] = *roots;
    CHECK(r_minus <= r_plus);
    CHECK(r_plus == Approx((mu + std::sqrt(mu * mu - 4 * sigma * sigma)) / 2.0).margin(1e-15));

    const double argmax = oracle::truncated_density_argmax(mu, sigma);
    REQUIRE(std::isfinite(argmax));
    CHECK(r_plus == Approx(argmax).margin(1e-6));

    // r_plus is a genuine local maximum of the density itself.
    const double f = conditional_density_truncated(r_plus, mu, sigma);
    CHECK(f > conditional_density_truncated(r_plus - 1e-4, mu, sigma));
    CHECK(f > conditional_density_truncated(r_plus + 1e-4, mu, sigma));
  }
}

TEST_CASE("truncated stationary radii coincide at ratio two and vanish below") {
  const double mu = 0.9, sigma = 0.45;  // mu = 2 sigma exactly
  const auto roots = truncated_mode_radii(mu, sigma);
  REQUIRE(roots.has_value());
  CHECK(roots->first == Approx(mu / 2.0).margin(1e-15));
  CHECK(roots->second == Approx(mu / 2.0).margin(1e-15));

  CHECK_FALSE(truncated_mode_radii(0.9, 0.5).has_value());  // ratio 1.8 < 2
}

// ---------------------------------------------------------------------------
// Critical ratios
// ---------------------------------------------------------------------------

TEST_CASE("critical ratio for the wrapped density") {
  const double c = critical_ratio_wrapped();
  CHECK(c == Approx(2.0534).margin(0.001));
}

TEST_CASE("critical ratio for the truncated density") {
  const double c = critical_ratio_truncated();
  CHECK(c == Approx(2.0).margin(1e-6));
}

TEST_CASE("mode existence flips across the critical ratio") {
  // Direct density scans, independent of the slope-based detection used by
  // the bisection: below the critical ratio the wrapped density has no
  // interior local maximum; above it, one appears.
  auto interior_max_exists = [](double mu, double sigma) {
    const int n = 20000;
    std::vector<double> f(n + 1);
    for (int i = 0; i <= n; ++i) {
      const double r = 1e-9 + (kPi - 1e-9) * static_cast<double>(i) / n;
      f[i] = conditional_density_wrapped(r, mu, sigma, 0);
    }
    for (int i = 1; i < n; ++i) {
      if (f[i] > f[i - 1] && f[i] >= f[i + 1]) return true;
    }
    return false;
  };
  for (double mu : {0.3, 0.7, 1.1, 1.5}) {
    CHECK_FALSE(interior_max_exists(mu, mu / 1.9));
    CHECK(interior_max_exists(mu, mu / 2.2));
  }
}

// ---------------------------------------------------------------------------
// Goodness of fit
// ---------------------------------------------------------------------------

TEST_CASE("goodness_of_fit equal residuals give p = 1") {
  const GofReport rep = goodness_of_fit(0.37, 0.37, 50);
  CHECK(rep.v_stat == 0.0);
  CHECK(rep.p_value == 1.0);
}

TEST_CASE("goodness_of_fit matches the F distribution tail") {
  // Reference value: the upper 5% point of F(1, 20) is 4.3513.
  CHECK(f_distribution_sf(4.3513, 1.0, 20.0) == Approx(0.05).margin(1e-3));

  // The statistic is recomputable from the reported residuals.
  const GofReport rep = goodness_of_fit(1.9, 1.4, 33);
  CHECK(rep.v_stat == Approx((33.0 - 3.0) * (1.9 - 1.4) / 1.4).margin(1e-12));
  CHECK(rep.p_value >= 0.0);
  CHECK(rep.p_value <= 1.0);
  CHECK(rep.p_value ==
        Approx(f_distribution_sf(rep.v_stat, 1.0, 30.0)).margin(1e-15));
}

TEST_CASE("regularized incomplete beta agrees with quadrature") {
  struct Case {
    double a, b, x;
  };
  const std::vector<Case> cases = {{0.5, 10.0, 0.3}, {2.0, 3.0, 0.5},  {5.0, 1.5, 0.8},
                                   {10.0, 10.0, 0.5}, {1.0, 4.0, 0.05}, {3.5, 0.75, 0.9}};
  for (const auto& c : cases) {
    const double lib = regularized_incomplete_beta(c.a, c.b, c.x);
    const double ref = oracle::incomplete_beta_by_quadrature(c.a, c.b, c.x);
    CHECK(lib == Approx(ref).margin(5e-8));
  }
  CHECK(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
  CHECK_THROWS_AS(regularized_incomplete_beta(0.0, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(regularized_incomplete_beta(1.0, -2.0, 0.5), std::invalid_argument);
}

TEST_CASE("goodness_of_fit precondition errors") {
  CHECK_THROWS_AS(goodness_of_fit(1.0, 0.5, 3), std::invalid_argument);   // n too small
  CHECK_THROWS_AS(goodness_of_fit(1.0, 0.0, 50), std::invalid_argument);  // r_c = 0
  CHECK_THROWS_AS(goodness_of_fit(0.4, 0.5, 50), std::invalid_argument);  // r_g < r_c
}

// ---------------------------------------------------------------------------
// Monte Carlo spot checks (small-budget versions of the table harness)
// ---------------------------------------------------------------------------

TEST_CASE("robust estimator separates ratio three perfectly at large n") {
  Rng master(2024);
  int over = 0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng = master.stream(static_cast<std::size_t>(rep));
    const std::vector<double> radii = folded_sample(rng, 1000, 3.0);
    if (robust_ratio(radii).ratio > 2.0) ++over;
  }
  CHECK(over == reps);
}

TEST_CASE("EM estimator exceeds two for nearly all ratio-three samples") {
  Rng master(2025);
  int over = 0;
  const int reps = 1000;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng = master.stream(static_cast<std::size_t>(rep));
    const std::vector<double> radii = folded_sample(rng, 50, 3.0);
    const auto [est, trace] = em_folded_normal(radii);
    if (est.ratio > 2.0) ++over;
  }
  const double pct = 100.0 * over / reps;
  CHECK(pct >= 95.5);
  CHECK(pct <= 100.0);
}

TEST_CASE("EM estimator stays below two for pure-noise samples at large n") {
  // Decision-only variant of the EM iteration (identical update map with a
  // monotonicity-based early exit), since full convergence at the mu = 0
  // boundary is deliberately slow.
  Rng master(2026);
  int over = 0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng = master.stream(static_cast<std::size_t>(rep));
    const std::vector<double> radii = folded_sample(rng, 1000, 0.0);
    if (detail::em_ratio_exceeds(radii, 2.0)) ++over;
  }
  CHECK(100.0 * over / reps <= 1.0);
}
