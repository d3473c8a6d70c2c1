#pragma once

// Small-circle vs great-circle decision machinery: folded-normal ratio
// estimation (robust and EM), the wrapped/truncated radial density mode
// analysis with its critical ratios, and the F-based goodness-of-fit test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "paa/errors.hpp"
#include "paa/manifold.hpp"

namespace paa {

/// Third quartile of the standard normal, Phi^{-1}(0.75).
inline constexpr double kNormalQ3 = 0.6744897501960817;

/// Sample quantile by linear interpolation between order statistics, placing
/// the k-th order statistic at probability k/(n+1) (Hyndman-Fan type 6).
/// This convention is close to unbiased for normal quartiles at moderate n,
/// which keeps the quantile-based ratio estimate centered.
inline double sample_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("sample_quantile: empty input");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("sample_quantile: p outside [0,1]");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  const double h = std::clamp((n + 1.0) * p, 1.0, n);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h)) - 1;
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - std::floor(h);
  return values[lo] + frac * (values[hi] - values[lo]);
}

enum class RatioMethod { Robust, EM };

/// Estimate of the folded-normal location/scale ratio from unsigned radii.
struct RatioEstimate {
  double mu_hat = 0.0;
  double sigma_hat = 0.0;
  double ratio = 0.0;  // +infinity when sigma_hat == 0
  RatioMethod method = RatioMethod::Robust;

  bool degenerate_spread() const { return sigma_hat == 0.0; }
};

/// One EM iterate plus the observed-data log-likelihood after the update.
struct EMIterate {
  double mu = 0.0;
  double sigma_sq = 0.0;
  double log_likelihood = 0.0;
};

/// Full EM history; responsibilities are the converged P(sign = +1 | r_i).
struct EMTrace {
  std::vector<EMIterate> iterations;
  std::vector<double> responsibilities;
};

namespace detail {

inline void check_radii(const std::vector<double>& radii, std::size_t min_n,
                        const char* who) {
  if (radii.size() < min_n) {
    throw std::invalid_argument(std::string(who) + ": need at least " +
                                std::to_string(min_n) + " radii, got " +
                                std::to_string(radii.size()));
  }
  for (double r : radii) {
    if (!(r >= 0.0)) {
      throw std::invalid_argument(std::string(who) + ": radii must be nonnegative");
    }
  }
}

/// Folded-normal observed-data log-likelihood at (mu, sigma^2).
inline double folded_normal_loglik(const std::vector<double>& radii, double mu,
                                   double sigma_sq) {
  const double log_norm = -0.5 * std::log(2.0 * kPi * sigma_sq);
  double ll = 0.0;
  for (double r : radii) {
    const double a = -((r - mu) * (r - mu)) / (2.0 * sigma_sq);
    const double b = -((r + mu) * (r + mu)) / (2.0 * sigma_sq);
    const double hi = std::max(a, b);
    ll += log_norm + hi + std::log1p(std::exp(std::min(a, b) - hi));
  }
  return ll;
}

}  // namespace detail

/// Quantile-based ratio estimate: mu = median, sigma = (Q3 - median)/Q3(Phi).
/// Scale equivariant; sigma_hat = 0 reports an infinite ratio.
inline RatioEstimate robust_ratio(const std::vector<double>& radii) {
  detail::check_radii(radii, 4, "robust_ratio");
  RatioEstimate est;
  est.method = RatioMethod::Robust;
  est.mu_hat = sample_quantile(radii, 0.5);
  est.sigma_hat = (sample_quantile(radii, 0.75) - est.mu_hat) / kNormalQ3;
  est.ratio = est.sigma_hat > 0.0 ? est.mu_hat / est.sigma_hat
                                  : std::numeric_limits<double>::infinity();
  return est;
}

/// Maximum-likelihood ratio estimate via EM on the folded normal.
///
/// E-step imputes the sign posterior p_i = 1/(1 + exp(-2 r_i mu / sigma^2));
/// M-step sets mu = mean((2 p_i - 1) r_i) and sigma^2 = mean(r_i^2) - mu^2.
/// Starts from the sample mean and (biased) variance and stops when the
/// largest parameter change falls below 1e-10, capped at 1e5 iterations.
/// The cap is a stopping rule, not a failure: when mu -> 0 the likelihood
/// surface is nearly flat and EM approaches the boundary sublinearly, so the
/// final iterate is returned as the estimate in that case.
inline std::pair<RatioEstimate, EMTrace> em_folded_normal(const std::vector<double>& radii) {
  detail::check_radii(radii, 2, "em_folded_normal");
  const double n = static_cast<double>(radii.size());

  double mean = 0.0, mean_sq = 0.0;
  for (double r : radii) {
    mean += r;
    mean_sq += r * r;
  }
  mean /= n;
  mean_sq /= n;

  double mu = mean;
  double sigma_sq = mean_sq - mean * mean;
  if (sigma_sq <= 0.0) {
    throw DegenerateDataError("em_folded_normal: zero variance at initialization");
  }

  constexpr double kTol = 1e-10;
  constexpr int kMaxIterations = 100000;

  EMTrace trace;
  trace.iterations.push_back({mu, sigma_sq, detail::folded_normal_loglik(radii, mu, sigma_sq)});
  trace.responsibilities.assign(radii.size(), 0.0);

  for (int it = 0; it < kMaxIterations; ++it) {
    for (std::size_t i = 0; i < radii.size(); ++i) {
      trace.responsibilities[i] = 1.0 / (1.0 + std::exp(-2.0 * radii[i] * mu / sigma_sq));
    }
    double mu_next = 0.0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
      mu_next += (2.0 * trace.responsibilities[i] - 1.0) * radii[i];
    }
    mu_next /= n;
    const double sigma_sq_next = mean_sq - mu_next * mu_next;
    if (sigma_sq_next <= 0.0) {
      throw DegenerateDataError("em_folded_normal: nonpositive variance at iteration " +
                                std::to_string(it + 1));
    }

    const double delta = std::max(std::abs(mu_next - mu), std::abs(sigma_sq_next - sigma_sq));
    mu = mu_next;
    sigma_sq = sigma_sq_next;
    trace.iterations.push_back({mu, sigma_sq, detail::folded_normal_loglik(radii, mu, sigma_sq)});
    if (delta < kTol) break;
  }

  RatioEstimate est;
  est.method = RatioMethod::EM;
  est.mu_hat = mu;
  est.sigma_hat = std::sqrt(sigma_sq);
  est.ratio = est.sigma_hat > 0.0 ? est.mu_hat / est.sigma_hat
                                  : std::numeric_limits<double>::infinity();
  return {est, trace};
}

enum class CircleKind { SmallCircle, GreatCircle };

/// Decide whether a fitted small circle is supported by the radial spread.
/// Uses the robust estimator; keeps the small circle iff ratio >= threshold.
inline CircleKind decide_circle_kind(const std::vector<double>& radii, double threshold = 2.0) {
  const RatioEstimate est = robust_ratio(radii);
  return est.ratio >= threshold ? CircleKind::SmallCircle : CircleKind::GreatCircle;
}

/// Unnormalized conditional density of the radial distance wrapped around a
/// great circle: (1/r) * sum_{k=0}^{k_max} [phi((r+2*pi*k-mu)/sigma) +
/// phi((r-2*pi*k+mu)/sigma)], with phi the standard normal pdf.
inline double conditional_density_wrapped(double r, double mu, double sigma, int k_max) {
  if (r <= 0.0) throw std::domain_error("conditional_density_wrapped: density pole at r = 0");
  if (sigma <= 0.0) throw std::invalid_argument("conditional_density_wrapped: sigma must be positive");
  if (k_max < 0) throw std::invalid_argument("conditional_density_wrapped: k_max must be >= 0");
  const double norm = 1.0 / std::sqrt(2.0 * kPi);
  double sum = 0.0;
  for (int k = 0; k <= k_max; ++k) {
    const double a = (r + kTwoPi * k - mu) / sigma;
    const double b = (r - kTwoPi * k + mu) / sigma;
    sum += norm * std::exp(-0.5 * a * a) + norm * std::exp(-0.5 * b * b);
  }
  return sum / r;
}

/// Truncated (single unwrapped term) analogue: phi((r-mu)/sigma)/r.
inline double conditional_density_truncated(double r, double mu, double sigma) {
  if (r <= 0.0) throw std::domain_error("conditional_density_truncated: density pole at r = 0");
  if (sigma <= 0.0) throw std::invalid_argument("conditional_density_truncated: sigma must be positive");
  const double a = (r - mu) / sigma;
  return std::exp(-0.5 * a * a) / (std::sqrt(2.0 * kPi) * r);
}

/// Stationary radii (r-, r+) of the truncated conditional density:
/// (mu -+ sqrt(mu^2 - 4 sigma^2))/2; r+ is the local maximum. Empty when
/// mu < 2*sigma (no nonzero mode).
inline std::optional<std::pair<double, double>> truncated_mode_radii(double mu, double sigma) {
  const double disc = mu * mu - 4.0 * sigma * sigma;
  if (disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  return std::make_pair((mu - root) / 2.0, (mu + root) / 2.0);
}

namespace detail {

/// d/dr log of the wrapped conditional density (k_max terms).
inline double wrapped_log_density_slope(double r, double mu, double sigma, int k_max) {
  double s = 0.0, s_prime = 0.0;
  const double inv_ss = 1.0 / (sigma * sigma);
  for (int k = 0; k <= k_max; ++k) {
    const double za = r + kTwoPi * k - mu;
    const double zb = r - kTwoPi * k + mu;
    const double ta = std::exp(-0.5 * za * za * inv_ss);
    const double tb = std::exp(-0.5 * zb * zb * inv_ss);
    s += ta + tb;
    s_prime += -za * inv_ss * ta - zb * inv_ss * tb;
  }
  return s_prime / s - 1.0 / r;
}

/// d/dr log of the truncated conditional density.
inline double truncated_log_density_slope(double r, double mu, double sigma) {
  return (-r * r + mu * r - sigma * sigma) / (sigma * sigma * r);
}

/// Maximum of a continuous slope function over (0, pi): coarse grid followed
/// by ternary refinement around the best cell.
template <typename F>
double max_slope(F&& slope) {
  constexpr int kGrid = 2048;
  double best = -std::numeric_limits<double>::infinity();
  int best_i = 1;
  for (int i = 1; i < kGrid; ++i) {
    const double r = kPi * static_cast<double>(i) / static_cast<double>(kGrid);
    const double v = slope(r);
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  double lo = kPi * static_cast<double>(std::max(1, best_i - 1)) / static_cast<double>(kGrid);
  double hi = kPi * static_cast<double>(std::min(kGrid - 1, best_i + 1)) / static_cast<double>(kGrid);
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (slope(m1) < slope(m2)) {
      lo = m1;
    } else {
      hi = m2;
    }
  }
  return std::max(best, slope(0.5 * (lo + hi)));
}

/// Whether the density has a nonzero interior local maximum: the density
/// falls from its pole at r = 0, so a mode exists iff the log-slope turns
/// positive somewhere in (0, pi).
inline bool wrapped_has_nonzero_mode(double mu, double sigma, int k_max) {
  return max_slope([&](double r) { return wrapped_log_density_slope(r, mu, sigma, k_max); }) > 0.0;
}

inline bool truncated_has_nonzero_mode(double mu, double sigma) {
  return max_slope([&](double r) { return truncated_log_density_slope(r, mu, sigma); }) > 0.0;
}

/// Smallest ratio mu/sigma at which `has_mode(mu, sigma)` flips to true for
/// every mu in a scan of (0, pi/2), located by bisection.
template <typename HasMode>
double critical_ratio(HasMode&& has_mode, double tol) {
  const std::vector<double> mu_grid = {0.2, 0.5, 0.8, 1.1, 1.4};
  auto mode_everywhere = [&](double ratio) {
    for (double mu : mu_grid) {
      if (!has_mode(mu, mu / ratio)) return false;
    }
    return true;
  };
  double lo = 1.5, hi = 2.5;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mode_everywhere(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Critical ratio mu/sigma above which the wrapped conditional density has a
/// mode away from zero (approximately 2.0534).
inline double critical_ratio_wrapped() {
  return detail::critical_ratio(
      [](double mu, double sigma) { return detail::wrapped_has_nonzero_mode(mu, sigma, 0); },
      1e-4);
}

/// Critical ratio for the truncated analogue (exactly 2).
inline double critical_ratio_truncated() {
  return detail::critical_ratio(
      [](double mu, double sigma) { return detail::truncated_has_nonzero_mode(mu, sigma); },
      1e-7);
}

namespace detail {

/// Continued-fraction core of the regularized incomplete beta (Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;

  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw ConvergenceError("regularized_incomplete_beta: continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b).
inline double regularized_incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) {
    throw std::invalid_argument("regularized_incomplete_beta: a and b must be positive");
  }
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = a * std::log(x) + b * std::log1p(-x) -
                           (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_front) * detail::beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - std::exp(log_front) * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Upper-tail probability of an F(d1, d2) variate.
inline double f_distribution_sf(double v, double d1, double d2) {
  if (v <= 0.0) return 1.0;
  return regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * v));
}

/// Result of the nested-residual F test comparing great vs small circle fits.
struct GofReport {
  double v_stat = 0.0;
  double p_value = 1.0;
  double r_g = 0.0;  // residual sum of squares of the great-circle fit
  double r_c = 0.0;  // residual sum of squares of the small-circle fit
  std::size_t n = 0;
};

/// V = (n-3)(r_g - r_c)/r_c, referred to F_{1, n-3}.
inline GofReport goodness_of_fit(double r_g, double r_c, std::size_t n) {
  if (n <= 3) throw std::invalid_argument("goodness_of_fit: need n > 3");
  if (!(r_c > 0.0)) throw std::invalid_argument("goodness_of_fit: r_c must be positive");
  if (r_g < r_c) throw std::invalid_argument("goodness_of_fit: requires r_g >= r_c");
  GofReport rep;
  rep.r_g = r_g;
  rep.r_c = r_c;
  rep.n = n;
  rep.v_stat = (static_cast<double>(n) - 3.0) * (r_g - r_c) / r_c;
  rep.p_value = f_distribution_sf(rep.v_stat, 1.0, static_cast<double>(n) - 3.0);
  return rep;
}

}  // namespace paa
