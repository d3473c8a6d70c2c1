#pragma once

// Monte Carlo harnesses: the folded-normal estimator comparison (the
// ratio-estimate table) and the null calibration of the circle goodness-of-
// fit statistic. Replicates draw from per-index RNG streams, so results are
// bit-identical regardless of how many worker threads run them.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "paa/circle_fit.hpp"
#include "paa/manifold.hpp"
#include "paa/rng.hpp"
#include "paa/suppression.hpp"

namespace paa {

namespace detail {

/// Run body(0..count-1) across hardware threads; rethrows the first worker
/// exception. Bodies must write only to disjoint per-index slots.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const unsigned workers =
      std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                         static_cast<unsigned>(std::max<std::size_t>(count, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Decision-only EM evaluation: reports whether the EM ratio estimate for
/// `radii` exceeds `threshold`, with the same outcome as running
/// em_folded_normal to completion but usually far fewer iterations.
///
/// With sigma^2 profiled as mean(r^2) - mu^2, the EM update is a 1-D map
/// mu' = mean((2 p_i(mu) - 1) r_i) that is increasing in mu, so the iterate
/// sequence is monotone in the direction of its first step; and the ratio
/// mu / sqrt(mean(r^2) - mu^2) is itself increasing in mu. Once the sequence
/// is descending with the running ratio below the threshold (or ascending
/// above it), every later iterate — including a capped final one — stays on
/// that side, so the comparison is already decided.
inline bool em_ratio_exceeds(const std::vector<double>& radii, double threshold) {
  check_radii(radii, 2, "em_ratio_exceeds");
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
    throw DegenerateDataError("em_ratio_exceeds: zero variance at initialization");
  }

  constexpr double kTol = 1e-10;
  constexpr int kMaxIterations = 100000;
  for (int it = 0; it < kMaxIterations; ++it) {
    double mu_next = 0.0;
    for (double r : radii) {
      const double p = 1.0 / (1.0 + std::exp(-2.0 * r * mu / sigma_sq));
      mu_next += (2.0 * p - 1.0) * r;
    }
    mu_next /= n;
    const double sigma_sq_next = mean_sq - mu_next * mu_next;
    if (sigma_sq_next <= 0.0) {
      throw DegenerateDataError("em_ratio_exceeds: nonpositive variance at iteration " +
                                std::to_string(it + 1));
    }
    const double ratio_next = mu_next / std::sqrt(sigma_sq_next);
    if (mu_next < mu && ratio_next < threshold) return false;
    if (mu_next > mu && ratio_next > threshold) return true;
    const double delta = std::max(std::abs(mu_next - mu), std::abs(sigma_sq_next - sigma_sq));
    mu = mu_next;
    sigma_sq = sigma_sq_next;
    if (delta < kTol) break;
  }
  return mu / std::sqrt(sigma_sq) > threshold;
}

}  // namespace detail

/// One cell of the estimator-comparison table.
struct Table1Cell {
  RatioMethod method = RatioMethod::EM;
  std::size_t n = 0;
  int true_ratio = 0;
  double proportion_over_2 = 0.0;  // percent of replicates with estimate > 2
};

/// Proportion of ratio estimates exceeding 2 from folded-normal samples
/// |ratio + N(0,1)|, for both estimators, n in {50, 1000} and true ratio in
/// {3, 2, 1, 0} (table row/column order). `reps` replicates per cell.
inline std::vector<Table1Cell> simulate_table1(std::size_t reps, std::uint64_t seed) {
  if (reps < 1) throw std::invalid_argument("simulate_table1: reps must be >= 1");
  const Rng master(seed);

  struct CellSpec {
    RatioMethod method;
    std::size_t n;
    int ratio;
  };
  std::vector<CellSpec> cells;
  for (std::size_t n : {std::size_t{50}, std::size_t{1000}}) {
    for (RatioMethod method : {RatioMethod::EM, RatioMethod::Robust}) {
      for (int ratio : {3, 2, 1, 0}) cells.push_back({method, n, ratio});
    }
  }

  std::vector<Table1Cell> table(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const CellSpec& spec = cells[c];
    std::vector<unsigned char> over(reps, 0);
    detail::parallel_for(reps, [&](std::size_t rep) {
      Rng rng = master.stream(c * reps + rep);
      std::vector<double> radii(spec.n);
      for (double& r : radii) r = std::abs(static_cast<double>(spec.ratio) + rng.normal());
      const bool exceeds = spec.method == RatioMethod::Robust
                               ? robust_ratio(radii).ratio > 2.0
                               : detail::em_ratio_exceeds(radii, 2.0);
      over[rep] = exceeds ? 1 : 0;
    });
    std::size_t count = 0;
    for (unsigned char o : over) count += o;
    table[c] = {spec.method, spec.n,
                spec.ratio, 100.0 * static_cast<double>(count) / static_cast<double>(reps)};
  }
  return table;
}

/// Long-format CSV of the table: method,n,true_ratio,proportion_over_2.
inline std::string table1_csv(const std::vector<Table1Cell>& table) {
  std::ostringstream out;
  out << "method,n,true_ratio,proportion_over_2\n";
  out.setf(std::ios::fixed);
  out.precision(1);
  for (const auto& cell : table) {
    out << (cell.method == RatioMethod::EM ? "MLE" : "Robust") << ',' << cell.n << ','
        << cell.true_ratio << ',' << cell.proportion_over_2 << '\n';
  }
  return out.str();
}

/// Null calibration of the circle goodness-of-fit test.
struct GofCalibration {
  std::size_t reps = 0;
  double rejection_rate = 0.0;  // fraction with p < level
  double level = 0.05;
};

/// Rejection rate of the V test on data whose truth is a great circle:
/// uniform longitudes, colatitude pi/2 + N(0, sigma^2), n points per rep.
inline GofCalibration simulate_gof_null(std::size_t n, std::size_t reps, std::uint64_t seed,
                                        double sigma = 0.1, double level = 0.05) {
  if (n <= 3) throw std::invalid_argument("simulate_gof_null: need n > 3");
  if (reps < 1) throw std::invalid_argument("simulate_gof_null: reps must be >= 1");
  const Rng master(seed);
  std::vector<unsigned char> reject(reps, 0);
  detail::parallel_for(reps, [&](std::size_t rep) {
    Rng rng = master.stream(rep);
    std::vector<UnitVector3> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double lon = rng.uniform(0.0, kTwoPi);
      const double colat = kPi / 2.0 + sigma * rng.normal();
      pts.push_back(UnitVector3::normalized(Vec3(std::sin(colat) * std::cos(lon),
                                                 std::sin(colat) * std::sin(lon),
                                                 std::cos(colat))));
    }
    FitConfig small_cfg;
    small_cfg.mode = CircleFitMode::Small;
    FitConfig great_cfg;
    great_cfg.mode = CircleFitMode::Great;
    const double r_c = fit_circle(pts, small_cfg).sum_sq_residuals;
    const double r_g = std::max(fit_circle(pts, great_cfg).sum_sq_residuals, r_c);
    const GofReport gof = goodness_of_fit(r_g, r_c, n);
    reject[rep] = gof.p_value < level ? 1 : 0;
  });
  std::size_t count = 0;
  for (unsigned char r : reject) count += r;
  GofCalibration cal;
  cal.reps = reps;
  cal.level = level;
  cal.rejection_rate = static_cast<double>(count) / static_cast<double>(reps);
  return cal;
}

}  // namespace paa
