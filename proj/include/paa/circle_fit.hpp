#pragma once

// Least-squares small- and great-circle fitting on the unit sphere via a
// doubly iterative scheme: an outer loop that linearizes the sphere through
// the log map at the current center, and an inner planar circle fit solved
// with Levenberg-Marquardt (Fletcher damping). Also the principal circle
// mean and the combined principal-circle summary.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "paa/errors.hpp"
#include "paa/manifold.hpp"
#include "paa/suppression.hpp"

namespace paa {

/// A circle delta(c, r) = {x : rho(c, x) = r} on the unit sphere.
struct CircleOnSphere {
  UnitVector3 center;
  double radius = kPi / 2.0;

  CircleOnSphere() = default;

  CircleOnSphere(const UnitVector3& c, double r) : center(c), radius(r) {
    if (!(r > 0.0 && r < kPi)) {
      throw std::invalid_argument("CircleOnSphere: radius must lie strictly in (0, pi)");
    }
  }

  /// The same point set with radius <= pi/2: (c, r) -> (-c, pi - r) when
  /// r exceeds a quarter turn.
  CircleOnSphere canonicalize() const {
    if (radius > kPi / 2.0) return CircleOnSphere(center.antipode(), kPi - radius);
    return *this;
  }
};

enum class CircleFitMode { Small, Great };
enum class CircleInitializer { FirstPoint, CovarianceEigenvector };

/// Knobs of the doubly iterative fit; defaults give convergence well below
/// the tolerances used in the tests.
struct FitConfig {
  CircleFitMode mode = CircleFitMode::Small;
  CircleInitializer initializer = CircleInitializer::FirstPoint;
  double tol = 1e-9;            // outer stop: tangent-plane step norm
  int max_outer_iterations = 100;
  int max_inner_iterations = 100;  // LM iterations per planar subproblem
  double lm_initial_damping = 1e-3;
  double lm_damping_factor = 10.0;  // multiplied on reject, divided on accept
};

/// Result of fit_circle: the canonical circle, signed residuals
/// xi_i = rho(x_i, c) - r, and iteration bookkeeping.
struct FitReport {
  CircleOnSphere circle;
  std::vector<double> residuals;
  double sum_sq_residuals = 0.0;
  int outer_iterations = 0;
  bool converged = false;
};

/// Planar subproblem solution.
struct PlanarFit {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  double objective = 0.0;
  int iterations = 0;
};

namespace detail {

inline double planar_radius(const std::vector<Vec2>& pts, const Vec2& v, CircleFitMode mode) {
  if (mode == CircleFitMode::Great) return kPi / 2.0;
  double sum = 0.0;
  for (const auto& p : pts) sum += (p - v).norm();
  return sum / static_cast<double>(pts.size());
}

inline double planar_objective(const std::vector<Vec2>& pts, const Vec2& v, CircleFitMode mode) {
  const double r = planar_radius(pts, v, mode);
  double ss = 0.0;
  for (const auto& p : pts) {
    const double e = (p - v).norm() - r;
    ss += e * e;
  }
  return ss;
}

}  // namespace detail

/// Least-squares circle in the plane with the radius profiled out as the
/// mean distance to the center (fixed at pi/2 in Great mode), solved by
/// Levenberg-Marquardt with Fletcher's diagonal damping from v = 0.
inline PlanarFit planar_circle_fit(const std::vector<Vec2>& pts, CircleFitMode mode,
                                   const FitConfig& cfg = FitConfig{}) {
  if (pts.size() < 3) {
    throw std::invalid_argument("planar_circle_fit: need at least 3 points");
  }
  const std::size_t n = pts.size();

  Vec2 v = Vec2::Zero();
  double f = detail::planar_objective(pts, v, mode);
  const double f_initial = f;
  double damping = cfg.lm_initial_damping;
  bool accepted_any = false;
  int it = 0;

  for (; it < cfg.max_inner_iterations; ++it) {
    // Residuals e_i = d_i - r and Jacobian rows d e_i / d v.
    std::vector<Vec2> unit(n);
    std::vector<double> dist(n);
    Vec2 unit_mean = Vec2::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 diff = pts[i] - v;
      dist[i] = diff.norm();
      unit[i] = dist[i] > 1e-14 ? Vec2(diff / dist[i]) : Vec2::Zero();
      unit_mean += unit[i];
    }
    unit_mean /= static_cast<double>(n);

    const double r = detail::planar_radius(pts, v, mode);
    Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
    Vec2 jte = Vec2::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const double e = dist[i] - r;
      const Vec2 row = mode == CircleFitMode::Small ? Vec2(unit_mean - unit[i]) : Vec2(-unit[i]);
      jtj += row * row.transpose();
      jte += row * e;
    }
    if (jte.norm() < 1e-13) break;  // stationary point

    Eigen::Matrix2d damped = jtj;
    damped(0, 0) += damping * std::max(jtj(0, 0), 1e-12);
    damped(1, 1) += damping * std::max(jtj(1, 1), 1e-12);
    const Vec2 step = damped.ldlt().solve(-jte);

    const double f_new = step.allFinite()
                             ? detail::planar_objective(pts, v + step, mode)
                             : std::numeric_limits<double>::infinity();
    if (f_new <= f) {
      v += step;
      f = f_new;
      damping = std::max(damping / cfg.lm_damping_factor, 1e-12);
      accepted_any = true;
      if (step.norm() < 1e-13) break;
    } else {
      damping *= cfg.lm_damping_factor;
      if (damping > 1e14) break;  // no descent possible at this scale
    }
  }

  if (!accepted_any && f > f_initial) {
    throw ConvergenceError("planar_circle_fit: failed to reduce the objective");
  }

  PlanarFit fit;
  fit.center = v;
  fit.radius = detail::planar_radius(pts, v, mode);
  fit.objective = f;
  fit.iterations = it;
  return fit;
}

namespace detail {

/// Exact spherical objective at center c: radial SSR with the radius
/// profiled out (Small) or pinned to pi/2 (Great).
inline double sphere_objective(const std::vector<UnitVector3>& pts, const UnitVector3& c,
                               CircleFitMode mode) {
  double mean_rho = kPi / 2.0;
  if (mode == CircleFitMode::Small) {
    double sum = 0.0;
    for (const auto& p : pts) sum += sphere_distance(p, c);
    mean_rho = sum / static_cast<double>(pts.size());
  }
  double ss = 0.0;
  for (const auto& p : pts) {
    const double e = sphere_distance(p, c) - mean_rho;
    ss += e * e;
  }
  return ss;
}

inline UnitVector3 covariance_initializer(const std::vector<UnitVector3>& pts) {
  Vec3 mean = Vec3::Zero();
  for (const auto& p : pts) mean += p.vec();
  mean /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : pts) {
    const Vec3 d = p.vec() - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  Vec3 axis = eig.eigenvectors().col(0);  // smallest eigenvalue
  const double dot = axis.dot(mean);
  if (std::abs(dot) > 1e-12) {
    if (dot < 0.0) axis = -axis;
  } else {
    int argmax = 0;
    axis.cwiseAbs().maxCoeff(&argmax);
    if (axis[argmax] < 0.0) axis = -axis;
  }
  return UnitVector3::normalized(axis);
}

inline bool any_antipodal(const std::vector<UnitVector3>& pts, const UnitVector3& c) {
  for (const auto& p : pts) {
    if (sphere_distance(p, c) > kPi - kAntipodalTol) return true;
  }
  return false;
}

}  // namespace detail

/// Doubly iterative least-squares circle fit. The outer loop log-maps the
/// data at the current center, solves the planar subproblem, and moves the
/// center along the returned tangent step (halved as needed so the exact
/// spherical objective never increases). Antipodal encounters trigger one
/// restart from the covariance-eigenvector initializer.
inline FitReport fit_circle(const std::vector<UnitVector3>& points, const FitConfig& cfg = FitConfig{}) {
  if (points.size() < 3) {
    throw std::invalid_argument("fit_circle: need at least 3 points");
  }
  bool all_coincident = true;
  for (const auto& p : points) {
    if (sphere_distance(p, points.front()) > 1e-12) {
      all_coincident = false;
      break;
    }
  }
  if (all_coincident) {
    throw DegenerateDataError("fit_circle: all points coincide");
  }

  UnitVector3 c = cfg.initializer == CircleInitializer::FirstPoint
                      ? points.front()
                      : detail::covariance_initializer(points);
  bool restarted = false;
  bool converged = false;
  int outer = 0;
  double objective = detail::sphere_objective(points, c, cfg.mode);

  while (outer < cfg.max_outer_iterations) {
    ++outer;
    if (detail::any_antipodal(points, c)) {
      if (restarted) {
        throw ConvergenceError("fit_circle: antipodal point encountered after restart");
      }
      restarted = true;
      c = detail::covariance_initializer(points);
      objective = detail::sphere_objective(points, c, cfg.mode);
      if (detail::any_antipodal(points, c)) {
        throw ConvergenceError("fit_circle: antipodal point encountered after restart");
      }
    }

    std::vector<Vec2> flat;
    flat.reserve(points.size());
    for (const auto& p : points) flat.push_back(log_map_s2(c, p));
    const PlanarFit planar = planar_circle_fit(flat, cfg.mode, cfg);

    if (planar.center.norm() < cfg.tol) {
      converged = true;
      break;
    }

    // Accept the tangent step only where the exact spherical objective is
    // non-increasing; halve it otherwise (the planar model is approximate).
    Vec2 step = planar.center;
    bool accepted = false;
    for (int h = 0; h < 60; ++h) {
      const UnitVector3 candidate = exp_map_s2(c, step);
      const double cand_objective = detail::sphere_objective(points, candidate, cfg.mode);
      if (cand_objective <= objective) {
        c = candidate;
        objective = cand_objective;
        accepted = true;
        break;
      }
      step /= 2.0;
      if (step.norm() < cfg.tol) break;
    }
    if (!accepted) {
      converged = true;  // no descent direction left within tolerance
      break;
    }
  }

  const double radius = cfg.mode == CircleFitMode::Great
                            ? kPi / 2.0
                            : [&] {
                                double sum = 0.0;
                                for (const auto& p : points) sum += sphere_distance(p, c);
                                return sum / static_cast<double>(points.size());
                              }();

  FitReport report;
  report.circle = CircleOnSphere(c, radius).canonicalize();
  report.outer_iterations = outer;
  report.converged = converged;
  report.residuals.reserve(points.size());
  for (const auto& p : points) {
    report.residuals.push_back(sphere_distance(p, report.circle.center) - report.circle.radius);
  }
  for (double e : report.residuals) report.sum_sq_residuals += e * e;
  return report;
}

/// Projection of x onto the circle along the meridian through x:
/// P x = (x sin r + c sin(rho - r)) / sin(rho), rho = rho(x, c).
inline UnitVector3 project_to_circle(const UnitVector3& x, const CircleOnSphere& circle) {
  const double rho = sphere_distance(x, circle.center);
  if (rho < kAntipodalTol || rho > kPi - kAntipodalTol) {
    throw std::domain_error("project_to_circle: projection undefined at the circle's poles");
  }
  const Vec3 p = (x.vec() * std::sin(circle.radius) +
                  circle.center.vec() * std::sin(rho - circle.radius)) /
                 std::sin(rho);
  return UnitVector3::normalized(p);
}

/// Principal circle mean: the point of the circle minimizing the summed
/// squared arc-length distance to the projected data. Rotating the center
/// to the north pole turns this into a geodesic mean of longitudes.
inline UnitVector3 principal_circle_mean(const std::vector<UnitVector3>& points,
                                         const CircleOnSphere& circle) {
  if (points.empty()) throw std::invalid_argument("principal_circle_mean: empty input");
  const RotationMatrix3 rot = rotation_to_north(circle.center);
  std::vector<Angle> longitudes;
  longitudes.reserve(points.size());
  for (const auto& x : points) {
    const UnitVector3 y = rot.apply(project_to_circle(x, circle));
    longitudes.emplace_back(std::atan2(y.y(), y.x()));
  }
  const double lam = geodesic_mean_s1(longitudes).radians();
  const double sr = std::sin(circle.radius);
  const Vec3 north_frame(sr * std::cos(lam), sr * std::sin(lam), std::cos(circle.radius));
  return rot.transposed().apply(UnitVector3::normalized(north_frame));
}

/// How fit_principal_circles resolves small vs great circle.
enum class SuppressionOverride { Auto, ForceSmall, ForceGreat };

/// First principal circle plus its circle mean; the second principal circle
/// is implied (the geodesic through mean_u and delta1.center).
struct PrincipalCircles {
  CircleOnSphere delta1;
  UnitVector3 mean_u;
  CircleKind kind = CircleKind::SmallCircle;
};

/// Fit the small circle, apply the suppression rule to the radial distances
/// (unless overridden), refit as a great circle when suppressed, and attach
/// the principal circle mean.
inline PrincipalCircles fit_principal_circles(const std::vector<UnitVector3>& points,
                                              const FitConfig& cfg = FitConfig{},
                                              double suppression_threshold = 2.0,
                                              SuppressionOverride override_mode = SuppressionOverride::Auto) {
  FitConfig small_cfg = cfg;
  small_cfg.mode = CircleFitMode::Small;
  const FitReport small_fit = fit_circle(points, small_cfg);

  CircleKind kind = CircleKind::SmallCircle;
  switch (override_mode) {
    case SuppressionOverride::ForceSmall:
      kind = CircleKind::SmallCircle;
      break;
    case SuppressionOverride::ForceGreat:
      kind = CircleKind::GreatCircle;
      break;
    case SuppressionOverride::Auto: {
      std::vector<double> radii;
      radii.reserve(points.size());
      for (const auto& p : points) radii.push_back(sphere_distance(p, small_fit.circle.center));
      kind = decide_circle_kind(radii, suppression_threshold);
      break;
    }
  }

  PrincipalCircles result;
  result.kind = kind;
  if (kind == CircleKind::GreatCircle) {
    FitConfig great_cfg = cfg;
    great_cfg.mode = CircleFitMode::Great;
    const FitReport great_fit = fit_circle(points, great_cfg);
    result.delta1 = great_fit.circle;
  } else {
    result.delta1 = small_fit.circle;
  }
  result.mean_u = principal_circle_mean(points, result.delta1);
  return result;
}

}  // namespace paa
