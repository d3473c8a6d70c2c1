#pragma once

// Flattening maps from each simple-manifold component into a Euclidean
// block: the projection map (arc length along the fitted circle plus signed
// radial residual), the conformal map (stereographic projection composed
// with a Moebius transformation), and tangent log maps at geodesic means.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "paa/circle_fit.hpp"
#include "paa/errors.hpp"
#include "paa/manifold.hpp"

namespace paa {

/// A flattened coordinate block (2 for S2, 1 for S1 and R+, p for R^p).
using FlatPoint = VecX;

enum class FrameKind { ProjectionH, ConformalH, TangentLog };

/// Fitted S2 frame shared by both circle-based maps: the principal circles,
/// and the rotation placing the circle's center at the north pole with the
/// circle mean u on the positive-x prime meridian.
struct SphereFrame {
  CircleOnSphere circle;
  UnitVector3 mean_u;
  CircleKind circle_kind = CircleKind::SmallCircle;
  RotationMatrix3 rotation;  // c -> e3, u -> zero-longitude meridian
  double theta_u = 0.0;      // colatitude of u in the rotated frame
  double u_star = 0.0;       // stereographic image of u (real axis)
  double alpha = 1.0;        // conformal scale (calibrated at fit time)
};

/// Build the rotation and derived constants for a fitted pair (delta1, u).
inline SphereFrame make_sphere_frame(const PrincipalCircles& pc) {
  SphereFrame frame;
  frame.circle = pc.delta1;
  frame.mean_u = pc.mean_u;
  frame.circle_kind = pc.kind;
  const RotationMatrix3 r1 = rotation_to_north(pc.delta1.center);
  const Vec3 u1 = r1.apply(pc.mean_u.vec());
  const double lambda_u = std::atan2(u1.y(), u1.x());
  frame.rotation = RotationMatrix3::about_z(-lambda_u) * r1;
  const Vec3 u2 = frame.rotation.apply(pc.mean_u.vec());
  frame.theta_u = std::acos(std::clamp(u2.z(), -1.0, 1.0));
  frame.u_star = std::tan(frame.theta_u / 2.0);
  return frame;
}

namespace detail {

/// Rotated coordinates with the pole guard shared by both S2 maps.
inline Vec3 rotate_into_frame(const UnitVector3& x, const SphereFrame& frame,
                              const char* who) {
  const Vec3 y = frame.rotation.apply(x.vec());
  const double colat = std::acos(std::clamp(y.z(), -1.0, 1.0));
  if (colat < kAntipodalTol || colat > kPi - kAntipodalTol) {
    throw std::domain_error(std::string(who) + ": input at a pole of the frame");
  }
  return y;
}

}  // namespace detail

/// Projection map h(x) = (sin(r) * longitude from u, colatitude - theta_u)
/// in the frame's rotated coordinates. Longitude is cut at +-pi opposite u.
inline FlatPoint projection_h_forward(const UnitVector3& x, const SphereFrame& frame) {
  const Vec3 y = detail::rotate_into_frame(x, frame, "projection_h_forward");
  const double colat = std::acos(std::clamp(y.z(), -1.0, 1.0));
  double lon = std::atan2(y.y(), y.x());
  if (lon <= -kPi) lon = kPi;
  FlatPoint p(2);
  p << std::sin(frame.circle.radius) * lon, colat - frame.theta_u;
  return p;
}

/// Inverse of the projection map: longitude p1/sin(r), colatitude
/// p2 + theta_u, rotated back.
inline UnitVector3 projection_h_inverse(const FlatPoint& p, const SphereFrame& frame) {
  if (p.size() != 2) throw std::invalid_argument("projection_h_inverse: expected 2 coordinates");
  const double lon = p[0] / std::sin(frame.circle.radius);
  const double colat = p[1] + frame.theta_u;
  if (!(colat > 0.0 && colat < kPi)) {
    throw std::domain_error("projection_h_inverse: colatitude " + std::to_string(colat) +
                            " outside (0, pi)");
  }
  if (std::abs(lon) > kPi) {
    throw std::domain_error("projection_h_inverse: longitude " + std::to_string(lon) +
                            " outside [-pi, pi]");
  }
  const Vec3 y(std::sin(colat) * std::cos(lon), std::sin(colat) * std::sin(lon), std::cos(colat));
  return frame.rotation.transposed().apply(UnitVector3::normalized(y));
}

namespace detail {

/// Stereographic projection from the south pole of the rotated frame.
inline std::complex<double> stereographic(const Vec3& y) {
  return std::complex<double>(y.x(), y.y()) / (1.0 + y.z());
}

inline Vec3 stereographic_inverse(const std::complex<double>& z) {
  const double nsq = std::norm(z);
  return Vec3(2.0 * z.real(), 2.0 * z.imag(), 1.0 - nsq) / (1.0 + nsq);
}

}  // namespace detail

/// Conformal map: stereographic projection from the antipode of c followed
/// by the Moebius transformation f(z) = alpha*i*(z - u*)/(-z - u*), which
/// sends delta1 to the real axis and delta2 to the imaginary axis.
inline FlatPoint conformal_h_forward(const UnitVector3& x, const SphereFrame& frame) {
  const Vec3 y = detail::rotate_into_frame(x, frame, "conformal_h_forward");
  const std::complex<double> z = detail::stereographic(y);
  if (std::abs(z + frame.u_star) < 1e-12) {
    throw std::domain_error("conformal_h_forward: input maps to the point at infinity");
  }
  const std::complex<double> ai(0.0, frame.alpha);
  const std::complex<double> f = ai * (z - frame.u_star) / (-z - frame.u_star);
  FlatPoint p(2);
  p << f.real(), f.imag();
  return p;
}

/// Closed-form inverse of the conformal map; the one finite coordinate pair
/// whose preimage is the projection pole (f = -alpha*i) returns that pole.
inline UnitVector3 conformal_h_inverse(const FlatPoint& p, const SphereFrame& frame) {
  if (p.size() != 2) throw std::invalid_argument("conformal_h_inverse: expected 2 coordinates");
  const std::complex<double> f(p[0], p[1]);
  const std::complex<double> ai(0.0, frame.alpha);
  Vec3 y;
  if (std::abs(f + ai) < 1e-12) {
    y = Vec3(0.0, 0.0, -1.0);
  } else {
    const std::complex<double> z = -frame.u_star * (f - ai) / (f + ai);
    y = detail::stereographic_inverse(z);
  }
  return frame.rotation.transposed().apply(UnitVector3::normalized(y));
}

/// Scale making the mapped sample's total variance (about its own mean)
/// equal the sample's geodesic variance; the conformal map is linear in
/// alpha, so the calibration is a single square root.
inline double calibrate_alpha(const std::vector<UnitVector3>& points, const SphereFrame& frame) {
  if (points.empty()) throw std::invalid_argument("calibrate_alpha: empty sample");
  SphereFrame unit = frame;
  unit.alpha = 1.0;
  Eigen::Matrix2Xd mapped(2, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    mapped.col(static_cast<Eigen::Index>(i)) = conformal_h_forward(points[i], unit);
  }
  const Vec2 mean = mapped.rowwise().mean();
  const double total_var = (mapped.colwise() - mean).squaredNorm() /
                           static_cast<double>(points.size());
  if (total_var < 1e-300) return 1.0;
  const UnitVector3 gm = geodesic_mean_s2(points);
  return std::sqrt(sphere_variance(points, gm) / total_var);
}

// ---------------------------------------------------------------------------
// Tangent log maps at geodesic means (all non-S2 components; S2 under PGA)
// ---------------------------------------------------------------------------

/// Log map of one component value relative to its geodesic mean.
inline FlatPoint tangent_log_forward(const ComponentValue& value, const Component& comp,
                                     const ComponentValue& mean) {
  switch (comp.kind) {
    case ManifoldKind::Circle: {
      const double d = wrap_signed(std::get<Angle>(value).radians() -
                                   std::get<Angle>(mean).radians());
      if (std::abs(d) > kPi - kAntipodalTol) {
        throw std::domain_error("tangent_log_forward: angle antipodal to the mean");
      }
      FlatPoint p(1);
      p << d;
      return p;
    }
    case ManifoldKind::Sphere: {
      FlatPoint p(2);
      p = log_map_s2(std::get<UnitVector3>(mean), std::get<UnitVector3>(value));
      return p;
    }
    case ManifoldKind::PositiveReal: {
      FlatPoint p(1);
      p << std::log(std::get<double>(value) / std::get<double>(mean));
      return p;
    }
    case ManifoldKind::Euclidean:
      return std::get<VecX>(value) - std::get<VecX>(mean);
  }
  throw std::logic_error("tangent_log_forward: unknown component kind");
}

/// Exp map back from the tangent block at the mean.
inline ComponentValue tangent_log_inverse(const FlatPoint& p, const Component& comp,
                                          const ComponentValue& mean) {
  if (p.size() != comp.block_dim()) {
    throw std::invalid_argument("tangent_log_inverse: expected " +
                                std::to_string(comp.block_dim()) + " coordinates");
  }
  switch (comp.kind) {
    case ManifoldKind::Circle:
      return Angle(std::get<Angle>(mean).radians() + p[0]);
    case ManifoldKind::Sphere:
      return exp_map_s2(std::get<UnitVector3>(mean), Vec2(p[0], p[1]));
    case ManifoldKind::PositiveReal:
      return std::get<double>(mean) * std::exp(p[0]);
    case ManifoldKind::Euclidean:
      return VecX(std::get<VecX>(mean) + p);
  }
  throw std::logic_error("tangent_log_inverse: unknown component kind");
}

/// Per-component flattening map: one of the two circle-based S2 maps, or a
/// tangent log map anchored at the component's geodesic mean.
struct FrameMap {
  FrameKind kind = FrameKind::TangentLog;
  Component component;
  SphereFrame sphere;   // populated for ProjectionH / ConformalH
  ComponentValue mean;  // populated for TangentLog

  int block_dim() const { return component.block_dim(); }

  FlatPoint forward(const ComponentValue& value) const {
    switch (kind) {
      case FrameKind::ProjectionH:
        return projection_h_forward(std::get<UnitVector3>(value), sphere);
      case FrameKind::ConformalH:
        return conformal_h_forward(std::get<UnitVector3>(value), sphere);
      case FrameKind::TangentLog:
        return tangent_log_forward(value, component, mean);
    }
    throw std::logic_error("FrameMap::forward: unknown kind");
  }

  ComponentValue inverse(const FlatPoint& p) const {
    switch (kind) {
      case FrameKind::ProjectionH:
        return projection_h_inverse(p, sphere);
      case FrameKind::ConformalH:
        return conformal_h_inverse(p, sphere);
      case FrameKind::TangentLog:
        return tangent_log_inverse(p, component, mean);
    }
    throw std::logic_error("FrameMap::inverse: unknown kind");
  }

  /// The value the frame sends to the origin of its block.
  ComponentValue anchor() const {
    if (kind == FrameKind::TangentLog) return mean;
    return sphere.mean_u;
  }
};

}  // namespace paa
