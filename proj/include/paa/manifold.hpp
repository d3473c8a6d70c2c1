#pragma once

// Geodesic geometry of the simple manifolds S1, S2, R+ and R^p and of their
// direct products: distances, rotation frames, exponential/log maps on the
// sphere, geodesic means and variances.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "paa/errors.hpp"

namespace paa {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using VecX = Eigen::VectorXd;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Tolerance below which a log map input counts as antipodal to the base
/// point (the map divides by sin of the colatitude there).
inline constexpr double kAntipodalTol = 1e-9;

/// Reduce an angle to [0, 2*pi).
inline double wrap_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;  // fmod can land exactly on 2*pi after the add
  return t;
}

/// Signed angular difference a - b wrapped to (-pi, pi].
inline double wrap_signed(double diff) {
  double d = std::fmod(diff, kTwoPi);
  if (d <= -kPi) d += kTwoPi;
  if (d > kPi) d -= kTwoPi;
  return d;
}

/// A point on S1 stored canonically in [0, 2*pi).
class Angle {
public:
  Angle() : theta_(0.0) {}
  explicit Angle(double radians) : theta_(wrap_angle(radians)) {}
  double radians() const { return theta_; }

private:
  double theta_;
};

/// Shortest-arc distance on S1.
inline double circle_distance(const Angle& a, const Angle& b) {
  return std::abs(wrap_signed(a.radians() - b.radians()));
}

/// A point on S2 as a unit 3-vector. Construction renormalizes inputs whose
/// norm is within 1e-6 of one and rejects anything farther off, so file
/// rounding is tolerated without masking bad data.
class UnitVector3 {
public:
  UnitVector3() : v_(0.0, 0.0, 1.0) {}

  explicit UnitVector3(const Vec3& v) {
    const double n = v.norm();
    if (std::abs(n - 1.0) > 1e-6) {
      throw std::invalid_argument("UnitVector3: vector norm " + std::to_string(n) +
                                  " is not within 1e-6 of 1");
    }
    // When the input is already unit to machine precision, dividing by the
    // computed norm can only perturb the last bit; skipping the division keeps
    // serialize/deserialize round-trips exact.
    constexpr double kUlpWindow = 8.0 * std::numeric_limits<double>::epsilon();
    v_ = (std::abs(n - 1.0) <= kUlpWindow) ? v : v / n;
  }

  UnitVector3(double x, double y, double z) : UnitVector3(Vec3(x, y, z)) {}

  /// Normalizes any nonzero vector; for inputs that are not nearly unit.
  static UnitVector3 normalized(const Vec3& v) {
    const double n = v.norm();
    if (n < 1e-300) throw std::invalid_argument("UnitVector3: cannot normalize zero vector");
    UnitVector3 u;
    u.v_ = v / n;
    return u;
  }

  const Vec3& vec() const { return v_; }
  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }

  UnitVector3 antipode() const {
    UnitVector3 u;
    u.v_ = -v_;
    return u;
  }

  static UnitVector3 e1() { return UnitVector3(1.0, 0.0, 0.0); }
  static UnitVector3 e2() { return UnitVector3(0.0, 1.0, 0.0); }
  static UnitVector3 e3() { return UnitVector3(0.0, 0.0, 1.0); }

private:
  Vec3 v_;
};

/// Great-circle (angular) distance on S2.
inline double sphere_distance(const UnitVector3& a, const UnitVector3& b) {
  const double dot = std::clamp(a.vec().dot(b.vec()), -1.0, 1.0);
  return std::acos(dot);
}

/// Proper rotation, validated to orthogonality and det +1 within 1e-10.
class RotationMatrix3 {
public:
  RotationMatrix3() : m_(Mat3::Identity()) {}

  explicit RotationMatrix3(const Mat3& m) : m_(m) {
    if ((m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-10) {
      throw std::invalid_argument("RotationMatrix3: matrix is not orthogonal");
    }
    if (std::abs(m.determinant() - 1.0) > 1e-10) {
      throw std::invalid_argument("RotationMatrix3: determinant is not +1");
    }
  }

  /// Rodrigues formula for rotation about a unit axis.
  static RotationMatrix3 axis_angle(const Vec3& axis, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double v = 1.0 - c;
    const double ux = axis.x(), uy = axis.y(), uz = axis.z();
    Mat3 m;
    m << c + ux * ux * v, ux * uy * v - uz * s, ux * uz * v + uy * s,
         ux * uy * v + uz * s, c + uy * uy * v, uy * uz * v - ux * s,
         ux * uz * v - uy * s, uy * uz * v + ux * s, c + uz * uz * v;
    RotationMatrix3 r;
    r.m_ = m;
    return r;
  }

  static RotationMatrix3 about_z(double angle) {
    return axis_angle(Vec3(0.0, 0.0, 1.0), angle);
  }

  const Mat3& matrix() const { return m_; }

  Vec3 apply(const Vec3& x) const { return m_ * x; }

  UnitVector3 apply(const UnitVector3& x) const {
    return UnitVector3::normalized(m_ * x.vec());
  }

  RotationMatrix3 transposed() const {
    RotationMatrix3 r;
    r.m_ = m_.transpose();
    return r;
  }

  RotationMatrix3 operator*(const RotationMatrix3& o) const {
    RotationMatrix3 r;
    r.m_ = m_ * o.m_;
    return r;
  }

private:
  Mat3 m_;
};

/// Rotation q_c taking c to the north pole e3. The axis is
/// (c_y, -c_x, 0)/sqrt(1 - c_z^2) through the angle acos(c_z); at the poles
/// the axis degenerates and e1 is used instead.
inline RotationMatrix3 rotation_to_north(const UnitVector3& c) {
  const double cz = std::clamp(c.z(), -1.0, 1.0);
  const double theta = std::acos(cz);
  const double denom = std::sqrt(std::max(0.0, 1.0 - cz * cz));
  if (denom < 1e-12) {
    return RotationMatrix3::axis_angle(Vec3(1.0, 0.0, 0.0), cz > 0.0 ? 0.0 : kPi);
  }
  const Vec3 axis(c.y() / denom, -c.x() / denom, 0.0);
  return RotationMatrix3::axis_angle(axis, theta);
}

namespace detail {
/// sin(t)/t with the removable singularity filled in.
inline double sinc(double t) {
  if (std::abs(t) < 1e-8) return 1.0 - t * t / 6.0;
  return std::sin(t) / t;
}
}  // namespace detail

/// Exponential map at the north pole.
inline UnitVector3 exp_map_north(const Vec2& v) {
  const double norm = v.norm();
  const double s = detail::sinc(norm);
  return UnitVector3::normalized(Vec3(v.x() * s, v.y() * s, std::cos(norm)));
}

/// Log map at the north pole; undefined within kAntipodalTol of the south pole.
inline Vec2 log_map_north(const UnitVector3& x) {
  const double theta = std::acos(std::clamp(x.z(), -1.0, 1.0));
  if (theta > kPi - kAntipodalTol) {
    throw std::domain_error("log_map_s2: point is antipodal to the base point");
  }
  const double scale = 1.0 / detail::sinc(theta);
  return Vec2(x.x() * scale, x.y() * scale);
}

/// Exp map at an arbitrary base point, via the rotation frame of c.
inline UnitVector3 exp_map_s2(const UnitVector3& c, const Vec2& v) {
  return rotation_to_north(c).transposed().apply(exp_map_north(v));
}

/// Log map at an arbitrary base point. Throws std::domain_error for inputs
/// antipodal to c; preserves the distance to the point of tangency.
inline Vec2 log_map_s2(const UnitVector3& c, const UnitVector3& x) {
  return log_map_north(rotation_to_north(c).apply(x));
}

// ---------------------------------------------------------------------------
// Direct products
// ---------------------------------------------------------------------------

enum class ManifoldKind { Circle, Sphere, PositiveReal, Euclidean };

struct Component {
  ManifoldKind kind = ManifoldKind::Euclidean;
  int euclidean_dim = 1;  // meaningful for Euclidean only

  /// Dimension of the flattened coordinate block (2 for S2).
  int block_dim() const {
    switch (kind) {
      case ManifoldKind::Sphere: return 2;
      case ManifoldKind::Euclidean: return euclidean_dim;
      default: return 1;
    }
  }
};

/// Ordered schema of a direct product manifold.
class ManifoldSignature {
public:
  ManifoldSignature() = default;

  explicit ManifoldSignature(std::vector<Component> comps) : comps_(std::move(comps)) {
    if (comps_.empty()) throw std::invalid_argument("ManifoldSignature: empty component list");
    for (const auto& c : comps_) {
      if (c.kind == ManifoldKind::Euclidean && c.euclidean_dim < 1) {
        throw std::invalid_argument("ManifoldSignature: Euclidean dimension must be >= 1");
      }
    }
  }

  std::size_t size() const { return comps_.size(); }
  const Component& operator[](std::size_t i) const { return comps_[i]; }
  const std::vector<Component>& components() const { return comps_; }

  /// Intrinsic dimension d0 = sum of per-component dimensions.
  int intrinsic_dim() const {
    int d = 0;
    for (const auto& c : comps_) d += c.block_dim();
    return d;
  }

  /// Offset of component i's block in the flattened coordinate vector.
  int block_offset(std::size_t i) const {
    int off = 0;
    for (std::size_t j = 0; j < i; ++j) off += comps_[j].block_dim();
    return off;
  }

  bool operator==(const ManifoldSignature& o) const {
    if (comps_.size() != o.comps_.size()) return false;
    for (std::size_t i = 0; i < comps_.size(); ++i) {
      if (comps_[i].kind != o.comps_[i].kind) return false;
      if (comps_[i].kind == ManifoldKind::Euclidean &&
          comps_[i].euclidean_dim != o.comps_[i].euclidean_dim) {
        return false;
      }
    }
    return true;
  }

private:
  std::vector<Component> comps_;
};

/// One slot of a product point.
using ComponentValue = std::variant<Angle, UnitVector3, double, VecX>;

/// A point on a direct product manifold; slots must match a signature.
struct ProductPoint {
  std::vector<ComponentValue> values;
};

/// Validates arity and per-slot kind; throws SchemaError on mismatch.
inline void validate_point(const ProductPoint& p, const ManifoldSignature& sig) {
  if (p.values.size() != sig.size()) {
    throw SchemaError("product point has " + std::to_string(p.values.size()) +
                      " slots, signature expects " + std::to_string(sig.size()));
  }
  for (std::size_t i = 0; i < sig.size(); ++i) {
    const auto& c = sig[i];
    const auto& v = p.values[i];
    const std::string where = "slot " + std::to_string(i);
    switch (c.kind) {
      case ManifoldKind::Circle:
        if (!std::holds_alternative<Angle>(v)) throw SchemaError(where + ": expected S1 angle");
        break;
      case ManifoldKind::Sphere:
        if (!std::holds_alternative<UnitVector3>(v)) throw SchemaError(where + ": expected S2 unit vector");
        break;
      case ManifoldKind::PositiveReal:
        if (!std::holds_alternative<double>(v)) throw SchemaError(where + ": expected positive real");
        if (std::get<double>(v) <= 0.0) throw SchemaError(where + ": value must be strictly positive");
        break;
      case ManifoldKind::Euclidean:
        if (!std::holds_alternative<VecX>(v)) throw SchemaError(where + ": expected real vector");
        if (std::get<VecX>(v).size() != c.euclidean_dim) {
          throw SchemaError(where + ": expected vector of length " + std::to_string(c.euclidean_dim));
        }
        break;
    }
  }
}

/// Geodesic distance on one simple-manifold component.
inline double component_distance(const ComponentValue& a, const ComponentValue& b,
                                 const Component& c) {
  switch (c.kind) {
    case ManifoldKind::Circle:
      return circle_distance(std::get<Angle>(a), std::get<Angle>(b));
    case ManifoldKind::Sphere:
      return sphere_distance(std::get<UnitVector3>(a), std::get<UnitVector3>(b));
    case ManifoldKind::PositiveReal:
      return std::abs(std::log(std::get<double>(a) / std::get<double>(b)));
    case ManifoldKind::Euclidean:
      return (std::get<VecX>(a) - std::get<VecX>(b)).norm();
  }
  return 0.0;
}

/// Product geodesic distance: root sum of squared component distances.
inline double geodesic_distance(const ProductPoint& a, const ProductPoint& b,
                                const ManifoldSignature& sig) {
  validate_point(a, sig);
  validate_point(b, sig);
  double sq = 0.0;
  for (std::size_t i = 0; i < sig.size(); ++i) {
    const double d = component_distance(a.values[i], b.values[i], sig[i]);
    sq += d * d;
  }
  return std::sqrt(sq);
}

/// Geodesic mean on S1 by scanning the candidate set
/// (sum theta_i + 2*j*pi)/n, j = 0..n-1; ties go to the smallest canonical
/// angle so the result is deterministic.
inline Angle geodesic_mean_s1(const std::vector<Angle>& angles) {
  if (angles.empty()) throw std::invalid_argument("geodesic_mean_s1: empty input");
  const std::size_t n = angles.size();
  double sum = 0.0;
  for (const auto& a : angles) sum += a.radians();

  auto frechet = [&](double theta) {
    double f = 0.0;
    for (const auto& a : angles) {
      const double d = wrap_signed(theta - a.radians());
      f += d * d;
    }
    return f;
  };

  double best_theta = 0.0;
  double best_f = std::numeric_limits<double>::infinity();
  const double tie_tol = 1e-9;
  for (std::size_t j = 0; j < n; ++j) {
    const double cand = wrap_angle((sum + 2.0 * kPi * static_cast<double>(j)) /
                                   static_cast<double>(n));
    const double f = frechet(cand);
    if (f < best_f - tie_tol || (f <= best_f + tie_tol && cand < best_theta)) {
      best_f = std::min(best_f, f);
      best_theta = cand;
    }
  }
  return Angle(best_theta);
}

/// Intrinsic mean on S2 by tangent-space averaging: iterate
/// m <- Exp_m(mean of Log_m(x_i)) until the tangent mean norm drops below
/// tol. Assumes the data admit a unique mean.
inline UnitVector3 geodesic_mean_s2(const std::vector<UnitVector3>& points,
                                    double tol = 1e-10, int max_iterations = 1000) {
  if (points.empty()) throw std::invalid_argument("geodesic_mean_s2: empty input");
  if (points.size() == 1) return points.front();

  Vec3 euclid = Vec3::Zero();
  for (const auto& p : points) euclid += p.vec();
  UnitVector3 m = euclid.norm() > 1e-8 ? UnitVector3::normalized(euclid) : points.front();

  for (int it = 0; it < max_iterations; ++it) {
    Vec2 mean_tangent = Vec2::Zero();
    for (const auto& p : points) mean_tangent += log_map_s2(m, p);
    mean_tangent /= static_cast<double>(points.size());
    if (mean_tangent.norm() < tol) return m;
    m = exp_map_s2(m, mean_tangent);
  }
  throw ConvergenceError("geodesic_mean_s2: no convergence after " +
                         std::to_string(max_iterations) + " iterations");
}

/// Componentwise geodesic mean of product data. R+ uses the geometric mean
/// (forced by the log metric), Euclidean blocks the arithmetic mean.
inline ProductPoint geodesic_mean_product(const std::vector<ProductPoint>& data,
                                          const ManifoldSignature& sig) {
  if (data.empty()) throw std::invalid_argument("geodesic_mean_product: empty input");
  for (const auto& p : data) validate_point(p, sig);

  ProductPoint mean;
  mean.values.reserve(sig.size());
  const double n = static_cast<double>(data.size());

  for (std::size_t i = 0; i < sig.size(); ++i) {
    switch (sig[i].kind) {
      case ManifoldKind::Circle: {
        std::vector<Angle> angles;
        angles.reserve(data.size());
        for (const auto& p : data) angles.push_back(std::get<Angle>(p.values[i]));
        mean.values.emplace_back(geodesic_mean_s1(angles));
        break;
      }
      case ManifoldKind::Sphere: {
        std::vector<UnitVector3> pts;
        pts.reserve(data.size());
        for (const auto& p : data) pts.push_back(std::get<UnitVector3>(p.values[i]));
        mean.values.emplace_back(geodesic_mean_s2(pts));
        break;
      }
      case ManifoldKind::PositiveReal: {
        double log_sum = 0.0;
        for (const auto& p : data) log_sum += std::log(std::get<double>(p.values[i]));
        mean.values.emplace_back(std::exp(log_sum / n));
        break;
      }
      case ManifoldKind::Euclidean: {
        VecX sum = VecX::Zero(sig[i].euclidean_dim);
        for (const auto& p : data) sum += std::get<VecX>(p.values[i]);
        mean.values.emplace_back(VecX(sum / n));
        break;
      }
    }
  }
  return mean;
}

/// Average squared geodesic distance to the given mean.
inline double geodesic_variance(const std::vector<ProductPoint>& data,
                                const ProductPoint& mean, const ManifoldSignature& sig) {
  validate_point(mean, sig);
  double acc = 0.0;
  for (const auto& p : data) {
    const double d = geodesic_distance(mean, p, sig);
    acc += d * d;
  }
  return data.empty() ? 0.0 : acc / static_cast<double>(data.size());
}

/// Geodesic variance of a plain S2 sample about its intrinsic mean.
inline double sphere_variance(const std::vector<UnitVector3>& points, const UnitVector3& mean) {
  double acc = 0.0;
  for (const auto& p : points) {
    const double d = sphere_distance(mean, p);
    acc += d * d;
  }
  return points.empty() ? 0.0 : acc / static_cast<double>(points.size());
}

}  // namespace paa
