#pragma once

// Seeded synthetic data generators: noisy small-circle samples on S2,
// von Mises-Fisher caps, and a product-manifold shape family (two spheres
// plus a scale) driven by a one-dimensional latent parameter.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "paa/io.hpp"
#include "paa/manifold.hpp"
#include "paa/rng.hpp"

namespace paa {

enum class GeneratorKind { SmallCircleNoise, VonMisesFisher, ProductShapes };

/// Parameters for generate(); fields are used as applicable per kind.
struct GeneratorConfig {
  GeneratorKind kind = GeneratorKind::SmallCircleNoise;
  UnitVector3 center = UnitVector3::e3();  // circle center / vMF mean direction
  double mu = 0.6;      // circle radius (radians)
  double sigma = 0.05;  // radial noise standard deviation
  double kappa = 10.0;  // vMF concentration
  std::size_t n = 50;
  std::uint64_t seed = 1;
};

namespace detail {

inline void check_generator_config(const GeneratorConfig& cfg) {
  if (cfg.n < 1) throw std::invalid_argument("generate: n must be >= 1");
  if (cfg.sigma < 0.0) throw std::invalid_argument("generate: sigma must be >= 0");
  if (cfg.kind == GeneratorKind::SmallCircleNoise && !(cfg.mu > 0.0)) {
    throw std::invalid_argument("generate: circle radius mu must be > 0");
  }
  if (cfg.kind == GeneratorKind::VonMisesFisher && !(cfg.kappa > 0.0)) {
    throw std::invalid_argument("generate: kappa must be > 0");
  }
}

/// One point on a circle about `center`: tangent direction theta, geodesic
/// distance `radius` (so rho(x, center) = radius exactly for radius <= pi).
inline UnitVector3 point_at(const UnitVector3& center, double theta, double radius) {
  return exp_map_s2(center, Vec2(radius * std::cos(theta), radius * std::sin(theta)));
}

/// One von Mises-Fisher draw about the north pole (standard inversion of
/// the compound cosine-distance density), rotated to the mean direction.
inline UnitVector3 vmf_draw(const UnitVector3& mean_dir, double kappa, Rng& rng) {
  const double u = rng.uniform();
  const double w = 1.0 + std::log(u + (1.0 - u) * std::exp(-2.0 * kappa)) / kappa;
  const double t = std::sqrt(std::max(0.0, 1.0 - w * w));
  const double nu = rng.uniform(0.0, kTwoPi);
  const Vec3 north(t * std::cos(nu), t * std::sin(nu), w);
  return rotation_to_north(mean_dir).transposed().apply(UnitVector3::normalized(north));
}

}  // namespace detail

/// Generate a dataset per the config; deterministic for a fixed seed.
inline DatasetFile generate(const GeneratorConfig& cfg) {
  detail::check_generator_config(cfg);
  Rng rng(cfg.seed);
  DatasetFile ds;
  ds.metadata["seed"] = cfg.seed;
  ds.metadata["n"] = cfg.n;

  switch (cfg.kind) {
    case GeneratorKind::SmallCircleNoise: {
      // Signal + error on a circle: uniform angle on (0, 2*pi], geodesic
      // distance |mu + N(0, sigma^2)| from the center.
      ds.signature = ManifoldSignature({{ManifoldKind::Sphere, 1}});
      ds.metadata["generator"] = "small-circle-noise";
      ds.metadata["center"] = json::array({cfg.center.x(), cfg.center.y(), cfg.center.z()});
      ds.metadata["mu"] = cfg.mu;
      ds.metadata["sigma"] = cfg.sigma;
      for (std::size_t i = 0; i < cfg.n; ++i) {
        const double theta = kTwoPi * (1.0 - rng.uniform());  // (0, 2*pi]
        const double radius = std::abs(cfg.mu + cfg.sigma * rng.normal());
        ds.points.push_back({{detail::point_at(cfg.center, theta, radius)}});
      }
      break;
    }
    case GeneratorKind::VonMisesFisher: {
      ds.signature = ManifoldSignature({{ManifoldKind::Sphere, 1}});
      ds.metadata["generator"] = "von-mises-fisher";
      ds.metadata["center"] = json::array({cfg.center.x(), cfg.center.y(), cfg.center.z()});
      ds.metadata["kappa"] = cfg.kappa;
      for (std::size_t i = 0; i < cfg.n; ++i) {
        ds.points.push_back({{detail::vmf_draw(cfg.center, cfg.kappa, rng)}});
      }
      break;
    }
    case GeneratorKind::ProductShapes: {
      // Two spheres and one scale riding a shared latent parameter t: both
      // sphere blocks move along small circles (radius mu, radial noise
      // sigma) and the scale moves log-linearly. The data concentrate near
      // a one-dimensional arc in the product space.
      ds.signature = ManifoldSignature(
          {{ManifoldKind::Sphere, 1}, {ManifoldKind::Sphere, 1}, {ManifoldKind::PositiveReal, 1}});
      ds.metadata["generator"] = "product-shapes";
      ds.metadata["mu"] = cfg.mu;
      ds.metadata["sigma"] = cfg.sigma;
      const UnitVector3 axis_a = UnitVector3::e3();
      const UnitVector3 axis_b = UnitVector3::e1();
      for (std::size_t i = 0; i < cfg.n; ++i) {
        const double t = rng.uniform(-1.4, 1.4);
        const double radius_a = std::abs(cfg.mu + cfg.sigma * rng.normal());
        const double radius_b = std::abs(cfg.mu + cfg.sigma * rng.normal());
        const double scale = 2.0 * std::exp(0.4 * t + cfg.sigma * rng.normal());
        ProductPoint p;
        p.values.emplace_back(detail::point_at(axis_a, t, radius_a));
        p.values.emplace_back(detail::point_at(axis_b, 0.8 * t + 0.3, radius_b));
        p.values.emplace_back(scale);
        ds.points.push_back(std::move(p));
      }
      break;
    }
  }
  return ds;
}

}  // namespace paa
