#pragma once

// End-to-end principal arc analysis on a direct product manifold: fit a
// flattening frame per component, assemble and center the d0 x n data
// matrix, take its SVD, and expose scores, principal arcs, submanifold
// projections and variance accounting. The PGA baseline swaps every frame
// for a tangent log map at the geodesic mean.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "paa/circle_fit.hpp"
#include "paa/errors.hpp"
#include "paa/manifold.hpp"
#include "paa/transforms.hpp"

namespace paa {

enum class PipelineMethod { PAA, PGA };

/// Pipeline knobs; defaults follow the recommended setup (projection map,
/// robust suppression at threshold 2, all recoverable components).
struct PaaConfig {
  FrameKind s2_map = FrameKind::ProjectionH;
  double suppression_threshold = 2.0;
  SuppressionOverride suppression = SuppressionOverride::Auto;
  FitConfig fit;
  int max_components = -1;  // -1: min(n - 1, d0)
};

/// Fitted model: per-component frames plus the centered SVD of the
/// flattened data.
struct PaaModel {
  ManifoldSignature signature;
  std::vector<FrameMap> frames;
  Eigen::MatrixXd directions;  // d0 x m, orthonormal columns
  VecX singular_values;        // all min(d0, n) values, nonincreasing
  VecX center_offset;          // d0
  PipelineMethod method = PipelineMethod::PAA;
  std::size_t n_samples = 0;

  int d0() const { return static_cast<int>(center_offset.size()); }
  int num_components() const { return static_cast<int>(directions.cols()); }
};

namespace detail {

inline ComponentValue component_geodesic_mean(const std::vector<ProductPoint>& data,
                                              const Component& comp, std::size_t index) {
  switch (comp.kind) {
    case ManifoldKind::Circle: {
      std::vector<Angle> angles;
      angles.reserve(data.size());
      for (const auto& p : data) angles.push_back(std::get<Angle>(p.values[index]));
      return geodesic_mean_s1(angles);
    }
    case ManifoldKind::Sphere: {
      std::vector<UnitVector3> pts;
      pts.reserve(data.size());
      for (const auto& p : data) pts.push_back(std::get<UnitVector3>(p.values[index]));
      return geodesic_mean_s2(pts);
    }
    case ManifoldKind::PositiveReal: {
      double log_sum = 0.0;
      for (const auto& p : data) log_sum += std::log(std::get<double>(p.values[index]));
      return std::exp(log_sum / static_cast<double>(data.size()));
    }
    case ManifoldKind::Euclidean: {
      VecX sum = VecX::Zero(comp.euclidean_dim);
      for (const auto& p : data) sum += std::get<VecX>(p.values[index]);
      return VecX(sum / static_cast<double>(data.size()));
    }
  }
  throw std::logic_error("component_geodesic_mean: unknown component kind");
}

inline FrameMap tangent_frame(const std::vector<ProductPoint>& data, const Component& comp,
                              std::size_t index) {
  FrameMap frame;
  frame.kind = FrameKind::TangentLog;
  frame.component = comp;
  frame.mean = component_geodesic_mean(data, comp, index);
  return frame;
}

inline FrameMap sphere_fit_frame(const std::vector<ProductPoint>& data, const Component& comp,
                                 std::size_t index, const PaaConfig& cfg) {
  std::vector<UnitVector3> pts;
  pts.reserve(data.size());
  for (const auto& p : data) pts.push_back(std::get<UnitVector3>(p.values[index]));
  const PrincipalCircles pc =
      fit_principal_circles(pts, cfg.fit, cfg.suppression_threshold, cfg.suppression);
  FrameMap frame;
  frame.kind = cfg.s2_map;
  frame.component = comp;
  frame.sphere = make_sphere_frame(pc);
  if (cfg.s2_map == FrameKind::ConformalH) {
    frame.sphere.alpha = calibrate_alpha(pts, frame.sphere);
  }
  return frame;
}

/// Build the model around already-fitted frames: assemble the flattened
/// matrix, center it, and decompose.
inline PaaModel decompose(const std::vector<ProductPoint>& data, const ManifoldSignature& sig,
                          std::vector<FrameMap> frames, PipelineMethod method,
                          int max_components) {
  const int d0 = sig.intrinsic_dim();
  const auto n = static_cast<Eigen::Index>(data.size());

  Eigen::MatrixXd x(d0, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    int row = 0;
    for (std::size_t i = 0; i < sig.size(); ++i) {
      const FlatPoint block = frames[i].forward(data[static_cast<std::size_t>(j)].values[i]);
      x.block(row, j, block.size(), 1) = block;
      row += static_cast<int>(block.size());
    }
  }

  PaaModel model;
  model.signature = sig;
  model.frames = std::move(frames);
  model.method = method;
  model.n_samples = data.size();
  model.center_offset = x.rowwise().mean();
  x.colwise() -= model.center_offset;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU);
  model.singular_values = svd.singularValues();

  int m = std::min<int>(static_cast<int>(n) - 1, d0);
  if (max_components > 0) m = std::min(m, max_components);
  m = std::max(m, 1);
  model.directions = svd.matrixU().leftCols(m);
  for (Eigen::Index k = 0; k < model.directions.cols(); ++k) {
    Eigen::Index argmax = 0;
    model.directions.col(k).cwiseAbs().maxCoeff(&argmax);
    if (model.directions(argmax, k) < 0.0) model.directions.col(k) = -model.directions.col(k);
  }
  return model;
}

inline void check_fit_inputs(const std::vector<ProductPoint>& data, const ManifoldSignature& sig,
                             const char* who) {
  if (data.size() < 3) {
    throw std::invalid_argument(std::string(who) + ": need at least 3 points, got " +
                                std::to_string(data.size()));
  }
  for (const auto& p : data) validate_point(p, sig);
}

}  // namespace detail

/// Principal arc analysis: circle-based frames on S2 components, tangent
/// log frames elsewhere, then a centered SVD of the flattened data.
inline PaaModel fit_paa(const std::vector<ProductPoint>& data, const ManifoldSignature& sig,
                        const PaaConfig& cfg = PaaConfig{}) {
  detail::check_fit_inputs(data, sig, "fit_paa");
  std::vector<FrameMap> frames;
  frames.reserve(sig.size());
  for (std::size_t i = 0; i < sig.size(); ++i) {
    if (sig[i].kind == ManifoldKind::Sphere) {
      frames.push_back(detail::sphere_fit_frame(data, sig[i], i, cfg));
    } else {
      frames.push_back(detail::tangent_frame(data, sig[i], i));
    }
  }
  return detail::decompose(data, sig, std::move(frames), PipelineMethod::PAA,
                           cfg.max_components);
}

/// Principal geodesic analysis baseline: tangent log frames at the geodesic
/// mean for every component, including S2.
inline PaaModel fit_pga(const std::vector<ProductPoint>& data, const ManifoldSignature& sig,
                        const PaaConfig& cfg = PaaConfig{}) {
  detail::check_fit_inputs(data, sig, "fit_pga");
  std::vector<FrameMap> frames;
  frames.reserve(sig.size());
  for (std::size_t i = 0; i < sig.size(); ++i) {
    frames.push_back(detail::tangent_frame(data, sig[i], i));
  }
  return detail::decompose(data, sig, std::move(frames), PipelineMethod::PGA,
                           cfg.max_components);
}

/// Componentwise flattening h(x) of one point (not centered).
inline FlatPoint transform_point(const ProductPoint& x, const PaaModel& model) {
  validate_point(x, model.signature);
  FlatPoint flat(model.d0());
  int row = 0;
  for (std::size_t i = 0; i < model.frames.size(); ++i) {
    const FlatPoint block = model.frames[i].forward(x.values[i]);
    flat.segment(row, block.size()) = block;
    row += static_cast<int>(block.size());
  }
  return flat;
}

/// Componentwise inverse of a full flattened coordinate vector.
inline ProductPoint inverse_transform_point(const FlatPoint& flat, const PaaModel& model) {
  if (flat.size() != model.d0()) {
    throw std::invalid_argument("inverse_transform_point: expected " +
                                std::to_string(model.d0()) + " coordinates");
  }
  ProductPoint point;
  point.values.reserve(model.frames.size());
  int row = 0;
  for (std::size_t i = 0; i < model.frames.size(); ++i) {
    const int dim = model.frames[i].block_dim();
    try {
      point.values.push_back(model.frames[i].inverse(flat.segment(row, dim)));
    } catch (const std::domain_error& e) {
      throw std::domain_error("component " + std::to_string(i) + ": " + e.what());
    }
    row += dim;
  }
  return point;
}

/// Principal component scores of one point: directions' coordinates of the
/// centered flattened vector.
inline VecX scores(const ProductPoint& x, const PaaModel& model) {
  return model.directions.transpose() * (transform_point(x, model) - model.center_offset);
}

/// n x m matrix of scores, one row per data point.
inline Eigen::MatrixXd score_matrix(const std::vector<ProductPoint>& data, const PaaModel& model) {
  Eigen::MatrixXd z(static_cast<Eigen::Index>(data.size()), model.num_components());
  for (std::size_t i = 0; i < data.size(); ++i) {
    z.row(static_cast<Eigen::Index>(i)) = scores(data[i], model).transpose();
  }
  return z;
}

/// Points of the k-th principal arc (0-based): h^{-1}(center + t * v_k).
inline std::vector<ProductPoint> principal_arc(const PaaModel& model, std::size_t k,
                                               const std::vector<double>& t_values) {
  if (k >= static_cast<std::size_t>(model.num_components())) {
    throw std::invalid_argument("principal_arc: component index " + std::to_string(k) +
                                " out of range");
  }
  std::vector<ProductPoint> arc;
  arc.reserve(t_values.size());
  for (double t : t_values) {
    const FlatPoint flat = model.center_offset + t * model.directions.col(static_cast<Eigen::Index>(k));
    arc.push_back(inverse_transform_point(flat, model));
  }
  return arc;
}

/// Projection onto the k-dimensional principal submanifold:
/// h^{-1}(center + sum_{i<k} v_i v_i' (h(x) - center)). Idempotent.
inline ProductPoint project_to_submanifold(const ProductPoint& x, const PaaModel& model,
                                           std::size_t k) {
  if (k < 1 || k > static_cast<std::size_t>(model.num_components())) {
    throw std::invalid_argument("project_to_submanifold: k must be in [1, " +
                                std::to_string(model.num_components()) + "]");
  }
  const auto cols = static_cast<Eigen::Index>(k);
  const FlatPoint centered = transform_point(x, model) - model.center_offset;
  const FlatPoint reconstructed =
      model.center_offset +
      model.directions.leftCols(cols) * (model.directions.leftCols(cols).transpose() * centered);
  return inverse_transform_point(reconstructed, model);
}

/// One scree-table row.
struct VarianceEntry {
  int index = 0;          // 0-based component index
  double singular_value = 0.0;
  double proportion = 0.0;
  double cumulative = 0.0;
};

/// Variance accounting over all computed singular values:
/// proportion_k = sigma_k^2 / sum_j sigma_j^2.
inline std::vector<VarianceEntry> variance_report(const PaaModel& model) {
  const double total = model.singular_values.squaredNorm();
  std::vector<VarianceEntry> report;
  report.reserve(static_cast<std::size_t>(model.singular_values.size()));
  double cumulative = 0.0;
  for (Eigen::Index k = 0; k < model.singular_values.size(); ++k) {
    VarianceEntry entry;
    entry.index = static_cast<int>(k);
    entry.singular_value = model.singular_values[k];
    entry.proportion = total > 0.0 ? model.singular_values[k] * model.singular_values[k] / total : 0.0;
    cumulative += entry.proportion;
    entry.cumulative = cumulative;
    report.push_back(entry);
  }
  return report;
}

}  // namespace paa
