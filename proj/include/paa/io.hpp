#pragma once

// JSON persistence for datasets, fitted models and fit reports, with schema
// validation that names the offending row and field. Doubles round-trip
// exactly (shortest-representation serialization).

#include <Eigen/Dense>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "paa/circle_fit.hpp"
#include "paa/errors.hpp"
#include "paa/manifold.hpp"
#include "paa/pipeline.hpp"
#include "paa/transforms.hpp"

namespace paa {

using json = nlohmann::json;

/// On-disk dataset: a signature, one row of component values per point,
/// optional labels and free-form provenance metadata.
struct DatasetFile {
  ManifoldSignature signature;
  std::vector<ProductPoint> points;
  std::vector<std::string> labels;
  json metadata = json::object();
};

// ---------------------------------------------------------------------------
// Signature <-> strings
// ---------------------------------------------------------------------------

inline std::string kind_string(const Component& comp) {
  switch (comp.kind) {
    case ManifoldKind::Circle: return "S1";
    case ManifoldKind::Sphere: return "S2";
    case ManifoldKind::PositiveReal: return "Rplus";
    case ManifoldKind::Euclidean: return "R" + std::to_string(comp.euclidean_dim);
  }
  throw std::logic_error("kind_string: unknown component kind");
}

inline Component parse_kind_string(const std::string& s, const std::string& where) {
  if (s == "S1") return {ManifoldKind::Circle, 1};
  if (s == "S2") return {ManifoldKind::Sphere, 1};
  if (s == "Rplus") return {ManifoldKind::PositiveReal, 1};
  if (s.size() > 1 && s.front() == 'R') {
    int p = 0;
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (s[i] < '0' || s[i] > '9') p = -1;
      if (p < 0) break;
      p = p * 10 + (s[i] - '0');
    }
    if (p >= 1) return {ManifoldKind::Euclidean, p};
  }
  throw SchemaError(where + ": unknown manifold kind '" + s + "'");
}

inline json signature_to_json(const ManifoldSignature& sig) {
  json arr = json::array();
  for (const auto& comp : sig.components()) arr.push_back(kind_string(comp));
  return arr;
}

inline ManifoldSignature signature_from_json(const json& j) {
  if (!j.is_array() || j.empty()) {
    throw SchemaError("signature: expected a nonempty array of kind strings");
  }
  std::vector<Component> comps;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = "signature[" + std::to_string(i) + "]";
    if (!j[i].is_string()) throw SchemaError(where + ": expected a string");
    comps.push_back(parse_kind_string(j[i].get<std::string>(), where));
  }
  return ManifoldSignature(std::move(comps));
}

// ---------------------------------------------------------------------------
// Component values <-> JSON
// ---------------------------------------------------------------------------

inline json component_to_json(const ComponentValue& value, const Component& comp) {
  switch (comp.kind) {
    case ManifoldKind::Circle:
      return std::get<Angle>(value).radians();
    case ManifoldKind::Sphere: {
      const auto& u = std::get<UnitVector3>(value);
      return json::array({u.x(), u.y(), u.z()});
    }
    case ManifoldKind::PositiveReal:
      return std::get<double>(value);
    case ManifoldKind::Euclidean: {
      const auto& v = std::get<VecX>(value);
      json arr = json::array();
      for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
      return arr;
    }
  }
  throw std::logic_error("component_to_json: unknown component kind");
}

inline ComponentValue component_from_json(const json& j, const Component& comp,
                                          const std::string& where) {
  switch (comp.kind) {
    case ManifoldKind::Circle:
      if (!j.is_number()) throw SchemaError(where + ": expected an angle in radians");
      return Angle(j.get<double>());
    case ManifoldKind::Sphere: {
      if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() ||
          !j[2].is_number()) {
        throw SchemaError(where + ": expected [x, y, z] for an S2 point");
      }
      try {
        return UnitVector3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
      } catch (const std::invalid_argument& e) {
        throw SchemaError(where + ": " + e.what());
      }
    }
    case ManifoldKind::PositiveReal: {
      if (!j.is_number()) throw SchemaError(where + ": expected a positive real");
      const double v = j.get<double>();
      if (!(v > 0.0)) throw SchemaError(where + ": value must be strictly positive");
      return v;
    }
    case ManifoldKind::Euclidean: {
      if (!j.is_array() || static_cast<int>(j.size()) != comp.euclidean_dim) {
        throw SchemaError(where + ": expected an array of length " +
                          std::to_string(comp.euclidean_dim));
      }
      VecX v(comp.euclidean_dim);
      for (int i = 0; i < comp.euclidean_dim; ++i) {
        if (!j[i].is_number()) throw SchemaError(where + ": entries must be numbers");
        v[i] = j[i].get<double>();
      }
      return v;
    }
  }
  throw std::logic_error("component_from_json: unknown component kind");
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

inline json dataset_to_json(const DatasetFile& ds) {
  json j;
  j["signature"] = signature_to_json(ds.signature);
  json points = json::array();
  for (const auto& p : ds.points) {
    json row = json::array();
    for (std::size_t i = 0; i < ds.signature.size(); ++i) {
      row.push_back(component_to_json(p.values[i], ds.signature[i]));
    }
    points.push_back(std::move(row));
  }
  j["points"] = std::move(points);
  if (!ds.labels.empty()) j["labels"] = ds.labels;
  if (!ds.metadata.empty()) j["metadata"] = ds.metadata;
  return j;
}

inline DatasetFile dataset_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("dataset: expected a JSON object");
  if (!j.contains("signature")) throw SchemaError("dataset: missing 'signature'");
  if (!j.contains("points")) throw SchemaError("dataset: missing 'points'");

  DatasetFile ds;
  ds.signature = signature_from_json(j.at("signature"));
  const json& points = j.at("points");
  if (!points.is_array()) throw SchemaError("points: expected an array of rows");

  for (std::size_t r = 0; r < points.size(); ++r) {
    const std::string row_where = "points[" + std::to_string(r) + "]";
    const json& row = points[r];
    if (!row.is_array() || row.size() != ds.signature.size()) {
      throw SchemaError(row_where + ": expected " + std::to_string(ds.signature.size()) +
                        " component entries");
    }
    ProductPoint p;
    p.values.reserve(ds.signature.size());
    for (std::size_t i = 0; i < ds.signature.size(); ++i) {
      p.values.push_back(component_from_json(
          row[i], ds.signature[i], row_where + "[" + std::to_string(i) + "]"));
    }
    ds.points.push_back(std::move(p));
  }

  if (j.contains("labels")) {
    const json& labels = j.at("labels");
    if (!labels.is_array()) throw SchemaError("labels: expected an array of strings");
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!labels[i].is_string()) {
        throw SchemaError("labels[" + std::to_string(i) + "]: expected a string");
      }
      ds.labels.push_back(labels[i].get<std::string>());
    }
    if (ds.labels.size() != ds.points.size()) {
      throw SchemaError("labels: count " + std::to_string(ds.labels.size()) +
                        " does not match point count " + std::to_string(ds.points.size()));
    }
  }
  if (j.contains("metadata")) ds.metadata = j.at("metadata");
  return ds;
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

inline json frame_to_json(const FrameMap& frame) {
  json j;
  j["component"] = kind_string(frame.component);
  switch (frame.kind) {
    case FrameKind::ProjectionH:
    case FrameKind::ConformalH: {
      j["kind"] = frame.kind == FrameKind::ProjectionH ? "projection" : "conformal";
      const auto& s = frame.sphere;
      j["center"] = json::array({s.circle.center.x(), s.circle.center.y(), s.circle.center.z()});
      j["radius"] = s.circle.radius;
      j["mean_u"] = json::array({s.mean_u.x(), s.mean_u.y(), s.mean_u.z()});
      j["circle_kind"] = s.circle_kind == CircleKind::SmallCircle ? "small" : "great";
      j["alpha"] = s.alpha;
      break;
    }
    case FrameKind::TangentLog:
      j["kind"] = "tangent";
      j["mean"] = component_to_json(frame.mean, frame.component);
      break;
  }
  return j;
}

inline FrameMap frame_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("kind") || !j.contains("component")) {
    throw SchemaError(where + ": expected an object with 'kind' and 'component'");
  }
  FrameMap frame;
  frame.component = parse_kind_string(j.at("component").get<std::string>(), where + ".component");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "tangent") {
    frame.kind = FrameKind::TangentLog;
    if (!j.contains("mean")) throw SchemaError(where + ": tangent frame missing 'mean'");
    frame.mean = component_from_json(j.at("mean"), frame.component, where + ".mean");
    return frame;
  }
  if (kind != "projection" && kind != "conformal") {
    throw SchemaError(where + ": unknown frame kind '" + kind + "'");
  }
  if (frame.component.kind != ManifoldKind::Sphere) {
    throw SchemaError(where + ": circle-based frames require an S2 component");
  }
  for (const char* field : {"center", "radius", "mean_u", "circle_kind", "alpha"}) {
    if (!j.contains(field)) throw SchemaError(where + ": missing '" + std::string(field) + "'");
  }
  frame.kind = kind == "projection" ? FrameKind::ProjectionH : FrameKind::ConformalH;
  PrincipalCircles pc;
  try {
    const auto center = std::get<UnitVector3>(
        component_from_json(j.at("center"), frame.component, where + ".center"));
    pc.delta1 = CircleOnSphere(center, j.at("radius").get<double>());
    pc.mean_u = std::get<UnitVector3>(
        component_from_json(j.at("mean_u"), frame.component, where + ".mean_u"));
  } catch (const std::invalid_argument& e) {
    throw SchemaError(where + ": " + e.what());
  }
  const std::string circle_kind = j.at("circle_kind").get<std::string>();
  if (circle_kind == "small") {
    pc.kind = CircleKind::SmallCircle;
  } else if (circle_kind == "great") {
    pc.kind = CircleKind::GreatCircle;
  } else {
    throw SchemaError(where + ".circle_kind: expected 'small' or 'great'");
  }
  frame.sphere = make_sphere_frame(pc);
  frame.sphere.alpha = j.at("alpha").get<double>();
  return frame;
}

inline json model_to_json(const PaaModel& model) {
  json j;
  j["method"] = model.method == PipelineMethod::PAA ? "PAA" : "PGA";
  j["signature"] = signature_to_json(model.signature);
  j["n_samples"] = model.n_samples;
  json frames = json::array();
  for (const auto& f : model.frames) frames.push_back(frame_to_json(f));
  j["frames"] = std::move(frames);
  json center = json::array();
  for (Eigen::Index i = 0; i < model.center_offset.size(); ++i) {
    center.push_back(model.center_offset[i]);
  }
  j["center_offset"] = std::move(center);
  json sv = json::array();
  for (Eigen::Index i = 0; i < model.singular_values.size(); ++i) {
    sv.push_back(model.singular_values[i]);
  }
  j["singular_values"] = std::move(sv);
  json dirs = json::array();
  for (Eigen::Index k = 0; k < model.directions.cols(); ++k) {
    json col = json::array();
    for (Eigen::Index i = 0; i < model.directions.rows(); ++i) {
      col.push_back(model.directions(i, k));
    }
    dirs.push_back(std::move(col));
  }
  j["directions"] = std::move(dirs);
  return j;
}

inline PaaModel model_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("model: expected a JSON object");
  for (const char* field :
       {"method", "signature", "n_samples", "frames", "center_offset", "singular_values",
        "directions"}) {
    if (!j.contains(field)) throw SchemaError("model: missing '" + std::string(field) + "'");
  }
  PaaModel model;
  const std::string method = j.at("method").get<std::string>();
  if (method == "PAA") {
    model.method = PipelineMethod::PAA;
  } else if (method == "PGA") {
    model.method = PipelineMethod::PGA;
  } else {
    throw SchemaError("model.method: expected 'PAA' or 'PGA'");
  }
  model.signature = signature_from_json(j.at("signature"));
  model.n_samples = j.at("n_samples").get<std::size_t>();

  const json& frames = j.at("frames");
  if (!frames.is_array() || frames.size() != model.signature.size()) {
    throw SchemaError("model.frames: expected one frame per signature component");
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    model.frames.push_back(frame_from_json(frames[i], "frames[" + std::to_string(i) + "]"));
    if (!(model.frames[i].component.kind == model.signature[i].kind &&
          model.frames[i].component.block_dim() == model.signature[i].block_dim())) {
      throw SchemaError("frames[" + std::to_string(i) + "]: component does not match signature");
    }
  }

  const json& center = j.at("center_offset");
  const int d0 = model.signature.intrinsic_dim();
  if (!center.is_array() || static_cast<int>(center.size()) != d0) {
    throw SchemaError("model.center_offset: expected " + std::to_string(d0) + " numbers");
  }
  model.center_offset.resize(d0);
  for (int i = 0; i < d0; ++i) model.center_offset[i] = center[i].get<double>();

  const json& sv = j.at("singular_values");
  if (!sv.is_array()) throw SchemaError("model.singular_values: expected an array");
  model.singular_values.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t i = 0; i < sv.size(); ++i) {
    model.singular_values[static_cast<Eigen::Index>(i)] = sv[i].get<double>();
  }

  const json& dirs = j.at("directions");
  if (!dirs.is_array() || dirs.empty()) {
    throw SchemaError("model.directions: expected a nonempty array of direction vectors");
  }
  model.directions.resize(d0, static_cast<Eigen::Index>(dirs.size()));
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    const std::string where = "directions[" + std::to_string(k) + "]";
    if (!dirs[k].is_array() || static_cast<int>(dirs[k].size()) != d0) {
      throw SchemaError(where + ": expected " + std::to_string(d0) + " numbers");
    }
    for (int i = 0; i < d0; ++i) {
      model.directions(i, static_cast<Eigen::Index>(k)) = dirs[k][i].get<double>();
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Fit reports
// ---------------------------------------------------------------------------

inline json fit_report_to_json(const FitReport& report) {
  json j;
  j["center"] = json::array(
      {report.circle.center.x(), report.circle.center.y(), report.circle.center.z()});
  j["radius"] = report.circle.radius;
  j["residuals"] = report.residuals;
  j["sum_sq_residuals"] = report.sum_sq_residuals;
  j["outer_iterations"] = report.outer_iterations;
  j["converged"] = report.converged;
  return j;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file for reading: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out << j.dump(2) << '\n';
}

inline DatasetFile read_dataset(const std::string& path) {
  return dataset_from_json(read_json_file(path));
}

inline void write_dataset(const std::string& path, const DatasetFile& ds) {
  write_json_file(path, dataset_to_json(ds));
}

inline PaaModel read_model(const std::string& path) {
  return model_from_json(read_json_file(path));
}

inline void write_model(const std::string& path, const PaaModel& model) {
  write_json_file(path, model_to_json(model));
}

}  // namespace paa
