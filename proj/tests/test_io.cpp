#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <paa/generate.hpp>
#include <paa/io.hpp>
#include <paa/pipeline.hpp>

using namespace paa;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::MessageMatches;

namespace {

bool bits_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path(temp_path(name)) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

// ---------------------------------------------------------------------------
// Kind strings
// ---------------------------------------------------------------------------

TEST_CASE("manifold kind strings round-trip") {
  const std::vector<Component> comps = {{ManifoldKind::Circle, 1},
                                        {ManifoldKind::Sphere, 1},
                                        {ManifoldKind::PositiveReal, 1},
                                        {ManifoldKind::Euclidean, 3},
                                        {ManifoldKind::Euclidean, 12}};
  for (const auto& comp : comps) {
    const Component back = parse_kind_string(kind_string(comp), "test");
    CHECK(back.kind == comp.kind);
    CHECK(back.block_dim() == comp.block_dim());
  }
  CHECK(kind_string({ManifoldKind::Euclidean, 3}) == "R3");

  CHECK_THROWS_AS(parse_kind_string("R0", "sig"), SchemaError);
  CHECK_THROWS_AS(parse_kind_string("R", "sig"), SchemaError);
  CHECK_THROWS_AS(parse_kind_string("R2x", "sig"), SchemaError);
  CHECK_THROWS_AS(parse_kind_string("S3", "sig"), SchemaError);
  CHECK_THROWS_AS(parse_kind_string("", "sig"), SchemaError);
}

// ---------------------------------------------------------------------------
// Dataset round-trips
// ---------------------------------------------------------------------------

TEST_CASE("dataset json round-trip is bitwise exact") {
  DatasetFile ds = generate({GeneratorKind::ProductShapes, UnitVector3::e3(), 0.6, 0.05, 10.0,
                             25, 41});
  // Add a circle and a Euclidean component to cover every kind.
  std::vector<Component> comps = ds.signature.components();
  comps.push_back({ManifoldKind::Circle, 1});
  comps.push_back({ManifoldKind::Euclidean, 2});
  ds.signature = ManifoldSignature(comps);
  Rng rng(43);
  for (auto& p : ds.points) {
    p.values.emplace_back(Angle(rng.uniform(-3.0, 3.0)));
    VecX v(2);
    v << rng.normal(), rng.normal();
    p.values.emplace_back(v);
  }
  for (std::size_t i = 0; i < ds.points.size(); ++i) ds.labels.push_back("p" + std::to_string(i));

  // Serialize to text and parse back, as the CLI does.
  const json j = json::parse(dataset_to_json(ds).dump());
  const DatasetFile back = dataset_from_json(j);

  REQUIRE(back.signature == ds.signature);
  REQUIRE(back.points.size() == ds.points.size());
  CHECK(back.labels == ds.labels);
  CHECK(back.metadata == ds.metadata);
  for (std::size_t r = 0; r < ds.points.size(); ++r) {
    for (std::size_t i = 0; i < ds.signature.size(); ++i) {
      switch (ds.signature[i].kind) {
        case ManifoldKind::Circle:
          CHECK(bits_equal(std::get<Angle>(back.points[r].values[i]).radians(),
                           std::get<Angle>(ds.points[r].values[i]).radians()));
          break;
        case ManifoldKind::Sphere: {
          const auto& a = std::get<UnitVector3>(back.points[r].values[i]);
          const auto& b = std::get<UnitVector3>(ds.points[r].values[i]);
          CHECK(bits_equal(a.x(), b.x()));
          CHECK(bits_equal(a.y(), b.y()));
          CHECK(bits_equal(a.z(), b.z()));
          break;
        }
        case ManifoldKind::PositiveReal:
          CHECK(bits_equal(std::get<double>(back.points[r].values[i]),
                           std::get<double>(ds.points[r].values[i])));
          break;
        case ManifoldKind::Euclidean: {
          const auto& a = std::get<VecX>(back.points[r].values[i]);
          const auto& b = std::get<VecX>(ds.points[r].values[i]);
          REQUIRE(a.size() == b.size());
          for (Eigen::Index e = 0; e < a.size(); ++e) CHECK(bits_equal(a[e], b[e]));
          break;
        }
      }
    }
  }
}

TEST_CASE("dataset file round-trip through disk") {
  const DatasetFile ds = generate({GeneratorKind::SmallCircleNoise, UnitVector3::e3(), 0.7,
                                   0.04, 10.0, 12, 47});
  TempFile tmp("paa_test_dataset.json");
  write_dataset(tmp.path, ds);
  const DatasetFile back = read_dataset(tmp.path);
  REQUIRE(back.points.size() == ds.points.size());
  for (std::size_t r = 0; r < ds.points.size(); ++r) {
    const auto& a = std::get<UnitVector3>(back.points[r].values[0]);
    const auto& b = std::get<UnitVector3>(ds.points[r].values[0]);
    CHECK(bits_equal(a.x(), b.x()));
    CHECK(bits_equal(a.y(), b.y()));
    CHECK(bits_equal(a.z(), b.z()));
  }
}

TEST_CASE("dataset schema errors name the offending entry") {
  json j;
  j["signature"] = json::array({"S2", "Rplus"});
  j["points"] = json::array();
  j["points"].push_back(json::array({json::array({1.0, 0.0, 0.0}), 2.0}));
  j["points"].push_back(json::array({json::array({1.0, 0.0, 0.0}), -2.0}));

  CHECK_THROWS_MATCHES(dataset_from_json(j), SchemaError,
                       MessageMatches(ContainsSubstring("points[1][1]")));

  j["points"][1][1] = 2.0;
  j["points"][1][0] = json::array({0.5, 0.5, 0.5});  // not a unit vector
  CHECK_THROWS_MATCHES(dataset_from_json(j), SchemaError,
                       MessageMatches(ContainsSubstring("points[1][0]")));

  j["points"][1] = json::array({json::array({1.0, 0.0, 0.0})});  // wrong arity
  CHECK_THROWS_MATCHES(dataset_from_json(j), SchemaError,
                       MessageMatches(ContainsSubstring("points[1]")));

  j["points"][1] = json::array({json::array({1.0, 0.0, 0.0}), 2.0});
  j["labels"] = json::array({"only-one"});
  CHECK_THROWS_MATCHES(dataset_from_json(j), SchemaError,
                       MessageMatches(ContainsSubstring("labels")));
}

TEST_CASE("dataset structural validation") {
  CHECK_THROWS_AS(dataset_from_json(json::array()), SchemaError);
  CHECK_THROWS_AS(dataset_from_json(json{{"points", json::array()}}), SchemaError);
  CHECK_THROWS_AS(dataset_from_json(json{{"signature", json::array({"S2"})}}), SchemaError);
  CHECK_THROWS_AS(
      dataset_from_json(json{{"signature", json::array()}, {"points", json::array()}}),
      SchemaError);

  // Near-unit sphere rows are accepted and renormalized.
  json j;
  j["signature"] = json::array({"S2"});
  j["points"] = json::array();
  j["points"].push_back(json::array({json::array({1.0 + 5e-7, 0.0, 0.0})}));
  const DatasetFile ds = dataset_from_json(j);
  CHECK(std::get<UnitVector3>(ds.points[0].values[0]).vec().norm() == Approx(1.0).margin(1e-12));
}

TEST_CASE("malformed json files are reported with the path") {
  TempFile tmp("paa_test_malformed.json");
  {
    std::ofstream out(tmp.path);
    out << "{ not json";
  }
  CHECK_THROWS_MATCHES(read_dataset(tmp.path), SchemaError,
                       MessageMatches(ContainsSubstring("paa_test_malformed.json")));
  CHECK_THROWS_AS(read_dataset(temp_path("paa_test_does_not_exist.json")), std::runtime_error);
}

// ---------------------------------------------------------------------------
// Model round-trips
// ---------------------------------------------------------------------------

TEST_CASE("model json round-trip preserves behavior bitwise") {
  const DatasetFile ds = generate({GeneratorKind::ProductShapes, UnitVector3::e3(), 0.6, 0.05,
                                   10.0, 40, 53});
  PaaConfig cfg;
  cfg.s2_map = FrameKind::ConformalH;  // exercises the alpha field
  const PaaModel model = fit_paa(ds.points, ds.signature, cfg);

  TempFile tmp("paa_test_model.json");
  write_model(tmp.path, model);
  const PaaModel back = read_model(tmp.path);

  CHECK(back.method == model.method);
  CHECK(back.signature == model.signature);
  CHECK(back.n_samples == model.n_samples);
  REQUIRE(back.directions.rows() == model.directions.rows());
  REQUIRE(back.directions.cols() == model.directions.cols());
  for (Eigen::Index i = 0; i < model.directions.rows(); ++i) {
    for (Eigen::Index k = 0; k < model.directions.cols(); ++k) {
      CHECK(bits_equal(back.directions(i, k), model.directions(i, k)));
    }
  }
  REQUIRE(back.singular_values.size() == model.singular_values.size());
  for (Eigen::Index i = 0; i < model.singular_values.size(); ++i) {
    CHECK(bits_equal(back.singular_values[i], model.singular_values[i]));
  }
  for (Eigen::Index i = 0; i < model.center_offset.size(); ++i) {
    CHECK(bits_equal(back.center_offset[i], model.center_offset[i]));
  }

  // Frames: stored fields round-trip bitwise and derived quantities are
  // recomputed deterministically, so out-of-sample behavior is identical.
  REQUIRE(back.frames.size() == model.frames.size());
  for (std::size_t i = 0; i < model.frames.size(); ++i) {
    CHECK(back.frames[i].kind == model.frames[i].kind);
    if (model.frames[i].kind != FrameKind::TangentLog) {
      CHECK(bits_equal(back.frames[i].sphere.circle.radius,
                       model.frames[i].sphere.circle.radius));
      CHECK(bits_equal(back.frames[i].sphere.alpha, model.frames[i].sphere.alpha));
      CHECK((back.frames[i].sphere.rotation.matrix() -
             model.frames[i].sphere.rotation.matrix()).norm() == 0.0);
    }
  }
  for (const auto& x : ds.points) {
    const VecX a = scores(x, model);
    const VecX b = scores(x, back);
    REQUIRE(a.size() == b.size());
    for (Eigen::Index k = 0; k < a.size(); ++k) CHECK(bits_equal(a[k], b[k]));
  }
}

TEST_CASE("pga model round-trip") {
  const DatasetFile ds = generate({GeneratorKind::ProductShapes, UnitVector3::e3(), 0.6, 0.05,
                                   10.0, 30, 59});
  const PaaModel model = fit_pga(ds.points, ds.signature);
  const PaaModel back = model_from_json(json::parse(model_to_json(model).dump()));
  CHECK(back.method == PipelineMethod::PGA);
  for (const auto& x : ds.points) {
    CHECK((scores(x, back) - scores(x, model)).norm() == 0.0);
  }
}

TEST_CASE("model schema validation") {
  const DatasetFile ds = generate({GeneratorKind::SmallCircleNoise, UnitVector3::e3(), 0.7,
                                   0.04, 10.0, 20, 61});
  const json good = model_to_json(fit_paa(ds.points, ds.signature));

  for (const char* field : {"method", "signature", "frames", "center_offset",
                            "singular_values", "directions"}) {
    json j = good;
    j.erase(field);
    CHECK_THROWS_MATCHES(model_from_json(j), SchemaError,
                         MessageMatches(ContainsSubstring(field)));
  }

  json bad_method = good;
  bad_method["method"] = "PCA";
  CHECK_THROWS_AS(model_from_json(bad_method), SchemaError);

  json bad_frames = good;
  bad_frames["frames"] = json::array();
  CHECK_THROWS_AS(model_from_json(bad_frames), SchemaError);

  json bad_kind = good;
  bad_kind["frames"][0]["kind"] = "mystery";
  CHECK_THROWS_AS(model_from_json(bad_kind), SchemaError);

  json mismatched = good;
  mismatched["frames"][0]["component"] = "Rplus";  // circle frame needs S2
  CHECK_THROWS_AS(model_from_json(mismatched), SchemaError);

  json bad_center = good;
  bad_center["center_offset"] = json::array({1.0});
  CHECK_THROWS_AS(model_from_json(bad_center), SchemaError);

  json bad_dirs = good;
  bad_dirs["directions"][0] = json::array({1.0});
  CHECK_THROWS_AS(model_from_json(bad_dirs), SchemaError);
}

// ---------------------------------------------------------------------------
// Fit reports
// ---------------------------------------------------------------------------

TEST_CASE("fit report serialization") {
  const DatasetFile ds = generate({GeneratorKind::SmallCircleNoise, UnitVector3::e3(), 0.7,
                                   0.04, 10.0, 25, 67});
  std::vector<UnitVector3> pts;
  for (const auto& p : ds.points) pts.push_back(std::get<UnitVector3>(p.values[0]));
  const FitReport report = fit_circle(pts);
  const json j = fit_report_to_json(report);
  CHECK(j.at("radius").get<double>() == report.circle.radius);
  CHECK(j.at("sum_sq_residuals").get<double>() == report.sum_sq_residuals);
  CHECK(j.at("converged").get<bool>() == report.converged);
  CHECK(j.at("residuals").size() == pts.size());
  CHECK(j.at("center").size() == 3);
}
