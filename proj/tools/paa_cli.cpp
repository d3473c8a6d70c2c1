// Command-line surface: fitting, suppression diagnostics, PAA/PGA models,
// projections, arcs, data generation, Monte Carlo tables and SVG plots.
// All file formats are JSON/CSV/SVG; every randomized command takes --seed.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "paa/paa.hpp"

namespace {

int fail(const std::string& type, const std::string& message) {
  paa::json err;
  err["type"] = type;
  err["error"] = message;
  std::cerr << err.dump() << '\n';
  return 1;
}

/// Write to the path, or to stdout when the path is empty.
void emit(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out << content;
}

void emit_json(const std::string& path, const paa::json& j) { emit(path, j.dump(2) + "\n"); }

/// Points of the first S2 component of a dataset.
std::vector<paa::UnitVector3> first_s2_points(const paa::DatasetFile& ds) {
  for (std::size_t i = 0; i < ds.signature.size(); ++i) {
    if (ds.signature[i].kind != paa::ManifoldKind::Sphere) continue;
    std::vector<paa::UnitVector3> pts;
    pts.reserve(ds.points.size());
    for (const auto& p : ds.points) pts.push_back(std::get<paa::UnitVector3>(p.values[i]));
    return pts;
  }
  throw paa::SchemaError("dataset has no S2 component");
}

paa::CircleFitMode parse_mode(const std::string& mode) {
  if (mode == "small") return paa::CircleFitMode::Small;
  if (mode == "great") return paa::CircleFitMode::Great;
  throw std::invalid_argument("--mode must be 'small' or 'great'");
}

paa::json ratio_to_json(const paa::RatioEstimate& est) {
  paa::json j;
  j["mu_hat"] = est.mu_hat;
  j["sigma_hat"] = est.sigma_hat;
  j["ratio"] = est.degenerate_spread() ? paa::json("inf") : paa::json(est.ratio);
  return j;
}

std::string scores_csv(const Eigen::MatrixXd& z) {
  std::ostringstream out;
  for (Eigen::Index k = 0; k < z.cols(); ++k) out << (k ? "," : "") << "pc" << k + 1;
  out << '\n';
  out.precision(17);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index k = 0; k < z.cols(); ++k) out << (k ? "," : "") << z(i, k);
    out << '\n';
  }
  return out.str();
}

void run_pipeline_command(bool pga, const std::string& in_path, const std::string& out_path,
                          const std::string& map_name, double threshold, int components,
                          const std::string& plot_path, const std::string& scores_path) {
  const paa::DatasetFile ds = paa::read_dataset(in_path);
  paa::PaaConfig cfg;
  cfg.suppression_threshold = threshold;
  cfg.max_components = components;
  if (map_name == "conformal") {
    cfg.s2_map = paa::FrameKind::ConformalH;
  } else if (map_name != "projection") {
    throw std::invalid_argument("--map must be 'projection' or 'conformal'");
  }
  const paa::PaaModel model = pga ? paa::fit_pga(ds.points, ds.signature, cfg)
                                  : paa::fit_paa(ds.points, ds.signature, cfg);
  emit_json(out_path, paa::model_to_json(model));
  if (!plot_path.empty()) emit(plot_path, paa::scree_svg(paa::variance_report(model)));
  if (!scores_path.empty()) emit(scores_path, scores_csv(paa::score_matrix(ds.points, model)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Principal arc analysis on direct product manifolds"};
  app.require_subcommand(1);

  std::string in_path, out_path, model_path, plot_path, scores_path;
  std::string mode = "small", map_name = "projection", kind = "small-circle";
  double threshold = 2.0, mu = 0.6, sigma = 0.05, kappa = 10.0;
  double t_min = 0.0, t_max = 0.0;
  std::vector<double> center = {0.0, 0.0, 1.0};
  std::uint64_t seed = 1;
  std::size_t reps = 1000, n = 50, steps = 51;
  int components = -1;  // paa/pga: how many to retain
  int k_index = 1;      // project/arc: submanifold dimension / arc index

  auto* fit = app.add_subcommand("fit-circle", "Least-squares circle fit on the sphere");
  fit->add_option("--in", in_path, "input dataset (JSON)")->required();
  fit->add_option("--out", out_path, "output fit report (JSON; stdout if omitted)");
  fit->add_option("--mode", mode, "small|great")->capture_default_str();
  fit->callback([&] {
    const auto pts = first_s2_points(paa::read_dataset(in_path));
    paa::FitConfig cfg;
    cfg.mode = parse_mode(mode);
    paa::json j = paa::fit_report_to_json(paa::fit_circle(pts, cfg));
    j["mode"] = mode;
    j["n"] = pts.size();
    emit_json(out_path, j);
  });

  auto* mean = app.add_subcommand("mean", "Geodesic mean and variance of a dataset");
  mean->add_option("--in", in_path, "input dataset (JSON)")->required();
  mean->add_option("--out", out_path, "output (JSON; stdout if omitted)");
  mean->callback([&] {
    const paa::DatasetFile ds = paa::read_dataset(in_path);
    const paa::ProductPoint m = paa::geodesic_mean_product(ds.points, ds.signature);
    paa::json row = paa::json::array();
    for (std::size_t i = 0; i < ds.signature.size(); ++i) {
      row.push_back(paa::component_to_json(m.values[i], ds.signature[i]));
    }
    paa::json j;
    j["signature"] = paa::signature_to_json(ds.signature);
    j["mean"] = std::move(row);
    j["variance"] = paa::geodesic_variance(ds.points, m, ds.signature);
    emit_json(out_path, j);
  });

  auto* suppress = app.add_subcommand("suppress", "Small- vs great-circle decision diagnostics");
  suppress->add_option("--in", in_path, "input dataset (JSON)")->required();
  suppress->add_option("--out", out_path, "output (JSON; stdout if omitted)");
  suppress->add_option("--threshold", threshold, "ratio threshold")->capture_default_str();
  suppress->callback([&] {
    const auto pts = first_s2_points(paa::read_dataset(in_path));
    paa::FitConfig small_cfg;
    const paa::FitReport small_fit = paa::fit_circle(pts, small_cfg);
    paa::FitConfig great_cfg;
    great_cfg.mode = paa::CircleFitMode::Great;
    const paa::FitReport great_fit = paa::fit_circle(pts, great_cfg);

    std::vector<double> radii;
    radii.reserve(pts.size());
    for (const auto& p : pts) radii.push_back(paa::sphere_distance(p, small_fit.circle.center));
    const paa::RatioEstimate robust = paa::robust_ratio(radii);
    const auto [em, trace] = paa::em_folded_normal(radii);

    paa::json j;
    j["n"] = pts.size();
    j["threshold"] = threshold;
    j["robust"] = ratio_to_json(robust);
    j["em"] = ratio_to_json(em);
    j["em"]["iterations"] = trace.iterations.size();
    j["decision"] =
        paa::decide_circle_kind(radii, threshold) == paa::CircleKind::SmallCircle ? "small"
                                                                                  : "great";
    const double r_c = small_fit.sum_sq_residuals;
    const double r_g = std::max(great_fit.sum_sq_residuals, r_c);
    if (pts.size() > 3) {
      const paa::GofReport gof = paa::goodness_of_fit(r_g, r_c, pts.size());
      j["gof"] = {{"v_stat", gof.v_stat},
                  {"p_value", gof.p_value},
                  {"r_g", gof.r_g},
                  {"r_c", gof.r_c}};
    }
    emit_json(out_path, j);
  });

  auto* critical = app.add_subcommand("critical-ratio", "Critical mu/sigma ratios of the radial density");
  critical->add_option("--out", out_path, "output (JSON; stdout if omitted)");
  critical->callback([&] {
    paa::json j;
    j["wrapped"] = paa::critical_ratio_wrapped();
    j["truncated"] = paa::critical_ratio_truncated();
    emit_json(out_path, j);
  });

  auto* paa_cmd = app.add_subcommand("paa", "Fit a principal arc analysis model");
  paa_cmd->add_option("--in", in_path, "input dataset (JSON)")->required();
  paa_cmd->add_option("--out", out_path, "output model (JSON; stdout if omitted)");
  paa_cmd->add_option("--map", map_name, "projection|conformal")->capture_default_str();
  paa_cmd->add_option("--threshold", threshold, "suppression threshold")->capture_default_str();
  paa_cmd->add_option("--components", components, "components to retain (-1: all)")
      ->capture_default_str();
  paa_cmd->add_option("--plot", plot_path, "scree plot (SVG)");
  paa_cmd->add_option("--scores", scores_path, "training scores (CSV)");
  paa_cmd->callback([&] {
    run_pipeline_command(false, in_path, out_path, map_name, threshold, components, plot_path,
                         scores_path);
  });

  auto* pga_cmd = app.add_subcommand("pga", "Fit the principal geodesic analysis baseline");
  pga_cmd->add_option("--in", in_path, "input dataset (JSON)")->required();
  pga_cmd->add_option("--out", out_path, "output model (JSON; stdout if omitted)");
  pga_cmd->add_option("--components", components, "components to retain (-1: all)")
      ->capture_default_str();
  pga_cmd->add_option("--plot", plot_path, "scree plot (SVG)");
  pga_cmd->add_option("--scores", scores_path, "training scores (CSV)");
  pga_cmd->callback([&] {
    run_pipeline_command(true, in_path, out_path, "projection", threshold, components, plot_path,
                         scores_path);
  });

  auto* project = app.add_subcommand("project", "Project points to a principal submanifold");
  project->add_option("--in", in_path, "input dataset (JSON)")->required();
  project->add_option("--model", model_path, "fitted model (JSON)")->required();
  project->add_option("--components", k_index, "submanifold dimension k")->capture_default_str();
  project->add_option("--out", out_path, "output dataset (JSON; stdout if omitted)");
  project->callback([&] {
    const paa::DatasetFile ds = paa::read_dataset(in_path);
    const paa::PaaModel model = paa::read_model(model_path);
    if (k_index < 1) throw std::invalid_argument("--components must be >= 1");
    paa::DatasetFile out = ds;
    out.points.clear();
    for (const auto& p : ds.points) {
      out.points.push_back(
          paa::project_to_submanifold(p, model, static_cast<std::size_t>(k_index)));
    }
    out.metadata["projected_k"] = k_index;
    emit_json(out_path, paa::dataset_to_json(out));
  });

  auto* arc = app.add_subcommand("arc", "Sample points along a principal arc");
  arc->add_option("--model", model_path, "fitted model (JSON)")->required();
  arc->add_option("--components", k_index, "arc index (1-based)")->capture_default_str();
  arc->add_option("--t-min", t_min, "score range start (default: -2 sd)");
  arc->add_option("--t-max", t_max, "score range end (default: +2 sd)");
  arc->add_option("--steps", steps, "number of samples")->capture_default_str();
  arc->add_option("--out", out_path, "output dataset (JSON; stdout if omitted)");
  arc->callback([&] {
    const paa::PaaModel model = paa::read_model(model_path);
    if (k_index < 1 || k_index > model.num_components()) {
      throw std::invalid_argument("--components out of range");
    }
    const std::size_t k = static_cast<std::size_t>(k_index - 1);
    if (t_min == 0.0 && t_max == 0.0) {
      const double sd = model.n_samples > 0
                            ? model.singular_values[static_cast<Eigen::Index>(k)] /
                                  std::sqrt(static_cast<double>(model.n_samples))
                            : 1.0;
      double half = 2.0 * sd;
      // The chart can cut the arc short (a full ring's longitude axis only
      // spans one turn); halve the span until both endpoints evaluate.
      for (int tries = 0; tries < 40; ++tries) {
        try {
          paa::principal_arc(model, k, {-half, half});
          break;
        } catch (const std::domain_error&) {
          half *= 0.5;
        }
      }
      t_min = -half;
      t_max = half;
    }
    if (steps < 2) throw std::invalid_argument("--steps must be >= 2");
    std::vector<double> ts(steps);
    for (std::size_t i = 0; i < steps; ++i) {
      ts[i] = t_min + (t_max - t_min) * static_cast<double>(i) / static_cast<double>(steps - 1);
    }
    paa::DatasetFile out;
    out.signature = model.signature;
    out.points = paa::principal_arc(model, k, ts);
    out.metadata["arc_component"] = k_index;
    out.metadata["t_min"] = t_min;
    out.metadata["t_max"] = t_max;
    emit_json(out_path, paa::dataset_to_json(out));
  });

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  gen->add_option("--kind", kind, "small-circle|vmf|product")->capture_default_str();
  gen->add_option("--out", out_path, "output dataset (JSON; stdout if omitted)");
  gen->add_option("--seed", seed, "RNG seed")->capture_default_str();
  gen->add_option("--n", n, "sample size")->capture_default_str();
  gen->add_option("--mu", mu, "circle radius")->capture_default_str();
  gen->add_option("--sigma", sigma, "radial noise sd")->capture_default_str();
  gen->add_option("--kappa", kappa, "vMF concentration")->capture_default_str();
  gen->add_option("--center", center, "center/mean direction x y z")->expected(3);
  gen->callback([&] {
    paa::GeneratorConfig cfg;
    if (kind == "small-circle") {
      cfg.kind = paa::GeneratorKind::SmallCircleNoise;
    } else if (kind == "vmf") {
      cfg.kind = paa::GeneratorKind::VonMisesFisher;
    } else if (kind == "product") {
      cfg.kind = paa::GeneratorKind::ProductShapes;
    } else {
      throw std::invalid_argument("--kind must be 'small-circle', 'vmf' or 'product'");
    }
    cfg.center = paa::UnitVector3::normalized(paa::Vec3(center[0], center[1], center[2]));
    cfg.mu = mu;
    cfg.sigma = sigma;
    cfg.kappa = kappa;
    cfg.n = n;
    cfg.seed = seed;
    emit_json(out_path, paa::dataset_to_json(paa::generate(cfg)));
  });

  auto* table1 = app.add_subcommand("simulate-table1", "Folded-normal estimator comparison table");
  table1->add_option("--reps", reps, "replicates per cell")->capture_default_str();
  table1->add_option("--seed", seed, "RNG seed")->capture_default_str();
  table1->add_option("--out", out_path, "output table (CSV; stdout if omitted)");
  table1->callback([&] { emit(out_path, paa::table1_csv(paa::simulate_table1(reps, seed))); });

  auto* plot = app.add_subcommand("plot", "Render a scree or score-scatter SVG");
  plot->add_option("--kind", kind, "scree|scatter")->default_val("scree");
  plot->add_option("--model", model_path, "fitted model (JSON)")->required();
  plot->add_option("--in", in_path, "dataset (JSON; required for scatter)");
  plot->add_option("--out", out_path, "output SVG (stdout if omitted)");
  plot->callback([&] {
    const paa::PaaModel model = paa::read_model(model_path);
    if (kind == "scree") {
      emit(out_path, paa::scree_svg(paa::variance_report(model)));
    } else if (kind == "scatter") {
      if (in_path.empty()) throw std::invalid_argument("plot --kind scatter requires --in");
      const paa::DatasetFile ds = paa::read_dataset(in_path);
      emit(out_path, paa::scatter_svg(paa::score_matrix(ds.points, model)));
    } else {
      throw std::invalid_argument("--kind must be 'scree' or 'scatter'");
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const paa::SchemaError& e) {
    return fail("schema", e.what());
  } catch (const paa::DegenerateDataError& e) {
    return fail("degenerate-data", e.what());
  } catch (const paa::ConvergenceError& e) {
    return fail("convergence", e.what());
  } catch (const std::domain_error& e) {
    return fail("domain", e.what());
  } catch (const std::invalid_argument& e) {
    return fail("argument", e.what());
  } catch (const std::exception& e) {
    return fail("error", e.what());
  }
  return 0;
}
