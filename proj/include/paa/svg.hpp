#pragma once

// Static SVG figures: a scree plot of variance proportions and a scatter of
// the first two score columns. Each figure embeds its source data as a
// structured JSON comment so it can be regenerated without rerunning fits.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "paa/pipeline.hpp"

namespace paa {

namespace detail {

struct PlotBox {
  double width = 640.0, height = 480.0;
  double left = 60.0, right = 20.0, top = 20.0, bottom = 50.0;
  double plot_width() const { return width - left - right; }
  double plot_height() const { return height - top - bottom; }
};

inline void svg_header(std::ostringstream& out, const PlotBox& box, const nlohmann::json& data) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << box.width << "\" height=\""
      << box.height << "\" viewBox=\"0 0 " << box.width << " " << box.height << "\">\n";
  out << "<!-- data: " << data.dump() << " -->\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

inline void svg_axes(std::ostringstream& out, const PlotBox& box, const std::string& x_label,
                     const std::string& y_label) {
  out << "<line x1=\"" << box.left << "\" y1=\"" << box.height - box.bottom << "\" x2=\""
      << box.width - box.right << "\" y2=\"" << box.height - box.bottom
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << box.left << "\" y1=\"" << box.top << "\" x2=\"" << box.left
      << "\" y2=\"" << box.height - box.bottom << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << box.left + box.plot_width() / 2.0 << "\" y=\"" << box.height - 12.0
      << "\" text-anchor=\"middle\" font-size=\"14\">" << x_label << "</text>\n";
  out << "<text x=\"16\" y=\"" << box.top + box.plot_height() / 2.0
      << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 16 "
      << box.top + box.plot_height() / 2.0 << ")\">" << y_label << "</text>\n";
}

}  // namespace detail

/// Scree plot: cumulative and per-component variance proportions.
inline std::string scree_svg(const std::vector<VarianceEntry>& report) {
  detail::PlotBox box;
  nlohmann::json data;
  data["kind"] = "scree";
  data["proportion"] = nlohmann::json::array();
  data["cumulative"] = nlohmann::json::array();
  for (const auto& entry : report) {
    data["proportion"].push_back(entry.proportion);
    data["cumulative"].push_back(entry.cumulative);
  }

  std::ostringstream out;
  detail::svg_header(out, box, data);
  detail::svg_axes(out, box, "component", "variance proportion");

  const std::size_t k = report.size();
  auto x_of = [&](std::size_t i) {
    return box.left + box.plot_width() * (static_cast<double>(i) + 0.5) /
                          static_cast<double>(std::max<std::size_t>(k, 1));
  };
  auto y_of = [&](double p) { return box.top + box.plot_height() * (1.0 - p); };

  for (std::size_t i = 0; i < k; ++i) {
    const double x = x_of(i);
    const double y = y_of(report[i].proportion);
    const double base = y_of(0.0);
    out << "<rect x=\"" << x - 12.0 << "\" y=\"" << y << "\" width=\"24\" height=\""
        << base - y << "\" fill=\"steelblue\"/>\n";
    out << "<text x=\"" << x << "\" y=\"" << box.height - box.bottom + 18.0
        << "\" text-anchor=\"middle\" font-size=\"12\">" << i + 1 << "</text>\n";
  }
  out << "<polyline fill=\"none\" stroke=\"firebrick\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < k; ++i) {
    out << x_of(i) << ',' << y_of(report[i].cumulative) << ' ';
  }
  out << "\"/>\n";
  for (std::size_t i = 0; i < k; ++i) {
    out << "<circle cx=\"" << x_of(i) << "\" cy=\"" << y_of(report[i].cumulative)
        << "\" r=\"3\" fill=\"firebrick\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

/// Scatter of the first two score columns (the second is zero-filled for
/// one-component models).
inline std::string scatter_svg(const Eigen::MatrixXd& score_cols) {
  if (score_cols.rows() == 0 || score_cols.cols() == 0) {
    throw std::invalid_argument("scatter_svg: empty score matrix");
  }
  const Eigen::Index n = score_cols.rows();
  VecX x = score_cols.col(0);
  VecX y = score_cols.cols() > 1 ? VecX(score_cols.col(1)) : VecX(VecX::Zero(n));

  nlohmann::json data;
  data["kind"] = "scores";
  data["pc1"] = nlohmann::json::array();
  data["pc2"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < n; ++i) {
    data["pc1"].push_back(x[i]);
    data["pc2"].push_back(y[i]);
  }

  detail::PlotBox box;
  std::ostringstream out;
  detail::svg_header(out, box, data);
  detail::svg_axes(out, box, "PC1 score", "PC2 score");

  const double pad = 1e-12;
  const double x_min = x.minCoeff(), x_max = std::max(x.maxCoeff(), x_min + pad);
  const double y_min = y.minCoeff(), y_max = std::max(y.maxCoeff(), y_min + pad);
  auto sx = [&](double v) { return box.left + box.plot_width() * (v - x_min) / (x_max - x_min); };
  auto sy = [&](double v) {
    return box.top + box.plot_height() * (1.0 - (v - y_min) / (y_max - y_min));
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    out << "<circle cx=\"" << sx(x[i]) << "\" cy=\"" << sy(y[i])
        << "\" r=\"3\" fill=\"steelblue\" fill-opacity=\"0.7\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace paa
