#pragma once

// Serialization of evaluation reports: canonical JSON, confusion-matrix CSV,
// and an SVG figure with the confusion heatmap and ROC curves.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "motionrocket/eval.hpp"

namespace motionrocket {

inline void to_json(nlohmann::json& j, const EvalReport& r) {
  nlohmann::json auc = nlohmann::json::array();
  for (const auto& a : r.class_auc) auc.push_back(a ? nlohmann::json(*a) : nlohmann::json(nullptr));
  j = nlohmann::json{{"folds", r.folds},
                     {"seed", r.seed},
                     {"num_classes", r.num_classes},
                     {"fold_sizes", r.fold_sizes},
                     {"fold_accuracy", r.fold_accuracy},
                     {"fold_alpha", r.fold_alpha},
                     {"mean_accuracy", r.mean_accuracy},
                     {"std_accuracy", r.std_accuracy},
                     {"pooled_accuracy", r.pooled_accuracy},
                     {"macro_f1", r.macro_f1},
                     {"confusion", r.confusion},
                     {"class_auc", auc},
                     {"macro_auc", r.macro_auc},
                     {"roc_fpr", r.roc_fpr},
                     {"mean_roc_tpr", r.mean_roc_tpr},
                     {"class_roc_tpr", r.class_roc_tpr}};
}

inline void from_json(const nlohmann::json& j, EvalReport& r) {
  j.at("folds").get_to(r.folds);
  j.at("seed").get_to(r.seed);
  j.at("num_classes").get_to(r.num_classes);
  j.at("fold_sizes").get_to(r.fold_sizes);
  j.at("fold_accuracy").get_to(r.fold_accuracy);
  j.at("fold_alpha").get_to(r.fold_alpha);
  j.at("mean_accuracy").get_to(r.mean_accuracy);
  j.at("std_accuracy").get_to(r.std_accuracy);
  j.at("pooled_accuracy").get_to(r.pooled_accuracy);
  j.at("macro_f1").get_to(r.macro_f1);
  j.at("confusion").get_to(r.confusion);
  r.class_auc.clear();
  for (const auto& a : j.at("class_auc"))
    r.class_auc.push_back(a.is_null() ? std::nullopt : std::optional<double>(a.get<double>()));
  j.at("macro_auc").get_to(r.macro_auc);
  j.at("roc_fpr").get_to(r.roc_fpr);
  j.at("mean_roc_tpr").get_to(r.mean_roc_tpr);
  j.at("class_roc_tpr").get_to(r.class_roc_tpr);
}

inline std::string report_csv(const EvalReport& r) {
  std::ostringstream out;
  for (const auto& row : r.confusion) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << '\n';
  }
  return out.str();
}

namespace detail {

inline std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline const char* class_color(std::size_t c) {
  static const char* palette[] = {"#4c4c4c", "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                  "#e377c2", "#17becf", "#bcbd22"};
  return palette[c % (sizeof palette / sizeof palette[0])];
}

}  // namespace detail

/// Two panels: row-normalized confusion heatmap (left), per-class and mean ROC (right).
/// Emits exactly one <path class="roc-class"> per class with a defined AUC.
inline std::string report_svg(const EvalReport& r) {
  using detail::fmt_num;
  const double cell = 44.0;
  const std::size_t k = r.confusion.size();
  const double left = 60.0;
  const double top = 50.0;
  const double roc_x = left + cell * static_cast<double>(k) + 80.0;
  const double roc_size = 320.0;
  const double width = roc_x + roc_size + 170.0;
  const double height = top + std::max(cell * static_cast<double>(k), roc_size) + 70.0;

  std::ostringstream s;
  s << R"(<?xml version="1.0" encoding="UTF-8"?>)" << '\n'
    << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << fmt_num(width) << R"(" height=")" << fmt_num(height)
    << R"(" font-family="sans-serif" font-size="12">)" << '\n';
  s << R"(<text x=")" << fmt_num(left) << R"(" y="25" font-size="14">Confusion matrix (summed over )" << r.folds
    << " folds)</text>\n";
  for (std::size_t i = 0; i < k; ++i) {
    std::int64_t row_total = 0;
    for (auto v : r.confusion[i]) row_total += v;
    for (std::size_t j = 0; j < k; ++j) {
      const double frac = row_total > 0 ? static_cast<double>(r.confusion[i][j]) / static_cast<double>(row_total) : 0.0;
      const int shade = static_cast<int>(255.0 - 200.0 * frac);
      const double x = left + cell * static_cast<double>(j);
      const double y = top + cell * static_cast<double>(i);
      s << R"(<rect x=")" << fmt_num(x) << R"(" y=")" << fmt_num(y) << R"(" width=")" << fmt_num(cell) << R"(" height=")"
        << fmt_num(cell) << R"(" fill="rgb()" << shade << ',' << shade << ",255)\" stroke=\"#ffffff\"/>\n";
      s << R"(<text x=")" << fmt_num(x + cell / 2) << R"(" y=")" << fmt_num(y + cell / 2 + 4)
        << R"(" text-anchor="middle">)" << r.confusion[i][j] << "</text>\n";
    }
    s << R"(<text x=")" << fmt_num(left - 10) << R"(" y=")" << fmt_num(top + cell * static_cast<double>(i) + cell / 2 + 4)
      << R"(" text-anchor="end">)" << i << "</text>\n";
    s << R"(<text x=")" << fmt_num(left + cell * static_cast<double>(i) + cell / 2) << R"(" y=")"
      << fmt_num(top + cell * static_cast<double>(k) + 16) << R"(" text-anchor="middle">)" << i << "</text>\n";
  }

  const double y0 = top + roc_size;
  s << R"(<text x=")" << fmt_num(roc_x) << R"(" y="25" font-size="14">One-vs-rest ROC</text>)" << '\n';
  s << R"(<rect x=")" << fmt_num(roc_x) << R"(" y=")" << fmt_num(top) << R"(" width=")" << fmt_num(roc_size)
    << R"(" height=")" << fmt_num(roc_size) << R"(" fill="none" stroke="#000000"/>)" << '\n';
  s << R"(<line x1=")" << fmt_num(roc_x) << R"(" y1=")" << fmt_num(y0) << R"(" x2=")" << fmt_num(roc_x + roc_size)
    << R"(" y2=")" << fmt_num(top) << R"(" stroke="#aaaaaa" stroke-dasharray="4 4"/>)" << '\n';
  auto polyline = [&](const std::vector<double>& tpr) {
    std::ostringstream d;
    for (std::size_t i = 0; i < tpr.size() && i < r.roc_fpr.size(); ++i)
      d << (i ? " L " : "M ") << fmt_num(roc_x + r.roc_fpr[i] * roc_size) << ' ' << fmt_num(y0 - tpr[i] * roc_size);
    return d.str();
  };
  double legend_y = top + 10;
  for (std::size_t c = 0; c < r.class_roc_tpr.size(); ++c) {
    if (r.class_roc_tpr[c].empty()) continue;
    s << R"(<path class="roc-class" d=")" << polyline(r.class_roc_tpr[c]) << R"(" fill="none" stroke=")"
      << detail::class_color(c) << R"(" stroke-width="1.5"/>)" << '\n';
    s << R"(<text x=")" << fmt_num(roc_x + roc_size + 15) << R"(" y=")" << fmt_num(legend_y) << R"(" fill=")"
      << detail::class_color(c) << R"(">class )" << c << " AUC "
      << (r.class_auc[c] ? std::to_string(*r.class_auc[c]).substr(0, 6) : std::string("n/a")) << "</text>\n";
    legend_y += 16;
  }
  if (!r.mean_roc_tpr.empty())
    s << R"(<polyline class="roc-mean" points=")" << [&] {
      std::ostringstream pts;
      for (std::size_t i = 0; i < r.mean_roc_tpr.size(); ++i)
        pts << (i ? " " : "") << fmt_num(roc_x + r.roc_fpr[i] * roc_size) << ',' << fmt_num(y0 - r.mean_roc_tpr[i] * roc_size);
      return pts.str();
    }() << R"(" fill="none" stroke="#000000" stroke-width="2.5"/>)" << '\n';
  s << R"(<text x=")" << fmt_num(roc_x + roc_size / 2) << R"(" y=")" << fmt_num(y0 + 30)
    << R"(" text-anchor="middle">false positive rate</text>)" << '\n';
  s << "</svg>\n";
  return s.str();
}

/// format: "json", "csv" or "svg".
inline void emit_report(const EvalReport& r, const std::string& path, const std::string& format) {
  std::string body;
  if (format == "json")
    body = nlohmann::json(r).dump(2) + "\n";
  else if (format == "csv")
    body = report_csv(r);
  else if (format == "svg" || format == "svg-plot")
    body = report_svg(r);
  else
    throw std::invalid_argument("unknown report format \"" + format + "\" (expected json, csv or svg)");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << body;
}

inline EvalReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return nlohmann::json::parse(in).get<EvalReport>();
}

}  // namespace motionrocket
