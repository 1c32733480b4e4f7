#pragma once

// Table output (CSV + JSON mirror) and a minimal log-log SVG plot.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace gwave {

/// 17 significant digits, '.' decimal point, no grouping. Locale-free.
inline std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// One CSV cell: empty, real, count, flag, or text.
using Cell = std::variant<std::monostate, double, std::uint64_t, bool, std::string>;

class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns_.size()) throw std::logic_error("row width does not match header");
    rows_.push_back(std::move(row));
  }

  [[nodiscard]] const std::vector<std::string>& columns() const noexcept { return columns_; }
  [[nodiscard]] const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }

  [[nodiscard]] std::string to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (i) out += ',';
      out += columns_[i];
    }
    out += '\n';
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += cell_text(row[i]);
      }
      out += '\n';
    }
    return out;
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : rows_) {
      nlohmann::json obj = nlohmann::json::object();
      for (std::size_t i = 0; i < row.size(); ++i) obj[columns_[i]] = cell_json(row[i]);
      arr.push_back(std::move(obj));
    }
    return arr;
  }

 private:
  static std::string cell_text(const Cell& c) {
    struct Visitor {
      std::string operator()(std::monostate) const { return ""; }
      std::string operator()(double v) const { return format_real(v); }
      std::string operator()(std::uint64_t v) const { return std::to_string(v); }
      std::string operator()(bool v) const { return v ? "true" : "false"; }
      std::string operator()(const std::string& v) const { return v; }
    };
    return std::visit(Visitor{}, c);
  }

  static nlohmann::json cell_json(const Cell& c) {
    struct Visitor {
      nlohmann::json operator()(std::monostate) const { return nullptr; }
      nlohmann::json operator()(double v) const {
        return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(format_real(v));
      }
      nlohmann::json operator()(std::uint64_t v) const { return v; }
      nlohmann::json operator()(bool v) const { return v; }
      nlohmann::json operator()(const std::string& v) const { return v; }
    };
    return std::visit(Visitor{}, c);
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

inline Cell optional_cell(const std::optional<double>& v) {
  return v ? Cell{*v} : Cell{};
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

/// A named polyline or point set on log-log axes.
struct PlotSeries {
  std::string label;
  std::vector<double> xs;
  std::vector<double> ys;
  std::string color = "#1f77b4";
  bool markers = false;
  bool dashed = false;
};

/// Standalone SVG with log10 axes, decade grid lines and a legend.
inline std::string loglog_svg(const std::string& title, const std::string& x_label,
                              const std::string& y_label, const std::vector<PlotSeries>& series) {
  constexpr double kW = 720;
  constexpr double kH = 480;
  constexpr double kLeft = 80;
  constexpr double kRight = 20;
  constexpr double kTop = 40;
  constexpr double kBottom = 60;
  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -x0;
  double y0 = x0;
  double y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (!(s.xs[i] > 0.0) || !(s.ys[i] > 0.0)) continue;
      x0 = std::min(x0, std::log10(s.xs[i]));
      x1 = std::max(x1, std::log10(s.xs[i]));
      y0 = std::min(y0, std::log10(s.ys[i]));
      y1 = std::max(y1, std::log10(s.ys[i]));
    }
  }
  if (!(x1 >= x0)) {
    x0 = 0;
    x1 = 1;
    y0 = 0;
    y1 = 1;
  }
  x0 = std::floor(x0);
  x1 = std::max(std::ceil(x1), x0 + 1);
  y0 = std::floor(y0);
  y1 = std::max(std::ceil(y1), y0 + 1);
  const auto px = [&](double lx) { return kLeft + (lx - x0) / (x1 - x0) * (kW - kLeft - kRight); };
  const auto py = [&](double ly) { return kH - kBottom - (ly - y0) / (y1 - y0) * (kH - kTop - kBottom); };
  std::ostringstream o;
  o.imbue(std::locale::classic());
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title
    << "</text>\n";
  for (double d = x0; d <= x1 + 1e-9; d += 1) {
    o << "<line x1=\"" << px(d) << "\" y1=\"" << kTop << "\" x2=\"" << px(d) << "\" y2=\""
      << kH - kBottom << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << px(d) << "\" y=\"" << kH - kBottom + 18
      << "\" text-anchor=\"middle\">1e" << static_cast<int>(d) << "</text>\n";
  }
  for (double d = y0; d <= y1 + 1e-9; d += 1) {
    o << "<line x1=\"" << kLeft << "\" y1=\"" << py(d) << "\" x2=\"" << kW - kRight << "\" y2=\""
      << py(d) << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(d) + 4 << "\" text-anchor=\"end\">1e"
      << static_cast<int>(d) << "</text>\n";
  }
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kW - kLeft - kRight
    << "\" height=\"" << kH - kTop - kBottom << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 16 << "\" text-anchor=\"middle\">" << x_label
    << "</text>\n";
  o << "<text x=\"18\" y=\"" << kH / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << kH / 2 << ")\">" << y_label << "</text>\n";
  double legend_y = kTop + 16;
  for (const auto& s : series) {
    std::ostringstream pts;
    pts.imbue(std::locale::classic());
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (!(s.xs[i] > 0.0) || !(s.ys[i] > 0.0)) continue;
      pts << px(std::log10(s.xs[i])) << ',' << py(std::log10(s.ys[i])) << ' ';
    }
    if (s.markers) {
      for (std::size_t i = 0; i < s.xs.size(); ++i) {
        if (!(s.xs[i] > 0.0) || !(s.ys[i] > 0.0)) continue;
        o << "<circle cx=\"" << px(std::log10(s.xs[i])) << "\" cy=\"" << py(std::log10(s.ys[i]))
          << "\" r=\"3.5\" fill=\"" << s.color << "\"/>\n";
      }
    } else {
      o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
        << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"" << pts.str() << "\"/>\n";
    }
    o << "<line x1=\"" << kW - 230 << "\" y1=\"" << legend_y - 4 << "\" x2=\"" << kW - 205
      << "\" y2=\"" << legend_y - 4 << "\" stroke=\"" << s.color << "\" stroke-width=\"2\""
      << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
    o << "<text x=\"" << kW - 200 << "\" y=\"" << legend_y << "\">" << s.label << "</text>\n";
    legend_y += 16;
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace gwave
