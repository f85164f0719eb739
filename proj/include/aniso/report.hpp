#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "aniso/domain.hpp"
#include "aniso/recovery.hpp"

namespace aniso::report {

/// Shortest round-trip form with at most 17 significant digits; "nan", "inf", "-inf" otherwise.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// One CSV field: numbers are formatted, text is quoted when it holds a separator or quote.
class Cell {
 public:
  Cell(double v) : text_(format_number(v)) {}
  template <class I>
    requires(std::is_integral_v<I> && !std::is_same_v<I, bool>)
  Cell(I v) : text_(std::to_string(v)) {}
  Cell(bool v) : text_(v ? "true" : "false") {}
  Cell(std::string s) : text_(quote(std::move(s))) {}
  Cell(const char* s) : Cell(std::string(s)) {}

  const std::string& text() const noexcept { return text_; }

 private:
  static std::string quote(std::string s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
      if (c == '"') out += '"';
      out += c;
    }
    return out + '"';
  }
  std::string text_;
};

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<Cell> row) {
    if (row.size() != header_.size()) throw PreconditionError("CSV row width does not match the header");
    rows_.push_back(std::move(row));
  }

  const std::vector<std::string>& header() const noexcept { return header_; }
  std::size_t rows() const noexcept { return rows_.size(); }

  void write(std::ostream& os) const {
    for (std::size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
    os << '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i].text();
      os << '\n';
    }
  }
  std::string str() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

inline CsvTable rate_table(const RateReport& r) {
  CsvTable t({"k", "error", "log2_error", "predicted_exponent", "fitted_slope"});
  for (const auto& pt : r.points)
    t.add({pt.k, pt.error, std::log2(pt.error), r.predicted_exponent, r.fitted_slope});
  return t;
}

inline CsvTable recovery_table(const RateReport& r) {
  CsvTable t({"n", "error", "predicted_exponent", "fitted_slope"});
  for (const auto& pt : r.points) t.add({pt.n, pt.error, r.predicted_exponent, r.fitted_slope});
  return t;
}

inline CsvTable stechkin_table(const StechkinReport& r) {
  CsvTable t({"rho", "k", "norm_proxy", "error"});
  for (const auto& pt : r.points) t.add({pt.rho, pt.k, pt.norm_proxy, pt.error});
  return t;
}

inline CsvTable alpha_type_table(const AlphaTypeReport& r) {
  CsvTable t({"k", "kappa", "passes", "interior_cells", "meeting_cells", "gamma", "c0", "sampled", "witness"});
  for (const auto& lv : r.levels)
    t.add({lv.k, to_string(lv.kappa), lv.passes, lv.interior_count, lv.meets_count, to_string(lv.gamma), lv.c0,
           lv.sampled, lv.witness});
  return t;
}

// ---------------------------------------------------------------------------
// Line charts

struct Series {
  std::string label;
  std::vector<double> x, y;
};

struct Chart {
  std::string title, x_label, y_label;
  bool log_x = false, log_y = false;
  std::vector<Series> series;
};

namespace detail {

inline std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fixed(double v, int digits = 2) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string tick_label(double v, bool logscale) {
  if (logscale) return "2^" + fixed(v, std::abs(v - std::round(v)) < 1e-9 ? 0 : 1);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace detail

/// Static SVG line chart; log axes are base 2. Points that cannot be placed (non-finite, or
/// non-positive on a log axis) are skipped.
inline std::string render_svg(const Chart& chart) {
  constexpr double W = 640, H = 420, left = 70, right = 170, top = 40, bottom = 55;
  static const char* const palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  auto tx = [&](double v) { return chart.log_x ? (v > 0 ? std::log2(v) : NAN) : v; };
  auto ty = [&](double v) { return chart.log_y ? (v > 0 ? std::log2(v) : NAN) : v; };

  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : chart.series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      double a = tx(s.x[i]), b = ty(s.y[i]);
      if (!std::isfinite(a) || !std::isfinite(b)) continue;
      x0 = std::min(x0, a), x1 = std::max(x1, a), y0 = std::min(y0, b), y1 = std::max(y1, b);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double a) { return left + (a - x0) / (x1 - x0) * pw; };
  auto py = [&](double b) { return top + (y1 - b) / (y1 - y0) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << detail::escape_xml(chart.title) << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double a = x0 + (x1 - x0) * i / 4, b = y0 + (y1 - y0) * i / 4;
    os << "<text x=\"" << detail::fixed(px(a)) << "\" y=\"" << H - bottom + 18 << "\" text-anchor=\"middle\">"
       << detail::tick_label(a, chart.log_x) << "</text>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << detail::fixed(py(b) + 4) << "\" text-anchor=\"end\">"
       << detail::tick_label(b, chart.log_y) << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
     << detail::escape_xml(chart.x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << detail::escape_xml(chart.y_label) << "</text>\n";

  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const auto& s = chart.series[k];
    const char* color = palette[k % std::size(palette)];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      double a = tx(s.x[i]), b = ty(s.y[i]);
      if (!std::isfinite(a) || !std::isfinite(b)) continue;
      pts += detail::fixed(px(a)) + "," + detail::fixed(py(b)) + " ";
      os << "<circle cx=\"" << detail::fixed(px(a)) << "\" cy=\"" << detail::fixed(py(b)) << "\" r=\"3\" fill=\""
         << color << "\"/>\n";
    }
    if (!pts.empty()) pts.pop_back();
    os << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    double ly = top + 12 + 18 * static_cast<double>(k);
    os << "<line x1=\"" << W - right + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - right + 32 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - right + 38 << "\" y=\"" << ly + 4 << "\">" << detail::escape_xml(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace aniso::report
