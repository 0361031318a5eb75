#include "qspec/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "qspec/util.hpp"

namespace qspec {

std::vector<double> CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw SchemaMismatch("missing column '" + name + "'");
  const auto idx = static_cast<std::size_t>(it - header.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    try {
      out.push_back(parse_double(r[idx]));
    } catch (const InvalidArgument&) {
      throw SchemaMismatch("column '" + name + "' holds non-numeric '" + r[idx] + "'");
    }
  }
  return out;
}

CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto cells = split(line, ',');
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) throw SchemaMismatch("ragged CSV row: '" + line + "'");
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw SchemaMismatch("empty CSV");
  return t;
}

const std::vector<std::string>& csv_schema(ExperimentKind kind) {
  static const std::map<ExperimentKind, std::vector<std::string>> schemas = {
      {ExperimentKind::density, {"cell", "x_mid", "v_re", "v_im", "phi_re", "phi_im"}},
      {ExperimentKind::lambda, {"theta", "lambda_value"}},
      {ExperimentKind::variance, {"j", "term"}},
      {ExperimentKind::ldp, {"epsilon", "n", "p_hat", "rate_hat", "c_eps", "rel_gap", "low_stat"}},
      {ExperimentKind::clt, {"n", "count", "ks", "var_emp", "sigma2"}},
      {ExperimentKind::lclt, {"s", "statistic", "target", "abs_err"}},
      {ExperimentKind::aperiodicity, {"t", "lambda_it", "rho_fit"}},
      {ExperimentKind::validate, {"check", "value"}},
  };
  return schemas.at(kind);
}

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 50.0;

struct Frame {
  double x0, x1, y0, y1;

  [[nodiscard]] double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  [[nodiscard]] double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

Frame make_frame(const std::vector<double>& xs, const std::vector<std::vector<double>>& ys, bool include_zero) {
  Frame f{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (double x : xs) {
    f.x0 = std::min(f.x0, x);
    f.x1 = std::max(f.x1, x);
  }
  for (const auto& series : ys) {
    for (double y : series) {
      if (!std::isfinite(y)) continue;
      f.y0 = std::min(f.y0, y);
      f.y1 = std::max(f.y1, y);
    }
  }
  if (include_zero) {
    f.y0 = std::min(f.y0, 0.0);
    f.y1 = std::max(f.y1, 0.0);
  }
  if (!std::isfinite(f.y0)) f.y0 = 0.0, f.y1 = 1.0;
  if (!(f.x1 > f.x0)) f.x0 -= 0.5, f.x1 += 0.5;
  if (!(f.y1 > f.y0)) f.y0 -= 0.5, f.y1 += 0.5;
  const double pad = 0.05 * (f.y1 - f.y0);
  f.y0 -= pad;
  f.y1 += pad;
  return f;
}

std::string num(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

class Svg {
 public:
  Svg(const std::string& title, const std::string& xlabel, const std::string& ylabel, const Frame& f) : f_(f) {
    os_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    os_ << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    os_ << "<text x=\"" << kWidth / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    const double bx = kLeft, by = kHeight - kBottom, ex = kWidth - kRight, ey = kTop;
    os_ << "<line class=\"axis\" x1=\"" << bx << "\" y1=\"" << by << "\" x2=\"" << ex << "\" y2=\"" << by
        << "\" stroke=\"black\"/>\n";
    os_ << "<line class=\"axis\" x1=\"" << bx << "\" y1=\"" << by << "\" x2=\"" << bx << "\" y2=\"" << ey
        << "\" stroke=\"black\"/>\n";
    os_ << "<text x=\"" << (bx + ex) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
        << xlabel << "</text>\n";
    os_ << "<text x=\"16\" y=\"" << (by + ey) / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
        << (by + ey) / 2 << ")\">" << ylabel << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
      const double xv = f.x0 + (f.x1 - f.x0) * k / 4.0;
      const double yv = f.y0 + (f.y1 - f.y0) * k / 4.0;
      os_ << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << by + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
          << format_double(std::round(xv * 1e4) / 1e4) << "</text>\n";
      os_ << "<text x=\"" << bx - 4 << "\" y=\"" << num(f.py(yv) + 3) << "\" text-anchor=\"end\" font-size=\"10\">"
          << format_double(std::round(yv * 1e4) / 1e4) << "</text>\n";
    }
  }

  void polyline(const std::string& cls, const std::vector<double>& xs, const std::vector<double>& ys,
                const std::string& color, bool dashed = false) {
    os_ << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
        << (dashed ? " stroke-dasharray=\"5,3\"" : "") << " points=\"";
    bool first = true;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!std::isfinite(ys[i])) continue;
      os_ << (first ? "" : " ") << num(f_.px(xs[i])) << "," << num(f_.py(ys[i]));
      first = false;
    }
    os_ << "\"/>\n";
  }

  void line(const std::string& cls, double xa, double ya, double xb, double yb, const std::string& color,
            bool dashed = false) {
    os_ << "<line class=\"" << cls << "\" x1=\"" << num(f_.px(xa)) << "\" y1=\"" << num(f_.py(ya)) << "\" x2=\""
        << num(f_.px(xb)) << "\" y2=\"" << num(f_.py(yb)) << "\" stroke=\"" << color << "\""
        << (dashed ? " stroke-dasharray=\"4,4\"" : "") << "/>\n";
  }

  void text(double x, double y, const std::string& s, const std::string& color = "black") {
    os_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"11\" fill=\"" << color << "\">" << s
        << "</text>\n";
  }

  void legend(const std::vector<std::pair<std::string, std::string>>& entries) {
    double y = kTop + 10;
    for (const auto& [label, color] : entries) {
      const double x = kWidth - kRight - 150;
      os_ << "<g class=\"legend\"><line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 20 << "\" y2=\"" << y
          << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>";
      os_ << "<text x=\"" << x + 26 << "\" y=\"" << y + 4 << "\" font-size=\"11\">" << label << "</text></g>\n";
      y += 16;
    }
  }

  [[nodiscard]] std::string finish() {
    os_ << "</svg>\n";
    return os_.str();
  }

  [[nodiscard]] const Frame& frame() const { return f_; }

 private:
  Frame f_;
  std::ostringstream os_;
};

void require_schema(const CsvTable& t, ExperimentKind kind) {
  if (t.header != csv_schema(kind)) throw SchemaMismatch("CSV header does not match the " + to_string(kind) + " schema");
  if (t.rows.empty()) throw SchemaMismatch("CSV has no data rows");
}

std::string plot_lambda(const CsvTable& t) {
  const auto x = t.column("theta");
  const auto y = t.column("lambda_value");
  Svg svg("Lambda(theta)", "theta (dimensionless twist)", "Lambda(theta) (growth rate per step)",
          make_frame(x, {y}, true));
  const auto& f = svg.frame();
  svg.line("zero", f.x0, 0.0, f.x1, 0.0, "gray", true);
  svg.polyline("curve", x, y, "steelblue");
  const auto it = std::min_element(x.begin(), x.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  const auto i0 = static_cast<std::size_t>(it - x.begin());
  if (x.size() >= 3 && i0 > 0 && i0 + 1 < x.size()) {
    const double slope = (y[i0 + 1] - y[i0 - 1]) / (x[i0 + 1] - x[i0 - 1]);
    svg.line("tangent", f.x0, y[i0] + slope * (f.x0 - x[i0]), f.x1, y[i0] + slope * (f.x1 - x[i0]), "firebrick");
    svg.text(f.px(x[i0]) + 6, f.py(y[i0]) - 8, "tangent at 0: slope " + format_double(std::round(slope * 1e6) / 1e6),
             "firebrick");
  }
  return svg.finish();
}

std::string plot_ldp(const CsvTable& t) {
  const auto eps = t.column("epsilon");
  const auto n = t.column("n");
  const auto rate = t.column("rate_hat");
  const auto c = t.column("c_eps");
  std::vector<double> ns = n;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  std::vector<std::vector<double>> all{c, rate};
  Svg svg("large deviations: measured rate vs c(epsilon)", "epsilon (threshold on S_n / n)",
          "rate (per step)", make_frame(eps, all, true));
  static const char* colors[] = {"darkorange", "seagreen", "purple", "saddlebrown"};
  std::vector<std::pair<std::string, std::string>> legend{{"c(epsilon)", "steelblue"}};
  std::vector<double> cx, cy;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (n[i] == ns.front()) {
      cx.push_back(eps[i]);
      cy.push_back(c[i]);
    }
  }
  svg.polyline("c_eps", cx, cy, "steelblue");
  for (std::size_t k = 0; k < ns.size(); ++k) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < eps.size(); ++i) {
      if (n[i] == ns[k]) {
        xs.push_back(eps[i]);
        ys.push_back(rate[i]);
      }
    }
    const std::string color = colors[k % 4];
    svg.polyline("rate_hat", xs, ys, color, true);
    legend.emplace_back("rate n=" + format_double(ns[k]), color);
  }
  svg.legend(legend);
  return svg.finish();
}

std::string plot_lclt(const CsvTable& t) {
  const auto s = t.column("s");
  const auto stat = t.column("statistic");
  const auto target = t.column("target");
  Svg svg("local limit: scaled interval mass", "s (shift, same units as S_n)",
          "Sigma sqrt(n) P(s + S_n in J) (dimensionless)", make_frame(s, {stat, target}, true));
  svg.polyline("empirical", s, stat, "darkorange");
  svg.polyline("gaussian", s, target, "steelblue", true);
  svg.legend({{"empirical", "darkorange"}, {"gaussian", "steelblue"}});
  return svg.finish();
}

}  // namespace

std::string emit_plot(std::string_view csv_text, ExperimentKind kind) {
  const CsvTable t = parse_csv(csv_text);
  require_schema(t, kind);
  switch (kind) {
    case ExperimentKind::lambda:
      return plot_lambda(t);
    case ExperimentKind::ldp:
      return plot_ldp(t);
    case ExperimentKind::lclt:
      return plot_lclt(t);
    default:
      throw SchemaMismatch("no plot defined for kind " + to_string(kind));
  }
}

}  // namespace qspec
