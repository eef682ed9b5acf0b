#include "report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "raf/errors.hpp"

namespace raf::lab {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw ContractViolation("cannot format double");
  return std::string(buf, end);
}

std::string render_csv(const Table& t, const std::string& manifest_hash) {
  std::string out = "# manifest " + manifest_hash + "\n";
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) {
    RAF_REQUIRE(r.size() == t.header.size(), "CSV row width differs from header");
    line(r);
  }
  return out;
}

Table parse_csv(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = s.find(',', start);
      cells.push_back(s.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return cells;
  };
  while (std::getline(in, line)) {
    if (!have_header && line.starts_with("# ")) continue;
    if (!have_header) {
      t.header = split(line);
      have_header = true;
      continue;
    }
    std::vector<std::string> cells = split(line);
    if (cells.size() != t.header.size())
      throw ConfigError("CSV row " + std::to_string(t.rows.size() + 1) + " has " +
                        std::to_string(cells.size()) + " cells, header has " +
                        std::to_string(t.header.size()));
    t.rows.push_back(std::move(cells));
  }
  if (!have_header) throw ConfigError("CSV has no header");
  return t;
}

namespace {

std::string escape(const std::string& s) {
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

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

// Fixed precision keeps the SVG stable and small.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string render_svg(const PlotSpec& spec, const std::vector<Series>& series,
                       const std::string& manifest_hash) {
  constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
  auto tx = [&](double x) { return spec.log_x ? std::log10(x) : x; };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
  double y0 = x0, y1 = -x0;
  for (const Series& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i]) || !std::isfinite(tx(s.x[i]))) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (tx(x) - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (y1 - y) / (y1 - y0) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<!-- manifest " << manifest_hash << " -->\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << escape(spec.title) << "</text>\n";
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\""
    << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 12
    << "\" text-anchor=\"middle\">" << escape(spec.x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << kTop + ph / 2 << ")\">" << escape(spec.y_label) << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0;
    const double fy = y0 + (y1 - y0) * i / 4.0;
    const double xl = spec.log_x ? std::pow(10.0, fx) : fx;
    o << "<text class=\"tick\" x=\"" << num(kLeft + pw * i / 4.0) << "\" y=\"" << kTop + ph + 16
      << "\" text-anchor=\"middle\">" << escape(format_double(std::round(xl * 1000) / 1000))
      << "</text>\n";
    o << "<text class=\"tick\" x=\"" << kLeft - 6 << "\" y=\"" << num(py(fy) + 4)
      << "\" text-anchor=\"end\">" << escape(format_double(std::round(fy * 1000) / 1000))
      << "</text>\n";
  }

  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    o << "<g class=\"series\" data-name=\"" << escape(s.name) << "\">\n";
    if (spec.lines && s.x.size() > 1) {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.y[i])) continue;
        o << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
      }
      o << "\"/>\n";
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      o << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\""
        << (spec.lines ? 3 : 1.5) << "\" fill=\"" << color << "\"/>\n";
    }
    o << "</g>\n";
    const double ly = kTop + 14 + 18.0 * static_cast<double>(k);
    o << "<rect x=\"" << kW - kRight + 12 << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\""
      << color << "\"/>\n";
    o << "<text x=\"" << kW - kRight + 28 << "\" y=\"" << ly << "\">" << escape(s.name)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_text(const std::filesystem::path& dir, const std::string& name,
                const std::string& text) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const std::filesystem::path path = dir / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

Formats parse_formats(const std::string& text) {
  Formats f{false, false, false};
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string item = text.substr(start, comma - start);
    if (item == "csv") f.csv = true;
    else if (item == "json") f.json = true;
    else if (item == "svg") f.svg = true;
    else throw ConfigError("unknown format: " + item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return f;
}

}  // namespace raf::lab
