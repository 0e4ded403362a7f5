#include "dialdiv/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "dialdiv/errors.hpp"

namespace dialdiv::report {

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    const auto& f = fields[i];
    if (f.find_first_of(",\"\n\r") == std::string::npos) {
      out += f;
      continue;
    }
    out.push_back('"');
    for (char c : f) {
      if (c == '"') out.push_back('"');
      out.push_back(c);
    }
    out.push_back('"');
  }
  out.push_back('\n');
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::string s = csv_line(header);
  for (const auto& r : rows) s += csv_line(r);
  write_text(path, s);
}

namespace {

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string fmt(double x, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, x);
  return buf;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

std::string svg_line_plot(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<Series>& series) {
  constexpr double W = 640, H = 420, L = 70, R = 170, T = 40, B = 60;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      if (std::isnan(x) || std::isnan(y)) continue;
      x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad, y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  nlohmann::ordered_json meta = nlohmann::ordered_json::array();
  for (const auto& s : series) {
    nlohmann::ordered_json pts = nlohmann::ordered_json::array();
    for (auto [x, y] : s.points) pts.push_back({x, std::isnan(y) ? nlohmann::ordered_json() : nlohmann::ordered_json(y)});
    meta.push_back({{"label", s.label}, {"points", std::move(pts)}});
  }

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(W, 0) + "\" height=\"" + fmt(H, 0) +
       "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<metadata>" + esc(meta.dump()) + "</metadata>\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + fmt(W / 2, 1) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + esc(title) + "</text>\n";
  o += "<line x1=\"" + fmt(L, 1) + "\" y1=\"" + fmt(H - B, 1) + "\" x2=\"" + fmt(W - R, 1) + "\" y2=\"" +
       fmt(H - B, 1) + "\" stroke=\"black\"/>\n";
  o += "<line x1=\"" + fmt(L, 1) + "\" y1=\"" + fmt(T, 1) + "\" x2=\"" + fmt(L, 1) + "\" y2=\"" + fmt(H - B, 1) +
       "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = x0 + (x1 - x0) * k / 5.0;
    const double yv = y0 + (y1 - y0) * k / 5.0;
    o += "<text x=\"" + fmt(px(xv), 1) + "\" y=\"" + fmt(H - B + 16, 1) + "\" text-anchor=\"middle\">" +
         fmt(xv, 2) + "</text>\n";
    o += "<text x=\"" + fmt(L - 6, 1) + "\" y=\"" + fmt(py(yv) + 4, 1) + "\" text-anchor=\"end\">" + fmt(yv, 3) +
         "</text>\n";
    o += "<line x1=\"" + fmt(L, 1) + "\" y1=\"" + fmt(py(yv), 1) + "\" x2=\"" + fmt(W - R, 1) + "\" y2=\"" +
         fmt(py(yv), 1) + "\" stroke=\"#ddd\"/>\n";
  }
  o += "<text x=\"" + fmt((L + W - R) / 2, 1) + "\" y=\"" + fmt(H - 18, 1) + "\" text-anchor=\"middle\">" +
       esc(x_label) + "</text>\n";
  o += "<text transform=\"translate(18," + fmt((T + H - B) / 2, 1) + ") rotate(-90)\" text-anchor=\"middle\">" +
       esc(y_label) + "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    std::string path;
    for (auto [x, y] : series[i].points) {
      if (std::isnan(y)) continue;
      path += (path.empty() ? "M" : " L") + fmt(px(x), 2) + "," + fmt(py(y), 2);
    }
    if (!path.empty())
      o += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    for (auto [x, y] : series[i].points)
      if (!std::isnan(y))
        o += "<circle cx=\"" + fmt(px(x), 2) + "\" cy=\"" + fmt(py(y), 2) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
    const double ly = T + 16.0 * static_cast<double>(i);
    o += "<rect x=\"" + fmt(W - R + 12, 1) + "\" y=\"" + fmt(ly - 8, 1) + "\" width=\"10\" height=\"10\" fill=\"" +
         color + "\"/>\n";
    o += "<text x=\"" + fmt(W - R + 28, 1) + "\" y=\"" + fmt(ly + 1, 1) + "\">" + esc(series[i].label) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

}  // namespace dialdiv::report
