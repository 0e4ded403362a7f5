#pragma once

// CSV and standalone SVG output.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace dialdiv::report {

/// One CSV record (RFC 4180 quoting), newline-terminated.
std::string csv_line(const std::vector<std::string>& fields);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

/// Line plot with axes, ticks and a legend. The plotted data is embedded as
/// JSON in the <metadata> element.
std::string svg_line_plot(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<Series>& series);

void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace dialdiv::report
