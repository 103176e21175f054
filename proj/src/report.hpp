#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace phaseless::detail {

// Shortest round-trip decimal form; identical doubles give identical text.
std::string format_double(double v);

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    CsvWriter& cell(const std::string& v);
    CsvWriter& cell(double v) { return cell(format_double(v)); }
    CsvWriter& cell(std::size_t v) { return cell(std::to_string(v)); }
    CsvWriter& cell(unsigned long long v) { return cell(std::to_string(v)); }
    CsvWriter& cell(bool v) { return cell(std::string(v ? "1" : "0")); }
    void end_row();

private:
    std::ofstream out_;
    bool first_ = true;
};

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
};

// Minimal line plot: axes, ticks at the data range ends, one polyline per series.
void write_svg_plot(const std::string& path, const PlotSpec& spec, const std::vector<Series>& series);

// Creates the directory (and parents) when missing.
void ensure_directory(const std::string& dir);
std::string join_path(const std::string& dir, const std::string& file);

} // namespace phaseless::detail
