#include "report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "phaseless/types.hpp"

namespace phaseless::detail {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path) {
    require(static_cast<bool>(out_), ErrorCode::Io, "cannot open " + path + " for writing");
    for (const auto& h : header) cell(h);
    end_row();
}

CsvWriter& CsvWriter::cell(const std::string& v) {
    if (!first_) out_ << ',';
    first_ = false;
    if (v.find_first_of(",\"\n") != std::string::npos) {
        out_ << '"';
        for (char c : v) {
            if (c == '"') out_ << '"';
            out_ << c;
        }
        out_ << '"';
    } else {
        out_ << v;
    }
    return *this;
}

void CsvWriter::end_row() {
    out_ << '\n';
    first_ = true;
    require(static_cast<bool>(out_), ErrorCode::Io, "csv write failed");
}

void ensure_directory(const std::string& dir) {
    if (dir.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    require(!ec, ErrorCode::Io, "cannot create directory " + dir + ": " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string tick(double v, bool log_scale) {
    std::ostringstream s;
    s.precision(3);
    s << (log_scale ? std::pow(10.0, v) : v);
    return s.str();
}

} // namespace

void write_svg_plot(const std::string& path, const PlotSpec& spec, const std::vector<Series>& series) {
    const double width = 640, height = 420, left = 70, right = 170, top = 40, bottom = 60;
    auto tx = [&](double v) { return spec.log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            const double a = tx(s.x[i]), b = ty(s.y[i]);
            if (!std::isfinite(a) || !std::isfinite(b)) continue;
            x0 = std::min(x0, a), x1 = std::max(x1, a), y0 = std::min(y0, b), y1 = std::max(y1, b);
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;

    const double pw = width - left - right, ph = height - top - bottom;
    auto px = [&](double a) { return left + (a - x0) / (x1 - x0) * pw; };
    auto py = [&](double b) { return top + ph - (b - y0) / (y1 - y0) * ph; };

    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path + " for writing");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
        << escape(spec.title) << "</text>\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<text x=\"" << left << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">" << tick(x0, spec.log_x)
        << "</text>\n";
    out << "<text x=\"" << left + pw << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
        << tick(x1, spec.log_x) << "</text>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << top + ph << "\" text-anchor=\"end\">" << tick(y0, spec.log_y)
        << "</text>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\">" << tick(y1, spec.log_y)
        << "</text>\n";
    out << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 18 << "\" text-anchor=\"middle\">"
        << escape(spec.x_label) << "</text>\n";
    out << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
        << escape(spec.y_label) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kPalette[k % std::size(kPalette)];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            const double a = tx(s.x[i]), b = ty(s.y[i]);
            if (!std::isfinite(a) || !std::isfinite(b)) continue;
            out << px(a) << ',' << py(b) << ' ';
        }
        out << "\"/>\n";
        const double ly = top + 14 + 18 * static_cast<double>(k);
        out << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw + 32 << "\" y2=\""
            << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << left + pw + 38 << "\" y=\"" << ly << "\">" << escape(s.label) << "</text>\n";
    }
    out << "</svg>\n";
}

} // namespace phaseless::detail
