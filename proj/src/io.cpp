#include "blayer/io.hpp"

#include "blayer/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace blayer {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// ---------------------------------------------------------------------------

void CsvTable::add_row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    add_row(cells);
}

void CsvTable::add_row(const std::vector<std::string>& cells) {
    if (cells.size() != header_.size()) throw InvalidInput("csv: row width does not match the header");
    rows_.push_back(cells);
}

std::string CsvTable::str() const {
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
        os << '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return os.str();
}

// ---------------------------------------------------------------------------

namespace {

std::string esc(const std::string& s) {
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

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string xlabel, std::string ylabel, bool log_y)
    : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)), log_y_(log_y) {}

std::string SvgPlot::render_group(double ox, double oy, double w, double h) const {
    const double ml = 70, mr = 20, mt = 30, mb = 45;
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    auto ty = [&](double v) { return log_y_ ? std::log10(std::max(v, 1e-300)) : v; };
    for (const auto& s : series_) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (log_y_ && s.y[i] <= 0)) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, ty(s.y[i]));
            ymax = std::max(ymax, ty(s.y[i]));
        }
    }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax - xmin < 1e-14) xmin -= 0.5, xmax += 0.5;
    if (ymax - ymin < 1e-14) ymin -= 0.5, ymax += 0.5;
    const double pw = w - ml - mr, ph = h - mt - mb;
    auto px = [&](double v) { return ox + ml + (v - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double v) { return oy + mt + (1.0 - (ty(v) - ymin) / (ymax - ymin)) * ph; };

    std::ostringstream os;
    os << "<g>\n";
    os << "<rect x=\"" << num(ox + ml) << "\" y=\"" << num(oy + mt) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
       << "\" fill=\"none\" stroke=\"#333\"/>\n";
    os << "<text x=\"" << num(ox + w / 2) << "\" y=\"" << num(oy + 18) << "\" text-anchor=\"middle\" font-size=\"14\">"
       << esc(title_) << "</text>\n";
    os << "<text x=\"" << num(ox + ml + pw / 2) << "\" y=\"" << num(oy + h - 8)
       << "\" text-anchor=\"middle\" font-size=\"12\">" << esc(xlabel_) << "</text>\n";
    os << "<text x=\"" << num(ox + 14) << "\" y=\"" << num(oy + mt + ph / 2) << "\" font-size=\"12\" transform=\"rotate(-90 "
       << num(ox + 14) << ' ' << num(oy + mt + ph / 2) << ")\" text-anchor=\"middle\">" << esc(ylabel_) << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = xmin + (xmax - xmin) * k / 4.0;
        const double yv = ymin + (ymax - ymin) * k / 4.0;
        os << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(oy + mt + ph + 16) << "\" text-anchor=\"middle\" font-size=\"10\">"
           << tick(xv) << "</text>\n";
        const double ypix = oy + mt + (1.0 - k / 4.0) * ph;
        os << "<text x=\"" << num(ox + ml - 4) << "\" y=\"" << num(ypix + 3) << "\" text-anchor=\"end\" font-size=\"10\">"
           << tick(log_y_ ? std::pow(10.0, yv) : yv) << "</text>\n";
    }
    int legend = 0;
    for (const auto& s : series_) {
        if (s.markers) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (log_y_ && s.y[i] <= 0)) continue;
                os << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"3\" fill=\"" << s.color
                   << "\"/>\n";
            }
        } else {
            os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (log_y_ && s.y[i] <= 0)) continue;
                os << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
            }
            os << "\"/>\n";
        }
        if (!s.label.empty()) {
            const double lx = ox + ml + 8, ly = oy + mt + 14 + 14 * legend++;
            os << "<text x=\"" << num(lx) << "\" y=\"" << num(ly) << "\" font-size=\"11\" fill=\"" << s.color << "\">"
               << esc(s.label) << "</text>\n";
        }
    }
    os << "</g>\n";
    return os.str();
}

std::string SvgPlot::str(double w, double h) const {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h) << "\">\n";
    os << render_group(0, 0, w, h);
    os << "</svg>\n";
    return os.str();
}

std::string svg_panels(const std::vector<const SvgPlot*>& panels, double panel_w, double panel_h) {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(panel_w * panels.size()) << "\" height=\""
       << num(panel_h) << "\">\n";
    for (std::size_t i = 0; i < panels.size(); ++i) os << panels[i]->render_group(panel_w * i, 0, panel_w, panel_h);
    os << "</svg>\n";
    return os.str();
}

// ---------------------------------------------------------------------------

OutputWriter::OutputWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
}

void OutputWriter::write(const std::string& name, const std::string& content) {
    std::lock_guard lock(mutex_);
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + (dir_ / name).string());
    f << content;
    if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
}

void OutputWriter::time(const std::string& op, double seconds) {
    std::lock_guard lock(mutex_);
    timings_[op] += seconds;
}

std::vector<std::string> OutputWriter::files() const {
    std::lock_guard lock(mutex_);
    return files_;
}

std::filesystem::path OutputWriter::finish(const std::string& config_hash, const std::string& command) {
    nlohmann::json j;
    {
        std::lock_guard lock(mutex_);
        auto list = files_;
        list.push_back("manifest.json");
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
        j["artifact_version"] = kArtifactVersion;
        j["command"] = command;
        j["config_hash"] = config_hash;
        j["files"] = list;
        j["timings_seconds"] = timings_;
    }
    write("manifest.json", j.dump(2) + "\n");
    return dir_ / "manifest.json";
}

}  // namespace blayer
