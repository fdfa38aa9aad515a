#pragma once

#include "blayer/lattice.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace blayer {

/// Shortest round-trip text for a double: 17 significant digits.
std::string format_double(double v);

std::uint64_t fnv1a(const std::string& text);
std::string hex64(std::uint64_t v);

/// Comma-separated table with a header row.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
    void add_row(const std::vector<double>& values);
    void add_row(const std::vector<std::string>& cells);
    std::string str() const;
    std::size_t rows() const noexcept { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Minimal SVG line plot. Each series is a polyline or a set of markers.
class SvgPlot {
public:
    struct Series {
        std::string label;
        Vec x, y;
        bool markers = false;
        std::string color = "#1f77b4";
    };

    SvgPlot(std::string title, std::string xlabel, std::string ylabel, bool log_y = false);
    void add(Series s) { series_.push_back(std::move(s)); }
    /// Renders the plot as a <g> group placed at (x, y) with the given size.
    std::string render_group(double x, double y, double w, double h) const;
    std::string str(double w = 640, double h = 420) const;

private:
    std::string title_, xlabel_, ylabel_;
    bool log_y_;
    std::vector<Series> series_;
};

/// Several plots side by side in one document.
std::string svg_panels(const std::vector<const SvgPlot*>& panels, double panel_w = 520, double panel_h = 400);

/// Funnels every file write of a run through one place and records the inventory.
class OutputWriter {
public:
    explicit OutputWriter(std::filesystem::path dir);
    void write(const std::string& name, const std::string& content);
    void time(const std::string& op, double seconds);
    /// Writes manifest.json (listing itself) and returns its path.
    std::filesystem::path finish(const std::string& config_hash, const std::string& command);
    const std::filesystem::path& dir() const noexcept { return dir_; }
    std::vector<std::string> files() const;

private:
    std::filesystem::path dir_;
    mutable std::mutex mutex_;
    std::vector<std::string> files_;
    std::map<std::string, double> timings_;
};

inline constexpr const char* kArtifactVersion = "1.0.0";

}  // namespace blayer
