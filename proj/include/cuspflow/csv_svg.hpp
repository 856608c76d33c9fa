#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cuspflow/vec2.hpp"

namespace cuspflow {

// Locale-independent shortest representation with 17 significant digits;
// round-trips double exactly and is byte-stable across runs.
std::string format_double(double v);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

// Comma separated, '.' decimal, header row, '\n' line ends.
std::string render_csv(const Table& table);
std::string render_csv_text(const std::vector<std::string>& header,
                            const std::vector<std::vector<std::string>>& rows);

struct SvgSeries {
    std::string label;
    std::vector<Vec2> points;
};

// Fixed-size line plot with axes, tick labels, and a legend. Output depends
// only on the inputs.
std::string render_svg(const std::vector<SvgSeries>& series, const std::string& x_label,
                       const std::string& y_label);

std::uint64_t fnv1a64(std::string_view bytes);

// Writes artifacts under one directory and emits manifest.json (name, byte
// count, FNV-1a 64 content hash per artifact, sorted by name) on finish().
class ArtifactWriter {
public:
    explicit ArtifactWriter(std::string dir);
    void write(const std::string& name, const std::string& content);
    void finish();

    struct Entry {
        std::string name;
        std::size_t bytes = 0;
        std::uint64_t hash = 0;
    };
    const std::vector<Entry>& entries() const { return entries_; }

private:
    std::string dir_;
    std::vector<Entry> entries_;
    bool finished_ = false;
};

} // namespace cuspflow
