#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "opinion_audit/report.hpp"
#include "opinion_audit/util.hpp"

namespace opinion_audit {

namespace {

std::string xml_escape(std::string_view text) {
    std::string out;
    for (char ch : text) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

// White at 0, deep blue at 1.
std::string shade(double value) {
    const double t = std::clamp(value, 0.0, 1.0);
    auto channel = [&](int lo, int hi) { return static_cast<int>(std::lround(hi + (lo - hi) * t)); };
    return fmt::format("#{:02x}{:02x}{:02x}", channel(8, 255), channel(48, 255), channel(107, 255));
}

}  // namespace

std::string render_heatmap(const std::vector<HeatmapColumn>& columns) {
    if (columns.empty()) throw std::invalid_argument("heatmap: no models");
    const auto& ref = columns.front().table;
    if (ref.groups.size() < 2) throw std::invalid_argument("heatmap: at least two groups are needed");
    for (const auto& col : columns) {
        const auto& t = col.table;
        bool same = t.grouping == ref.grouping && t.groups.size() == ref.groups.size();
        for (std::size_t i = 0; same && i < t.groups.size(); ++i)
            same = t.groups[i].id == ref.groups[i].id && t.groups[i].label == ref.groups[i].label &&
                   t.groups[i].members == ref.groups[i].members;
        if (!same) throw std::invalid_argument(fmt::format("heatmap: model \"{}\" uses a different grouping", col.name));
    }

    const int label_w = 150, cell_w = 110, cell_h = 36, top = 56, left = 10;
    const int rows = static_cast<int>(ref.groups.size());
    const int cols = static_cast<int>(columns.size());
    const int width = left + label_w + cols * cell_w + 10;
    const int height = top + rows * cell_h + 30;

    std::ostringstream svg;
    svg << fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"13\">\n",
        width, height);
    svg << fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n", width, height);
    svg << fmt::format("<text x=\"{}\" y=\"20\" font-weight=\"bold\">{} by {}</text>\n", left,
                       xml_escape(ref.metric), xml_escape(ref.grouping));
    for (int c = 0; c < cols; ++c)
        svg << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                           left + label_w + c * cell_w + cell_w / 2, top - 10, xml_escape(columns[c].name));
    for (int r = 0; r < rows; ++r) {
        const auto& g = ref.groups[static_cast<std::size_t>(r)];
        const int y = top + r * cell_h;
        svg << fmt::format("<text x=\"{}\" y=\"{}\">{} (n={})</text>\n", left, y + cell_h / 2 + 5,
                           xml_escape(g.label), g.members.size());
        for (int c = 0; c < cols; ++c) {
            const auto& cell = columns[static_cast<std::size_t>(c)].table.groups[static_cast<std::size_t>(r)];
            const int x = left + label_w + c * cell_w;
            const std::string fill = cell.empty ? "#e0e0e0" : shade(cell.value);
            const std::string ink = !cell.empty && cell.value > 0.6 ? "#ffffff" : "#000000";
            svg << fmt::format(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#ffffff\"/>\n", x, y, cell_w,
                cell_h, fill);
            svg << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{}\">{}</text>\n",
                               x + cell_w / 2, y + cell_h / 2 + 5, ink, cell.empty ? "n/a" : fixed(cell.value, 2));
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace opinion_audit
