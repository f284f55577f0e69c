#include "pqx/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pqx/errors.hpp"

namespace pqx {

namespace {

// viridis anchors at u = 0, 1/8, ..., 1 (matplotlib reference samples)
constexpr int kAnchors[9][3] = {
    {68, 1, 84},    {70, 50, 127},  {54, 92, 141},  {39, 127, 142}, {31, 161, 135},
    {74, 194, 109}, {159, 218, 58}, {216, 226, 25}, {253, 231, 37},
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string rgb_attr(const Rgb& c) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "rgb(%d,%d,%d)", c.r, c.g, c.b);
    return buf;
}

// distinct fill colors for cluster ids
const char* kPalette[10] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3",
                            "#937860", "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd"};

} // namespace

Rgb viridis(double u) {
    u = std::clamp(u, 0.0, 1.0);
    const double pos = u * 8.0;
    const int lo = std::min(7, static_cast<int>(pos));
    const double f = pos - lo;
    Rgb c;
    c.r = static_cast<int>(std::lround(kAnchors[lo][0] + f * (kAnchors[lo + 1][0] - kAnchors[lo][0])));
    c.g = static_cast<int>(std::lround(kAnchors[lo][1] + f * (kAnchors[lo + 1][1] - kAnchors[lo][1])));
    c.b = static_cast<int>(std::lround(kAnchors[lo][2] + f * (kAnchors[lo + 1][2] - kAnchors[lo][2])));
    return c;
}

std::vector<double> minmax_normalize(std::span<const double> values) {
    std::vector<double> out(values.size(), 0.0);
    if (values.empty()) return out;
    double lo = values[0], hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi > lo)
        for (size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / (hi - lo);
    return out;
}

std::string heatmap_svg(std::span<const double> signal, std::span<const HeatmapStrip> strips) {
    if (signal.empty()) throw ValidationError("heatmap: empty signal");
    const int n = static_cast<int>(signal.size());
    const double width = 960.0, trace_h = 160.0, strip_h = 28.0, gap = 8.0, label_w = 150.0;
    const double height = trace_h + gap + static_cast<double>(strips.size()) * (strip_h + gap) + 20.0;
    const double px = (width - label_w) / n;

    std::string svg;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
                  "viewBox=\"0 0 %g %g\">\n",
                  width, height, width, height);
    svg += buf;
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // signal trace
    double lo = signal[0], hi = signal[0];
    for (double v : signal) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi <= lo) hi = lo + 1.0;
    svg += "<polyline fill=\"none\" stroke=\"#1f3b70\" stroke-width=\"1\" points=\"";
    for (int i = 0; i < n; ++i) {
        const double x = label_w + i * px;
        const double y = 10.0 + (trace_h - 20.0) * (1.0 - (signal[static_cast<size_t>(i)] - lo) / (hi - lo));
        svg += fmt(x) + "," + fmt(y) + " ";
    }
    svg += "\"/>\n";
    svg += "<text x=\"8\" y=\"" + fmt(trace_h / 2) + "\" font-size=\"13\">signal</text>\n";

    double y0 = trace_h + gap;
    for (const HeatmapStrip& strip : strips) {
        if (static_cast<int>(strip.values.size()) != n)
            throw ValidationError("heatmap: strip length mismatch");
        const auto norm = minmax_normalize(strip.values);
        for (int i = 0; i < n; ++i) {
            const Rgb c = viridis(norm[static_cast<size_t>(i)]);
            std::snprintf(buf, sizeof(buf),
                          "<rect x=\"%s\" y=\"%s\" width=\"%s\" height=\"%g\" fill=\"%s\"/>",
                          fmt(label_w + i * px).c_str(), fmt(y0).c_str(), fmt(px + 0.05).c_str(),
                          strip_h, rgb_attr(c).c_str());
            svg += buf;
        }
        svg += "\n<text x=\"8\" y=\"" + fmt(y0 + strip_h / 2 + 4) + "\" font-size=\"13\">" +
               strip.label + "</text>\n";
        y0 += strip_h + gap;
    }
    svg += "</svg>\n";
    return svg;
}

std::string cluster_svg(const ClusterResult& res) {
    const int s_n = static_cast<int>(res.assignment.size());
    if (s_n == 0 || res.projection2d.size() != static_cast<size_t>(s_n) * 2)
        throw ValidationError("cluster svg: missing projection");
    const int n_cols = res.k > 0 ? static_cast<int>(res.centroids.size()) / res.k : 0;

    const double width = 960.0, strip_h = 22.0, gap = 6.0, scatter_h = 420.0, label_w = 110.0;
    const double strips_h = res.k * (strip_h + gap);
    const double height = strips_h + scatter_h + 40.0;

    std::string svg;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
                  "viewBox=\"0 0 %g %g\">\n",
                  width, height, width, height);
    svg += buf;
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // per-cluster mean strips (viridis, MinMax per strip)
    const double px = (width - label_w - 10.0) / std::max(1, n_cols);
    for (int c = 0; c < res.k; ++c) {
        const double y0 = 10.0 + c * (strip_h + gap);
        std::span<const double> centroid(res.centroids.data() + static_cast<size_t>(c) * n_cols,
                                         static_cast<size_t>(n_cols));
        const auto norm = minmax_normalize(centroid);
        for (int i = 0; i < n_cols; ++i) {
            const Rgb col = viridis(norm[static_cast<size_t>(i)]);
            std::snprintf(buf, sizeof(buf),
                          "<rect x=\"%s\" y=\"%s\" width=\"%s\" height=\"%g\" fill=\"%s\"/>",
                          fmt(label_w + i * px).c_str(), fmt(y0).c_str(), fmt(px + 0.05).c_str(),
                          strip_h, rgb_attr(col).c_str());
            svg += buf;
        }
        std::snprintf(buf, sizeof(buf),
                      "\n<text x=\"8\" y=\"%s\" font-size=\"12\" fill=\"%s\">cluster %d mean</text>\n",
                      fmt(y0 + strip_h / 2 + 4).c_str(), kPalette[c % 10], c + 1);
        svg += buf;
    }

    // scatter of the 2-D projection colored by assignment
    double xlo = res.projection2d[0], xhi = xlo, ylo = res.projection2d[1], yhi = ylo;
    for (int s = 0; s < s_n; ++s) {
        xlo = std::min(xlo, res.projection2d[static_cast<size_t>(s) * 2]);
        xhi = std::max(xhi, res.projection2d[static_cast<size_t>(s) * 2]);
        ylo = std::min(ylo, res.projection2d[static_cast<size_t>(s) * 2 + 1]);
        yhi = std::max(yhi, res.projection2d[static_cast<size_t>(s) * 2 + 1]);
    }
    if (xhi <= xlo) xhi = xlo + 1.0;
    if (yhi <= ylo) yhi = ylo + 1.0;
    const double sy0 = strips_h + 20.0;
    for (int s = 0; s < s_n; ++s) {
        const double u = (res.projection2d[static_cast<size_t>(s) * 2] - xlo) / (xhi - xlo);
        const double v = (res.projection2d[static_cast<size_t>(s) * 2 + 1] - ylo) / (yhi - ylo);
        const double x = 40.0 + u * (width - 80.0);
        const double y = sy0 + (1.0 - v) * (scatter_h - 20.0);
        std::snprintf(buf, sizeof(buf), "<circle cx=\"%s\" cy=\"%s\" r=\"3\" fill=\"%s\"/>\n",
                      fmt(x).c_str(), fmt(y).c_str(),
                      kPalette[res.assignment[static_cast<size_t>(s)] % 10]);
        svg += buf;
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace pqx
