#pragma once

#include <span>
#include <string>
#include <vector>

#include "pqx/kmeans.hpp"

namespace pqx {

struct Rgb {
    int r = 0, g = 0, b = 0;
};

/// Viridis ramp sampled at u in [0,1] (piecewise-linear between anchors).
Rgb viridis(double u);

/// MinMax normalization to [0,1]; a constant vector maps to all zeros.
std::vector<double> minmax_normalize(std::span<const double> values);

struct HeatmapStrip {
    std::string label;
    std::vector<double> values; // length N; normalized per strip before drawing
};

/// Signal trace on top, one MinMax-normalized viridis strip per statistic.
std::string heatmap_svg(std::span<const double> signal, std::span<const HeatmapStrip> strips);

/// 2-D scatter of the ensemble projection colored by cluster assignment,
/// with per-cluster mean-explanation strips above.
std::string cluster_svg(const ClusterResult& res);

} // namespace pqx
