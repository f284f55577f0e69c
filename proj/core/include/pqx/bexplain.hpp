#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pqx/laplace.hpp"
#include "pqx/occlusion.hpp"

namespace pqx {

/// S relevance vectors drawn by pushing posterior samples through the
/// occlusion operator. Row s is the map of the s-th parameter draw.
struct ExplanationEnsemble {
    int n_rows = 0;    // S
    int n_samples = 0; // N
    std::vector<double> rows; // S x N, row-major
    uint64_t seed = 0;
    int target_class = 0;
    OcclusionConfig cfg;
    std::string posterior_ref; // hex digest of the posterior file, if any

    std::span<const double> row(int s) const {
        return {rows.data() + static_cast<size_t>(s) * n_samples, static_cast<size_t>(n_samples)};
    }
};

/// Mean (1/S), variance (1/S), and per-index percentile summaries.
struct BExplanation {
    std::vector<double> mean;
    std::vector<double> variance;                    // empty if not requested
    std::map<double, std::vector<double>> percentiles; // alpha in (0,100) -> map

    std::string to_json() const;
};

/// Row s = relevance_map(theta_map + sqrt(var).z_s, x). The target class is
/// fixed by the caller (resolved once from the configured policy).
ExplanationEnsemble sample_explanations(const Network& net, const LaplacePosterior& post,
                                        std::span<const double> buffers, std::span<const double> x,
                                        std::span<const double> baseline_values, int n_rows,
                                        const OcclusionConfig& cfg, int target_class,
                                        uint64_t seed);

/// Percentile of pre-sorted values with linear interpolation between the
/// closest order statistics (rank h = alpha/100 * (S-1)).
double percentile_sorted(std::span<const double> sorted, double alpha);

/// Per-index mean/variance (population 1/S normalization) and percentiles.
/// Throws ValidationError when with_variance and S < 2.
BExplanation summarize(const ExplanationEnsemble& ens, std::span<const double> alphas,
                       bool with_variance = true);

struct ConvergenceRow {
    int n_rows = 0;
    double err = 0.0; // || mean_S - mean_Smax ||_2
};

/// Prefix-mean convergence probe over an ascending S list (nested draws).
std::vector<ConvergenceRow> mc_convergence_probe(const Network& net, const LaplacePosterior& post,
                                                 std::span<const double> buffers,
                                                 std::span<const double> x,
                                                 std::span<const double> baseline_values,
                                                 const OcclusionConfig& cfg, int target_class,
                                                 std::span<const int> s_list, uint64_t seed);

/// "PQEX" container: magic, S u32, N u32, f32 row-major samples, cfg JSON.
void save_ensemble(const ExplanationEnsemble& ens, const std::string& path);
ExplanationEnsemble load_ensemble(const std::string& path);

} // namespace pqx
