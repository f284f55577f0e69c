#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pqx/bexplain.hpp"
#include "pqx/dataset.hpp"
#include "pqx/laplace.hpp"

namespace pqx {

/// Relevance mass accuracy: fraction of (negative-clipped) relevance mass
/// inside the ground-truth region. nullopt when the clipped mass is zero.
std::optional<double> rma(std::span<const double> relevance, const GroundTruthMask& mask);

/// Intersection-over-union between the top-L relevance indices (ties break
/// toward the lower index) and the L-point ground-truth support. nullopt
/// when L == 0 or L == N.
std::optional<double> iou(std::span<const double> relevance, const GroundTruthMask& mask);

/// Top-L index selection used by iou(); exposed for oracle tests.
std::vector<int> top_l_indices(std::span<const double> values, int l);

struct ScoreStats {
    int n_defined = 0;
    int n_excluded = 0;
    double mean = 0.0;
    double stddev = 0.0; // sample std (n-1); 0 when n_defined < 2
};

/// mean/std over the defined entries; excluded = nullopt count.
ScoreStats aggregate_scores(std::span<const std::optional<double>> scores);

struct VariantReport {
    std::string variant; // "MAP" or "a<percentile>"
    ScoreStats rma;
    ScoreStats iou;
};

struct ClassReport {
    int class_id = 0;
    std::string class_name;
    int n_records = 0;
    std::vector<VariantReport> variants;
};

struct EvalConfig {
    OcclusionConfig occlusion;
    std::vector<double> alphas;   // percentiles for B-explanations
    int ensemble_size = 100;      // S, when a posterior is supplied
    int accuracy_models = 100;    // sampled models for ensemble accuracy
    uint64_t seed = 0;
    Split split = Split::test;
};

struct EvalReport {
    std::vector<ClassReport> per_class;    // one per class present in the split
    std::vector<VariantReport> totals;     // unweighted mean over disturbance classes
    double map_accuracy = 0.0;
    double map_entropy = 0.0;
    double ensemble_accuracy_mean = 0.0;   // 0 when no posterior
    double ensemble_accuracy_std = 0.0;
    double ensemble_entropy_mean = 0.0;
    int ensemble_models = 0;
    EvalConfig config;

    std::string to_csv() const;
    std::string to_json() const;
};

/// Scores MAP relevance (and, when a posterior is given, percentile
/// B-explanations) against the stored ground-truth masks, per class and
/// aggregated. Totals average over the 15 disturbance classes; Normal has no
/// disturbance support and contributes excluded counts only.
EvalReport evaluate(const Network& net, const ModelParams& params,
                    const LaplacePosterior* posterior, const Dataset& data,
                    const EvalConfig& config);

} // namespace pqx
