#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pqx/network.hpp"

namespace pqx {

enum class BaselineKind : uint8_t { zeros = 0, nominal_sine = 1, constant = 2 };
enum class TargetClassPolicy : uint8_t { map_prediction = 0, true_label = 1, per_sample_prediction = 2 };

const char* baseline_kind_name(BaselineKind k);
BaselineKind baseline_kind_from_name(const std::string& name);
const char* target_policy_name(TargetClassPolicy p);
TargetClassPolicy target_policy_from_name(const std::string& name);

struct OcclusionConfig {
    int window_w = 64;
    int stride_v = 8;
    BaselineKind baseline_kind = BaselineKind::zeros;
    double constant_value = 0.0;
    TargetClassPolicy policy = TargetClassPolicy::map_prediction;

    void validate(int n_samples) const; // throws ValidationError

    std::string to_json() const;
    static OcclusionConfig from_json(const std::string& json);
};

/// Per-time-index attribution for one model realization.
struct RelevanceVector {
    std::vector<double> r; // length N, each entry in [-1, 1]
    int target_class = 0;
    std::string model_tag;
};

/// Window start offsets: v*t for t = 0..floor((N-w)/v); if that leaves a
/// gap at the end, one trailing window ending at N-1 is appended.
std::vector<int> window_starts(int n_samples, int window_w, int stride_v);

/// Replacement values for the occluded span, resolved per record.
std::vector<double> resolve_baseline(const OcclusionConfig& cfg, std::span<const double> x,
                                     std::span<const double> nominal);

/// R_t = p_c(x) - p_c(x with window t replaced by baseline values).
double occlude_once(const Network& net, std::span<const double> theta,
                    std::span<const double> buffers, std::span<const double> x,
                    std::span<const double> baseline_values, int t, int target_class,
                    const OcclusionConfig& cfg);

/// Change in the target-class probability per window, one batched forward.
/// scores[t] corresponds to window_starts(...)[t].
std::vector<double> window_scores(const Network& net, std::span<const double> theta,
                                  std::span<const double> buffers, std::span<const double> x,
                                  std::span<const double> baseline_values, int target_class,
                                  const OcclusionConfig& cfg);

/// Order-free aggregation of window scores: r[n] = mean of R_t over the
/// windows covering n, with the exact per-index coverage count.
std::vector<double> aggregate_scores(std::span<const int> starts, std::span<const double> scores,
                                     int n_samples, int window_w);

/// Full occlusion-sensitivity map: window sweep + per-index averaging.
RelevanceVector relevance_map(const Network& net, std::span<const double> theta,
                              std::span<const double> buffers, std::span<const double> x,
                              std::span<const double> baseline_values, int target_class,
                              const OcclusionConfig& cfg);

/// CSV rows "index,value" / JSON array exports.
std::string relevance_to_csv(const RelevanceVector& rv);
std::string relevance_to_json(const RelevanceVector& rv);

} // namespace pqx
