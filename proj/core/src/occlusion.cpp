#include "pqx/occlusion.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "pqx/errors.hpp"

namespace pqx {

const char* baseline_kind_name(BaselineKind k) {
    switch (k) {
        case BaselineKind::zeros: return "zeros";
        case BaselineKind::nominal_sine: return "nominal_sine";
        default: return "constant";
    }
}

BaselineKind baseline_kind_from_name(const std::string& name) {
    if (name == "zeros") return BaselineKind::zeros;
    if (name == "nominal_sine") return BaselineKind::nominal_sine;
    if (name == "constant") return BaselineKind::constant;
    throw ValidationError("unknown baseline kind: " + name);
}

const char* target_policy_name(TargetClassPolicy p) {
    switch (p) {
        case TargetClassPolicy::map_prediction: return "map_prediction";
        case TargetClassPolicy::true_label: return "true_label";
        default: return "per_sample_prediction";
    }
}

TargetClassPolicy target_policy_from_name(const std::string& name) {
    if (name == "map_prediction") return TargetClassPolicy::map_prediction;
    if (name == "true_label") return TargetClassPolicy::true_label;
    if (name == "per_sample_prediction") return TargetClassPolicy::per_sample_prediction;
    throw ValidationError("unknown target class policy: " + name);
}

void OcclusionConfig::validate(int n_samples) const {
    if (window_w < 1 || window_w > n_samples)
        throw ValidationError("occlusion: window must satisfy 1 <= w <= N");
    if (stride_v < 1 || stride_v > window_w)
        throw ValidationError("occlusion: stride must satisfy 1 <= v <= w");
}

std::string OcclusionConfig::to_json() const {
    nlohmann::ordered_json j;
    j["window_w"] = window_w;
    j["stride_v"] = stride_v;
    j["baseline_kind"] = baseline_kind_name(baseline_kind);
    j["constant_value"] = constant_value;
    j["target_class_policy"] = target_policy_name(policy);
    return j.dump();
}

OcclusionConfig OcclusionConfig::from_json(const std::string& json) {
    const auto j = nlohmann::json::parse(json);
    OcclusionConfig cfg;
    cfg.window_w = j.at("window_w").get<int>();
    cfg.stride_v = j.at("stride_v").get<int>();
    cfg.baseline_kind = baseline_kind_from_name(j.at("baseline_kind").get<std::string>());
    cfg.constant_value = j.at("constant_value").get<double>();
    cfg.policy = target_policy_from_name(j.at("target_class_policy").get<std::string>());
    return cfg;
}

std::vector<int> window_starts(int n_samples, int window_w, int stride_v) {
    std::vector<int> starts;
    const int last_regular = (n_samples - window_w) / stride_v;
    for (int t = 0; t <= last_regular; ++t) starts.push_back(t * stride_v);
    if ((n_samples - window_w) % stride_v != 0) starts.push_back(n_samples - window_w);
    return starts;
}

std::vector<double> resolve_baseline(const OcclusionConfig& cfg, std::span<const double> x,
                                     std::span<const double> nominal) {
    switch (cfg.baseline_kind) {
        case BaselineKind::zeros: return std::vector<double>(x.size(), 0.0);
        case BaselineKind::constant: return std::vector<double>(x.size(), cfg.constant_value);
        case BaselineKind::nominal_sine:
            if (nominal.size() != x.size())
                throw ValidationError("occlusion: nominal baseline length mismatch");
            return std::vector<double>(nominal.begin(), nominal.end());
    }
    throw ValidationError("occlusion: bad baseline kind");
}

std::vector<double> window_scores(const Network& net, std::span<const double> theta,
                                  std::span<const double> buffers, std::span<const double> x,
                                  std::span<const double> baseline_values, int target_class,
                                  const OcclusionConfig& cfg) {
    const int n = static_cast<int>(x.size());
    cfg.validate(n);
    if (baseline_values.size() != x.size())
        throw ValidationError("occlusion: baseline length mismatch");
    if (target_class < 0 || target_class >= net.n_classes())
        throw ValidationError("occlusion: target class out of range");
    const auto starts = window_starts(n, cfg.window_w, cfg.stride_v);
    const int n_win = static_cast<int>(starts.size());

    // one batch: row 0 is the clean signal, rows 1..T the occluded variants
    BatchTensor input;
    input.batch = n_win + 1;
    input.channels = 1;
    input.length = n;
    input.data.resize(static_cast<size_t>(n_win + 1) * n);
    for (int b = 0; b <= n_win; ++b) {
        double* dst = input.sample(b);
        for (int i = 0; i < n; ++i) dst[i] = x[static_cast<size_t>(i)];
        if (b > 0) {
            const int s = starts[static_cast<size_t>(b - 1)];
            for (int i = s; i < s + cfg.window_w; ++i) dst[i] = baseline_values[static_cast<size_t>(i)];
        }
    }
    BatchTensor probs;
    net.forward(theta, buffers, input, Mode::eval, probs);

    const double p_clean = probs.sample(0)[target_class];
    std::vector<double> scores(static_cast<size_t>(n_win));
    for (int t = 0; t < n_win; ++t)
        scores[static_cast<size_t>(t)] = p_clean - probs.sample(t + 1)[target_class];
    return scores;
}

double occlude_once(const Network& net, std::span<const double> theta,
                    std::span<const double> buffers, std::span<const double> x,
                    std::span<const double> baseline_values, int t, int target_class,
                    const OcclusionConfig& cfg) {
    const int n = static_cast<int>(x.size());
    cfg.validate(n);
    const auto starts = window_starts(n, cfg.window_w, cfg.stride_v);
    if (t < 0 || t >= static_cast<int>(starts.size()))
        throw ValidationError("occlusion: window index out of range");

    const std::vector<double> p_clean = net.forward_one(theta, buffers, x, Mode::eval);
    std::vector<double> occluded(x.begin(), x.end());
    const int s = starts[static_cast<size_t>(t)];
    for (int i = s; i < s + cfg.window_w; ++i) occluded[static_cast<size_t>(i)] = baseline_values[static_cast<size_t>(i)];
    const std::vector<double> p_occ = net.forward_one(theta, buffers, occluded, Mode::eval);
    return p_clean[static_cast<size_t>(target_class)] - p_occ[static_cast<size_t>(target_class)];
}

std::vector<double> aggregate_scores(std::span<const int> starts, std::span<const double> scores,
                                     int n_samples, int window_w) {
    if (starts.size() != scores.size())
        throw ValidationError("occlusion: scores/starts length mismatch");
    std::vector<double> sum(static_cast<size_t>(n_samples), 0.0);
    std::vector<int> count(static_cast<size_t>(n_samples), 0);
    for (size_t t = 0; t < starts.size(); ++t) {
        const int s = starts[t];
        for (int i = s; i < s + window_w; ++i) {
            sum[static_cast<size_t>(i)] += scores[t];
            count[static_cast<size_t>(i)] += 1;
        }
    }
    for (int i = 0; i < n_samples; ++i) {
        if (count[static_cast<size_t>(i)] == 0)
            throw ValidationError("occlusion: uncovered index (invalid window set)");
        sum[static_cast<size_t>(i)] /= count[static_cast<size_t>(i)];
    }
    return sum;
}

RelevanceVector relevance_map(const Network& net, std::span<const double> theta,
                              std::span<const double> buffers, std::span<const double> x,
                              std::span<const double> baseline_values, int target_class,
                              const OcclusionConfig& cfg) {
    const int n = static_cast<int>(x.size());
    const auto starts = window_starts(n, cfg.window_w, cfg.stride_v);
    const auto scores = window_scores(net, theta, buffers, x, baseline_values, target_class, cfg);
    RelevanceVector rv;
    rv.target_class = target_class;
    rv.r = aggregate_scores(starts, scores, n, cfg.window_w);
    return rv;
}

std::string relevance_to_csv(const RelevanceVector& rv) {
    std::string out = "index,value\n";
    char buf[64];
    for (size_t i = 0; i < rv.r.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, rv.r[i]);
        out += buf;
    }
    return out;
}

std::string relevance_to_json(const RelevanceVector& rv) {
    nlohmann::ordered_json j;
    j["target_class"] = rv.target_class;
    j["model_tag"] = rv.model_tag;
    j["r"] = rv.r;
    return j.dump();
}

} // namespace pqx
