#include "pqx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "pqx/errors.hpp"
#include "pqx/rng.hpp"
#include "pqx/train.hpp"

namespace pqx {

std::optional<double> rma(std::span<const double> relevance, const GroundTruthMask& mask) {
    if (relevance.size() != mask.mask.size())
        throw ValidationError("rma: relevance/mask length mismatch");
    double total = 0.0, inside = 0.0;
    for (size_t i = 0; i < relevance.size(); ++i) {
        const double v = relevance[i] > 0.0 ? relevance[i] : 0.0; // negatives carry no mass
        total += v;
        if (mask.mask[i]) inside += v;
    }
    if (total <= 0.0) return std::nullopt;
    return inside / total;
}

std::vector<int> top_l_indices(std::span<const double> values, int l) {
    std::vector<int> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (values[static_cast<size_t>(a)] != values[static_cast<size_t>(b)])
            return values[static_cast<size_t>(a)] > values[static_cast<size_t>(b)];
        return a < b; // ties: lower index wins
    });
    idx.resize(static_cast<size_t>(l));
    return idx;
}

std::optional<double> iou(std::span<const double> relevance, const GroundTruthMask& mask) {
    if (relevance.size() != mask.mask.size())
        throw ValidationError("iou: relevance/mask length mismatch");
    const int l = mask.disturbed_count;
    const int n = static_cast<int>(mask.mask.size());
    if (l <= 0 || l >= n) return std::nullopt;

    const auto top = top_l_indices(relevance, l);
    int intersection = 0;
    for (int i : top)
        if (mask.mask[static_cast<size_t>(i)]) ++intersection;
    const int uni = 2 * l - intersection;
    return static_cast<double>(intersection) / static_cast<double>(uni);
}

ScoreStats aggregate_scores(std::span<const std::optional<double>> scores) {
    ScoreStats st;
    double sum = 0.0;
    for (const auto& s : scores) {
        if (s.has_value()) {
            ++st.n_defined;
            sum += *s;
        } else {
            ++st.n_excluded;
        }
    }
    if (st.n_defined == 0) return st;
    st.mean = sum / st.n_defined;
    if (st.n_defined >= 2) {
        double sq = 0.0;
        for (const auto& s : scores)
            if (s.has_value()) {
                const double d = *s - st.mean;
                sq += d * d;
            }
        st.stddev = std::sqrt(sq / (st.n_defined - 1));
    }
    return st;
}

namespace {

std::string variant_name(double alpha) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "a%g", alpha);
    return buf;
}

struct RecordScores {
    std::vector<std::optional<double>> rma_by_variant;
    std::vector<std::optional<double>> iou_by_variant;
};

} // namespace

EvalReport evaluate(const Network& net, const ModelParams& params,
                    const LaplacePosterior* posterior, const Dataset& data,
                    const EvalConfig& config) {
    const auto indices = data.split_indices(config.split);
    if (indices.empty()) throw ValidationError("evaluate: empty split");
    config.occlusion.validate(static_cast<int>(data.n_samples));

    EvalReport report;
    report.config = config;

    // one variant list shared by all records: MAP first, then the alphas
    std::vector<std::string> variants{"MAP"};
    for (double a : config.alphas) variants.push_back(variant_name(a));
    const size_t n_var = variants.size();

    // MAP accuracy / entropy on the split
    report.map_accuracy = accuracy(net, params.theta, params.buffers, data, indices);
    report.map_entropy = mean_entropy(net, params.theta, params.buffers, data, indices);

    // ensemble accuracy across sampled models
    if (posterior) {
        report.ensemble_models = config.accuracy_models;
        std::vector<double> theta_s;
        std::vector<double> accs(static_cast<size_t>(config.accuracy_models));
        double ent_sum = 0.0;
        for (int s = 0; s < config.accuracy_models; ++s) {
            sample_params_into(*posterior, config.seed, static_cast<uint64_t>(s), theta_s);
            accs[static_cast<size_t>(s)] = accuracy(net, theta_s, params.buffers, data, indices);
            ent_sum += mean_entropy(net, theta_s, params.buffers, data, indices);
        }
        double mean = 0.0;
        for (double a : accs) mean += a;
        mean /= config.accuracy_models;
        double sq = 0.0;
        for (double a : accs) sq += (a - mean) * (a - mean);
        report.ensemble_accuracy_mean = mean;
        report.ensemble_accuracy_std =
            config.accuracy_models >= 2 ? std::sqrt(sq / (config.accuracy_models - 1)) : 0.0;
        report.ensemble_entropy_mean = ent_sum / config.accuracy_models;
    }

    // per-record relevance scoring
    std::map<int, std::vector<RecordScores>> by_class;
    std::vector<double> x, baseline, map_alphas;
    for (size_t idx : indices) {
        const SignalRecord& rec = data.records[idx];
        x.assign(rec.x.begin(), rec.x.end());
        baseline.assign(rec.baseline.begin(), rec.baseline.end());
        const GroundTruthMask mask = data.mask_of(idx);
        const auto baseline_values = resolve_baseline(config.occlusion, x, baseline);

        // target class per policy; ensemble rows resolve their own class only
        // under the per-realization policy (sentinel -1)
        int target;
        if (config.occlusion.policy == TargetClassPolicy::true_label) {
            target = rec.label;
        } else {
            const auto probs = net.forward_one(params.theta, params.buffers, x, Mode::eval);
            target = predict_class(probs);
        }
        const int ens_target =
            config.occlusion.policy == TargetClassPolicy::per_sample_prediction ? -1 : target;

        RecordScores scores;
        scores.rma_by_variant.resize(n_var);
        scores.iou_by_variant.resize(n_var);

        const RelevanceVector map_rv = relevance_map(net, params.theta, params.buffers, x,
                                                     baseline_values, target, config.occlusion);
        scores.rma_by_variant[0] = rma(map_rv.r, mask);
        scores.iou_by_variant[0] = iou(map_rv.r, mask);

        if (posterior && !config.alphas.empty()) {
            const uint64_t rec_seed = mix64(config.seed, 0xe45e, idx);
            const ExplanationEnsemble ens =
                sample_explanations(net, *posterior, params.buffers, x, baseline_values,
                                    config.ensemble_size, config.occlusion, ens_target, rec_seed);
            const BExplanation bx = summarize(ens, config.alphas, /*with_variance=*/false);
            for (size_t a = 0; a < config.alphas.size(); ++a) {
                const auto& pm = bx.percentiles.at(config.alphas[a]);
                scores.rma_by_variant[a + 1] = rma(pm, mask);
                scores.iou_by_variant[a + 1] = iou(pm, mask);
            }
        }
        by_class[rec.label].push_back(std::move(scores));
    }

    // aggregate per class, then totals over the disturbance classes
    std::vector<std::vector<std::optional<double>>> total_rma_means(n_var), total_iou_means(n_var);
    for (const auto& [class_id, recs] : by_class) {
        ClassReport cr;
        cr.class_id = class_id;
        cr.class_name = class_name(static_cast<DisturbanceClass>(class_id));
        cr.n_records = static_cast<int>(recs.size());
        for (size_t v = 0; v < n_var; ++v) {
            std::vector<std::optional<double>> rmas, ious;
            for (const RecordScores& rs : recs) {
                rmas.push_back(rs.rma_by_variant[v]);
                ious.push_back(rs.iou_by_variant[v]);
            }
            VariantReport vr;
            vr.variant = variants[v];
            vr.rma = aggregate_scores(rmas);
            vr.iou = aggregate_scores(ious);
            cr.variants.push_back(vr);

            if (static_cast<DisturbanceClass>(class_id) != DisturbanceClass::Normal) {
                total_rma_means[v].push_back(
                    vr.rma.n_defined > 0 ? std::optional<double>(vr.rma.mean) : std::nullopt);
                total_iou_means[v].push_back(
                    vr.iou.n_defined > 0 ? std::optional<double>(vr.iou.mean) : std::nullopt);
            }
        }
        report.per_class.push_back(std::move(cr));
    }

    for (size_t v = 0; v < n_var; ++v) {
        VariantReport vr;
        vr.variant = variants[v];
        vr.rma = aggregate_scores(total_rma_means[v]);
        vr.iou = aggregate_scores(total_iou_means[v]);
        // totals std: across-class spread of the class means
        report.totals.push_back(vr);
    }
    return report;
}

std::string EvalReport::to_csv() const {
    std::string out;
    out += "# rma: negative relevance clipped to zero before mass computation\n";
    out += "# iou: raw relevance ranks, top-L ties broken by lower index\n";
    out += "# totals: unweighted mean over disturbance-class means (Normal excluded); "
           "std is the across-class spread\n";
    out += "class_id,class_name,variant,n_records,n_excluded_rma,n_excluded_iou,"
           "rma_mean,rma_std,iou_mean,iou_std\n";
    char buf[256];
    auto emit = [&](int class_id, const std::string& name, int n_records, const VariantReport& vr) {
        std::snprintf(buf, sizeof(buf), "%d,%s,%s,%d,%d,%d,%.6f,%.6f,%.6f,%.6f\n", class_id,
                      name.c_str(), vr.variant.c_str(), n_records, vr.rma.n_excluded,
                      vr.iou.n_excluded, vr.rma.mean, vr.rma.stddev, vr.iou.mean, vr.iou.stddev);
        out += buf;
    };
    for (const ClassReport& cr : per_class)
        for (const VariantReport& vr : cr.variants) emit(cr.class_id, cr.class_name, cr.n_records, vr);
    for (const VariantReport& vr : totals) emit(-1, "Total", 0, vr);
    return out;
}

std::string EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["policy"] = {{"rma", "negatives clipped to zero"},
                   {"iou", "raw ranks, ties to lower index"},
                   {"totals", "unweighted mean over disturbance-class means (Normal excluded)"},
                   {"undefined_scores", "excluded from aggregation and counted"}};
    j["config"] = {{"split", split_name(config.split)},
                   {"alphas", config.alphas},
                   {"ensemble_size", config.ensemble_size},
                   {"accuracy_models", config.accuracy_models},
                   {"seed", config.seed},
                   {"occlusion", nlohmann::ordered_json::parse(config.occlusion.to_json())}};
    j["map"] = {{"accuracy", map_accuracy}, {"entropy", map_entropy}};
    if (ensemble_models > 0)
        j["ensemble"] = {{"models", ensemble_models},
                         {"accuracy_mean", ensemble_accuracy_mean},
                         {"accuracy_std", ensemble_accuracy_std},
                         {"entropy_mean", ensemble_entropy_mean}};
    auto stats_json = [](const ScoreStats& st) {
        return nlohmann::ordered_json{{"n_defined", st.n_defined},
                                      {"n_excluded", st.n_excluded},
                                      {"mean", st.mean},
                                      {"std", st.stddev}};
    };
    auto classes = nlohmann::ordered_json::array();
    for (const ClassReport& cr : per_class) {
        nlohmann::ordered_json cj;
        cj["class_id"] = cr.class_id;
        cj["class_name"] = cr.class_name;
        cj["n_records"] = cr.n_records;
        auto vars = nlohmann::ordered_json::array();
        for (const VariantReport& vr : cr.variants)
            vars.push_back({{"variant", vr.variant},
                            {"rma", stats_json(vr.rma)},
                            {"iou", stats_json(vr.iou)}});
        cj["variants"] = vars;
        classes.push_back(cj);
    }
    j["per_class"] = classes;
    auto tot = nlohmann::ordered_json::array();
    for (const VariantReport& vr : totals)
        tot.push_back({{"variant", vr.variant},
                       {"rma", stats_json(vr.rma)},
                       {"iou", stats_json(vr.iou)}});
    j["totals"] = tot;
    return j.dump(2);
}

} // namespace pqx
