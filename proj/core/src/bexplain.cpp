#include "pqx/bexplain.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "pqx/errors.hpp"
#include "pqx/io.hpp"
#include "pqx/rng.hpp"

namespace pqx {

namespace {
constexpr char kMagic[4] = {'P', 'Q', 'E', 'X'};

std::string alpha_key(double alpha) {
    // trim trailing zeros so 5.0 -> "5", 2.5 -> "2.5"
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", alpha);
    return buf;
}
} // namespace

ExplanationEnsemble sample_explanations(const Network& net, const LaplacePosterior& post,
                                        std::span<const double> buffers, std::span<const double> x,
                                        std::span<const double> baseline_values, int n_rows,
                                        const OcclusionConfig& cfg, int target_class,
                                        uint64_t seed) {
    if (n_rows < 1) throw ValidationError("sample_explanations: S must be >= 1");
    ExplanationEnsemble ens;
    ens.n_rows = n_rows;
    ens.n_samples = static_cast<int>(x.size());
    ens.seed = seed;
    ens.cfg = cfg;
    ens.target_class = target_class;
    ens.rows.resize(static_cast<size_t>(n_rows) * ens.n_samples);

    std::vector<double> theta_s;
    for (int s = 0; s < n_rows; ++s) {
        sample_params_into(post, seed, static_cast<uint64_t>(s), theta_s);
        int row_target = target_class;
        if (row_target < 0) {
            // per-realization prediction policy: each row explains its own argmax
            const auto probs = net.forward_one(theta_s, buffers, x, Mode::eval);
            row_target = predict_class(probs);
        }
        const RelevanceVector rv =
            relevance_map(net, theta_s, buffers, x, baseline_values, row_target, cfg);
        std::copy(rv.r.begin(), rv.r.end(),
                  ens.rows.begin() + static_cast<size_t>(s) * ens.n_samples);
    }
    return ens;
}

double percentile_sorted(std::span<const double> sorted, double alpha) {
    if (sorted.empty()) throw ValidationError("percentile: empty sample");
    if (!(alpha > 0.0 && alpha < 100.0)) throw ValidationError("percentile: alpha must be in (0,100)");
    const size_t s = sorted.size();
    if (s == 1) return sorted[0];
    const double h = alpha / 100.0 * static_cast<double>(s - 1);
    const size_t lo = static_cast<size_t>(h); // h < s-1 since alpha < 100
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

BExplanation summarize(const ExplanationEnsemble& ens, std::span<const double> alphas,
                       bool with_variance) {
    const int S = ens.n_rows, N = ens.n_samples;
    if (S < 1) throw ValidationError("summarize: empty ensemble");
    if (with_variance && S < 2)
        throw ValidationError("summarize: variance requires at least 2 ensemble rows");

    BExplanation out;
    out.mean.resize(static_cast<size_t>(N));

    // mean computed as row0 + average deviation; for a degenerate ensemble of
    // identical rows this reproduces the row bit-exactly
    for (int n = 0; n < N; ++n) {
        const double ref = ens.rows[static_cast<size_t>(n)];
        double acc = 0.0;
        double lo = ref, hi = ref;
        for (int s = 1; s < S; ++s) {
            const double v = ens.rows[static_cast<size_t>(s) * N + n];
            acc += v - ref;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        double m = ref + acc / S;
        m = std::min(std::max(m, lo), hi);
        out.mean[static_cast<size_t>(n)] = m;
    }

    if (with_variance) {
        out.variance.resize(static_cast<size_t>(N));
        for (int n = 0; n < N; ++n) {
            const double m = out.mean[static_cast<size_t>(n)];
            double acc = 0.0;
            for (int s = 0; s < S; ++s) {
                const double d = ens.rows[static_cast<size_t>(s) * N + n] - m;
                acc += d * d;
            }
            out.variance[static_cast<size_t>(n)] = acc / S;
        }
    }

    if (!alphas.empty()) {
        std::vector<double> col(static_cast<size_t>(S));
        for (double a : alphas) out.percentiles[a].resize(static_cast<size_t>(N));
        for (int n = 0; n < N; ++n) {
            for (int s = 0; s < S; ++s) col[static_cast<size_t>(s)] = ens.rows[static_cast<size_t>(s) * N + n];
            std::sort(col.begin(), col.end());
            for (double a : alphas)
                out.percentiles[a][static_cast<size_t>(n)] = percentile_sorted(col, a);
        }
    }
    return out;
}

std::vector<ConvergenceRow> mc_convergence_probe(const Network& net, const LaplacePosterior& post,
                                                 std::span<const double> buffers,
                                                 std::span<const double> x,
                                                 std::span<const double> baseline_values,
                                                 const OcclusionConfig& cfg, int target_class,
                                                 std::span<const int> s_list, uint64_t seed) {
    if (s_list.empty()) throw ValidationError("mc probe: empty S list");
    for (size_t i = 1; i < s_list.size(); ++i)
        if (s_list[i] <= s_list[i - 1]) throw ValidationError("mc probe: S list must ascend");

    const int s_max = s_list.back();
    const ExplanationEnsemble ens = sample_explanations(net, post, buffers, x, baseline_values,
                                                        s_max, cfg, target_class, seed);
    const int N = ens.n_samples;

    // prefix sums over rows -> mean_S for each requested S
    std::vector<double> prefix(static_cast<size_t>(N), 0.0);
    std::vector<std::vector<double>> means;
    size_t next = 0;
    for (int s = 0; s < s_max; ++s) {
        const auto row = ens.row(s);
        for (int n = 0; n < N; ++n) prefix[static_cast<size_t>(n)] += row[static_cast<size_t>(n)];
        if (next < s_list.size() && s + 1 == s_list[next]) {
            std::vector<double> m(static_cast<size_t>(N));
            for (int n = 0; n < N; ++n) m[static_cast<size_t>(n)] = prefix[static_cast<size_t>(n)] / (s + 1);
            means.push_back(std::move(m));
            ++next;
        }
    }

    std::vector<ConvergenceRow> out;
    const std::vector<double>& ref = means.back();
    for (size_t i = 0; i < means.size(); ++i) {
        double sq = 0.0;
        for (int n = 0; n < N; ++n) {
            const double d = means[i][static_cast<size_t>(n)] - ref[static_cast<size_t>(n)];
            sq += d * d;
        }
        out.push_back({s_list[i], std::sqrt(sq)});
    }
    return out;
}

std::string BExplanation::to_json() const {
    nlohmann::ordered_json j;
    j["mean"] = mean;
    if (!variance.empty()) j["variance"] = variance;
    nlohmann::ordered_json pj = nlohmann::ordered_json::object();
    for (const auto& [alpha, values] : percentiles) pj[alpha_key(alpha)] = values;
    j["percentiles"] = pj;
    return j.dump();
}

void save_ensemble(const ExplanationEnsemble& ens, const std::string& path) {
    auto f = io::open_out(path);
    io::write_magic(f, kMagic);
    io::write_pod<uint32_t>(f, static_cast<uint32_t>(ens.n_rows));
    io::write_pod<uint32_t>(f, static_cast<uint32_t>(ens.n_samples));
    std::vector<float> rows32(ens.rows.size());
    for (size_t i = 0; i < rows32.size(); ++i) rows32[i] = static_cast<float>(ens.rows[i]);
    io::write_array(f, rows32);
    nlohmann::ordered_json meta;
    meta["cfg"] = nlohmann::ordered_json::parse(ens.cfg.to_json());
    meta["seed"] = ens.seed;
    meta["target_class"] = ens.target_class;
    meta["posterior_ref"] = ens.posterior_ref;
    io::write_lp_string(f, meta.dump());
    if (!f) throw IoError("ensemble write failed: " + path);
}

ExplanationEnsemble load_ensemble(const std::string& path) {
    auto f = io::open_in(path);
    io::expect_magic(f, kMagic, "PQEX");
    ExplanationEnsemble ens;
    ens.n_rows = static_cast<int>(io::read_pod<uint32_t>(f, "S"));
    ens.n_samples = static_cast<int>(io::read_pod<uint32_t>(f, "N"));
    std::vector<float> rows32;
    io::read_array(f, rows32, static_cast<size_t>(ens.n_rows) * ens.n_samples, "samples");
    ens.rows.resize(rows32.size());
    for (size_t i = 0; i < rows32.size(); ++i) ens.rows[i] = static_cast<double>(rows32[i]);
    const auto meta = nlohmann::json::parse(io::read_lp_string(f, "cfg json"));
    ens.cfg = OcclusionConfig::from_json(meta.at("cfg").dump());
    ens.seed = meta.at("seed").get<uint64_t>();
    ens.target_class = meta.at("target_class").get<int>();
    ens.posterior_ref = meta.at("posterior_ref").get<std::string>();
    return ens;
}

} // namespace pqx
