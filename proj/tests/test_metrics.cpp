#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "pqx/errors.hpp"
#include "pqx/metrics.hpp"

using namespace pqx;

namespace {

GroundTruthMask make_mask(std::vector<uint8_t> bits) {
    GroundTruthMask m;
    m.mask = std::move(bits);
    m.epsilon = 0.05;
    m.disturbed_count = 0;
    for (uint8_t b : m.mask) m.disturbed_count += b;
    return m;
}

} // namespace

TEST_CASE("rma: hand-computed examples") {
    const auto mask = make_mask({0, 0, 1, 1});
    const std::vector<double> r{0.2, 0.3, 0.5, 0.0};
    CHECK(rma(r, mask).value() == doctest::Approx(0.5).epsilon(1e-15));

    const std::vector<double> all_in{0.0, 0.0, 0.7, 0.3};
    CHECK(rma(all_in, mask).value() == 1.0);

    // negatives are clipped before mass computation
    const std::vector<double> with_neg{-1.0, -0.2, 0.5, 0.5};
    CHECK(rma(with_neg, mask).value() == 1.0);

    // zero clipped mass -> undefined sentinel
    const std::vector<double> all_neg{-1.0, -0.2, -0.5, -0.1};
    CHECK(!rma(all_neg, mask).has_value());

    CHECK_THROWS_AS(rma(std::vector<double>{1.0}, mask), ValidationError);
}

TEST_CASE("iou: hand-computed examples including ties") {
    const auto mask = make_mask({1, 1, 0, 0});
    const std::vector<double> r{0.9, 0.1, 0.8, 0.2};
    // top-2 = {0, 2}: intersection {0}, union {0,1,2} -> 1/3
    CHECK(iou(r, mask).value() == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    const std::vector<double> aligned{0.9, 0.8, 0.1, 0.2};
    CHECK(iou(aligned, mask).value() == 1.0);

    // ties resolved toward the lower index: values equal at 1,2 -> pick 1
    const std::vector<double> tied{0.9, 0.5, 0.5, 0.2};
    CHECK(iou(tied, mask).value() == 1.0);

    CHECK(!iou(r, make_mask({0, 0, 0, 0})).has_value());
    CHECK(!iou(r, make_mask({1, 1, 1, 1})).has_value());
}

TEST_CASE("top-L selection matches a stable-sort oracle on random vectors with ties") {
    Rng rng(4242);
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 4 + static_cast<int>(rng.below(40));
        std::vector<double> v(static_cast<size_t>(n));
        for (double& x : v) x = std::round(rng.uniform(-2.0, 2.0) * 4.0) / 4.0; // force ties
        const int l = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(n)));

        std::vector<int> idx(static_cast<size_t>(n));
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            return v[static_cast<size_t>(a)] > v[static_cast<size_t>(b)];
        });
        idx.resize(static_cast<size_t>(l));
        CHECK(top_l_indices(v, l) == idx);
    }
}

TEST_CASE("rma is invariant to positive rescaling; iou to monotone transforms (1000 vectors)") {
    Rng rng(31337);
    for (int rep = 0; rep < 1000; ++rep) {
        const int n = 8 + static_cast<int>(rng.below(33));
        std::vector<double> r(static_cast<size_t>(n));
        for (double& x : r) x = rng.uniform(-1.0, 1.0);
        std::vector<uint8_t> bits(static_cast<size_t>(n), 0);
        const int l = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(n - 1)));
        for (int i = 0; i < l; ++i) bits[static_cast<size_t>(rng.below(static_cast<uint64_t>(n)))] = 1;
        const auto mask = make_mask(bits);
        if (mask.disturbed_count == 0 || mask.disturbed_count == n) continue;

        // positive power-of-two rescalings are exact in floating point
        std::vector<double> r4(r), r16(r);
        for (double& x : r4) x *= 4.0;
        for (double& x : r16) x *= 0.0625;
        const auto base_rma = rma(r, mask);
        if (base_rma.has_value()) {
            CHECK(std::abs(rma(r4, mask).value() - base_rma.value()) < 1e-12);
            CHECK(std::abs(rma(r16, mask).value() - base_rma.value()) < 1e-12);
        }

        const auto base_iou = iou(r, mask);
        // strictly monotone transforms preserve ranks exactly
        CHECK(iou(r4, mask) == base_iou);
        std::vector<double> shifted(r);
        for (double& x : shifted) x = x * 2.0 + 1024.0;
        CHECK(iou(shifted, mask) == base_iou);
    }
}

TEST_CASE("aggregation matches a brute-force recomputation and counts exclusions") {
    std::vector<std::optional<double>> scores{0.5, std::nullopt, 0.7, 0.9, std::nullopt};
    const auto st = aggregate_scores(scores);
    CHECK(st.n_defined == 3);
    CHECK(st.n_excluded == 2);
    const double mean = (0.5 + 0.7 + 0.9) / 3.0;
    CHECK(st.mean == doctest::Approx(mean).epsilon(1e-15));
    const double var = (std::pow(0.5 - mean, 2) + std::pow(0.7 - mean, 2) + std::pow(0.9 - mean, 2)) / 2.0;
    CHECK(st.stddev == doctest::Approx(std::sqrt(var)).epsilon(1e-12));

    const std::vector<std::optional<double>> none{std::nullopt, std::nullopt};
    const auto st2 = aggregate_scores(none);
    CHECK(st2.n_defined == 0);
    CHECK(st2.n_excluded == 2);
    CHECK(st2.mean == 0.0);
}

namespace {

struct EvalFixture {
    Dataset ds;
    ArchDescriptor arch;
    ModelParams params;

    EvalFixture() {
        GenConfig cfg;
        cfg.per_class = 5;
        cfg.seed = 2024;
        cfg.split = {0.6, 0.2, 0.2};
        ds = generate_corpus(cfg);
        arch = ArchDescriptor::desk(static_cast<int>(ds.n_samples), 16);
        const Network net(arch);
        params.arch = arch;
        net.init_params(params.theta, 3);
        net.init_buffers(params.buffers);
    }
};

} // namespace

TEST_CASE("evaluate: MAP-only report structure, Normal exclusion, determinism") {
    EvalFixture fx;
    const Network net(fx.arch);
    EvalConfig ec;
    ec.occlusion.window_w = 64;
    ec.occlusion.stride_v = 32;
    ec.alphas = {};
    ec.split = Split::test;
    ec.seed = 1;

    const auto report = evaluate(net, fx.params, nullptr, fx.ds, ec);
    CHECK(report.per_class.size() == 16);
    CHECK(report.ensemble_models == 0);
    for (const auto& cr : report.per_class) {
        REQUIRE(cr.variants.size() == 1);
        CHECK(cr.variants[0].variant == "MAP");
        CHECK(cr.n_records == 1);
        if (cr.class_name == "Normal") {
            // no disturbance support: both metrics are undefined and counted
            CHECK(cr.variants[0].rma.n_excluded + cr.variants[0].rma.n_defined == 1);
            CHECK(cr.variants[0].iou.n_excluded == 1);
        }
        CHECK(cr.variants[0].rma.mean >= 0.0);
        CHECK(cr.variants[0].rma.mean <= 1.0);
        CHECK(cr.variants[0].iou.mean >= 0.0);
        CHECK(cr.variants[0].iou.mean <= 1.0);
    }
    // totals cover the 15 disturbance classes only
    REQUIRE(report.totals.size() == 1);
    CHECK(report.totals[0].rma.n_defined + report.totals[0].rma.n_excluded == 15);

    // totals equal the unweighted mean over defined class means
    double sum = 0.0;
    int n_def = 0;
    for (const auto& cr : report.per_class) {
        if (cr.class_name == "Normal" || cr.variants[0].rma.n_defined == 0) continue;
        sum += cr.variants[0].rma.mean;
        ++n_def;
    }
    if (n_def > 0) CHECK(report.totals[0].rma.mean == doctest::Approx(sum / n_def).epsilon(1e-12));

    const auto report2 = evaluate(net, fx.params, nullptr, fx.ds, ec);
    CHECK(report.to_csv() == report2.to_csv());
    CHECK(report.to_json() == report2.to_json());
}

TEST_CASE("evaluate: posterior adds percentile variants and ensemble stats") {
    EvalFixture fx;
    const Network net(fx.arch);
    LaplacePosterior post;
    post.theta_map = fx.params.theta;
    post.variance.assign(fx.params.theta.size(), 1e-6);

    EvalConfig ec;
    ec.occlusion.window_w = 64;
    ec.occlusion.stride_v = 32;
    ec.alphas = {5, 50, 95};
    ec.ensemble_size = 4;
    ec.accuracy_models = 4;
    ec.split = Split::test;
    ec.seed = 2;

    const auto report = evaluate(net, fx.params, &post, fx.ds, ec);
    CHECK(report.ensemble_models == 4);
    for (const auto& cr : report.per_class) {
        REQUIRE(cr.variants.size() == 4);
        CHECK(cr.variants[0].variant == "MAP");
        CHECK(cr.variants[1].variant == "a5");
        CHECK(cr.variants[2].variant == "a50");
        CHECK(cr.variants[3].variant == "a95");
    }
    CHECK(report.totals.size() == 4);
    CHECK(report.ensemble_accuracy_mean >= 0.0);
    CHECK(report.ensemble_accuracy_mean <= 1.0);

    // CSV parses into the documented column set
    const auto csv = report.to_csv();
    CHECK(csv.find("class_id,class_name,variant,") != std::string::npos);
    CHECK(csv.find("-1,Total,MAP,") != std::string::npos);
    CHECK(csv.find(",a95,") != std::string::npos);
}
