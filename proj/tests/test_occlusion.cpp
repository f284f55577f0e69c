#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "pqx/errors.hpp"
#include "pqx/occlusion.hpp"

using namespace pqx;

namespace {

struct TinyModel {
    ArchDescriptor arch;
    std::vector<double> theta, buffers;
    Network net;

    explicit TinyModel(int input_length, uint64_t seed, double scale = 1.0)
        : arch(make_arch(input_length)), net((arch)) {
        net.init_params(theta, seed);
        for (double& t : theta) t *= scale;
        net.init_buffers(buffers);
    }

    static ArchDescriptor make_arch(int input_length) {
        ArchDescriptor a;
        a.input_length = input_length;
        a.input_channels = 1;
        a.layers = {{.kind = LayerKind::conv1d, .kernel = 3, .channels = 4, .stride = 1},
                    {.kind = LayerKind::relu},
                    {.kind = LayerKind::global_maxpool},
                    {.kind = LayerKind::flatten},
                    {.kind = LayerKind::dense, .features = 5},
                    {.kind = LayerKind::softmax}};
        return a;
    }
};

std::vector<double> random_signal(int n, uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(static_cast<size_t>(n));
    for (double& v : x) v = rng.normal();
    return x;
}

} // namespace

TEST_CASE("window starts: regular sweep, trailing window, and degenerate full-window") {
    CHECK(window_starts(8, 4, 2) == std::vector<int>{0, 2, 4});
    CHECK(window_starts(10, 4, 3) == std::vector<int>{0, 3, 6});     // (10-4)%3==0
    CHECK(window_starts(11, 4, 3) == std::vector<int>{0, 3, 6, 7});  // trailing at N-w
    CHECK(window_starts(8, 8, 1) == std::vector<int>{0});
    CHECK(window_starts(640, 64, 8).size() == 73);
}

TEST_CASE("relevance_map equals the naive double-loop oracle on 100 random cases") {
    Rng rng(1234);
    int trailing_seen = 0, tie_like = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 8 + static_cast<int>(rng.below(57)); // 8..64
        OcclusionConfig cfg;
        cfg.window_w = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(n)));
        cfg.stride_v = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(cfg.window_w)));
        if (rep == 0) { // pin the single-window degenerate case
            cfg.window_w = n;
            cfg.stride_v = 1;
        }
        if ((n - cfg.window_w) % cfg.stride_v != 0) ++trailing_seen;
        if (cfg.stride_v == cfg.window_w) ++tie_like;

        TinyModel model(n, 1000 + static_cast<uint64_t>(rep));
        const auto x = random_signal(n, 2000 + static_cast<uint64_t>(rep));
        const auto baseline = resolve_baseline(cfg, x, {});
        const int target = static_cast<int>(rng.below(5));

        const auto fast =
            relevance_map(model.net, model.theta, model.buffers, x, baseline, target, cfg);
        const auto oracle = pqxtest::occlusion_oracle(model.net, model.theta, model.buffers, x,
                                                      baseline, target, cfg);
        REQUIRE(fast.r.size() == oracle.size());
        for (size_t i = 0; i < oracle.size(); ++i)
            REQUIRE(std::abs(fast.r[i] - oracle[i]) <= 1e-12);
    }
    CHECK(trailing_seen > 5); // the sweep must actually exercise trailing windows
    CHECK(tie_like > 0);
}

TEST_CASE("|R_t| <= 1 on 1000 random probes including saturated models") {
    Rng rng(77);
    for (int rep = 0; rep < 1000; ++rep) {
        const int n = 8 + static_cast<int>(rng.below(25));
        OcclusionConfig cfg;
        cfg.window_w = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(n)));
        cfg.stride_v = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(cfg.window_w)));
        const double scale = rep % 3 == 2 ? 50.0 : 1.0;
        TinyModel model(n, 5000 + static_cast<uint64_t>(rep), scale);
        const auto x = random_signal(n, 6000 + static_cast<uint64_t>(rep));
        const auto baseline = resolve_baseline(cfg, x, {});
        const auto starts = window_starts(n, cfg.window_w, cfg.stride_v);
        const int t = static_cast<int>(rng.below(starts.size()));
        const double rt = occlude_once(model.net, model.theta, model.buffers, x, baseline, t,
                                       static_cast<int>(rng.below(5)), cfg);
        REQUIRE(std::abs(rt) <= 1.0);
    }
}

TEST_CASE("occluding with the signal's own values is a no-op") {
    const int n = 24;
    TinyModel model(n, 3);
    const auto x = random_signal(n, 4);
    OcclusionConfig cfg;
    cfg.window_w = 6;
    cfg.stride_v = 3;
    // baseline equal to the signal itself: every occlusion leaves x unchanged
    const double rt = occlude_once(model.net, model.theta, model.buffers, x, x, 1, 2, cfg);
    CHECK(rt == 0.0);
    const auto rv = relevance_map(model.net, model.theta, model.buffers, x, x, 2, cfg);
    for (double v : rv.r) CHECK(v == 0.0);
}

TEST_CASE("a constant model yields zero relevance everywhere") {
    const int n = 20;
    TinyModel model(n, 9);
    std::fill(model.theta.begin(), model.theta.end(), 0.0);
    const auto x = random_signal(n, 10);
    OcclusionConfig cfg;
    cfg.window_w = 5;
    cfg.stride_v = 5;
    const auto baseline = resolve_baseline(cfg, x, {});
    const auto rv = relevance_map(model.net, model.theta, model.buffers, x, baseline, 0, cfg);
    for (double v : rv.r) CHECK(v == 0.0);
}

TEST_CASE("N=8 w=4 v=2: index 3 averages the first two windows") {
    const int n = 8;
    TinyModel model(n, 21);
    const auto x = random_signal(n, 22);
    OcclusionConfig cfg;
    cfg.window_w = 4;
    cfg.stride_v = 2;
    const auto baseline = resolve_baseline(cfg, x, {});
    const double r0 = occlude_once(model.net, model.theta, model.buffers, x, baseline, 0, 1, cfg);
    const double r1 = occlude_once(model.net, model.theta, model.buffers, x, baseline, 1, 1, cfg);
    const double r2 = occlude_once(model.net, model.theta, model.buffers, x, baseline, 2, 1, cfg);
    const auto rv = relevance_map(model.net, model.theta, model.buffers, x, baseline, 1, cfg);
    CHECK(rv.r[3] == doctest::Approx((r0 + r1) / 2.0).epsilon(1e-15));
    CHECK(rv.r[0] == doctest::Approx(r0).epsilon(1e-15));
    CHECK(rv.r[7] == doctest::Approx(r2).epsilon(1e-15));
    CHECK(rv.r[4] == doctest::Approx((r1 + r2) / 2.0).epsilon(1e-15));
}

TEST_CASE("w=N v=1: one window, constant relevance") {
    const int n = 16;
    TinyModel model(n, 31);
    const auto x = random_signal(n, 32);
    OcclusionConfig cfg;
    cfg.window_w = n;
    cfg.stride_v = 1;
    const auto baseline = resolve_baseline(cfg, x, {});
    const double r0 = occlude_once(model.net, model.theta, model.buffers, x, baseline, 0, 3, cfg);
    const auto rv = relevance_map(model.net, model.theta, model.buffers, x, baseline, 3, cfg);
    for (double v : rv.r) CHECK(v == r0);
}

TEST_CASE("aggregation is invariant to the window evaluation order") {
    const int n = 40;
    TinyModel model(n, 41);
    const auto x = random_signal(n, 42);
    OcclusionConfig cfg;
    cfg.window_w = 7;
    cfg.stride_v = 3; // (40-7)%3 == 0 -> 12 windows
    const auto baseline = resolve_baseline(cfg, x, {});
    const auto starts = window_starts(n, cfg.window_w, cfg.stride_v);
    const auto direct = relevance_map(model.net, model.theta, model.buffers, x, baseline, 2, cfg);

    // evaluate windows in a shuffled order, then aggregate
    std::vector<size_t> order(starts.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(43);
    for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    std::vector<double> scores(starts.size());
    for (size_t t : order)
        scores[t] = occlude_once(model.net, model.theta, model.buffers, x, baseline,
                                 static_cast<int>(t), 2, cfg);
    const auto r = aggregate_scores(starts, scores, n, cfg.window_w);
    CHECK(r == direct.r);
}

TEST_CASE("relevance is policy-invariant when all policies resolve to the same class") {
    const int n = 32;
    TinyModel model(n, 51);
    const auto x = random_signal(n, 52);
    OcclusionConfig cfg;
    cfg.window_w = 8;
    cfg.stride_v = 4;
    const auto baseline = resolve_baseline(cfg, x, {});
    const auto probs = model.net.forward_one(model.theta, model.buffers, x, Mode::eval);
    const int pred = predict_class(probs);
    // map_prediction, true_label (when label == pred), and per-sample
    // prediction all resolve to `pred` here; the map depends only on it
    const auto a = relevance_map(model.net, model.theta, model.buffers, x, baseline, pred, cfg);
    const auto b = relevance_map(model.net, model.theta, model.buffers, x, baseline, pred, cfg);
    CHECK(a.r == b.r);
}

TEST_CASE("invalid configurations and window indices are rejected") {
    const int n = 16;
    TinyModel model(n, 61);
    const auto x = random_signal(n, 62);
    OcclusionConfig cfg;
    cfg.window_w = 0;
    CHECK_THROWS_AS(cfg.validate(n), ValidationError);
    cfg.window_w = 17;
    CHECK_THROWS_AS(cfg.validate(n), ValidationError);
    cfg.window_w = 4;
    cfg.stride_v = 5;
    CHECK_THROWS_AS(cfg.validate(n), ValidationError);
    cfg.stride_v = 2;
    const auto baseline = resolve_baseline(cfg, x, {});
    CHECK_THROWS_AS(
        occlude_once(model.net, model.theta, model.buffers, x, baseline, 99, 0, cfg),
        ValidationError);
}

TEST_CASE("occlusion config JSON round trip") {
    OcclusionConfig cfg;
    cfg.window_w = 48;
    cfg.stride_v = 6;
    cfg.baseline_kind = BaselineKind::constant;
    cfg.constant_value = 0.25;
    cfg.policy = TargetClassPolicy::true_label;
    const auto back = OcclusionConfig::from_json(cfg.to_json());
    CHECK(back.window_w == 48);
    CHECK(back.stride_v == 6);
    CHECK(back.baseline_kind == BaselineKind::constant);
    CHECK(back.constant_value == 0.25);
    CHECK(back.policy == TargetClassPolicy::true_label);
}
