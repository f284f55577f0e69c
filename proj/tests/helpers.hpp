#pragma once

// Shared oracles and fixtures for the unit and acceptance suites. Everything
// here is deliberately independent of the library's fast paths: the occlusion
// oracle is a plain double loop, the gradient oracle is central finite
// differences, and the conjugate-regression oracle is closed form.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <unistd.h>
#include <random>
#include <string>
#include <vector>

#include "pqx/laplace.hpp"
#include "pqx/network.hpp"
#include "pqx/occlusion.hpp"
#include "pqx/rng.hpp"

namespace pqxtest {

inline std::string temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("pqx_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    return dir.string();
}

// ---- gradient oracle ----------------------------------------------------

struct GradCheckResult {
    double max_err = 0.0; // max over checked coordinates of the mixed error
    int n_checked = 0;
    int n_skipped = 0; // coordinates where the FD oracle itself is invalid
};

/// Central finite differences (h = 1e-3) against reverse-mode gradients on
/// `n_coords` coordinates. The error is |ad - fd| / max(1, |ad|, |fd|), the
/// usual magnitude-floored relative error for f64 difference quotients.
///
/// The oracle validates itself before judging the gradient: the quotient is
/// recomputed at h/2, and a coordinate is skipped when the two disagree,
/// which flags relu/maxpool kinks inside the probe box and extreme
/// third-derivative stiffness. The validity test never consults the
/// gradient under test, so the oracle stays independent.
inline GradCheckResult gradcheck(const pqx::Network& net, std::vector<double> theta,
                                 std::vector<double> buffers, const pqx::BatchTensor& input,
                                 const std::vector<int>& labels, double l2, int n_coords,
                                 uint64_t seed) {
    const double h = 1e-3;
    std::vector<double> grad(net.param_count());
    std::vector<double> buf_copy = buffers;
    net.loss_and_grad(theta, buf_copy, false, input, labels, l2, grad);

    std::vector<double> scratch_grad(net.param_count());
    auto loss_at = [&](size_t i, double value) {
        const double orig = theta[i];
        theta[i] = value;
        buf_copy = buffers;
        const double loss =
            net.loss_and_grad(theta, buf_copy, false, input, labels, l2, scratch_grad);
        theta[i] = orig;
        return loss;
    };

    pqx::Rng rng(seed);
    GradCheckResult res;
    for (int c = 0; c < n_coords; ++c) {
        const size_t i = static_cast<size_t>(rng.below(net.param_count()));
        const double orig = theta[i];
        const double fd_h = (loss_at(i, orig + h) - loss_at(i, orig - h)) / (2.0 * h);
        const double fd_h2 = (loss_at(i, orig + h / 2) - loss_at(i, orig - h / 2)) / h;
        if (std::abs(fd_h - fd_h2) > 3e-5 * std::max(1.0, std::abs(fd_h))) {
            ++res.n_skipped;
            continue;
        }
        const double ad = grad[i];
        const double err = std::abs(ad - fd_h) / std::max({1.0, std::abs(ad), std::abs(fd_h)});
        res.max_err = std::max(res.max_err, err);
        ++res.n_checked;
    }
    return res;
}

/// Small randomized architectures covering conv, pool, batchnorm, and dense
/// paths. Index selects a family; dimensions vary with the seed.
inline pqx::ArchDescriptor small_arch(int family, uint64_t seed) {
    pqx::Rng rng(pqx::mix64(seed, static_cast<uint64_t>(family)));
    using K = pqx::LayerKind;
    const int classes = 3 + static_cast<int>(rng.below(4)); // 3..6
    pqx::ArchDescriptor a;
    a.input_channels = 1;
    a.name = "gradcheck" + std::to_string(family);
    auto conv = [&](int ch) {
        return pqx::LayerSpec{.kind = K::conv1d, .kernel = 3, .channels = ch, .stride = 1};
    };
    switch (family % 5) {
        case 0: { // dense-only
            a.input_length = 8 + static_cast<int>(rng.below(8));
            a.layers = {{.kind = K::flatten},
                        {.kind = K::dense, .features = 8},
                        {.kind = K::relu},
                        {.kind = K::dense, .features = classes},
                        {.kind = K::softmax}};
            break;
        }
        case 1: { // conv + global pool
            a.input_length = 16 + static_cast<int>(rng.below(8));
            a.layers = {conv(2 + static_cast<int>(rng.below(3))),
                        {.kind = K::relu},
                        {.kind = K::global_maxpool},
                        {.kind = K::flatten},
                        {.kind = K::dense, .features = classes},
                        {.kind = K::softmax}};
            break;
        }
        case 2: { // conv + strided pool + dense
            a.input_length = 20 + static_cast<int>(rng.below(8)) * 2;
            a.layers = {conv(3),
                        {.kind = K::relu},
                        {.kind = K::maxpool1d, .kernel = 2, .stride = 2},
                        conv(4),
                        {.kind = K::relu},
                        {.kind = K::global_maxpool},
                        {.kind = K::flatten},
                        {.kind = K::dense, .features = classes},
                        {.kind = K::softmax}};
            break;
        }
        case 3: { // batchnorm on the conv path
            a.input_length = 18 + static_cast<int>(rng.below(6));
            const int ch = 2 + static_cast<int>(rng.below(3));
            a.layers = {conv(ch),
                        {.kind = K::batchnorm, .features = ch},
                        {.kind = K::relu},
                        {.kind = K::global_maxpool},
                        {.kind = K::flatten},
                        {.kind = K::dense, .features = classes},
                        {.kind = K::softmax}};
            break;
        }
        default: { // batchnorm on the dense path + stride-1 pooling
            a.input_length = 16 + static_cast<int>(rng.below(6));
            a.layers = {conv(3),
                        {.kind = K::relu},
                        {.kind = K::maxpool1d, .kernel = 3, .stride = 1},
                        {.kind = K::global_maxpool},
                        {.kind = K::flatten},
                        {.kind = K::dense, .features = 6},
                        {.kind = K::batchnorm, .features = 6},
                        {.kind = K::relu},
                        {.kind = K::dense, .features = classes},
                        {.kind = K::softmax}};
            break;
        }
    }
    return a;
}

/// Random parameters/input/labels for a gradcheck problem.
struct GradProblem {
    std::vector<double> theta;
    std::vector<double> buffers;
    pqx::BatchTensor input;
    std::vector<int> labels;
};

inline GradProblem random_problem(const pqx::Network& net, int batch, uint64_t seed) {
    GradProblem p;
    pqx::Rng rng(pqx::mix64(seed, 0xbeef));
    net.init_params(p.theta, seed);
    // perturb away from the symmetric init so batchnorm/relu paths are generic
    for (double& t : p.theta) t += 0.1 * rng.normal();
    net.init_buffers(p.buffers);
    for (double& b : p.buffers) b += 0.05 * std::abs(rng.normal());
    p.input.resize(batch, 1, net.input_length());
    for (double& v : p.input.data) v = rng.normal();
    for (int b = 0; b < batch; ++b)
        p.labels.push_back(static_cast<int>(rng.below(static_cast<uint64_t>(net.n_classes()))));
    return p;
}

// ---- occlusion oracle ---------------------------------------------------

/// Literal per-index double loop: for every n, average R_t over every window
/// covering n, each R_t computed with its own two forward passes.
inline std::vector<double> occlusion_oracle(const pqx::Network& net,
                                            std::span<const double> theta,
                                            std::span<const double> buffers,
                                            std::span<const double> x,
                                            std::span<const double> baseline_values,
                                            int target_class, const pqx::OcclusionConfig& cfg) {
    const int n = static_cast<int>(x.size());
    const auto starts = pqx::window_starts(n, cfg.window_w, cfg.stride_v);
    std::vector<double> scores(starts.size());
    for (size_t t = 0; t < starts.size(); ++t)
        scores[t] = pqx::occlude_once(net, theta, buffers, x, baseline_values,
                                      static_cast<int>(t), target_class, cfg);
    std::vector<double> r(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        int count = 0;
        for (size_t t = 0; t < starts.size(); ++t) {
            if (i >= starts[t] && i < starts[t] + cfg.window_w) {
                sum += scores[t];
                ++count;
            }
        }
        r[static_cast<size_t>(i)] = sum / count;
    }
    return r;
}

// ---- conjugate linear-Gaussian regression --------------------------------

/// Quadratic-loss curvature source: model y = theta^T x, loss per sample
/// (theta^T x - y)^2 / (2 sigma^2). The GGN diagonal equals the exact
/// Hessian diagonal; the analytic posterior variance is
/// 1 / (sum_i x_ij^2 / sigma^2 + prior_precision).
class LinearGaussianCurvature : public pqx::CurvatureSource {
public:
    LinearGaussianCurvature(std::vector<std::vector<double>> xs, std::vector<double> ys,
                            double sigma2)
        : xs_(std::move(xs)), ys_(std::move(ys)), sigma2_(sigma2) {}

    size_t sample_count() const override { return xs_.size(); }
    size_t param_count() const override { return xs_.empty() ? 0 : xs_[0].size(); }

    void add_fisher_diag(size_t sample, std::span<const double> theta,
                         std::span<double> acc) const override {
        const auto& x = xs_[sample];
        double pred = 0.0;
        for (size_t j = 0; j < x.size(); ++j) pred += theta[j] * x[j];
        const double resid = (pred - ys_[sample]) / sigma2_;
        for (size_t j = 0; j < x.size(); ++j) acc[j] += resid * resid * x[j] * x[j];
    }

    void add_ggn_diag(size_t sample, std::span<const double>,
                      std::span<double> acc) const override {
        const auto& x = xs_[sample];
        for (size_t j = 0; j < x.size(); ++j) acc[j] += x[j] * x[j] / sigma2_;
    }

    std::vector<double> analytic_posterior_variance(double prior_precision) const {
        std::vector<double> v(param_count(), 0.0);
        for (const auto& x : xs_)
            for (size_t j = 0; j < x.size(); ++j) v[j] += x[j] * x[j] / sigma2_;
        for (double& p : v) p = 1.0 / (p + prior_precision);
        return v;
    }

private:
    std::vector<std::vector<double>> xs_;
    std::vector<double> ys_;
    double sigma2_;
};

inline LinearGaussianCurvature random_regression(int n, int d, uint64_t seed) {
    pqx::Rng rng(seed);
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (int i = 0; i < n; ++i) {
        std::vector<double> x(static_cast<size_t>(d));
        for (double& v : x) v = rng.normal();
        xs.push_back(std::move(x));
        ys.push_back(rng.normal());
    }
    return LinearGaussianCurvature(std::move(xs), std::move(ys), 0.25);
}

} // namespace pqxtest
