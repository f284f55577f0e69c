#include "pqx/laplace.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "pqx/errors.hpp"
#include "pqx/io.hpp"
#include "pqx/rng.hpp"
#include "pqx/train.hpp"

namespace pqx {

namespace {
constexpr char kMagic[4] = {'P', 'Q', 'L', 'A'};
constexpr uint16_t kVersion = 1;
// magic + version + prior f64 + kind u8
constexpr size_t kHeaderBytes = 4 + 2 + 8 + 1;
constexpr size_t kHashBytes = 32;
} // namespace

const char* curvature_kind_name(CurvatureKind k) {
    return k == CurvatureKind::empirical_fisher ? "fisher" : "ggn";
}

CurvatureKind curvature_kind_from_name(const std::string& name) {
    if (name == "fisher") return CurvatureKind::empirical_fisher;
    if (name == "ggn") return CurvatureKind::ggn_diag;
    throw ValidationError("unknown curvature kind: " + name);
}

ClassifierCurvature::ClassifierCurvature(const Network& net, std::span<const double> buffers,
                                         const Dataset& data, Split split)
    : net_(net), buffers_(buffers), data_(data), indices_(data.split_indices(split)) {
    if (indices_.empty()) throw ValidationError("curvature: empty dataset split");
}

size_t ClassifierCurvature::param_count() const { return net_.param_count(); }

void ClassifierCurvature::add_fisher_diag(size_t sample, std::span<const double> theta,
                                          std::span<double> acc) const {
    const SignalRecord& rec = data_.records[indices_[sample]];
    std::vector<double> x(rec.x.begin(), rec.x.end());
    // gradient of -log p_y at the logits is (p - onehot_y)
    std::vector<double> seed = net_.forward_one(theta, buffers_, x, Mode::eval);
    seed[rec.label] -= 1.0;
    thread_local std::vector<double> grad;
    grad.assign(net_.param_count(), 0.0);
    net_.logit_backward_one(theta, buffers_, x, seed, grad, nullptr);
    for (size_t i = 0; i < acc.size(); ++i) acc[i] += grad[i] * grad[i];
}

void ClassifierCurvature::add_ggn_diag(size_t sample, std::span<const double> theta,
                                       std::span<double> acc) const {
    const SignalRecord& rec = data_.records[indices_[sample]];
    std::vector<double> x(rec.x.begin(), rec.x.end());
    const int k = net_.n_classes();
    const size_t n = net_.param_count();

    // GGN diag for softmax + cross-entropy:
    //   sum_c p_c J_c^2 - (sum_c p_c J_c)^2, with J_c the per-logit Jacobian row.
    thread_local std::vector<double> jrow, weighted_sq, weighted_sum;
    jrow.assign(n, 0.0);
    weighted_sq.assign(n, 0.0);
    weighted_sum.assign(n, 0.0);

    const std::vector<double> probs = net_.forward_one(theta, buffers_, x, Mode::eval);
    std::vector<double> seed;
    for (int c = 0; c < k; ++c) {
        seed.assign(static_cast<size_t>(k), 0.0);
        seed[static_cast<size_t>(c)] = 1.0;
        jrow.assign(n, 0.0);
        net_.logit_backward_one(theta, buffers_, x, seed, jrow, nullptr);
        const double p = probs[static_cast<size_t>(c)];
        for (size_t i = 0; i < n; ++i) {
            weighted_sq[i] += p * jrow[i] * jrow[i];
            weighted_sum[i] += p * jrow[i];
        }
    }
    for (size_t i = 0; i < n; ++i) acc[i] += weighted_sq[i] - weighted_sum[i] * weighted_sum[i];
}

LaplacePosterior fit_laplace(std::span<const double> theta_map, const CurvatureSource& source,
                             double prior_precision, CurvatureKind kind) {
    if (theta_map.size() != source.param_count())
        throw ValidationError("fit_laplace: theta length does not match curvature source");
    if (prior_precision < 0.0) throw ValidationError("fit_laplace: negative prior precision");

    LaplacePosterior post;
    post.theta_map.assign(theta_map.begin(), theta_map.end());
    post.prior_precision = prior_precision;
    post.curvature_kind = kind;

    std::vector<double> curvature(source.param_count(), 0.0);
    for (size_t s = 0; s < source.sample_count(); ++s) {
        if (kind == CurvatureKind::empirical_fisher)
            source.add_fisher_diag(s, theta_map, curvature);
        else
            source.add_ggn_diag(s, theta_map, curvature);
    }

    post.variance.resize(curvature.size());
    for (size_t i = 0; i < curvature.size(); ++i) {
        const double precision = curvature[i] + prior_precision;
        if (!(precision > 0.0))
            throw SingularityError(
                "fit_laplace: zero curvature at parameter " + std::to_string(i) +
                " with zero prior precision");
        post.variance[i] = 1.0 / precision;
    }
    return post;
}

void sample_params_into(const LaplacePosterior& post, uint64_t seed, uint64_t sample_index,
                        std::vector<double>& theta_out) {
    const size_t n = post.theta_map.size();
    theta_out.resize(n);
    Rng rng(mix64(seed, sample_index));
    for (size_t i = 0; i < n; ++i)
        theta_out[i] = post.theta_map[i] + std::sqrt(post.variance[i]) * rng.normal();
}

std::vector<std::vector<double>> sample_params(const LaplacePosterior& post, int n, uint64_t seed) {
    if (n < 1) throw ValidationError("sample_params: n must be >= 1");
    std::vector<std::vector<double>> out(static_cast<size_t>(n));
    for (int s = 0; s < n; ++s)
        sample_params_into(post, seed, static_cast<uint64_t>(s), out[static_cast<size_t>(s)]);
    return out;
}

PriorTuneResult tune_prior_precision(const Network& net, std::span<const double> theta_map,
                                     std::span<const double> buffers,
                                     const CurvatureSource& source, CurvatureKind kind,
                                     const Dataset& data, Split val_split,
                                     std::span<const double> grid, int n_models, uint64_t seed) {
    if (grid.empty()) throw ValidationError("tune_prior_precision: empty grid");
    if (n_models < 1) throw ValidationError("tune_prior_precision: n_models must be >= 1");
    const auto val_idx = data.split_indices(val_split);
    if (val_idx.empty()) throw ValidationError("tune_prior_precision: empty validation split");

    // accumulate the curvature once; only the prior term varies over the grid
    std::vector<double> curvature(source.param_count(), 0.0);
    for (size_t s = 0; s < source.sample_count(); ++s) {
        if (kind == CurvatureKind::empirical_fisher)
            source.add_fisher_diag(s, theta_map, curvature);
        else
            source.add_ggn_diag(s, theta_map, curvature);
    }

    PriorTuneResult result;
    double best_acc = -1.0;
    std::vector<double> theta_s;
    for (double precision : grid) {
        LaplacePosterior post;
        post.theta_map.assign(theta_map.begin(), theta_map.end());
        post.prior_precision = precision;
        post.curvature_kind = kind;
        post.variance.resize(curvature.size());
        for (size_t i = 0; i < curvature.size(); ++i) {
            const double p = curvature[i] + precision;
            if (!(p > 0.0))
                throw SingularityError("tune_prior_precision: zero posterior precision in grid");
            post.variance[i] = 1.0 / p;
        }
        double acc_sum = 0.0;
        for (int s = 0; s < n_models; ++s) {
            sample_params_into(post, seed, static_cast<uint64_t>(s), theta_s);
            acc_sum += accuracy(net, theta_s, buffers, data, val_idx);
        }
        const double mean_acc = acc_sum / n_models;
        result.grid_accuracy.emplace_back(precision, mean_acc);
        // strict > keeps the smallest precision on ties because the grid is
        // scanned in the caller-provided order; enforce ascending input
        if (mean_acc > best_acc ||
            (mean_acc == best_acc && precision < result.prior_precision)) {
            best_acc = mean_acc;
            result.prior_precision = precision;
        }
    }
    return result;
}

void save_posterior(const LaplacePosterior& post, const std::string& path,
                    const std::array<uint8_t, 32>& checkpoint_hash) {
    auto f = io::open_out(path);
    io::write_magic(f, kMagic);
    io::write_pod<uint16_t>(f, kVersion);
    io::write_pod<double>(f, post.prior_precision);
    io::write_pod<uint8_t>(f, static_cast<uint8_t>(post.curvature_kind));
    std::vector<float> var32(post.variance.size());
    for (size_t i = 0; i < var32.size(); ++i) var32[i] = static_cast<float>(post.variance[i]);
    io::write_array(f, var32);
    f.write(reinterpret_cast<const char*>(checkpoint_hash.data()), kHashBytes);
    if (!f) throw IoError("posterior write failed: " + path);
}

LaplacePosterior load_posterior(const std::string& path, std::span<const double> theta_map,
                                const std::array<uint8_t, 32>* checkpoint_hash) {
    auto f = io::open_in(path);
    f.seekg(0, std::ios::end);
    const auto file_size = static_cast<size_t>(f.tellg());
    f.seekg(0);
    if (file_size < kHeaderBytes + kHashBytes || (file_size - kHeaderBytes - kHashBytes) % 4 != 0)
        throw IoError("posterior file is malformed: " + path);
    const size_t n = (file_size - kHeaderBytes - kHashBytes) / 4;

    io::expect_magic(f, kMagic, "PQLA");
    const auto version = io::read_pod<uint16_t>(f, "version");
    if (version != kVersion) throw IoError("unsupported PQLA version");
    LaplacePosterior post;
    post.prior_precision = io::read_pod<double>(f, "prior precision");
    const auto kind = io::read_pod<uint8_t>(f, "curvature kind");
    if (kind > 1) throw IoError("posterior: bad curvature kind");
    post.curvature_kind = static_cast<CurvatureKind>(kind);
    std::vector<float> var32;
    io::read_array(f, var32, n, "variance");
    std::array<uint8_t, 32> stored{};
    f.read(reinterpret_cast<char*>(stored.data()), kHashBytes);
    if (!f) throw IoError("truncated posterior file: " + path);

    if (checkpoint_hash && stored != *checkpoint_hash)
        throw ValidationError("posterior/checkpoint hash mismatch: " + path);
    if (theta_map.size() != n)
        throw ValidationError("posterior variance length does not match checkpoint");
    post.theta_map.assign(theta_map.begin(), theta_map.end());
    post.variance.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const double v = static_cast<double>(var32[i]);
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ValidationError("posterior variance must be finite and nonnegative");
        post.variance[i] = v;
    }
    return post;
}

} // namespace pqx
