#include "pqx/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <nlohmann/json.hpp>

#include "pqx/errors.hpp"
#include "pqx/rng.hpp"

namespace pqx {

void TrainConfig::validate() const {
    if (lr0 <= 0.0) throw ValidationError("train: lr0 must be positive");
    if (l2_coeff < 0.0) throw ValidationError("train: l2 must be nonnegative");
    if (epochs < 1) throw ValidationError("train: epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("train: batch size must be >= 1");
    if (lr_halving_period_epochs < 1) throw ValidationError("train: halving period must be >= 1");
}

double TrainConfig::lr_at_epoch(int epoch) const {
    return lr0 * std::pow(0.5, epoch / lr_halving_period_epochs);
}

std::string TrainLog::to_json() const {
    // wall time is deliberately not serialized: checkpoints must be
    // byte-identical across reruns; timing lives in the run manifest
    nlohmann::ordered_json j;
    j["best_epoch"] = best_epoch;
    j["best_val_acc"] = best_val_acc;
    auto arr = nlohmann::ordered_json::array();
    for (const EpochStats& e : epochs) {
        arr.push_back({{"epoch", e.epoch},
                       {"lr", e.lr},
                       {"train_loss", e.train_loss},
                       {"train_acc", e.train_acc},
                       {"val_acc", e.val_acc}});
    }
    j["epochs"] = arr;
    return j.dump();
}

TrainLog TrainLog::from_json(const std::string& json) {
    const auto j = nlohmann::json::parse(json);
    TrainLog log;
    log.best_epoch = j.at("best_epoch").get<int>();
    log.best_val_acc = j.at("best_val_acc").get<double>();
    log.wall_time_s = j.value("wall_time_s", 0.0);
    for (const auto& ej : j.at("epochs")) {
        EpochStats e;
        e.epoch = ej.at("epoch").get<int>();
        e.lr = ej.at("lr").get<double>();
        e.train_loss = ej.at("train_loss").get<double>();
        e.train_acc = ej.at("train_acc").get<double>();
        e.val_acc = ej.at("val_acc").get<double>();
        log.epochs.push_back(e);
    }
    return log;
}

Adam::Adam(size_t n_params) : m_(n_params, 0.0), v_(n_params, 0.0) {}

void Adam::step(std::vector<double>& theta, std::span<const double> grad, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++t_;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (size_t i = 0; i < theta.size(); ++i) {
        const double g = grad[i];
        m_[i] = b1 * m_[i] + (1.0 - b1) * g;
        v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
        const double mhat = m_[i] / c1;
        const double vhat = v_[i] / c2;
        theta[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

void fill_batch(const Dataset& data, std::span<const size_t> indices, BatchTensor& input,
                std::vector<int>& labels) {
    const int n = static_cast<int>(indices.size());
    const int len = static_cast<int>(data.n_samples);
    input.batch = n;
    input.channels = 1;
    input.length = len;
    input.data.resize(static_cast<size_t>(n) * len);
    labels.resize(static_cast<size_t>(n));
    for (int b = 0; b < n; ++b) {
        const SignalRecord& rec = data.records[indices[static_cast<size_t>(b)]];
        double* dst = input.sample(b);
        for (int t = 0; t < len; ++t) dst[t] = static_cast<double>(rec.x[static_cast<size_t>(t)]);
        labels[static_cast<size_t>(b)] = rec.label;
    }
}

namespace {

// batched eval-mode forward over indices; calls fn(record_index, probs)
template <typename Fn>
void for_each_probs(const Network& net, std::span<const double> theta,
                    std::span<const double> buffers, const Dataset& data,
                    std::span<const size_t> indices, Fn&& fn) {
    constexpr size_t kChunk = 64;
    BatchTensor input, probs;
    std::vector<int> labels;
    for (size_t start = 0; start < indices.size(); start += kChunk) {
        const size_t n = std::min(kChunk, indices.size() - start);
        fill_batch(data, indices.subspan(start, n), input, labels);
        net.forward(theta, buffers, input, Mode::eval, probs);
        for (size_t b = 0; b < n; ++b)
            fn(indices[start + b], std::span<const double>(probs.sample(static_cast<int>(b)),
                                                           static_cast<size_t>(net.n_classes())));
    }
}

} // namespace

double accuracy(const Network& net, std::span<const double> theta,
                std::span<const double> buffers, const Dataset& data,
                std::span<const size_t> indices) {
    if (indices.empty()) throw ValidationError("accuracy: empty index set");
    size_t correct = 0;
    for_each_probs(net, theta, buffers, data, indices, [&](size_t idx, std::span<const double> p) {
        if (predict_class(p) == data.records[idx].label) ++correct;
    });
    return static_cast<double>(correct) / static_cast<double>(indices.size());
}

double mean_entropy(const Network& net, std::span<const double> theta,
                    std::span<const double> buffers, const Dataset& data,
                    std::span<const size_t> indices) {
    if (indices.empty()) throw ValidationError("mean_entropy: empty index set");
    double sum = 0.0;
    for_each_probs(net, theta, buffers, data, indices,
                   [&](size_t, std::span<const double> p) { sum += predictive_entropy(p); });
    return sum / static_cast<double>(indices.size());
}

TrainResult train(const Network& net, const Dataset& data, const TrainConfig& config) {
    config.validate();
    const auto train_idx = data.split_indices(Split::train);
    const auto val_idx = data.split_indices(Split::val);
    if (train_idx.empty()) throw ValidationError("train: dataset has no train split");
    if (val_idx.empty()) throw ValidationError("train: dataset has no val split");

    const auto t_start = std::chrono::steady_clock::now();

    ModelParams params;
    params.arch = net.arch();
    net.init_params(params.theta, config.seed);
    net.init_buffers(params.buffers);

    Adam adam(net.param_count());
    std::vector<double> grad(net.param_count());
    std::vector<size_t> order(train_idx);
    BatchTensor input;
    std::vector<int> labels;

    TrainResult result;
    result.params = params; // placeholder until the first epoch completes

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = config.lr_at_epoch(epoch);

        // deterministic shuffle: Fisher-Yates on an epoch-derived stream
        Rng rng(mix64(config.seed, 0x10ad, static_cast<uint64_t>(epoch)));
        for (size_t i = order.size(); i > 1; --i) {
            const size_t j = rng.below(i);
            std::swap(order[i - 1], order[j]);
        }

        double loss_sum = 0.0;
        size_t correct = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
            const size_t n = std::min(static_cast<size_t>(config.batch_size), order.size() - start);
            fill_batch(data, std::span<const size_t>(order).subspan(start, n), input, labels);
            double batch_loss;
            try {
                batch_loss = net.loss_and_grad(params.theta, params.buffers, true, input, labels,
                                               config.l2_coeff, grad);
            } catch (const DivergenceError&) {
                throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                                      ", batch " + std::to_string(start / config.batch_size));
            }
            loss_sum += batch_loss;
            adam.step(params.theta, grad, lr);
        }

        // epoch metrics: train accuracy on the final parameters, then val
        for_each_probs(net, params.theta, params.buffers, data, train_idx,
                       [&](size_t idx, std::span<const double> p) {
                           if (predict_class(p) == data.records[idx].label) ++correct;
                       });
        const double val_acc = accuracy(net, params.theta, params.buffers, data, val_idx);

        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = lr;
        stats.train_loss = loss_sum / static_cast<double>(order.size());
        stats.train_acc = static_cast<double>(correct) / static_cast<double>(train_idx.size());
        stats.val_acc = val_acc;
        result.log.epochs.push_back(stats);

        if (result.log.best_epoch < 0 || val_acc > result.log.best_val_acc) {
            result.log.best_epoch = epoch;
            result.log.best_val_acc = val_acc;
            result.params.theta = params.theta;
            result.params.buffers = params.buffers;
        }
    }

    result.log.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

} // namespace pqx
