#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pqx/dataset.hpp"
#include "pqx/network.hpp"

namespace pqx {

struct TrainConfig {
    double lr0 = 0.01;
    int lr_halving_period_epochs = 10;
    double l2_coeff = 1e-4;
    int epochs = 30;
    int batch_size = 32;
    uint64_t seed = 0;

    void validate() const;
    double lr_at_epoch(int epoch) const; // lr0 * 0.5^floor(epoch/period)
};

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0; // mean per-sample cross-entropy over the epoch
    double train_acc = 0.0;
    double val_acc = 0.0;
};

struct TrainLog {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_val_acc = 0.0;
    double wall_time_s = 0.0;

    std::string to_json() const;
    static TrainLog from_json(const std::string& json);
};

struct TrainResult {
    ModelParams params; // snapshot with the best validation accuracy
    TrainLog log;
};

/// Adam with bias correction; beta1=0.9, beta2=0.999, eps=1e-8.
class Adam {
public:
    explicit Adam(size_t n_params);
    void step(std::vector<double>& theta, std::span<const double> grad, double lr);

private:
    std::vector<double> m_, v_;
    int64_t t_ = 0;
};

/// MAP training: Adam on sum-cross-entropy + L2, halving schedule,
/// deterministic given the seed. Returns the best-validation snapshot.
TrainResult train(const Network& net, const Dataset& data, const TrainConfig& config);

/// Eval-mode accuracy of (theta, buffers) on the given record indices.
double accuracy(const Network& net, std::span<const double> theta,
                std::span<const double> buffers, const Dataset& data,
                std::span<const size_t> indices);

/// Mean predictive entropy (nats) over the given record indices.
double mean_entropy(const Network& net, std::span<const double> theta,
                    std::span<const double> buffers, const Dataset& data,
                    std::span<const size_t> indices);

/// Copies record waveforms into a [n][1][len] batch.
void fill_batch(const Dataset& data, std::span<const size_t> indices, BatchTensor& input,
                std::vector<int>& labels);

} // namespace pqx
