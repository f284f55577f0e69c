#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pqx/arch.hpp"

namespace pqx {

/// Dense [batch][channel][length] tensor, contiguous, row-major.
struct BatchTensor {
    int batch = 0;
    int channels = 0;
    int length = 0;
    std::vector<double> data;

    void resize(int b, int c, int l) {
        batch = b;
        channels = c;
        length = l;
        data.assign(static_cast<size_t>(b) * c * l, 0.0);
    }
    size_t per_sample() const { return static_cast<size_t>(channels) * length; }
    double* sample(int b) { return data.data() + static_cast<size_t>(b) * per_sample(); }
    const double* sample(int b) const { return data.data() + static_cast<size_t>(b) * per_sample(); }
    double* chan(int b, int c) { return sample(b) + static_cast<size_t>(c) * length; }
    const double* chan(int b, int c) const { return sample(b) + static_cast<size_t>(c) * length; }
};

enum class Mode : uint8_t { train, eval };

/// Flat parameter vector plus architecture and batch-norm running buffers.
struct ModelParams {
    ArchDescriptor arch;
    std::vector<double> theta;
    std::vector<double> buffers;
};

/// Per-layer offsets into the flat parameter vector.
struct ParamSlice {
    size_t offset = 0; // start of this layer's parameters
    size_t size = 0;   // 0 for parameter-free layers
};

struct ForwardCache; // defined in network.cpp-visible detail below

/// Shape-checked executor for an ArchDescriptor. Stateless: parameters and
/// buffers are passed into every call, so one Network can serve many
/// parameter realizations concurrently.
class Network {
public:
    explicit Network(ArchDescriptor arch); // throws ConfigError on bad chains

    const ArchDescriptor& arch() const { return arch_; }
    size_t param_count() const { return n_params_; }
    size_t buffer_count() const { return n_buffers_; }
    int n_classes() const { return n_classes_; }
    int input_length() const { return arch_.input_length; }
    const std::vector<ParamSlice>& param_layout() const { return param_layout_; }

    /// He-uniform weights, zero biases, unit batch-norm gain. Consumes the
    /// stream in layer order, so the full init is a pure function of seed.
    void init_params(std::vector<double>& theta, uint64_t seed) const;
    void init_buffers(std::vector<double>& buffers) const; // mean 0, var 1

    /// Class probabilities for a batch. Eval mode is a pure function of
    /// (theta, buffers, x); train mode uses batch statistics.
    void forward(std::span<const double> theta, std::span<const double> buffers,
                 const BatchTensor& input, Mode mode, BatchTensor& probs) const;

    /// Single-sample convenience wrapper.
    std::vector<double> forward_one(std::span<const double> theta,
                                    std::span<const double> buffers,
                                    std::span<const double> x, Mode mode) const;

    /// Sum cross-entropy over the batch plus (l2/2)*|theta|^2, with the full
    /// reverse-mode gradient accumulated into `grad` (which is zeroed first).
    /// Train-mode forward; running buffers updated only if update_buffers.
    /// Throws DivergenceError on a non-finite loss.
    double loss_and_grad(std::span<const double> theta, std::span<double> buffers,
                         bool update_buffers, const BatchTensor& input,
                         std::span<const int> labels, double l2,
                         std::span<double> grad) const;

    /// Per-sample gradient machinery for curvature estimation: runs an
    /// eval-mode forward on one sample and backpropagates an arbitrary seed
    /// vector applied at the logits. `probs_out` receives the softmax output.
    /// grad is accumulated (not zeroed).
    void logit_backward_one(std::span<const double> theta, std::span<const double> buffers,
                            std::span<const double> x, std::span<const double> logit_seed,
                            std::span<double> grad, std::vector<double>* probs_out) const;

private:
    struct Shape {
        int c = 0;
        int l = 0;
    };

    void forward_impl(std::span<const double> theta, std::span<const double> buffers,
                      const BatchTensor& input, Mode mode, bool update_buffers,
                      ForwardCache& cache) const;
    void backward_impl(std::span<const double> theta, const BatchTensor& input,
                       ForwardCache& cache, BatchTensor& grad_logits,
                       std::span<double> grad) const;

    ArchDescriptor arch_;
    std::vector<Shape> shapes_; // shapes_[i] = output shape of layer i-1 (shapes_[0] = input)
    std::vector<ParamSlice> param_layout_;
    std::vector<size_t> buffer_offsets_; // per layer, ~0 for non-batchnorm
    size_t n_params_ = 0;
    size_t n_buffers_ = 0;
    int n_classes_ = 0;
};

/// Argmax with ties broken by the lowest class index.
int predict_class(std::span<const double> probs);

/// Shannon entropy in nats: -sum p log p (0 log 0 := 0).
double predictive_entropy(std::span<const double> probs);

} // namespace pqx
