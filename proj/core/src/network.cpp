#include "pqx/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "pqx/errors.hpp"
#include "pqx/rng.hpp"

namespace pqx {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;

struct LayerState {
    BatchTensor out;
    std::vector<int32_t> argmax; // pools: winning input index per output element
    std::vector<double> xhat;    // batchnorm
    std::vector<double> inv_std; // batchnorm, per channel
};

} // namespace

struct ForwardCache {
    Mode mode = Mode::eval;
    std::vector<LayerState> layers;
    BatchTensor g_cur, g_next;
};

Network::Network(ArchDescriptor arch) : arch_(std::move(arch)) {
    if (arch_.input_length <= 0 || arch_.input_channels <= 0)
        throw ConfigError("network: input shape must be positive");
    if (arch_.layers.empty()) throw ConfigError("network: empty layer list");
    if (arch_.layers.back().kind != LayerKind::softmax)
        throw ConfigError("network: final layer must be softmax");

    Shape s{arch_.input_channels, arch_.input_length};
    shapes_.push_back(s);
    param_layout_.resize(arch_.layers.size());
    buffer_offsets_.assign(arch_.layers.size(), static_cast<size_t>(-1));

    for (size_t i = 0; i < arch_.layers.size(); ++i) {
        const LayerSpec& l = arch_.layers[i];
        ParamSlice slice{n_params_, 0};
        switch (l.kind) {
            case LayerKind::conv1d: {
                if (l.kernel < 1 || l.stride < 1 || l.channels < 1)
                    throw ConfigError("conv1d: bad kernel/stride/channels");
                if (s.l < l.kernel) throw ConfigError("conv1d: input shorter than kernel");
                slice.size = static_cast<size_t>(l.channels) * s.c * l.kernel + l.channels;
                s.l = (s.l - l.kernel) / l.stride + 1;
                s.c = l.channels;
                break;
            }
            case LayerKind::relu: break;
            case LayerKind::maxpool1d: {
                if (l.kernel < 1 || l.stride < 1) throw ConfigError("maxpool1d: bad kernel/stride");
                if (s.l < l.kernel) throw ConfigError("maxpool1d: input shorter than kernel");
                s.l = (s.l - l.kernel) / l.stride + 1;
                break;
            }
            case LayerKind::global_maxpool: s.l = 1; break;
            case LayerKind::batchnorm: {
                if (l.features != s.c)
                    throw ConfigError("batchnorm: features do not match channel count");
                slice.size = 2 * static_cast<size_t>(l.features);
                buffer_offsets_[i] = n_buffers_;
                n_buffers_ += 2 * static_cast<size_t>(l.features);
                break;
            }
            case LayerKind::flatten:
                s.c = s.c * s.l;
                s.l = 1;
                break;
            case LayerKind::dense: {
                if (s.l != 1) throw ConfigError("dense: flatten the input first");
                if (l.features < 1) throw ConfigError("dense: bad feature count");
                slice.size = static_cast<size_t>(l.features) * s.c + l.features;
                s.c = l.features;
                break;
            }
            case LayerKind::softmax: {
                if (i + 1 != arch_.layers.size())
                    throw ConfigError("network: softmax only allowed as the final layer");
                if (s.l != 1 || s.c < 2) throw ConfigError("softmax: needs a flat class vector");
                break;
            }
        }
        param_layout_[i] = slice;
        n_params_ += slice.size;
        shapes_.push_back(s);
    }
    n_classes_ = s.c;
}

void Network::init_params(std::vector<double>& theta, uint64_t seed) const {
    theta.assign(n_params_, 0.0);
    Rng rng(seed);
    Shape s{arch_.input_channels, arch_.input_length};
    for (size_t i = 0; i < arch_.layers.size(); ++i) {
        const LayerSpec& l = arch_.layers[i];
        double* p = theta.data() + param_layout_[i].offset;
        if (l.kind == LayerKind::conv1d) {
            const size_t n_w = static_cast<size_t>(l.channels) * s.c * l.kernel;
            const double limit = std::sqrt(6.0 / (static_cast<double>(s.c) * l.kernel));
            for (size_t j = 0; j < n_w; ++j) p[j] = rng.uniform(-limit, limit);
            // biases stay zero
        } else if (l.kind == LayerKind::dense) {
            const size_t n_w = static_cast<size_t>(l.features) * s.c;
            const double limit = std::sqrt(6.0 / s.c);
            for (size_t j = 0; j < n_w; ++j) p[j] = rng.uniform(-limit, limit);
        } else if (l.kind == LayerKind::batchnorm) {
            for (int j = 0; j < l.features; ++j) p[j] = 1.0; // gamma
            // beta stays zero
        }
        s = shapes_[i + 1];
    }
}

void Network::init_buffers(std::vector<double>& buffers) const {
    buffers.assign(n_buffers_, 0.0);
    for (size_t i = 0; i < arch_.layers.size(); ++i) {
        if (arch_.layers[i].kind != LayerKind::batchnorm) continue;
        const int f = arch_.layers[i].features;
        double* var = buffers.data() + buffer_offsets_[i] + f;
        for (int j = 0; j < f; ++j) var[j] = 1.0;
    }
}

void Network::forward_impl(std::span<const double> theta, std::span<const double> buffers,
                           const BatchTensor& input, Mode mode, bool update_buffers,
                           ForwardCache& cache) const {
    if (input.channels != arch_.input_channels || input.length != arch_.input_length)
        throw ValidationError("network: input shape mismatch");
    if (theta.size() != n_params_) throw ValidationError("network: theta length mismatch");
    if (buffers.size() != n_buffers_) throw ValidationError("network: buffer length mismatch");

    const int B = input.batch;
    cache.mode = mode;
    cache.layers.resize(arch_.layers.size());

    const BatchTensor* in = &input;
    for (size_t i = 0; i < arch_.layers.size(); ++i) {
        const LayerSpec& l = arch_.layers[i];
        const Shape& so = shapes_[i + 1];
        LayerState& st = cache.layers[i];
        BatchTensor& out = st.out;
        if (out.batch != B || out.channels != so.c || out.length != so.l) {
            out.batch = B;
            out.channels = so.c;
            out.length = so.l;
            out.data.resize(static_cast<size_t>(B) * so.c * so.l);
        }
        const double* p = theta.data() + param_layout_[i].offset;

        switch (l.kind) {
            case LayerKind::conv1d: {
                const int ci_n = shapes_[i].c, li = shapes_[i].l;
                const int co_n = so.c, lo = so.l, k = l.kernel, s = l.stride;
                const double* bias = p + static_cast<size_t>(co_n) * ci_n * k;
                for (int b = 0; b < B; ++b) {
                    const double* xin = in->sample(b);
                    double* xout = out.sample(b);
                    for (int co = 0; co < co_n; ++co) {
                        double* o = xout + static_cast<size_t>(co) * lo;
                        const double bv = bias[co];
                        for (int t = 0; t < lo; ++t) o[t] = bv;
                        for (int ci = 0; ci < ci_n; ++ci) {
                            const double* x = xin + static_cast<size_t>(ci) * li;
                            const double* w = p + (static_cast<size_t>(co) * ci_n + ci) * k;
                            if (s == 1) {
                                for (int kk = 0; kk < k; ++kk) {
                                    const double wv = w[kk];
                                    const double* xs = x + kk;
                                    for (int t = 0; t < lo; ++t) o[t] += wv * xs[t];
                                }
                            } else {
                                for (int t = 0; t < lo; ++t) {
                                    double acc = 0.0;
                                    const double* xs = x + static_cast<size_t>(t) * s;
                                    for (int kk = 0; kk < k; ++kk) acc += w[kk] * xs[kk];
                                    o[t] += acc;
                                }
                            }
                        }
                    }
                }
                break;
            }
            case LayerKind::relu: {
                const size_t n = out.data.size();
                const double* x = in->data.data();
                double* o = out.data.data();
                for (size_t j = 0; j < n; ++j) o[j] = x[j] > 0.0 ? x[j] : 0.0;
                break;
            }
            case LayerKind::maxpool1d:
            case LayerKind::global_maxpool: {
                const int c_n = so.c, li = shapes_[i].l, lo = so.l;
                const int k = l.kind == LayerKind::global_maxpool ? li : l.kernel;
                const int s = l.kind == LayerKind::global_maxpool ? 1 : l.stride;
                st.argmax.resize(static_cast<size_t>(B) * c_n * lo);
                for (int b = 0; b < B; ++b) {
                    for (int c = 0; c < c_n; ++c) {
                        const double* x = in->chan(b, c);
                        double* o = out.chan(b, c);
                        int32_t* am = st.argmax.data() +
                                      (static_cast<size_t>(b) * c_n + c) * lo;
                        for (int t = 0; t < lo; ++t) {
                            const int start = t * s;
                            double best = x[start];
                            int best_i = start;
                            for (int kk = 1; kk < k; ++kk) {
                                if (x[start + kk] > best) {
                                    best = x[start + kk];
                                    best_i = start + kk;
                                }
                            }
                            o[t] = best;
                            am[t] = best_i;
                        }
                    }
                }
                break;
            }
            case LayerKind::batchnorm: {
                const int c_n = so.c, len = so.l;
                const double* gamma = p;
                const double* beta = p + c_n;
                const size_t boff = buffer_offsets_[i];
                st.inv_std.resize(static_cast<size_t>(c_n));
                st.xhat.resize(out.data.size());
                const double count = static_cast<double>(B) * len;
                for (int c = 0; c < c_n; ++c) {
                    double mean, var;
                    if (mode == Mode::train) {
                        double sum = 0.0;
                        for (int b = 0; b < B; ++b) {
                            const double* x = in->chan(b, c);
                            for (int t = 0; t < len; ++t) sum += x[t];
                        }
                        mean = sum / count;
                        double sq = 0.0;
                        for (int b = 0; b < B; ++b) {
                            const double* x = in->chan(b, c);
                            for (int t = 0; t < len; ++t) {
                                const double d = x[t] - mean;
                                sq += d * d;
                            }
                        }
                        var = sq / count;
                    } else {
                        mean = buffers[boff + c];
                        var = buffers[boff + c_n + c];
                    }
                    const double inv = 1.0 / std::sqrt(var + kBnEps);
                    st.inv_std[static_cast<size_t>(c)] = inv;
                    for (int b = 0; b < B; ++b) {
                        const double* x = in->chan(b, c);
                        double* o = out.chan(b, c);
                        double* xh = st.xhat.data() + (static_cast<size_t>(b) * c_n + c) * len;
                        for (int t = 0; t < len; ++t) {
                            const double h = (x[t] - mean) * inv;
                            xh[t] = h;
                            o[t] = gamma[c] * h + beta[c];
                        }
                    }
                    if (mode == Mode::train && update_buffers) {
                        // const_cast is confined here: update_buffers is only set
                        // by loss_and_grad, which owns a mutable buffer span.
                        double* mut = const_cast<double*>(buffers.data());
                        mut[boff + c] = (1.0 - kBnMomentum) * buffers[boff + c] + kBnMomentum * mean;
                        mut[boff + c_n + c] =
                            (1.0 - kBnMomentum) * buffers[boff + c_n + c] + kBnMomentum * var;
                    }
                }
                break;
            }
            case LayerKind::flatten: {
                std::memcpy(out.data.data(), in->data.data(), out.data.size() * sizeof(double));
                break;
            }
            case LayerKind::dense: {
                const int fi = shapes_[i].c, fo = so.c;
                const double* bias = p + static_cast<size_t>(fo) * fi;
                for (int b = 0; b < B; ++b) {
                    const double* x = in->sample(b);
                    double* o = out.sample(b);
                    for (int j = 0; j < fo; ++j) {
                        const double* w = p + static_cast<size_t>(j) * fi;
                        double acc = bias[j];
                        for (int q = 0; q < fi; ++q) acc += w[q] * x[q];
                        o[j] = acc;
                    }
                }
                break;
            }
            case LayerKind::softmax: {
                const int k_n = so.c;
                for (int b = 0; b < B; ++b) {
                    const double* z = in->sample(b);
                    double* o = out.sample(b);
                    double zmax = z[0];
                    for (int j = 1; j < k_n; ++j) zmax = std::max(zmax, z[j]);
                    double sum = 0.0;
                    for (int j = 0; j < k_n; ++j) {
                        o[j] = std::exp(z[j] - zmax);
                        sum += o[j];
                    }
                    const double inv = 1.0 / sum;
                    for (int j = 0; j < k_n; ++j) o[j] *= inv;
                }
                break;
            }
        }
        in = &out;
    }
}

void Network::backward_impl(std::span<const double> theta, const BatchTensor& input,
                            ForwardCache& cache, BatchTensor& grad_logits,
                            std::span<double> grad) const {
    const int B = input.batch;
    BatchTensor* g = &grad_logits;
    BatchTensor* g_next = &cache.g_next;

    // softmax is last; the seed is already at the logits, so walk from L-2 down
    for (int i = static_cast<int>(arch_.layers.size()) - 2; i >= 0; --i) {
        const LayerSpec& l = arch_.layers[static_cast<size_t>(i)];
        const Shape& si = shapes_[static_cast<size_t>(i)];
        const Shape& so = shapes_[static_cast<size_t>(i) + 1];
        const BatchTensor& lin =
            i == 0 ? input : cache.layers[static_cast<size_t>(i) - 1].out;
        LayerState& st = cache.layers[static_cast<size_t>(i)];
        const double* p = theta.data() + param_layout_[static_cast<size_t>(i)].offset;
        double* gp = grad.data() + param_layout_[static_cast<size_t>(i)].offset;

        const bool need_input_grad = i > 0;
        if (need_input_grad && l.kind != LayerKind::relu && l.kind != LayerKind::flatten) {
            if (g_next->batch != B || g_next->channels != si.c || g_next->length != si.l) {
                g_next->batch = B;
                g_next->channels = si.c;
                g_next->length = si.l;
                g_next->data.resize(static_cast<size_t>(B) * si.c * si.l);
            }
        }

        switch (l.kind) {
            case LayerKind::conv1d: {
                const int ci_n = si.c, li = si.l, co_n = so.c, lo = so.l;
                const int k = l.kernel, s = l.stride;
                double* gbias = gp + static_cast<size_t>(co_n) * ci_n * k;
                for (int b = 0; b < B; ++b) {
                    const double* xin = lin.sample(b);
                    const double* gout = g->sample(b);
                    for (int co = 0; co < co_n; ++co) {
                        const double* go = gout + static_cast<size_t>(co) * lo;
                        double bsum = 0.0;
                        for (int t = 0; t < lo; ++t) bsum += go[t];
                        gbias[co] += bsum;
                        for (int ci = 0; ci < ci_n; ++ci) {
                            const double* x = xin + static_cast<size_t>(ci) * li;
                            double* gw = gp + (static_cast<size_t>(co) * ci_n + ci) * k;
                            if (s == 1) {
                                for (int kk = 0; kk < k; ++kk) {
                                    const double* xs = x + kk;
                                    double acc = 0.0;
                                    for (int t = 0; t < lo; ++t) acc += go[t] * xs[t];
                                    gw[kk] += acc;
                                }
                            } else {
                                for (int t = 0; t < lo; ++t) {
                                    const double* xs = x + static_cast<size_t>(t) * s;
                                    for (int kk = 0; kk < k; ++kk) gw[kk] += go[t] * xs[kk];
                                }
                            }
                        }
                    }
                    if (need_input_grad) {
                        double* gin = g_next->sample(b);
                        std::fill(gin, gin + static_cast<size_t>(ci_n) * li, 0.0);
                        for (int co = 0; co < co_n; ++co) {
                            const double* go = gout + static_cast<size_t>(co) * lo;
                            for (int ci = 0; ci < ci_n; ++ci) {
                                double* gx = gin + static_cast<size_t>(ci) * li;
                                const double* w = p + (static_cast<size_t>(co) * ci_n + ci) * k;
                                if (s == 1) {
                                    for (int kk = 0; kk < k; ++kk) {
                                        const double wv = w[kk];
                                        double* gs = gx + kk;
                                        for (int t = 0; t < lo; ++t) gs[t] += wv * go[t];
                                    }
                                } else {
                                    for (int t = 0; t < lo; ++t) {
                                        double* gs = gx + static_cast<size_t>(t) * s;
                                        for (int kk = 0; kk < k; ++kk) gs[kk] += w[kk] * go[t];
                                    }
                                }
                            }
                        }
                    }
                }
                break;
            }
            case LayerKind::relu: {
                // in-place: relu output cache doubles as the positivity test
                const size_t n = g->data.size();
                const double* y = st.out.data.data();
                double* gd = g->data.data();
                for (size_t j = 0; j < n; ++j)
                    if (y[j] <= 0.0) gd[j] = 0.0;
                break;
            }
            case LayerKind::maxpool1d:
            case LayerKind::global_maxpool: {
                if (!need_input_grad) break;
                const int c_n = so.c, lo = so.l;
                std::fill(g_next->data.begin(), g_next->data.end(), 0.0);
                for (int b = 0; b < B; ++b) {
                    for (int c = 0; c < c_n; ++c) {
                        const double* go = g->chan(b, c);
                        double* gi = g_next->chan(b, c);
                        const int32_t* am =
                            st.argmax.data() + (static_cast<size_t>(b) * c_n + c) * lo;
                        for (int t = 0; t < lo; ++t) gi[am[t]] += go[t];
                    }
                }
                break;
            }
            case LayerKind::batchnorm: {
                const int c_n = so.c, len = so.l;
                const double* gamma = p;
                double* ggamma = gp;
                double* gbeta = gp + c_n;
                const double count = static_cast<double>(B) * len;
                for (int c = 0; c < c_n; ++c) {
                    const double inv = st.inv_std[static_cast<size_t>(c)];
                    double sum_g = 0.0, sum_gx = 0.0;
                    for (int b = 0; b < B; ++b) {
                        const double* go = g->chan(b, c);
                        const double* xh = st.xhat.data() + (static_cast<size_t>(b) * c_n + c) * len;
                        for (int t = 0; t < len; ++t) {
                            sum_g += go[t];
                            sum_gx += go[t] * xh[t];
                        }
                    }
                    ggamma[c] += sum_gx;
                    gbeta[c] += sum_g;
                    if (!need_input_grad) continue;
                    if (cache.mode == Mode::train) {
                        const double mg = sum_g / count;
                        const double mgx = sum_gx / count;
                        for (int b = 0; b < B; ++b) {
                            const double* go = g->chan(b, c);
                            const double* xh =
                                st.xhat.data() + (static_cast<size_t>(b) * c_n + c) * len;
                            double* gi = g_next->chan(b, c);
                            for (int t = 0; t < len; ++t)
                                gi[t] = gamma[c] * inv * (go[t] - mg - xh[t] * mgx);
                        }
                    } else {
                        for (int b = 0; b < B; ++b) {
                            const double* go = g->chan(b, c);
                            double* gi = g_next->chan(b, c);
                            for (int t = 0; t < len; ++t) gi[t] = gamma[c] * inv * go[t];
                        }
                    }
                }
                break;
            }
            case LayerKind::flatten: {
                // same storage layout; reinterpret the gradient shape in place
                g->channels = si.c;
                g->length = si.l;
                break;
            }
            case LayerKind::dense: {
                const int fi = si.c, fo = so.c;
                double* gbias = gp + static_cast<size_t>(fo) * fi;
                for (int b = 0; b < B; ++b) {
                    const double* x = lin.sample(b);
                    const double* go = g->sample(b);
                    for (int j = 0; j < fo; ++j) {
                        const double gv = go[j];
                        gbias[j] += gv;
                        double* gw = gp + static_cast<size_t>(j) * fi;
                        for (int q = 0; q < fi; ++q) gw[q] += gv * x[q];
                    }
                    if (need_input_grad) {
                        double* gi = g_next->sample(b);
                        std::fill(gi, gi + fi, 0.0);
                        for (int j = 0; j < fo; ++j) {
                            const double gv = go[j];
                            const double* w = p + static_cast<size_t>(j) * fi;
                            for (int q = 0; q < fi; ++q) gi[q] += gv * w[q];
                        }
                    }
                }
                break;
            }
            case LayerKind::softmax: break; // unreachable
        }

        if (need_input_grad && l.kind != LayerKind::relu && l.kind != LayerKind::flatten)
            std::swap(g, g_next);
    }
}

void Network::forward(std::span<const double> theta, std::span<const double> buffers,
                      const BatchTensor& input, Mode mode, BatchTensor& probs) const {
    thread_local ForwardCache cache;
    forward_impl(theta, buffers, input, mode, false, cache);
    probs = cache.layers.back().out;
}

std::vector<double> Network::forward_one(std::span<const double> theta,
                                         std::span<const double> buffers,
                                         std::span<const double> x, Mode mode) const {
    if (static_cast<int>(x.size()) != arch_.input_length * arch_.input_channels)
        throw ValidationError("network: input length mismatch");
    BatchTensor in;
    in.batch = 1;
    in.channels = arch_.input_channels;
    in.length = arch_.input_length;
    in.data.assign(x.begin(), x.end());
    BatchTensor probs;
    forward(theta, buffers, in, mode, probs);
    return probs.data;
}

double Network::loss_and_grad(std::span<const double> theta, std::span<double> buffers,
                              bool update_buffers, const BatchTensor& input,
                              std::span<const int> labels, double l2,
                              std::span<double> grad) const {
    if (input.batch == 0) throw ValidationError("loss_and_grad: empty batch");
    if (labels.size() != static_cast<size_t>(input.batch))
        throw ValidationError("loss_and_grad: label count mismatch");
    if (grad.size() != n_params_) throw ValidationError("loss_and_grad: grad length mismatch");

    thread_local ForwardCache cache;
    forward_impl(theta, {buffers.data(), buffers.size()}, input, Mode::train, update_buffers,
                 cache);

    const size_t n_layers = arch_.layers.size();
    const BatchTensor& logits = n_layers >= 2 ? cache.layers[n_layers - 2].out : input;
    const BatchTensor& probs = cache.layers.back().out;
    const int B = input.batch, K = n_classes_;

    double loss = 0.0;
    BatchTensor& g = cache.g_cur;
    if (g.batch != B || g.channels != K || g.length != 1) {
        g.batch = B;
        g.channels = K;
        g.length = 1;
        g.data.resize(static_cast<size_t>(B) * K);
    }
    for (int b = 0; b < B; ++b) {
        const int y = labels[static_cast<size_t>(b)];
        if (y < 0 || y >= K) throw ValidationError("loss_and_grad: label out of range");
        const double* z = logits.sample(b);
        double zmax = z[0];
        for (int j = 1; j < K; ++j) zmax = std::max(zmax, z[j]);
        double sum = 0.0;
        for (int j = 0; j < K; ++j) sum += std::exp(z[j] - zmax);
        loss += zmax + std::log(sum) - z[y];
        const double* pb = probs.sample(b);
        double* gb = g.sample(b);
        for (int j = 0; j < K; ++j) gb[j] = pb[j];
        gb[y] -= 1.0;
    }

    std::fill(grad.begin(), grad.end(), 0.0);
    backward_impl(theta, input, cache, g, grad);

    if (l2 != 0.0) {
        double sq = 0.0;
        for (size_t j = 0; j < n_params_; ++j) {
            sq += theta[j] * theta[j];
            grad[j] += l2 * theta[j];
        }
        loss += 0.5 * l2 * sq;
    }
    if (!std::isfinite(loss)) throw DivergenceError("training loss is not finite");
    return loss;
}

void Network::logit_backward_one(std::span<const double> theta, std::span<const double> buffers,
                                 std::span<const double> x, std::span<const double> logit_seed,
                                 std::span<double> grad, std::vector<double>* probs_out) const {
    if (logit_seed.size() != static_cast<size_t>(n_classes_))
        throw ValidationError("logit_backward_one: seed length mismatch");
    thread_local ForwardCache cache;
    BatchTensor in;
    in.batch = 1;
    in.channels = arch_.input_channels;
    in.length = arch_.input_length;
    in.data.assign(x.begin(), x.end());
    forward_impl(theta, buffers, in, Mode::eval, false, cache);
    if (probs_out) *probs_out = cache.layers.back().out.data;

    BatchTensor& g = cache.g_cur;
    g.batch = 1;
    g.channels = n_classes_;
    g.length = 1;
    g.data.assign(logit_seed.begin(), logit_seed.end());
    backward_impl(theta, in, cache, g, grad);
}

int predict_class(std::span<const double> probs) {
    int best = 0;
    for (size_t j = 1; j < probs.size(); ++j)
        if (probs[j] > probs[best]) best = static_cast<int>(j);
    return best;
}

double predictive_entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

} // namespace pqx
