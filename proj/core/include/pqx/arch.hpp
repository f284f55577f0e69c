#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pqx {

enum class LayerKind : uint8_t {
    conv1d,
    relu,
    maxpool1d,
    global_maxpool,
    batchnorm,
    flatten,
    dense,
    softmax,
};

struct LayerSpec {
    LayerKind kind;
    int kernel = 0;   // conv1d / maxpool1d
    int channels = 0; // conv1d out channels
    int stride = 1;   // conv1d / maxpool1d
    int features = 0; // batchnorm / dense
};

/// Ordered layer list plus the input shape. Validated on construction of a
/// Network; serializable to/from a JSON string.
struct ArchDescriptor {
    std::string name; // "desk", "table1", or free-form
    int input_length = 640;
    int input_channels = 1;
    std::vector<LayerSpec> layers;

    std::string to_json() const;
    static ArchDescriptor from_json(const std::string& json);

    /// conv(16)x2 -> pool -> conv(32)x2 -> pool -> global_maxpool ->
    /// dense(64) -> dense(16). 8672 trainable parameters.
    static ArchDescriptor desk(int input_length = 640, int n_classes = 16);

    /// The six-conv reference network (32/32, 64/64, 128/128 channels with
    /// stride-1 pooling, batch norm, and a 256/128 dense head).
    static ArchDescriptor table1(int input_length = 640, int n_classes = 16);
};

} // namespace pqx
