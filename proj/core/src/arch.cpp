#include "pqx/arch.hpp"

#include <nlohmann/json.hpp>

#include "pqx/errors.hpp"

namespace pqx {

namespace {

using ordered_json = nlohmann::ordered_json;

const char* kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::conv1d: return "conv1d";
        case LayerKind::relu: return "relu";
        case LayerKind::maxpool1d: return "maxpool1d";
        case LayerKind::global_maxpool: return "global_maxpool";
        case LayerKind::batchnorm: return "batchnorm";
        case LayerKind::flatten: return "flatten";
        case LayerKind::dense: return "dense";
        case LayerKind::softmax: return "softmax";
    }
    return "?";
}

LayerKind kind_from_name(const std::string& name) {
    for (int i = 0; i <= static_cast<int>(LayerKind::softmax); ++i) {
        const auto k = static_cast<LayerKind>(i);
        if (name == kind_name(k)) return k;
    }
    throw ConfigError("unknown layer kind: " + name);
}

} // namespace

std::string ArchDescriptor::to_json() const {
    ordered_json j;
    j["name"] = name;
    j["input_length"] = input_length;
    j["input_channels"] = input_channels;
    ordered_json layers_j = ordered_json::array();
    for (const LayerSpec& l : layers) {
        ordered_json lj;
        lj["kind"] = kind_name(l.kind);
        switch (l.kind) {
            case LayerKind::conv1d:
                lj["kernel"] = l.kernel;
                lj["channels"] = l.channels;
                lj["stride"] = l.stride;
                break;
            case LayerKind::maxpool1d:
                lj["kernel"] = l.kernel;
                lj["stride"] = l.stride;
                break;
            case LayerKind::batchnorm:
            case LayerKind::dense:
                lj["features"] = l.features;
                break;
            default: break;
        }
        layers_j.push_back(lj);
    }
    j["layers"] = layers_j;
    return j.dump();
}

ArchDescriptor ArchDescriptor::from_json(const std::string& json) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("architecture JSON parse failed: ") + e.what());
    }
    ArchDescriptor a;
    a.name = j.value("name", "");
    a.input_length = j.at("input_length").get<int>();
    a.input_channels = j.at("input_channels").get<int>();
    for (const auto& lj : j.at("layers")) {
        LayerSpec l{};
        l.kind = kind_from_name(lj.at("kind").get<std::string>());
        switch (l.kind) {
            case LayerKind::conv1d:
                l.kernel = lj.at("kernel").get<int>();
                l.channels = lj.at("channels").get<int>();
                l.stride = lj.value("stride", 1);
                break;
            case LayerKind::maxpool1d:
                l.kernel = lj.at("kernel").get<int>();
                l.stride = lj.value("stride", 1);
                break;
            case LayerKind::batchnorm:
            case LayerKind::dense:
                l.features = lj.at("features").get<int>();
                break;
            default: break;
        }
        a.layers.push_back(l);
    }
    return a;
}

ArchDescriptor ArchDescriptor::desk(int input_length, int n_classes) {
    ArchDescriptor a;
    a.name = "desk";
    a.input_length = input_length;
    a.input_channels = 1;
    a.layers = {
        {.kind = LayerKind::conv1d, .kernel = 3, .channels = 16, .stride = 1},
        {.kind = LayerKind::relu},
        {.kind = LayerKind::conv1d, .kernel = 3, .channels = 16, .stride = 1},
        {.kind = LayerKind::relu},
        {.kind = LayerKind::maxpool1d, .kernel = 2, .stride = 2},
        {.kind = LayerKind::conv1d, .kernel = 3, .channels = 32, .stride = 1},
        {.kind = LayerKind::relu},
        {.kind = LayerKind::conv1d, .kernel = 3, .channels = 32, .stride = 1},
        {.kind = LayerKind::relu},
        {.kind = LayerKind::maxpool1d, .kernel = 2, .stride = 2},
        {.kind = LayerKind::global_maxpool},
        {.kind = LayerKind::flatten},
        {.kind = LayerKind::dense, .features = 64},
        {.kind = LayerKind::relu},
        {.kind = LayerKind::dense, .features = n_classes},
        {.kind = LayerKind::softmax},
    };
    return a;
}

ArchDescriptor ArchDescriptor::table1(int input_length, int n_classes) {
    ArchDescriptor a;
    a.name = "table1";
    a.input_length = input_length;
    a.input_channels = 1;
    auto conv = [](int ch) {
        return LayerSpec{.kind = LayerKind::conv1d, .kernel = 3, .channels = ch, .stride = 1};
    };
    a.layers = {
        conv(32),
        {.kind = LayerKind::relu},
        conv(32),
        {.kind = LayerKind::relu},
        {.kind = LayerKind::maxpool1d, .kernel = 3, .stride = 1},
        {.kind = LayerKind::batchnorm, .features = 32},
        conv(64),
        {.kind = LayerKind::relu},
        conv(64),
        {.kind = LayerKind::relu},
        {.kind = LayerKind::maxpool1d, .kernel = 3, .stride = 1},
        {.kind = LayerKind::batchnorm, .features = 64},
        conv(128),
        {.kind = LayerKind::relu},
        conv(128),
        {.kind = LayerKind::relu},
        {.kind = LayerKind::global_maxpool},
        {.kind = LayerKind::batchnorm, .features = 128},
        {.kind = LayerKind::flatten},
        {.kind = LayerKind::dense, .features = 256},
        {.kind = LayerKind::relu},
        {.kind = LayerKind::dense, .features = 128},
        {.kind = LayerKind::relu},
        {.kind = LayerKind::batchnorm, .features = 128},
        {.kind = LayerKind::dense, .features = n_classes},
        {.kind = LayerKind::softmax},
    };
    return a;
}

} // namespace pqx
