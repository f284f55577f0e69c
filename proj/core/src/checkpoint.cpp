#include "pqx/checkpoint.hpp"

#include "pqx/errors.hpp"
#include "pqx/io.hpp"

namespace pqx {

namespace {
constexpr char kMagic[4] = {'P', 'Q', 'C', 'K'};
constexpr uint16_t kVersion = 1;

std::vector<float> to_f32(const std::vector<double>& v) {
    std::vector<float> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
    return out;
}

std::vector<double> to_f64(const std::vector<float>& v) {
    std::vector<double> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(v[i]);
    return out;
}
} // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    const Network net(ckpt.params.arch); // validates + derives array lengths
    if (ckpt.params.theta.size() != net.param_count() ||
        ckpt.params.buffers.size() != net.buffer_count())
        throw ValidationError("checkpoint: parameter/buffer sizes do not match architecture");
    auto f = io::open_out(path);
    io::write_magic(f, kMagic);
    io::write_pod<uint16_t>(f, kVersion);
    io::write_lp_string(f, ckpt.params.arch.to_json());
    io::write_array(f, to_f32(ckpt.params.theta));
    io::write_array(f, to_f32(ckpt.params.buffers));
    io::write_lp_string(f, ckpt.log.to_json());
    if (!f) throw IoError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    auto f = io::open_in(path);
    io::expect_magic(f, kMagic, "PQCK");
    const auto version = io::read_pod<uint16_t>(f, "version");
    if (version != kVersion) throw IoError("unsupported PQCK version");
    Checkpoint ckpt;
    ckpt.params.arch = ArchDescriptor::from_json(io::read_lp_string(f, "arch json"));
    const Network net(ckpt.params.arch);
    std::vector<float> theta32, buffers32;
    io::read_array(f, theta32, net.param_count(), "theta");
    io::read_array(f, buffers32, net.buffer_count(), "buffers");
    ckpt.params.theta = to_f64(theta32);
    ckpt.params.buffers = to_f64(buffers32);
    ckpt.log = TrainLog::from_json(io::read_lp_string(f, "training log"));
    return ckpt;
}

} // namespace pqx
