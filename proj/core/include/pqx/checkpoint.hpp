#pragma once

#include <string>

#include "pqx/network.hpp"
#include "pqx/train.hpp"

namespace pqx {

/// Trained model artifact: parameters (f32 on disk), buffers, training log.
struct Checkpoint {
    ModelParams params;
    TrainLog log;
};

/// "PQCK" container: magic, version u16, arch JSON (length-prefixed),
/// theta f32[], buffers f32[], training-log JSON (length-prefixed).
/// Array lengths are derived from the architecture.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

} // namespace pqx
