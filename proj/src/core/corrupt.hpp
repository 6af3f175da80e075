#pragma once

#include <cstdint>
#include <string>

#include "tensor.hpp"

namespace dira {

enum class CorruptionKind {
    gaussian_noise,
    shot_noise,
    impulse_noise,
    contrast,
    brightness,
    pixelate,
    defocus_blur_boxapprox,
};

const char* corruption_name(CorruptionKind k);
CorruptionKind corruption_from_name(const std::string& name);

struct CorruptionSpec {
    CorruptionKind kind = CorruptionKind::gaussian_noise;
    int severity = 5;  // 1..5
    uint64_t seed = 0;
};

/// Applies the corruption to a (n,c,h,w) batch of [0,1] images. Deterministic:
/// each image draws from its own stream keyed by (seed, kind, severity, image
/// index), so results do not depend on iteration order. Output is clamped to
/// [0,1].
Tensor corrupt(const Tensor& images, const CorruptionSpec& spec);

}  // namespace dira
