#include "corrupt.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "rng.hpp"

namespace dira {

namespace {

struct NamedKind {
    const char* name;
    CorruptionKind kind;
};

constexpr NamedKind kKinds[] = {
    {"gaussian_noise", CorruptionKind::gaussian_noise},
    {"shot_noise", CorruptionKind::shot_noise},
    {"impulse_noise", CorruptionKind::impulse_noise},
    {"contrast", CorruptionKind::contrast},
    {"brightness", CorruptionKind::brightness},
    {"pixelate", CorruptionKind::pixelate},
    {"defocus_blur_boxapprox", CorruptionKind::defocus_blur_boxapprox},
};

float clamp01(float v) { return std::clamp(v, 0.0f, 1.0f); }

}  // namespace

const char* corruption_name(CorruptionKind k) {
    for (const auto& nk : kKinds)
        if (nk.kind == k) return nk.name;
    throw ConfigError("unknown corruption kind");
}

CorruptionKind corruption_from_name(const std::string& name) {
    for (const auto& nk : kKinds)
        if (name == nk.name) return nk.kind;
    throw ConfigError("unknown corruption kind '" + name + "'");
}

Tensor corrupt(const Tensor& images, const CorruptionSpec& spec) {
    if (images.shape().size() != 4)
        throw ConfigError("corrupt: images must be (n,c,h,w), got " + shape_str(images.shape()));
    if (spec.severity < 1 || spec.severity > 5)
        throw ConfigError("corrupt: severity " + std::to_string(spec.severity) + " outside 1..5");
    for (float v : images.data())
        if (!(v >= 0.0f && v <= 1.0f))
            throw ConfigError("corrupt: pixel value " + std::to_string(v) + " outside [0,1]");

    const int64_t n = images.shape()[0], c = images.shape()[1];
    const int64_t h = images.shape()[2], w = images.shape()[3];
    const int64_t item = c * h * w;
    const int s = spec.severity;

    Tensor out = Tensor::zeros(images.shape());
    const float* src = images.data().data();
    float* dst = out.data().data();

    for (int64_t i = 0; i < n; ++i) {
        const float* in = src + i * item;
        float* o = dst + i * item;
        Rng rng(derive_seed(spec.seed, std::string_view(corruption_name(spec.kind)),
                            static_cast<uint64_t>(s), static_cast<uint64_t>(i)));

        switch (spec.kind) {
            case CorruptionKind::gaussian_noise: {
                const double sigma = 0.04 * s + 0.02;
                for (int64_t j = 0; j < item; ++j)
                    o[j] = clamp01(in[j] + static_cast<float>(sigma * rng.next_normal()));
                break;
            }
            case CorruptionKind::shot_noise: {
                const double rate = 60.0 / s;
                for (int64_t j = 0; j < item; ++j)
                    o[j] = clamp01(static_cast<float>(
                        static_cast<double>(rng.next_poisson(in[j] * rate)) / rate));
                break;
            }
            case CorruptionKind::impulse_noise: {
                const double p = 0.02 * s;
                for (int64_t j = 0; j < item; ++j) {
                    if (rng.next_unit() < p)
                        o[j] = rng.next_unit() < 0.5 ? 0.0f : 1.0f;
                    else
                        o[j] = in[j];
                }
                break;
            }
            case CorruptionKind::contrast: {
                double mean = 0.0;
                for (int64_t j = 0; j < item; ++j) mean += in[j];
                mean /= static_cast<double>(item);
                const float m = static_cast<float>(mean);
                const float factor = 1.0f - 0.15f * static_cast<float>(s);
                for (int64_t j = 0; j < item; ++j) o[j] = clamp01((in[j] - m) * factor + m);
                break;
            }
            case CorruptionKind::brightness: {
                const float delta = 0.1f * static_cast<float>(s);
                for (int64_t j = 0; j < item; ++j) o[j] = clamp01(in[j] + delta);
                break;
            }
            case CorruptionKind::pixelate: {
                const int64_t k = 1 + s;
                for (int64_t ch = 0; ch < c; ++ch)
                    for (int64_t y = 0; y < h; ++y)
                        for (int64_t x = 0; x < w; ++x)
                            o[(ch * h + y) * w + x] = in[(ch * h + (y / k) * k) * w + (x / k) * k];
                break;
            }
            case CorruptionKind::defocus_blur_boxapprox: {
                const int64_t r = s;  // kernel width 2s+1
                for (int64_t ch = 0; ch < c; ++ch)
                    for (int64_t y = 0; y < h; ++y)
                        for (int64_t x = 0; x < w; ++x) {
                            double acc = 0.0;
                            int64_t cnt = 0;
                            const int64_t y0 = std::max<int64_t>(0, y - r), y1 = std::min(h - 1, y + r);
                            const int64_t x0 = std::max<int64_t>(0, x - r), x1 = std::min(w - 1, x + r);
                            for (int64_t yy = y0; yy <= y1; ++yy)
                                for (int64_t xx = x0; xx <= x1; ++xx) {
                                    acc += in[(ch * h + yy) * w + xx];
                                    ++cnt;
                                }
                            o[(ch * h + y) * w + x] = clamp01(static_cast<float>(acc / cnt));
                        }
                break;
            }
        }
    }
    return out;
}

}  // namespace dira
