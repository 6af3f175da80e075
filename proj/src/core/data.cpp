#include "data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "error.hpp"
#include "rng.hpp"

namespace dira {

Shape LabeledSet::item_shape() const {
    const Shape& s = images.shape();
    return Shape(s.begin() + 1, s.end());
}

void LabeledSet::validate() const {
    if (!images.defined() || images.shape().size() != 4)
        throw ConfigError("dataset '" + name + "': images must be (n,c,h,w)");
    if (static_cast<int64_t>(labels.size()) != size())
        throw ConfigError("dataset '" + name + "': " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(size()) + " images");
    if (num_classes < 1) throw ConfigError("dataset '" + name + "': num_classes must be positive");
    for (int v : labels)
        if (v < 0 || v >= num_classes)
            throw ConfigError("dataset '" + name + "': label " + std::to_string(v) + " outside [0," +
                              std::to_string(num_classes) + ")");
    for (float v : images.data())
        if (!(v >= 0.0f && v <= 1.0f))
            throw ConfigError("dataset '" + name + "': pixel value " + std::to_string(v) +
                              " outside [0,1]");
}

Tensor LabeledSet::gather_images(const std::vector<int64_t>& idx) const {
    const int64_t item = shape_numel(item_shape());
    std::vector<float> out(static_cast<size_t>(item) * idx.size());
    const float* src = images.data().data();
    for (size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= size())
            throw ConfigError("gather: index " + std::to_string(idx[i]) + " out of range");
        std::copy(src + idx[i] * item, src + (idx[i] + 1) * item,
                  out.begin() + static_cast<int64_t>(i) * item);
    }
    Shape shape = images.shape();
    shape[0] = static_cast<int64_t>(idx.size());
    return Tensor::from_data(std::move(shape), std::move(out));
}

std::vector<int> LabeledSet::gather_labels(const std::vector<int64_t>& idx) const {
    std::vector<int> out(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) out[i] = labels[static_cast<size_t>(idx[i])];
    return out;
}

// --- IDX --------------------------------------------------------------

namespace {

uint32_t read_u32_be(std::istream& in, const std::string& path, size_t& offset) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError(path + ": truncated at byte offset " + std::to_string(offset));
    offset += 4;
    return (static_cast<uint32_t>(b[0]) << 24) | (static_cast<uint32_t>(b[1]) << 16) |
           (static_cast<uint32_t>(b[2]) << 8) | static_cast<uint32_t>(b[3]);
}

// Header: 0x00 0x00 <dtype> <ndim>, then ndim big-endian u32 extents.
std::vector<uint32_t> read_idx_header(std::istream& in, const std::string& path, size_t& offset) {
    const uint32_t magic = read_u32_be(in, path, offset);
    if ((magic & 0xffff0000u) != 0)
        throw FormatError(path + ": bad IDX magic at byte offset 0");
    const uint32_t dtype = (magic >> 8) & 0xff;
    if (dtype != 0x08) throw FormatError(path + ": unsupported IDX data type 0x" + std::to_string(dtype) +
                                         " (only u8 is supported)");
    const uint32_t ndim = magic & 0xff;
    if (ndim < 1 || ndim > 4)
        throw FormatError(path + ": unsupported IDX rank " + std::to_string(ndim));
    std::vector<uint32_t> dims(ndim);
    for (auto& d : dims) d = read_u32_be(in, path, offset);
    return dims;
}

std::vector<unsigned char> read_payload(std::istream& in, uint64_t count, const std::string& path,
                                        size_t& offset) {
    std::vector<unsigned char> bytes(count);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count));
    if (static_cast<uint64_t>(in.gcount()) != count)
        throw FormatError(path + ": truncated at byte offset " +
                          std::to_string(offset + static_cast<size_t>(std::max<std::streamsize>(in.gcount(), 0))));
    offset += count;
    in.peek();
    if (!in.eof()) throw FormatError(path + ": trailing bytes after offset " + std::to_string(offset));
    return bytes;
}

void write_u32_be(std::ostream& out, uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

LabeledSet load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imgf(images_path, std::ios::binary);
    if (!imgf) throw ConfigError("cannot open images file '" + images_path + "'");
    size_t img_off = 0;
    const auto img_dims = read_idx_header(imgf, images_path, img_off);
    if (img_dims.size() < 2)
        throw FormatError(images_path + ": image file must have rank >= 2, got " +
                          std::to_string(img_dims.size()));

    uint64_t count = 1;
    for (uint32_t d : img_dims) count *= d;
    const auto pixels = read_payload(imgf, count, images_path, img_off);

    std::ifstream labf(labels_path, std::ios::binary);
    if (!labf) throw ConfigError("cannot open labels file '" + labels_path + "'");
    size_t lab_off = 0;
    const auto lab_dims = read_idx_header(labf, labels_path, lab_off);
    if (lab_dims.size() != 1)
        throw FormatError(labels_path + ": label file must have rank 1, got " +
                          std::to_string(lab_dims.size()));
    const auto raw_labels = read_payload(labf, lab_dims[0], labels_path, lab_off);

    if (img_dims[0] != lab_dims[0])
        throw FormatError(images_path + ": " + std::to_string(img_dims[0]) + " images but " +
                          std::to_string(lab_dims[0]) + " labels in " + labels_path);

    Shape shape;
    const int64_t n = img_dims[0];
    switch (img_dims.size()) {
        case 2: shape = {n, static_cast<int64_t>(img_dims[1]), 1, 1}; break;
        case 3: shape = {n, 1, static_cast<int64_t>(img_dims[1]), static_cast<int64_t>(img_dims[2])}; break;
        default:
            shape = {n, static_cast<int64_t>(img_dims[1]), static_cast<int64_t>(img_dims[2]),
                     static_cast<int64_t>(img_dims[3])};
    }

    std::vector<float> data(pixels.size());
    for (size_t i = 0; i < pixels.size(); ++i) data[i] = static_cast<float>(pixels[i]) / 255.0f;

    LabeledSet set;
    set.images = Tensor::from_data(std::move(shape), std::move(data));
    set.labels.reserve(raw_labels.size());
    int max_label = 0;
    for (unsigned char l : raw_labels) {
        set.labels.push_back(static_cast<int>(l));
        max_label = std::max(max_label, static_cast<int>(l));
    }
    set.num_classes = n == 0 ? 1 : max_label + 1;
    set.name = images_path;
    set.validate();
    return set;
}

void save_idx(const LabeledSet& set, const std::string& images_path, const std::string& labels_path) {
    const Shape& s = set.images.shape();
    {
        std::ofstream out(images_path, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot open '" + images_path + "' for writing");
        const bool single_channel = s[1] == 1;
        write_u32_be(out, single_channel ? 0x00000803u : 0x00000804u);
        write_u32_be(out, static_cast<uint32_t>(s[0]));
        if (!single_channel) write_u32_be(out, static_cast<uint32_t>(s[1]));
        write_u32_be(out, static_cast<uint32_t>(s[2]));
        write_u32_be(out, static_cast<uint32_t>(s[3]));
        std::vector<unsigned char> bytes(set.images.data().size());
        for (size_t i = 0; i < bytes.size(); ++i)
            bytes[i] = static_cast<unsigned char>(std::lround(set.images.data()[i] * 255.0f));
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    {
        std::ofstream out(labels_path, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot open '" + labels_path + "' for writing");
        write_u32_be(out, 0x00000801u);
        write_u32_be(out, static_cast<uint32_t>(set.labels.size()));
        for (int l : set.labels) {
            const char b = static_cast<char>(l);
            out.write(&b, 1);
        }
    }
}

// --- synthetic blobs ----------------------------------------------------

LabeledSet make_synthetic(int num_classes, int n_per_class, int input_dim, double class_separation,
                          uint64_t seed) {
    if (num_classes < 2 || n_per_class < 1 || input_dim < 1)
        throw ConfigError("make_synthetic: counts must be positive and num_classes >= 2");
    if (class_separation <= 0.0) throw ConfigError("make_synthetic: class_separation must be > 0");
    if (input_dim < num_classes)
        throw ConfigError("make_synthetic: input_dim must be >= num_classes to place the simplex");

    // Class k mean sits at scale * e_k; pairwise mean distance is then
    // scale * sqrt(2) == class_separation.
    const double scale = class_separation / std::sqrt(2.0);
    const int64_t n = static_cast<int64_t>(num_classes) * n_per_class;

    Rng rng(seed);
    std::vector<float> raw(static_cast<size_t>(n) * input_dim);
    std::vector<int> labels(static_cast<size_t>(n));
    size_t at = 0;
    for (int k = 0; k < num_classes; ++k)
        for (int i = 0; i < n_per_class; ++i) {
            labels[at / static_cast<size_t>(input_dim)] = k;
            for (int d = 0; d < input_dim; ++d) {
                const double mean = d == k ? scale : 0.0;
                raw[at++] = static_cast<float>(mean + rng.next_normal());
            }
        }

    // One affine map for all coordinates keeps the geometry (and hence
    // linear separability) intact while meeting the [0,1] pixel contract.
    float lo = raw[0], hi = raw[0];
    for (float v : raw) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const float span = hi > lo ? hi - lo : 1.0f;
    for (float& v : raw) v = std::clamp((v - lo) / span, 0.0f, 1.0f);

    LabeledSet set;
    set.images = Tensor::from_data({n, input_dim, 1, 1}, std::move(raw));
    set.labels = std::move(labels);
    set.num_classes = num_classes;
    set.name = "synthetic-blobs";
    set.validate();
    return set;
}

LabeledSet make_glyph_images(int num_classes, int n_per_class, int height, int width, uint64_t seed) {
    if (num_classes < 2 || n_per_class < 1 || height < 4 || width < 4)
        throw ConfigError("make_glyph_images: need >=2 classes, >=1 per class and at least 4x4 images");

    const double tau = 2.0 * 3.14159265358979323846;
    const int64_t item = static_cast<int64_t>(height) * width;

    // Three-sinusoid prototype per class, normalized to [0,1] and contrast
    // stretched so corruption at high severity actually bites.
    std::vector<std::vector<float>> protos(static_cast<size_t>(num_classes));
    for (int k = 0; k < num_classes; ++k) {
        Rng rng(derive_seed(seed, "proto", static_cast<uint64_t>(k)));
        double fy[3], fx[3], ph[3], amp[3];
        for (int i = 0; i < 3; ++i) {
            fy[i] = static_cast<double>(2 + rng.next_below(3));
            fx[i] = static_cast<double>(2 + rng.next_below(3));
            ph[i] = rng.next_uniform(0.0, tau);
            amp[i] = rng.next_uniform(0.5, 1.0);
        }
        std::vector<float> p(static_cast<size_t>(item));
        float lo = 1e9f, hi = -1e9f;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                double v = 0.0;
                for (int i = 0; i < 3; ++i)
                    v += amp[i] * std::sin(tau * (fy[i] * y / height + fx[i] * x / width) + ph[i]);
                p[static_cast<size_t>(y * width + x)] = static_cast<float>(v);
                lo = std::min(lo, p[static_cast<size_t>(y * width + x)]);
                hi = std::max(hi, p[static_cast<size_t>(y * width + x)]);
            }
        const float span = hi > lo ? hi - lo : 1.0f;
        for (auto& v : p) {
            const float unit = (v - lo) / span;
            v = std::clamp(1.2f * (unit - 0.5f) + 0.5f, 0.0f, 1.0f);
        }
        protos[static_cast<size_t>(k)] = std::move(p);
    }

    const int64_t n = static_cast<int64_t>(num_classes) * n_per_class;
    std::vector<float> images(static_cast<size_t>(n * item));
    std::vector<int> labels(static_cast<size_t>(n));
    for (int k = 0; k < num_classes; ++k)
        for (int i = 0; i < n_per_class; ++i) {
            const int64_t at = static_cast<int64_t>(k) * n_per_class + i;
            labels[static_cast<size_t>(at)] = k;
            Rng rng(derive_seed(seed, "item", static_cast<uint64_t>(k), static_cast<uint64_t>(i)));
            const int dy = static_cast<int>(rng.next_below(5)) - 2;
            const int dx = static_cast<int>(rng.next_below(5)) - 2;
            const float amp = static_cast<float>(rng.next_uniform(0.55, 1.0));
            float* out = images.data() + at * item;
            const float* proto = protos[static_cast<size_t>(k)].data();
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x) {
                    const int sy = ((y + dy) % height + height) % height;
                    const int sx = ((x + dx) % width + width) % width;
                    const float noise = static_cast<float>(0.08 * rng.next_normal());
                    out[y * width + x] =
                        std::clamp(amp * proto[sy * width + sx] + noise, 0.0f, 1.0f);
                }
        }

    LabeledSet set;
    set.images = Tensor::from_data({n, 1, height, width}, std::move(images));
    set.labels = std::move(labels);
    set.num_classes = num_classes;
    set.name = "glyphs";
    set.validate();
    return set;
}

// --- sampling -----------------------------------------------------------

namespace {

LabeledSet take(const LabeledSet& set, const std::vector<int64_t>& idx, std::string name) {
    LabeledSet out;
    out.images = set.gather_images(idx);
    out.labels = set.gather_labels(idx);
    out.num_classes = set.num_classes;
    out.name = std::move(name);
    return out;
}

}  // namespace

LabeledSet sample_target(const LabeledSet& set, int64_t n, uint64_t seed) {
    if (n < 1) throw ConfigError("sample_target: n must be positive");
    if (n > set.size())
        throw ConfigError("sample_target: requested " + std::to_string(n) + " of " +
                          std::to_string(set.size()) + " items");
    std::vector<int64_t> idx(static_cast<size_t>(set.size()));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(idx);
    idx.resize(static_cast<size_t>(n));
    return take(set, idx, set.name + "/sample" + std::to_string(n));
}

std::pair<LabeledSet, LabeledSet> split(const LabeledSet& set, double fraction, uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split: fraction must be in (0,1)");
    std::vector<int64_t> idx(static_cast<size_t>(set.size()));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(idx);
    const auto cut = static_cast<size_t>(std::llround(fraction * static_cast<double>(set.size())));
    std::vector<int64_t> first(idx.begin(), idx.begin() + static_cast<ptrdiff_t>(cut));
    std::vector<int64_t> second(idx.begin() + static_cast<ptrdiff_t>(cut), idx.end());
    return {take(set, first, set.name + "/train"), take(set, second, set.name + "/test")};
}

}  // namespace dira
