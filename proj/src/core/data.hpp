#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace dira {

/// Immutable labeled dataset: images (n,c,h,w) with pixels in [0,1] and one
/// integer label per image.
struct LabeledSet {
    Tensor images;            // (n,c,h,w)
    std::vector<int> labels;  // values in [0, num_classes)
    int num_classes = 0;
    std::string name;

    int64_t size() const { return images.defined() ? images.shape()[0] : 0; }
    Shape item_shape() const;  // (c,h,w)

    void validate() const;

    /// Batch gather by indices; plain data copy, no tape participation.
    Tensor gather_images(const std::vector<int64_t>& idx) const;
    std::vector<int> gather_labels(const std::vector<int64_t>& idx) const;
};

/// Reads an IDX image/label file pair (big-endian header, u8 payload);
/// pixels are scaled to [0,1]. Labels must be rank 1; images rank 2 (n,d),
/// rank 3 (n,h,w) or rank 4 (n,c,h,w). num_classes is max(label)+1.
LabeledSet load_idx(const std::string& images_path, const std::string& labels_path);

/// Writes the set back out as an IDX pair (pixels quantized to u8).
void save_idx(const LabeledSet& set, const std::string& images_path, const std::string& labels_path);

/// Gaussian blobs with unit variance around class means placed on a scaled
/// simplex with the given pairwise distance; the whole cloud is then mapped
/// into [0,1] by one affine transform so the LabeledSet pixel contract holds.
/// Images come out as (n, input_dim, 1, 1). Requires input_dim >= num_classes.
LabeledSet make_synthetic(int num_classes, int n_per_class, int input_dim, double class_separation,
                          uint64_t seed);

/// Procedural 10-class-style glyph images: each class is a fixed band-limited
/// prototype pattern; instances get a random wrap-around shift, amplitude
/// jitter and pixel noise. Deterministic under seed. Shape (n, 1, h, w).
LabeledSet make_glyph_images(int num_classes, int n_per_class, int height, int width, uint64_t seed);

/// Uniform draw of n items without replacement.
LabeledSet sample_target(const LabeledSet& set, int64_t n, uint64_t seed);

/// Disjoint, exhaustive split; `fraction` of the items (rounded) land in the
/// first part.
std::pair<LabeledSet, LabeledSet> split(const LabeledSet& set, double fraction, uint64_t seed);

}  // namespace dira
