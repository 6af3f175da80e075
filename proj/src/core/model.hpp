#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "params.hpp"
#include "tensor.hpp"

namespace dira {

enum class Arch { mlp, cnn_small };

const char* arch_name(Arch a);
Arch arch_from_name(const std::string& name);

/// Architecture description. `hidden` holds layer widths for the MLP and
/// channel counts for the CNN (3x3 kernels, stride 1, padding 1 throughout).
struct ModelSpec {
    Arch arch = Arch::mlp;
    Shape input_shape;
    int num_classes = 2;
    std::vector<int64_t> hidden;
    uint64_t seed = 0;

    void validate() const;
    int64_t input_numel() const;

    std::string to_text() const;
    static ModelSpec from_text(const std::string& text);
};

/// A classifier with live (trainable) parameters. Confined to one thread;
/// snapshots are immutable deep copies and freely shareable.
class Model {
public:
    /// Glorot-uniform weights, zero biases, driven by spec.seed.
    static Model build(const ModelSpec& spec);

    const ModelSpec& spec() const { return spec_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }

    /// batch is (n, ...input_shape). Participates in the active tape.
    Tensor forward(const Tensor& batch) const;

    ParamSet snapshot() const { return params_.clone(); }
    void restore(const ParamSet& p) { params_.assign_from(p); }

private:
    ModelSpec spec_;
    ParamSet params_;
};

}  // namespace dira
