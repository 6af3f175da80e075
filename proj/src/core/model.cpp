#include "model.hpp"

#include <cmath>

#include "kv.hpp"
#include "rng.hpp"

namespace dira {

const char* arch_name(Arch a) { return a == Arch::mlp ? "mlp" : "cnn-small"; }

Arch arch_from_name(const std::string& name) {
    if (name == "mlp") return Arch::mlp;
    if (name == "cnn-small") return Arch::cnn_small;
    throw ConfigError("unsupported architecture '" + name + "' (expected mlp or cnn-small)");
}

void ModelSpec::validate() const {
    if (input_shape.empty()) throw ConfigError("model spec: input shape must be nonempty");
    for (int64_t e : input_shape)
        if (e <= 0) throw ConfigError("model spec: input extent must be positive, got " + shape_str(input_shape));
    if (num_classes < 2) throw ConfigError("model spec: need at least 2 classes");
    for (int64_t h : hidden)
        if (h <= 0) throw ConfigError("model spec: hidden sizes must be positive");
    if (arch == Arch::cnn_small) {
        if (input_shape.size() != 3)
            throw ConfigError("model spec: cnn-small expects a (c,h,w) input, got " + shape_str(input_shape));
        if (hidden.empty()) throw ConfigError("model spec: cnn-small needs at least one channel count");
    }
}

int64_t ModelSpec::input_numel() const { return shape_numel(input_shape); }

std::string ModelSpec::to_text() const {
    kv::Map m;
    m["arch"] = arch_name(arch);
    m["classes"] = std::to_string(num_classes);
    m["hidden"] = kv::int_list(hidden);
    m["input"] = kv::int_list(input_shape);
    m["seed"] = std::to_string(seed);
    return kv::serialize(m);
}

ModelSpec ModelSpec::from_text(const std::string& text) {
    const kv::Map m = kv::parse(text);
    ModelSpec s;
    s.arch = arch_from_name(kv::require(m, "arch"));
    s.num_classes = static_cast<int>(std::stoll(kv::require(m, "classes")));
    s.hidden = kv::parse_int_list(kv::require(m, "hidden"));
    s.input_shape = kv::parse_int_list(kv::require(m, "input"));
    s.seed = std::stoull(kv::require(m, "seed"));
    s.validate();
    return s;
}

namespace {

Tensor glorot_uniform(Shape shape, int64_t fan_in, int64_t fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<float> v(static_cast<size_t>(shape_numel(shape)));
    for (auto& x : v) x = static_cast<float>(rng.next_uniform(-bound, bound));
    return Tensor::from_data(std::move(shape), std::move(v), /*requires_grad=*/true);
}

}  // namespace

Model Model::build(const ModelSpec& spec) {
    spec.validate();
    Model m;
    m.spec_ = spec;
    Rng rng(spec.seed);

    if (spec.arch == Arch::mlp) {
        int64_t in = spec.input_numel();
        for (size_t i = 0; i < spec.hidden.size(); ++i) {
            const int64_t out = spec.hidden[i];
            m.params_.add("fc" + std::to_string(i) + ".weight", glorot_uniform({in, out}, in, out, rng));
            m.params_.add("fc" + std::to_string(i) + ".bias", Tensor::zeros({out}, true));
            in = out;
        }
        const int64_t out = spec.num_classes;
        m.params_.add("head.weight", glorot_uniform({in, out}, in, out, rng));
        m.params_.add("head.bias", Tensor::zeros({out}, true));
    } else {
        int64_t in_ch = spec.input_shape[0];
        for (size_t i = 0; i < spec.hidden.size(); ++i) {
            const int64_t out_ch = spec.hidden[i];
            m.params_.add("conv" + std::to_string(i) + ".weight",
                          glorot_uniform({out_ch, in_ch, 3, 3}, in_ch * 9, out_ch * 9, rng));
            m.params_.add("conv" + std::to_string(i) + ".bias", Tensor::zeros({out_ch}, true));
            in_ch = out_ch;
        }
        const int64_t out = spec.num_classes;
        m.params_.add("head.weight", glorot_uniform({in_ch, out}, in_ch, out, rng));
        m.params_.add("head.bias", Tensor::zeros({out}, true));
    }
    return m;
}

Tensor Model::forward(const Tensor& batch) const {
    const Shape& bs = batch.shape();
    const Shape& in = spec_.input_shape;
    const bool rank_ok = bs.size() == in.size() + 1;
    bool suffix_ok = rank_ok;
    if (rank_ok)
        for (size_t i = 0; i < in.size(); ++i)
            if (bs[i + 1] != in[i]) suffix_ok = false;
    if (!suffix_ok)
        throw ConfigError("forward: batch shape " + shape_str(bs) + " does not match model input " +
                          shape_str(in));
    const int64_t n = bs[0];

    if (spec_.arch == Arch::mlp) {
        Tensor x = reshape(batch, {n, spec_.input_numel()});
        for (size_t i = 0; i < spec_.hidden.size(); ++i) {
            const std::string base = "fc" + std::to_string(i);
            x = relu(add_rowvec(matmul(x, *params_.find(base + ".weight")), *params_.find(base + ".bias")));
        }
        return add_rowvec(matmul(x, *params_.find("head.weight")), *params_.find("head.bias"));
    }

    Tensor x = batch;
    for (size_t i = 0; i < spec_.hidden.size(); ++i) {
        const std::string base = "conv" + std::to_string(i);
        x = relu(add_channel_bias(conv2d(x, *params_.find(base + ".weight"), 1, 1),
                                  *params_.find(base + ".bias")));
    }
    x = global_avg_pool(x);
    return add_rowvec(matmul(x, *params_.find("head.weight")), *params_.find("head.bias"));
}

}  // namespace dira
