#include "params.hpp"

#include <cstring>

#include "rng.hpp"

namespace dira {

void ParamSet::add(std::string name, Tensor tensor) {
    if (find(name) != nullptr) throw ConfigError("ParamSet: duplicate entry name '" + name + "'");
    if (!tensor.defined()) throw ConfigError("ParamSet: undefined tensor for '" + name + "'");
    entries_.push_back({std::move(name), std::move(tensor)});
}

const Tensor* ParamSet::find(std::string_view name) const {
    for (const auto& e : entries_)
        if (e.name == name) return &e.tensor;
    return nullptr;
}

int64_t ParamSet::total_len() const {
    int64_t n = 0;
    for (const auto& e : entries_) n += e.tensor.numel();
    return n;
}

ParamSet ParamSet::clone() const {
    ParamSet out;
    for (const auto& e : entries_) {
        Tensor t = e.tensor.clone();
        t.set_requires_grad(false);
        t.zero_grad();
        out.add(e.name, std::move(t));
    }
    return out;
}

void ParamSet::assign_from(const ParamSet& src) {
    if (src.size() != size())
        throw FormatError("parameter restore: entry count " + std::to_string(src.size()) +
                          " does not match model's " + std::to_string(size()));
    for (size_t i = 0; i < size(); ++i) {
        const auto& from = src.entry(i);
        auto& to = entries_[i];
        if (from.name != to.name)
            throw FormatError("parameter restore: entry " + std::to_string(i) + " is '" + from.name +
                              "', expected '" + to.name + "'");
        if (from.tensor.shape() != to.tensor.shape())
            throw FormatError("parameter restore: entry '" + from.name + "' has shape " +
                              shape_str(from.tensor.shape()) + ", expected " + shape_str(to.tensor.shape()));
        to.tensor.data() = from.tensor.data();
    }
}

void ParamSet::zero_grad() {
    for (auto& e : entries_) e.tensor.zero_grad();
}

uint64_t param_digest(const ParamSet& params) {
    uint64_t h = fnv1a(nullptr, 0);
    for (const auto& e : params) {
        h = hash_mix(h, e.name);
        h = hash_mix(h, static_cast<uint64_t>(e.tensor.shape().size()));
        for (int64_t d : e.tensor.shape()) h = hash_mix(h, static_cast<uint64_t>(d));
        for (float v : e.tensor.data()) {
            uint32_t bits;
            std::memcpy(&bits, &v, sizeof(bits));
            h = hash_mix(h, static_cast<uint64_t>(bits));
        }
    }
    return h;
}

}  // namespace dira
