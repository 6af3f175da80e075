#include "fisher.hpp"

#include <cmath>
#include <numeric>

#include "container.hpp"
#include "kv.hpp"
#include "rng.hpp"

namespace dira {

FisherDiag estimate_fisher(Model& model, const LabeledSet& data, int64_t n_samples, uint64_t seed) {
    if (n_samples < 1) throw ConfigError("estimate_fisher: n_samples must be positive");
    if (n_samples > data.size())
        throw ConfigError("estimate_fisher: n_samples " + std::to_string(n_samples) + " exceeds dataset size " +
                          std::to_string(data.size()));

    std::vector<int64_t> idx(static_cast<size_t>(data.size()));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(idx);
    idx.resize(static_cast<size_t>(n_samples));

    std::vector<std::vector<double>> acc(model.params().size());
    for (size_t p = 0; p < acc.size(); ++p)
        acc[p].assign(static_cast<size_t>(model.params().entry(p).tensor.numel()), 0.0);

    for (int64_t i : idx) {
        model.params().zero_grad();
        Tape tape;
        Tensor logits = model.forward(data.gather_images({i}));
        // log P(y|x,theta) is minus the per-sample cross entropy, so the
        // squared gradient is the same either way.
        Tensor loss = softmax_cross_entropy(logits, data.gather_labels({i}));
        tape.backward(loss);
        for (size_t p = 0; p < acc.size(); ++p) {
            const auto& entry = model.params().entry(p);
            if (!entry.tensor.has_grad()) continue;
            const auto& g = entry.tensor.grad();
            for (size_t j = 0; j < g.size(); ++j) {
                if (!std::isfinite(g[j]))
                    throw NumericError("estimate_fisher: non-finite gradient in parameter '" + entry.name +
                                       "' at sample index " + std::to_string(i));
                acc[p][j] += static_cast<double>(g[j]) * static_cast<double>(g[j]);
            }
        }
    }
    model.params().zero_grad();

    FisherDiag fisher;
    fisher.n_samples = n_samples;
    fisher.source_checkpoint_hash = param_digest(model.params());
    const double inv = 1.0 / static_cast<double>(n_samples);
    for (size_t p = 0; p < acc.size(); ++p) {
        std::vector<float> v(acc[p].size());
        for (size_t j = 0; j < v.size(); ++j) v[j] = static_cast<float>(acc[p][j] * inv);
        fisher.entries.add(model.params().entry(p).name,
                           Tensor::from_data(model.params().entry(p).tensor.shape(), std::move(v)));
    }
    return fisher;
}

void save_fisher(const FisherDiag& fisher, const std::string& path) {
    Container c;
    std::copy(kFisherMagic, kFisherMagic + 4, c.magic.begin());
    kv::Map meta;
    meta["fisher_samples"] = std::to_string(fisher.n_samples);
    char hex[17];
    snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(fisher.source_checkpoint_hash));
    meta["source_hash"] = hex;
    c.meta = kv::serialize(meta);
    for (const auto& e : fisher.entries)
        c.entries.push_back({e.name, e.tensor.shape(), e.tensor.data()});
    write_container(path, c);
}

FisherDiag load_fisher(const std::string& path) {
    const Container c = read_container(path, kFisherMagic);
    const kv::Map meta = kv::parse(c.meta);
    FisherDiag fisher;
    fisher.n_samples = std::stoll(kv::require(meta, "fisher_samples"));
    fisher.source_checkpoint_hash = std::stoull(kv::require(meta, "source_hash"), nullptr, 16);
    if (fisher.n_samples < 1)
        throw FormatError(path + ": fisher_samples must be positive");
    for (const auto& e : c.entries) {
        for (float v : e.data)
            if (!(v >= 0.0f) || !std::isfinite(v))
                throw FormatError(path + ": negative or non-finite Fisher value in entry '" + e.name + "'");
        fisher.entries.add(e.name, Tensor::from_data(e.shape, e.data));
    }
    return fisher;
}

FisherDiag load_fisher(const std::string& path, const Model& companion) {
    FisherDiag fisher = load_fisher(path);
    const uint64_t expect = param_digest(companion.params());
    if (fisher.source_checkpoint_hash != expect)
        throw FormatError(path + ": integrity check failed: Fisher was estimated for a different checkpoint (hash mismatch)");
    for (size_t i = 0; i < fisher.entries.size() || i < companion.params().size(); ++i) {
        if (i >= fisher.entries.size() || i >= companion.params().size())
            throw FormatError(path + ": Fisher entry count does not match the model");
        const auto& fe = fisher.entries.entry(i);
        const auto& pe = companion.params().entry(i);
        if (fe.name != pe.name || fe.tensor.shape() != pe.tensor.shape())
            throw FormatError(path + ": Fisher entry '" + fe.name + "' does not align with model entry '" +
                              pe.name + "'");
    }
    return fisher;
}

}  // namespace dira
