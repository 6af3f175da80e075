#pragma once

#include <cstdint>
#include <string>

#include "data.hpp"
#include "model.hpp"
#include "params.hpp"

namespace dira {

inline constexpr char kFisherMagic[4] = {'D', 'I', 'R', 'F'};

/// Diagonal empirical Fisher information: per-parameter mean of squared
/// log-likelihood gradients, estimated sample by sample with the true labels.
/// Tied to the source model by a content digest.
struct FisherDiag {
    ParamSet entries;  // nonnegative, aligned 1:1 with the model's ParamSet
    int64_t n_samples = 0;
    uint64_t source_checkpoint_hash = 0;
};

/// Per-sample (batch size 1) squared-gradient average over n_samples items
/// drawn without replacement. The model is expected to hold the converged
/// source parameters; only gradient state is touched.
FisherDiag estimate_fisher(Model& model, const LabeledSet& data, int64_t n_samples, uint64_t seed);

void save_fisher(const FisherDiag& fisher, const std::string& path);

/// Plain load; trusts the stored digest.
FisherDiag load_fisher(const std::string& path);

/// Load plus integrity check against the companion model's parameters.
FisherDiag load_fisher(const std::string& path, const Model& companion);

}  // namespace dira
