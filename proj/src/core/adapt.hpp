#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "data.hpp"
#include "fisher.hpp"
#include "model.hpp"

namespace dira {

/// Hyperparameters of one adaptation run. The penalty weight follows the
/// lambda/2 convention, i.e. the loss is L_T + sum_j (lambda/2) F_j (theta_j
/// - theta*_j)^2.
struct AdaptConfig {
    double eta = 1e-5;
    double lambda = 1.0;
    int epochs = 10;
    int batch_size = 0;  // <= 0 means min(32, |S_T|)
    uint64_t seed = 0;

    void validate() const;
    int64_t effective_batch(int64_t n_samples) const;
};

struct StepLoss {
    float task = 0.0f;
    float penalty = 0.0f;
};

struct AdaptResult {
    ParamSet adapted_params;
    std::vector<StepLoss> loss_trace;
    int64_t n_samples_used = 0;
    AdaptConfig config_echo;
    ModelSpec model_spec;  // spec of the source model, for materializing
};

/// sum_j (lambda/2) * F_j * (theta_j - theta_star_j)^2 as a scalar on the
/// active tape; differentiable with respect to theta.
Tensor ewc_penalty(const ParamSet& theta, const ParamSet& theta_star, const FisherDiag& fisher,
                   double lambda);

/// Core loop shared by DIRA and the naive baseline: restarts from a fresh
/// copy of m0, runs epochs x ceil(|S_T|/batch) SGD steps on the penalized
/// loss, and never mutates m0 itself. fisher may be null (plain SGD).
AdaptResult adapt_run(const Model& m0, const FisherDiag* fisher, const LabeledSet& target_samples,
                      const AdaptConfig& cfg);

/// Loads M0 and F0 from disk (with the Fisher integrity check) and adapts.
AdaptResult dira_adapt(const std::string& m0_path, const std::string& fisher_path,
                       const LabeledSet& target_samples, const AdaptConfig& cfg);

/// SGD-only baseline; definitionally dira_adapt with lambda = 0.
AdaptResult naive_sgd_adapt(const std::string& m0_path, const LabeledSet& target_samples, double eta,
                            int epochs, int batch_size, uint64_t seed);

/// Top-1 accuracy in [0,1]; argmax ties break toward the lowest class index.
double evaluate(const Model& model, const LabeledSet& data);

/// Rebuilds a live model from a spec plus parameter values.
Model materialize(const ModelSpec& spec, const ParamSet& params);

}  // namespace dira
