#pragma once

#include <cstdint>
#include <vector>

#include "data.hpp"
#include "model.hpp"

namespace dira {

/// Source-domain training: plain SGD on cross entropy with early stopping
/// when the epoch loss improves by less than min_improvement over `patience`
/// epochs, capped at max_epochs.
struct TrainConfig {
    double eta = 0.1;
    int batch_size = 32;
    int max_epochs = 200;
    uint64_t seed = 0;
    double min_improvement = 1e-4;
    int patience = 3;
};

struct TrainStats {
    int epochs_run = 0;
    double final_loss = 0.0;
    std::vector<double> epoch_losses;
};

TrainStats train_source(Model& model, const LabeledSet& train, const TrainConfig& cfg);

}  // namespace dira
