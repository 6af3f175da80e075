#include "train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rng.hpp"

namespace dira {

TrainStats train_source(Model& model, const LabeledSet& train, const TrainConfig& cfg) {
    if (train.size() < 1) throw ConfigError("train_source: training set is empty");
    if (!(cfg.eta > 0.0) || cfg.batch_size < 1 || cfg.max_epochs < 1)
        throw ConfigError("train_source: eta, batch_size and max_epochs must be positive");

    const int64_t n = train.size();
    const int64_t batch = std::min<int64_t>(cfg.batch_size, n);
    const float eta = static_cast<float>(cfg.eta);

    Rng rng(cfg.seed);
    std::vector<int64_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    TrainStats stats;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (int64_t at = 0; at < n; at += batch) {
            const std::vector<int64_t> chunk(order.begin() + at, order.begin() + std::min(n, at + batch));
            Tape tape;
            Tensor loss = softmax_cross_entropy(model.forward(train.gather_images(chunk)),
                                                train.gather_labels(chunk));
            const float value = loss.item();
            if (!std::isfinite(value)) {
                std::ostringstream os;
                os << "train_source: non-finite loss in epoch " << epoch << "; trace:";
                for (double l : stats.epoch_losses) os << " " << l;
                throw NumericError(os.str());
            }
            loss_sum += static_cast<double>(value) * static_cast<double>(chunk.size());
            tape.backward(loss);
            for (auto& e : model.params()) {
                if (!e.tensor.has_grad()) continue;
                float* p = e.tensor.data().data();
                const float* g = e.tensor.grad().data();
                for (int64_t j = 0; j < e.tensor.numel(); ++j) p[j] -= eta * g[j];
                e.tensor.zero_grad();
            }
        }
        stats.epoch_losses.push_back(loss_sum / static_cast<double>(n));
        stats.epochs_run = epoch + 1;

        const size_t e = stats.epoch_losses.size();
        if (e > static_cast<size_t>(cfg.patience)) {
            const double before = stats.epoch_losses[e - 1 - static_cast<size_t>(cfg.patience)];
            const double now = stats.epoch_losses[e - 1];
            if (before - now < cfg.min_improvement) break;
        }
    }
    stats.final_loss = stats.epoch_losses.back();
    return stats;
}

}  // namespace dira
