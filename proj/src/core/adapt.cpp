#include "adapt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "checkpoint.hpp"
#include "rng.hpp"

namespace dira {

void AdaptConfig::validate() const {
    if (!(eta > 0.0)) throw ConfigError("adapt config: eta must be > 0");
    if (lambda < 0.0) throw ConfigError("adapt config: lambda must be >= 0");
    if (epochs < 1) throw ConfigError("adapt config: epochs must be >= 1");
}

int64_t AdaptConfig::effective_batch(int64_t n_samples) const {
    if (batch_size > 0) return std::min<int64_t>(batch_size, n_samples);
    return std::min<int64_t>(32, n_samples);
}

Tensor ewc_penalty(const ParamSet& theta, const ParamSet& theta_star, const FisherDiag& fisher,
                   double lambda) {
    if (theta.size() != theta_star.size() || theta.size() != fisher.entries.size())
        throw ConfigError("ewc_penalty: parameter structures have different entry counts");
    for (size_t i = 0; i < theta.size(); ++i) {
        const auto& t = theta.entry(i);
        const auto& s = theta_star.entry(i);
        const auto& f = fisher.entries.entry(i);
        if (t.name != s.name || t.name != f.name)
            throw ConfigError("ewc_penalty: entry " + std::to_string(i) + " misaligned: '" + t.name +
                              "' vs '" + s.name + "' vs '" + f.name + "'");
        if (t.tensor.shape() != s.tensor.shape() || t.tensor.shape() != f.tensor.shape())
            throw ConfigError("ewc_penalty: entry '" + t.name + "' has mismatched shapes");
    }
    if (lambda == 0.0) return Tensor::scalar(0.0f);

    Tensor total;
    for (size_t i = 0; i < theta.size(); ++i) {
        Tensor diff = sub(theta.entry(i).tensor, theta_star.entry(i).tensor);
        Tensor term = sum(mul(fisher.entries.entry(i).tensor, mul(diff, diff)));
        total = total.defined() ? add(total, term) : term;
    }
    return scale(total, static_cast<float>(lambda / 2.0));
}

AdaptResult adapt_run(const Model& m0, const FisherDiag* fisher, const LabeledSet& target_samples,
                      const AdaptConfig& cfg) {
    cfg.validate();
    if (target_samples.size() < 1) throw ConfigError("adapt: target sample set is empty");
    target_samples.validate();

    // Fresh restart from M0 every time; the caller's model stays untouched.
    Model model = materialize(m0.spec(), m0.params());
    const ParamSet theta_star = m0.params().clone();

    const int64_t n = target_samples.size();
    const int64_t batch = cfg.effective_batch(n);
    const bool use_penalty = fisher != nullptr && cfg.lambda > 0.0;
    const float eta = static_cast<float>(cfg.eta);

    AdaptResult result;
    result.n_samples_used = n;
    result.config_echo = cfg;
    result.model_spec = m0.spec();

    Rng rng(cfg.seed);
    std::vector<int64_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    int64_t step_index = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (int64_t at = 0; at < n; at += batch) {
            const auto first = order.begin() + at;
            const auto last = order.begin() + std::min(n, at + batch);
            const std::vector<int64_t> chunk(first, last);

            Tape tape;
            Tensor task = softmax_cross_entropy(model.forward(target_samples.gather_images(chunk)),
                                                target_samples.gather_labels(chunk));
            Tensor total = task;
            float penalty_value = 0.0f;
            if (use_penalty) {
                Tensor penalty = ewc_penalty(model.params(), theta_star, *fisher, cfg.lambda);
                penalty_value = penalty.item();
                total = add(task, penalty);
            }
            if (!std::isfinite(task.item()) || !std::isfinite(penalty_value))
                throw NumericError("adapt: non-finite loss at step " + std::to_string(step_index));

            tape.backward(total);
            for (auto& e : model.params()) {
                if (!e.tensor.has_grad()) continue;
                float* p = e.tensor.data().data();
                const float* g = e.tensor.grad().data();
                for (int64_t j = 0; j < e.tensor.numel(); ++j) p[j] -= eta * g[j];
                e.tensor.zero_grad();
            }
            result.loss_trace.push_back({task.item(), penalty_value});
            ++step_index;
        }
    }
    result.adapted_params = model.params().clone();
    return result;
}

AdaptResult dira_adapt(const std::string& m0_path, const std::string& fisher_path,
                       const LabeledSet& target_samples, const AdaptConfig& cfg) {
    Model m0 = load_model(m0_path);
    FisherDiag fisher = load_fisher(fisher_path, m0);
    return adapt_run(m0, &fisher, target_samples, cfg);
}

AdaptResult naive_sgd_adapt(const std::string& m0_path, const LabeledSet& target_samples, double eta,
                            int epochs, int batch_size, uint64_t seed) {
    Model m0 = load_model(m0_path);
    AdaptConfig cfg;
    cfg.eta = eta;
    cfg.lambda = 0.0;
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.seed = seed;
    return adapt_run(m0, nullptr, target_samples, cfg);
}

double evaluate(const Model& model, const LabeledSet& data) {
    if (data.size() < 1) throw ConfigError("evaluate: dataset is empty");
    const int64_t n = data.size();
    const int64_t chunk = 256;
    const int classes = model.spec().num_classes;
    int64_t correct = 0;
    for (int64_t at = 0; at < n; at += chunk) {
        std::vector<int64_t> idx;
        for (int64_t i = at; i < std::min(n, at + chunk); ++i) idx.push_back(i);
        Tensor logits = model.forward(data.gather_images(idx));
        const float* ld = logits.data().data();
        for (size_t r = 0; r < idx.size(); ++r) {
            int best = 0;
            for (int j = 1; j < classes; ++j)
                if (ld[r * classes + j] > ld[r * classes + best]) best = j;
            if (best == data.labels[static_cast<size_t>(idx[r])]) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

Model materialize(const ModelSpec& spec, const ParamSet& params) {
    Model model = Model::build(spec);
    model.restore(params);
    return model;
}

}  // namespace dira
