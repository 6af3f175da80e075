#include "dira/dira.h"

#include <cstring>
#include <string>

#include "core/adapt.hpp"
#include "core/checkpoint.hpp"
#include "core/corrupt.hpp"
#include "core/data.hpp"
#include "core/error.hpp"
#include "core/fisher.hpp"
#include "core/harness.hpp"
#include "core/train.hpp"

namespace {

thread_local std::string g_last_error;

dira_status status_of(const dira::Error& e) { return static_cast<dira_status>(static_cast<int>(e.code())); }

// Runs the body, translating exceptions into status codes + last-error text.
template <typename Fn>
dira_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return DIRA_OK;
    } catch (const dira::Error& e) {
        g_last_error = e.what();
        return status_of(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return DIRA_ERR_INTERNAL;
    }
}

dira_status require(bool ok, const char* message) {
    if (ok) return DIRA_OK;
    g_last_error = message;
    return DIRA_ERR_CONFIG;
}

dira::LabeledSet* unwrap(dira_dataset* p) { return reinterpret_cast<dira::LabeledSet*>(p); }
const dira::LabeledSet* unwrap(const dira_dataset* p) { return reinterpret_cast<const dira::LabeledSet*>(p); }
dira::Model* unwrap(dira_model* p) { return reinterpret_cast<dira::Model*>(p); }
const dira::Model* unwrap(const dira_model* p) { return reinterpret_cast<const dira::Model*>(p); }
dira::FisherDiag* unwrap(dira_fisher* p) { return reinterpret_cast<dira::FisherDiag*>(p); }
const dira::FisherDiag* unwrap(const dira_fisher* p) { return reinterpret_cast<const dira::FisherDiag*>(p); }
dira::AdaptResult* unwrap(dira_adapt_result* p) { return reinterpret_cast<dira::AdaptResult*>(p); }
const dira::AdaptResult* unwrap(const dira_adapt_result* p) {
    return reinterpret_cast<const dira::AdaptResult*>(p);
}

dira_dataset* wrap(dira::LabeledSet* p) { return reinterpret_cast<dira_dataset*>(p); }
dira_model* wrap(dira::Model* p) { return reinterpret_cast<dira_model*>(p); }
dira_fisher* wrap(dira::FisherDiag* p) { return reinterpret_cast<dira_fisher*>(p); }
dira_adapt_result* wrap(dira::AdaptResult* p) { return reinterpret_cast<dira_adapt_result*>(p); }

}  // namespace

extern "C" {

const char* dira_version(void) { return "0.1.0"; }

const char* dira_last_error(void) { return g_last_error.c_str(); }

/* --- datasets ---------------------------------------------------------- */

dira_status dira_dataset_load_idx(const char* images_path, const char* labels_path, dira_dataset** out) {
    if (auto s = require(images_path && labels_path && out, "dira_dataset_load_idx: null argument"))
        return s;
    return guarded([&] { *out = wrap(new dira::LabeledSet(dira::load_idx(images_path, labels_path))); });
}

dira_status dira_dataset_make_blobs(int num_classes, int n_per_class, int input_dim,
                                    double class_separation, uint64_t seed, dira_dataset** out) {
    if (auto s = require(out != nullptr, "dira_dataset_make_blobs: null output")) return s;
    return guarded([&] {
        *out = wrap(new dira::LabeledSet(
            dira::make_synthetic(num_classes, n_per_class, input_dim, class_separation, seed)));
    });
}

dira_status dira_dataset_make_glyphs(int num_classes, int n_per_class, int height, int width,
                                     uint64_t seed, dira_dataset** out) {
    if (auto s = require(out != nullptr, "dira_dataset_make_glyphs: null output")) return s;
    return guarded([&] {
        *out = wrap(new dira::LabeledSet(
            dira::make_glyph_images(num_classes, n_per_class, height, width, seed)));
    });
}

dira_status dira_dataset_split(const dira_dataset* set, double fraction, uint64_t seed,
                               dira_dataset** first_out, dira_dataset** second_out) {
    if (auto s = require(set && first_out && second_out, "dira_dataset_split: null argument")) return s;
    return guarded([&] {
        auto [a, b] = dira::split(*unwrap(set), fraction, seed);
        *first_out = wrap(new dira::LabeledSet(std::move(a)));
        *second_out = wrap(new dira::LabeledSet(std::move(b)));
    });
}

dira_status dira_dataset_sample(const dira_dataset* set, int64_t n, uint64_t seed, dira_dataset** out) {
    if (auto s = require(set && out, "dira_dataset_sample: null argument")) return s;
    return guarded([&] { *out = wrap(new dira::LabeledSet(dira::sample_target(*unwrap(set), n, seed))); });
}

dira_status dira_dataset_corrupt(const dira_dataset* set, const char* kind, int severity, uint64_t seed,
                                 dira_dataset** out) {
    if (auto s = require(set && kind && out, "dira_dataset_corrupt: null argument")) return s;
    return guarded([&] {
        const dira::LabeledSet& base = *unwrap(set);
        dira::CorruptionSpec spec{dira::corruption_from_name(kind), severity, seed};
        auto* result = new dira::LabeledSet;
        result->images = dira::corrupt(base.images, spec);
        result->labels = base.labels;
        result->num_classes = base.num_classes;
        result->name = base.name + "/" + kind;
        *out = wrap(result);
    });
}

int64_t dira_dataset_size(const dira_dataset* set) { return set ? unwrap(set)->size() : 0; }

int dira_dataset_num_classes(const dira_dataset* set) { return set ? unwrap(set)->num_classes : 0; }

void dira_dataset_free(dira_dataset* set) { delete unwrap(set); }

/* --- models -------------------------------------------------------------- */

dira_status dira_model_build(const char* spec_text, dira_model** out) {
    if (auto s = require(spec_text && out, "dira_model_build: null argument")) return s;
    return guarded([&] {
        *out = wrap(new dira::Model(dira::Model::build(dira::ModelSpec::from_text(spec_text))));
    });
}

dira_status dira_model_load(const char* path, dira_model** out) {
    if (auto s = require(path && out, "dira_model_load: null argument")) return s;
    return guarded([&] { *out = wrap(new dira::Model(dira::load_model(path))); });
}

dira_status dira_model_save(const dira_model* model, const char* path) {
    if (auto s = require(model && path, "dira_model_save: null argument")) return s;
    return guarded([&] { dira::save_model(*unwrap(model), path); });
}

dira_status dira_model_evaluate(const dira_model* model, const dira_dataset* data, double* top1) {
    if (auto s = require(model && data && top1, "dira_model_evaluate: null argument")) return s;
    return guarded([&] { *top1 = dira::evaluate(*unwrap(model), *unwrap(data)); });
}

void dira_model_free(dira_model* model) { delete unwrap(model); }

/* --- training and Fisher --------------------------------------------------- */

dira_status dira_train_source(dira_model* model, const dira_dataset* train_set, double eta, int batch_size,
                              int max_epochs, uint64_t seed, double* final_loss_out) {
    if (auto s = require(model && train_set, "dira_train_source: null argument")) return s;
    return guarded([&] {
        dira::TrainConfig cfg;
        cfg.eta = eta;
        cfg.batch_size = batch_size;
        cfg.max_epochs = max_epochs;
        cfg.seed = seed;
        const dira::TrainStats stats = dira::train_source(*unwrap(model), *unwrap(train_set), cfg);
        if (final_loss_out) *final_loss_out = stats.final_loss;
    });
}

dira_status dira_fisher_estimate(dira_model* model, const dira_dataset* data, int64_t n_samples,
                                 uint64_t seed, dira_fisher** out) {
    if (auto s = require(model && data && out, "dira_fisher_estimate: null argument")) return s;
    return guarded([&] {
        *out = wrap(new dira::FisherDiag(
            dira::estimate_fisher(*unwrap(model), *unwrap(data), n_samples, seed)));
    });
}

dira_status dira_fisher_save(const dira_fisher* fisher, const char* path) {
    if (auto s = require(fisher && path, "dira_fisher_save: null argument")) return s;
    return guarded([&] { dira::save_fisher(*unwrap(fisher), path); });
}

dira_status dira_fisher_load(const char* path, const dira_model* companion, dira_fisher** out) {
    if (auto s = require(path && out, "dira_fisher_load: null argument")) return s;
    return guarded([&] {
        *out = wrap(new dira::FisherDiag(companion ? dira::load_fisher(path, *unwrap(companion))
                                                   : dira::load_fisher(path)));
    });
}

void dira_fisher_free(dira_fisher* fisher) { delete unwrap(fisher); }

/* --- adaptation ------------------------------------------------------------ */

void dira_adapt_config_init(dira_adapt_config* cfg) {
    if (!cfg) return;
    const dira::AdaptConfig defaults;
    cfg->eta = defaults.eta;
    cfg->lambda = defaults.lambda;
    cfg->epochs = defaults.epochs;
    cfg->batch_size = defaults.batch_size;
    cfg->seed = defaults.seed;
}

namespace {

dira::AdaptConfig to_core(const dira_adapt_config& cfg) {
    dira::AdaptConfig out;
    out.eta = cfg.eta;
    out.lambda = cfg.lambda;
    out.epochs = cfg.epochs;
    out.batch_size = cfg.batch_size;
    out.seed = cfg.seed;
    return out;
}

}  // namespace

dira_status dira_adapt(const char* m0_path, const char* fisher_path, const dira_dataset* target_samples,
                       const dira_adapt_config* cfg, dira_adapt_result** out) {
    if (auto s = require(m0_path && fisher_path && target_samples && cfg && out,
                         "dira_adapt: null argument"))
        return s;
    return guarded([&] {
        *out = wrap(new dira::AdaptResult(
            dira::dira_adapt(m0_path, fisher_path, *unwrap(target_samples), to_core(*cfg))));
    });
}

dira_status dira_sgd_adapt(const char* m0_path, const dira_dataset* target_samples, double eta, int epochs,
                           int batch_size, uint64_t seed, dira_adapt_result** out) {
    if (auto s = require(m0_path && target_samples && out, "dira_sgd_adapt: null argument")) return s;
    return guarded([&] {
        *out = wrap(new dira::AdaptResult(
            dira::naive_sgd_adapt(m0_path, *unwrap(target_samples), eta, epochs, batch_size, seed)));
    });
}

int64_t dira_adapt_result_steps(const dira_adapt_result* result) {
    return result ? static_cast<int64_t>(unwrap(result)->loss_trace.size()) : 0;
}

dira_status dira_adapt_result_loss(const dira_adapt_result* result, int64_t step, double* task_loss,
                                   double* penalty) {
    if (auto s = require(result != nullptr, "dira_adapt_result_loss: null result")) return s;
    const auto& trace = unwrap(result)->loss_trace;
    if (step < 0 || step >= static_cast<int64_t>(trace.size())) {
        g_last_error = "dira_adapt_result_loss: step out of range";
        return DIRA_ERR_CONFIG;
    }
    if (task_loss) *task_loss = trace[static_cast<size_t>(step)].task;
    if (penalty) *penalty = trace[static_cast<size_t>(step)].penalty;
    return DIRA_OK;
}

dira_status dira_adapt_result_model(const dira_adapt_result* result, dira_model** out) {
    if (auto s = require(result && out, "dira_adapt_result_model: null argument")) return s;
    return guarded([&] {
        const dira::AdaptResult& r = *unwrap(result);
        *out = wrap(new dira::Model(dira::materialize(r.model_spec, r.adapted_params)));
    });
}

void dira_adapt_result_free(dira_adapt_result* result) { delete unwrap(result); }

/* --- harness ---------------------------------------------------------------- */

dira_status dira_cmd_train_source(const char* config_json) {
    if (auto s = require(config_json != nullptr, "dira_cmd_train_source: null config")) return s;
    return guarded(
        [&] { dira::harness::cmd_train_source(dira::harness::ExperimentConfig::from_json_text(config_json)); });
}

dira_status dira_cmd_sweep(const char* config_json) {
    if (auto s = require(config_json != nullptr, "dira_cmd_sweep: null config")) return s;
    return guarded(
        [&] { dira::harness::cmd_sweep(dira::harness::ExperimentConfig::from_json_text(config_json)); });
}

dira_status dira_cmd_dynamic(const char* config_json) {
    if (auto s = require(config_json != nullptr, "dira_cmd_dynamic: null config")) return s;
    return guarded(
        [&] { dira::harness::cmd_dynamic(dira::harness::ExperimentConfig::from_json_text(config_json)); });
}

dira_status dira_cmd_report(const char* results_csv_path, const char* output_dir, int64_t at_n) {
    if (auto s = require(results_csv_path && output_dir, "dira_cmd_report: null argument")) return s;
    return guarded([&] { dira::harness::cmd_report(results_csv_path, output_dir, at_n); });
}

dira_status dira_cmd_gen_data(const char* output_dir, int num_classes, int per_class_train,
                              int per_class_test, int height, int width, uint64_t seed) {
    if (auto s = require(output_dir != nullptr, "dira_cmd_gen_data: null output_dir")) return s;
    return guarded([&] {
        dira::harness::cmd_gen_data(output_dir, num_classes, per_class_train, per_class_test, height,
                                    width, seed);
    });
}

}  // extern "C"
