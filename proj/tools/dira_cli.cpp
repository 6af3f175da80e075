// dira command-line harness. Links only the public C API; everything heavier
// lives behind libdira.
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dira/dira.h"

using nlohmann::json;

namespace {

int fail(dira_status status) {
    fprintf(stderr, "error: %s\n", dira_last_error());
    return static_cast<int>(status);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CLI::ValidationError("--config", "cannot open '" + path + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

// Flags mirror the config schema; a --config file provides the base and any
// flags given on the command line override it.
struct CommonFlags {
    std::string config_path;
    std::string dataset;
    std::string output_dir;
    std::string arch;
    std::vector<int64_t> input;
    int classes = 0;
    std::vector<int64_t> hidden;
    uint64_t model_seed = 0;
    bool model_seed_set = false;
    std::vector<std::string> corruptions;
    std::vector<std::string> schedule;
    std::vector<int64_t> sample_counts;
    std::vector<std::string> methods;
    double eta = 0.0;
    bool eta_set = false;
    double lambda = 0.0;
    bool lambda_set = false;
    int epochs = 0;
    int batch_size = -1;
    double train_eta = 0.0;
    bool train_eta_set = false;
    int train_batch = 0;
    int train_max_epochs = 0;
    int64_t fisher_samples = 0;
    std::vector<uint64_t> seeds;
    uint64_t seed = 0;
    bool seed_set = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "JSON config file; flags override its fields");
    cmd->add_option("--dataset", f.dataset,
                    "dataset: IDX directory, blobs:<k=v,...> or glyphs:<k=v,...>");
    cmd->add_option("--output-dir", f.output_dir, "directory for artifacts and results");
    cmd->add_option("--arch", f.arch, "model architecture: mlp or cnn-small");
    cmd->add_option("--input", f.input, "model input shape, e.g. 1 10 10");
    cmd->add_option("--classes", f.classes, "number of classes");
    cmd->add_option("--hidden", f.hidden, "hidden widths (mlp) or channels (cnn-small)");
    cmd->add_option("--model-seed", f.model_seed, "model init seed")->each([&](const std::string&) {
        f.model_seed_set = true;
    });
    cmd->add_option("--corruptions", f.corruptions, "corruption list, e.g. gaussian_noise:5 contrast:3");
    cmd->add_option("--schedule", f.schedule, "ordered domain schedule (dynamic)");
    cmd->add_option("--sample-counts", f.sample_counts, "target sample counts");
    cmd->add_option("--methods", f.methods, "subset of: source sgd_high sgd_low dira");
    cmd->add_option("--eta", f.eta, "adaptation learning rate")->each([&](const std::string&) {
        f.eta_set = true;
    });
    cmd->add_option("--lambda", f.lambda, "EWC penalty weight")->each([&](const std::string&) {
        f.lambda_set = true;
    });
    cmd->add_option("--epochs", f.epochs, "adaptation epochs");
    cmd->add_option("--batch-size", f.batch_size, "adaptation batch size (0: min(32, n))");
    cmd->add_option("--train-eta", f.train_eta, "source training learning rate")
        ->each([&](const std::string&) { f.train_eta_set = true; });
    cmd->add_option("--train-batch", f.train_batch, "source training batch size");
    cmd->add_option("--train-max-epochs", f.train_max_epochs, "source training epoch cap");
    cmd->add_option("--fisher-samples", f.fisher_samples, "samples for the Fisher estimate");
    cmd->add_option("--seeds", f.seeds, "experiment seeds (one run per seed)");
    cmd->add_option("--seed", f.seed, "master seed")->each([&](const std::string&) { f.seed_set = true; });
}

std::string build_config(const CommonFlags& f) {
    json j = json::object();
    if (!f.config_path.empty()) j = json::parse(read_file(f.config_path));

    if (!f.dataset.empty()) j["dataset"] = f.dataset;
    if (!f.output_dir.empty()) j["output_dir"] = f.output_dir;
    if (!f.arch.empty()) j["model"]["arch"] = f.arch;
    if (!f.input.empty()) j["model"]["input"] = f.input;
    if (f.classes > 0) j["model"]["classes"] = f.classes;
    if (!f.hidden.empty()) j["model"]["hidden"] = f.hidden;
    if (f.model_seed_set) j["model"]["seed"] = f.model_seed;
    if (!f.corruptions.empty()) j["corruptions"] = f.corruptions;
    if (!f.schedule.empty()) j["schedule"] = f.schedule;
    if (!f.sample_counts.empty()) j["sample_counts"] = f.sample_counts;
    if (!f.methods.empty()) j["methods"] = f.methods;
    if (f.eta_set) j["adapt"]["eta"] = f.eta;
    if (f.lambda_set) j["adapt"]["lambda"] = f.lambda;
    if (f.epochs > 0) j["adapt"]["epochs"] = f.epochs;
    if (f.batch_size >= 0) j["adapt"]["batch_size"] = f.batch_size;
    if (f.train_eta_set) j["train"]["eta"] = f.train_eta;
    if (f.train_batch > 0) j["train"]["batch_size"] = f.train_batch;
    if (f.train_max_epochs > 0) j["train"]["max_epochs"] = f.train_max_epochs;
    if (f.fisher_samples > 0) j["fisher_samples"] = f.fisher_samples;
    if (!f.seeds.empty()) j["seeds"] = f.seeds;
    if (f.seed_set) j["seed"] = f.seed;
    return j.dump(2) + "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DIRA: few-sample domain-incremental adaptation harness"};
    app.require_subcommand(1);

    CommonFlags train_flags, sweep_flags, dynamic_flags;

    CLI::App* train = app.add_subcommand("train-source", "train M0 on the source domain and estimate F0");
    add_common_flags(train, train_flags);

    CLI::App* sweep =
        app.add_subcommand("sweep", "samples-vs-accuracy grid over corruptions, methods and seeds");
    add_common_flags(sweep, sweep_flags);

    CLI::App* dynamic = app.add_subcommand("dynamic", "consecutive domain-shift scenario (restart from M0)");
    add_common_flags(dynamic, dynamic_flags);

    std::string report_csv, report_out;
    int64_t report_at_n = 0;
    CLI::App* report = app.add_subcommand("report", "render per-corruption tables and curves from a CSV");
    report->add_option("csv", report_csv, "results CSV produced by sweep or dynamic")->required();
    report->add_option("--output-dir", report_out, "directory for report files")->required();
    report->add_option("--at-n", report_at_n, "sample count for the table (default: largest present)");

    std::string gen_out;
    int gen_classes = 10, gen_train = 150, gen_test = 40, gen_hw = 10;
    uint64_t gen_seed = 7;
    CLI::App* gen = app.add_subcommand("gen-data", "write a procedural glyph dataset as IDX files");
    gen->add_option("--output-dir", gen_out, "destination directory")->required();
    gen->add_option("--classes", gen_classes, "number of classes");
    gen->add_option("--train-per-class", gen_train, "training items per class");
    gen->add_option("--test-per-class", gen_test, "test items per class");
    gen->add_option("--hw", gen_hw, "image height and width");
    gen->add_option("--seed", gen_seed, "generator seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            const std::string cfg = build_config(train_flags);
            if (dira_status s = dira_cmd_train_source(cfg.c_str())) return fail(s);
        } else if (sweep->parsed()) {
            const std::string cfg = build_config(sweep_flags);
            if (dira_status s = dira_cmd_sweep(cfg.c_str())) return fail(s);
        } else if (dynamic->parsed()) {
            const std::string cfg = build_config(dynamic_flags);
            if (dira_status s = dira_cmd_dynamic(cfg.c_str())) return fail(s);
        } else if (report->parsed()) {
            if (dira_status s = dira_cmd_report(report_csv.c_str(), report_out.c_str(), report_at_n))
                return fail(s);
        } else if (gen->parsed()) {
            if (dira_status s =
                    dira_cmd_gen_data(gen_out.c_str(), gen_classes, gen_train, gen_test, gen_hw, gen_hw, gen_seed))
                return fail(s);
        }
    } catch (const json::exception& e) {
        fprintf(stderr, "error: config: %s\n", e.what());
        return 2;
    } catch (const CLI::Error& e) {
        return app.exit(e);
    }
    return 0;
}
