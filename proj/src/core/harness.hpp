#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adapt.hpp"
#include "corrupt.hpp"
#include "data.hpp"
#include "model.hpp"
#include "train.hpp"

namespace dira::harness {

/// One experiment cell result. CSV columns are exactly these fields in order.
/// wall_ms is written as 0 in the canonical CSV: every row must be
/// reproducible from (config, seed) alone, so measured timings go to the log
/// stream instead.
struct ResultRow {
    std::string method;
    std::string corruption_kind;
    int severity = 0;
    int64_t n_samples = 0;
    uint64_t seed = 0;
    double top1_source_test = 0.0;
    double top1_target_test = 0.0;
    int64_t wall_ms = 0;
};

std::string csv_header();
std::string csv_line(const ResultRow& row);
std::vector<ResultRow> read_results_csv(const std::string& path);

/// Full experiment description, parsed from canonical JSON text. Unknown keys
/// are rejected so config typos fail loudly.
struct ExperimentConfig {
    std::string dataset;     // "blobs:..." | "glyphs:..." | directory with IDX files
    std::string output_dir;  // artifacts and results land here

    ModelSpec model;
    bool model_arch_given = false;
    bool model_classes_given = false;

    std::vector<CorruptionSpec> corruptions;  // sweep set
    std::vector<CorruptionSpec> schedule;     // dynamic order
    std::vector<int64_t> sample_counts{1, 2, 5, 10, 20, 50, 100};
    std::vector<std::string> methods{"source", "sgd_high", "sgd_low", "dira"};

    AdaptConfig adapt;  // eta/lambda/epochs/batch for dira and sgd_low
    TrainConfig train;
    int64_t fisher_samples = 1000;

    std::vector<uint64_t> seeds{0, 1, 2, 3, 4};
    uint64_t seed = 1;  // master seed for corruption streams and training

    std::string config_text;  // verbatim input, echoed into output_dir

    static ExperimentConfig from_json_text(const std::string& text);
};

/// Resolved dataset: source train/test partitions.
struct DataSplit {
    LabeledSet train;
    LabeledSet test;
};

DataSplit resolve_dataset(const std::string& spec, uint64_t master_seed);

/// train-source: fit M0 on the source train split, estimate F0, persist both
/// plus a metrics file. Fails before any compute if the dataset is missing.
void cmd_train_source(const ExperimentConfig& cfg);

/// sweep: (corruption x n_samples x method x seed) grid, fresh S_T per cell,
/// evaluated on the disjoint corrupted test split and on the clean source
/// test split. Writes results.csv. Cells run in parallel (DIRA_THREADS caps
/// workers); output order is deterministic regardless.
void cmd_sweep(const ExperimentConfig& cfg);

/// dynamic: adapt to the scheduled domains in order, always restarting from
/// M0, logging one row per incremental sample-count checkpoint. Writes
/// dynamic.csv (same schema as sweep).
void cmd_dynamic(const ExperimentConfig& cfg);

/// report: render a per-corruption table (trailing exact mean column) from a
/// results CSV at the given sample count (<=0 means the largest present),
/// plus an SVG of the samples-vs-accuracy curves.
void cmd_report(const std::string& results_csv, const std::string& output_dir, int64_t at_n);

/// gen-data: write a procedural glyph dataset as IDX pairs (train/test).
void cmd_gen_data(const std::string& output_dir, int num_classes, int per_class_train, int per_class_test,
                  int height, int width, uint64_t seed);

}  // namespace dira::harness
