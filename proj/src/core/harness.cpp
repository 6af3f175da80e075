#include "harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "checkpoint.hpp"
#include "error.hpp"
#include "fisher.hpp"
#include "rng.hpp"

namespace dira::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// --- small utilities ----------------------------------------------------

std::string format_acc(double v) {
    char buf[32];
    snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot open '" + path + "' for writing");
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
}

CorruptionSpec parse_corruption(const std::string& text) {
    const auto colon = text.find(':');
    CorruptionSpec spec;
    if (colon == std::string::npos) {
        spec.kind = corruption_from_name(text);
    } else {
        spec.kind = corruption_from_name(text.substr(0, colon));
        try {
            spec.severity = std::stoi(text.substr(colon + 1));
        } catch (const std::exception&) {
            throw ConfigError("bad corruption severity in '" + text + "'");
        }
    }
    if (spec.severity < 1 || spec.severity > 5)
        throw ConfigError("corruption severity in '" + text + "' outside 1..5");
    return spec;
}

std::string corruption_str(const CorruptionSpec& c) {
    return std::string(corruption_name(c.kind)) + ":" + std::to_string(c.severity);
}

void reject_unknown_keys(const json& j, const std::vector<std::string>& known, const char* where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError(std::string("config: unknown key '") + key + "' in " + where);
    }
}

// Worker pool over [0, count); worker count is capped by DIRA_THREADS.
// Results must be written to preallocated, index-addressed slots so output
// is identical for any worker count.
void parallel_cells(int64_t count, const std::function<void(int64_t)>& fn) {
    unsigned workers = std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    if (const char* cap = std::getenv("DIRA_THREADS")) {
        try {
            const long v = std::stol(cap);
            if (v >= 1) workers = std::min<unsigned>(workers, static_cast<unsigned>(v));
        } catch (const std::exception&) {
            throw ConfigError("DIRA_THREADS is not a positive integer");
        }
    }
    workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<int64_t>(count, 1)));

    if (workers <= 1) {
        for (int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int64_t> next{0};
    std::vector<std::thread> pool;
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const int64_t i = next.fetch_add(1);
                if (i >= count || failed.load()) return;
                try {
                    fn(i);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!failed.exchange(true)) first_error = e.what();
                    return;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failed.load()) throw NumericError("sweep cell failed: " + first_error);
}

int64_t key_int(const std::map<std::string, std::string>& kv, const std::string& key, int64_t fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        return std::stoll(it->second);
    } catch (const std::exception&) {
        throw ConfigError("dataset spec: bad integer for '" + key + "'");
    }
}

double key_double(const std::map<std::string, std::string>& kv, const std::string& key, double fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ConfigError("dataset spec: bad number for '" + key + "'");
    }
}

std::map<std::string, std::string> parse_inline_spec(const std::string& body) {
    std::map<std::string, std::string> kv;
    std::istringstream in(body);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw ConfigError("dataset spec: expected key=value, got '" + tok + "'");
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

std::string find_idx_file(const std::string& dir, const std::vector<std::string>& candidates) {
    for (const auto& name : candidates) {
        const fs::path p = fs::path(dir) / name;
        if (fs::exists(p)) return p.string();
    }
    throw ConfigError("dataset directory '" + dir + "' is missing " + candidates.front());
}

}  // namespace

// --- CSV ------------------------------------------------------------------

std::string csv_header() {
    return "method,corruption_kind,severity,n_samples,seed,top1_source_test,top1_target_test,wall_ms";
}

std::string csv_line(const ResultRow& row) {
    std::ostringstream os;
    os << row.method << ',' << row.corruption_kind << ',' << row.severity << ',' << row.n_samples << ','
       << row.seed << ',' << format_acc(row.top1_source_test) << ',' << format_acc(row.top1_target_test)
       << ',' << row.wall_ms;
    return os.str();
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open results CSV '" + path + "'");
    std::string line;
    if (!std::getline(f, line)) throw FormatError(path + ": empty CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        // Validate the header column by column so the offender is named.
        std::istringstream expect(csv_header());
        std::istringstream got(line);
        std::string e, g;
        while (std::getline(expect, e, ',')) {
            if (!std::getline(got, g, ','))
                throw FormatError(path + ": missing CSV column '" + e + "'");
            if (e != g) throw FormatError(path + ": expected column '" + e + "', found '" + g + "'");
        }
        if (std::getline(got, g, ','))
            throw FormatError(path + ": unexpected extra column '" + g + "'");
    }
    std::vector<ResultRow> rows;
    size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream in(line);
        std::string field;
        ResultRow row;
        try {
            std::getline(in, row.method, ',');
            std::getline(in, row.corruption_kind, ',');
            std::getline(in, field, ',');
            row.severity = std::stoi(field);
            std::getline(in, field, ',');
            row.n_samples = std::stoll(field);
            std::getline(in, field, ',');
            row.seed = std::stoull(field);
            std::getline(in, field, ',');
            row.top1_source_test = std::stod(field);
            std::getline(in, field, ',');
            row.top1_target_test = std::stod(field);
            std::getline(in, field, ',');
            row.wall_ms = std::stoll(field);
        } catch (const std::exception&) {
            throw FormatError(path + ": malformed row at line " + std::to_string(lineno));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// --- config ----------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    reject_unknown_keys(j,
                        {"dataset", "output_dir", "model", "corruptions", "schedule", "sample_counts",
                         "methods", "adapt", "train", "fisher_samples", "seeds", "seed"},
                        "top level");

    ExperimentConfig cfg;
    cfg.config_text = text;
    try {
        cfg.dataset = j.value("dataset", std::string());
        cfg.output_dir = j.value("output_dir", std::string());
        cfg.seed = j.value("seed", uint64_t{1});
        cfg.fisher_samples = j.value("fisher_samples", int64_t{1000});

        if (j.contains("model")) {
            const json& m = j["model"];
            reject_unknown_keys(m, {"arch", "input", "classes", "hidden", "seed"}, "model");
            if (m.contains("arch")) {
                cfg.model.arch = arch_from_name(m["arch"].get<std::string>());
                cfg.model_arch_given = true;
            }
            if (m.contains("input")) cfg.model.input_shape = m["input"].get<Shape>();
            if (m.contains("classes")) {
                cfg.model.num_classes = m["classes"].get<int>();
                cfg.model_classes_given = true;
            }
            if (m.contains("hidden")) cfg.model.hidden = m["hidden"].get<std::vector<int64_t>>();
            cfg.model.seed = m.value("seed", uint64_t{1});
        } else {
            cfg.model.seed = 1;
        }

        if (j.contains("corruptions")) {
            cfg.corruptions.clear();
            for (const auto& c : j["corruptions"]) cfg.corruptions.push_back(parse_corruption(c.get<std::string>()));
        }
        if (j.contains("schedule")) {
            cfg.schedule.clear();
            for (const auto& c : j["schedule"]) cfg.schedule.push_back(parse_corruption(c.get<std::string>()));
        }
        if (j.contains("sample_counts")) cfg.sample_counts = j["sample_counts"].get<std::vector<int64_t>>();
        if (j.contains("methods")) cfg.methods = j["methods"].get<std::vector<std::string>>();
        if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<uint64_t>>();

        if (j.contains("adapt")) {
            const json& a = j["adapt"];
            reject_unknown_keys(a, {"eta", "lambda", "epochs", "batch_size"}, "adapt");
            cfg.adapt.eta = a.value("eta", cfg.adapt.eta);
            cfg.adapt.lambda = a.value("lambda", cfg.adapt.lambda);
            cfg.adapt.epochs = a.value("epochs", cfg.adapt.epochs);
            cfg.adapt.batch_size = a.value("batch_size", cfg.adapt.batch_size);
        }
        if (j.contains("train")) {
            const json& t = j["train"];
            reject_unknown_keys(t, {"eta", "batch_size", "max_epochs"}, "train");
            cfg.train.eta = t.value("eta", cfg.train.eta);
            cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
            cfg.train.max_epochs = t.value("max_epochs", cfg.train.max_epochs);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    if (cfg.sample_counts.empty()) throw ConfigError("config: sample_counts must be nonempty");
    for (size_t i = 0; i < cfg.sample_counts.size(); ++i) {
        if (cfg.sample_counts[i] < 1) throw ConfigError("config: sample_counts must be positive");
        if (i > 0 && cfg.sample_counts[i] <= cfg.sample_counts[i - 1])
            throw ConfigError("config: sample_counts must be strictly increasing");
    }
    if (cfg.methods.empty()) throw ConfigError("config: methods must be nonempty");
    for (const auto& m : cfg.methods)
        if (m != "source" && m != "sgd_high" && m != "sgd_low" && m != "dira")
            throw ConfigError("config: unknown method '" + m + "'");
    if (cfg.seeds.empty()) throw ConfigError("config: seeds must be nonempty");
    cfg.adapt.validate();
    return cfg;
}

// --- dataset resolution ------------------------------------------------------

DataSplit resolve_dataset(const std::string& spec, uint64_t master_seed) {
    if (spec.empty()) throw ConfigError("config: dataset is required");

    if (spec.rfind("blobs:", 0) == 0) {
        const auto kv = parse_inline_spec(spec.substr(6));
        const int classes = static_cast<int>(key_int(kv, "classes", 3));
        const int per_class = static_cast<int>(key_int(kv, "per_class", 200));
        const int dim = static_cast<int>(key_int(kv, "dim", 8));
        const double sep = key_double(kv, "sep", 6.0);
        const uint64_t seed = static_cast<uint64_t>(key_int(kv, "seed", static_cast<int64_t>(derive_seed(master_seed, "blobs"))));
        LabeledSet all = make_synthetic(classes, per_class, dim, sep, seed);
        auto [train, test] = split(all, 0.8, derive_seed(master_seed, "split"));
        return {std::move(train), std::move(test)};
    }

    if (spec.rfind("glyphs:", 0) == 0) {
        const auto kv = parse_inline_spec(spec.substr(7));
        const int classes = static_cast<int>(key_int(kv, "classes", 10));
        const int train_pc = static_cast<int>(key_int(kv, "train_per_class", 150));
        const int test_pc = static_cast<int>(key_int(kv, "test_per_class", 40));
        const int hw = static_cast<int>(key_int(kv, "hw", 10));
        const uint64_t seed = static_cast<uint64_t>(key_int(kv, "seed", 7));
        LabeledSet all = make_glyph_images(classes, train_pc + test_pc, hw, hw, seed);
        // Per-class partition: instance streams are iid, so the first
        // train_pc items of each class form the train split.
        std::vector<int64_t> train_idx, test_idx;
        for (int k = 0; k < classes; ++k)
            for (int i = 0; i < train_pc + test_pc; ++i)
                (i < train_pc ? train_idx : test_idx)
                    .push_back(static_cast<int64_t>(k) * (train_pc + test_pc) + i);
        DataSplit out;
        out.train.images = all.gather_images(train_idx);
        out.train.labels = all.gather_labels(train_idx);
        out.train.num_classes = classes;
        out.train.name = "glyphs/train";
        out.test.images = all.gather_images(test_idx);
        out.test.labels = all.gather_labels(test_idx);
        out.test.num_classes = classes;
        out.test.name = "glyphs/test";
        return out;
    }

    if (!fs::exists(spec)) throw ConfigError("dataset path '" + spec + "' does not exist");
    if (!fs::is_directory(spec)) throw ConfigError("dataset path '" + spec + "' is not a directory");
    const std::string train_images =
        find_idx_file(spec, {"train-images-idx3-ubyte", "train-images.idx", "train-images.idx3-ubyte"});
    const std::string train_labels =
        find_idx_file(spec, {"train-labels-idx1-ubyte", "train-labels.idx", "train-labels.idx1-ubyte"});
    const std::string test_images =
        find_idx_file(spec, {"t10k-images-idx3-ubyte", "test-images-idx3-ubyte", "test-images.idx"});
    const std::string test_labels =
        find_idx_file(spec, {"t10k-labels-idx1-ubyte", "test-labels-idx1-ubyte", "test-labels.idx"});
    DataSplit out{load_idx(train_images, train_labels), load_idx(test_images, test_labels)};
    const int classes = std::max(out.train.num_classes, out.test.num_classes);
    out.train.num_classes = classes;
    out.test.num_classes = classes;
    return out;
}

// --- shared command plumbing --------------------------------------------------

namespace {

struct Artifacts {
    Model m0;
    FisherDiag fisher;
};

std::string m0_path(const ExperimentConfig& cfg) { return (fs::path(cfg.output_dir) / "m0.dira").string(); }
std::string f0_path(const ExperimentConfig& cfg) { return (fs::path(cfg.output_dir) / "f0.dirf").string(); }

Artifacts load_artifacts(const ExperimentConfig& cfg) {
    if (!fs::exists(m0_path(cfg)) || !fs::exists(f0_path(cfg)))
        throw ConfigError("artifacts not found under '" + cfg.output_dir + "' (run train-source first)");
    Model m0 = load_model(m0_path(cfg));
    FisherDiag fisher = load_fisher(f0_path(cfg), m0);
    return {std::move(m0), std::move(fisher)};
}

ModelSpec resolve_model_spec(const ExperimentConfig& cfg, const DataSplit& data) {
    ModelSpec spec = cfg.model;
    const Shape item = data.train.item_shape();
    if (spec.input_shape.empty()) spec.input_shape = item;
    if (!cfg.model_arch_given)
        spec.arch = (item.size() == 3 && (item[1] > 1 || item[2] > 1)) ? Arch::cnn_small : Arch::mlp;
    if (spec.hidden.empty()) spec.hidden = spec.arch == Arch::cnn_small ? std::vector<int64_t>{8, 16}
                                                                        : std::vector<int64_t>{16};
    if (!cfg.model_classes_given) spec.num_classes = data.train.num_classes;
    spec.validate();
    return spec;
}

LabeledSet corrupt_set(const LabeledSet& base, const CorruptionSpec& c, uint64_t stream_seed,
                       const char* tag) {
    LabeledSet out;
    out.images = corrupt(base.images, {c.kind, c.severity, stream_seed});
    out.labels = base.labels;
    out.num_classes = base.num_classes;
    out.name = base.name + "/" + corruption_str(c) + "/" + tag;
    return out;
}

void echo_config(const ExperimentConfig& cfg, const char* command) {
    write_text_file((fs::path(cfg.output_dir) / (std::string("config.") + command + ".json")).string(),
                    cfg.config_text);
}

AdaptConfig method_adapt_config(const ExperimentConfig& cfg, const std::string& method, uint64_t seed) {
    AdaptConfig ac = cfg.adapt;
    ac.seed = seed;
    if (method == "sgd_low") ac.lambda = 0.0;
    if (method == "sgd_high") {
        ac.lambda = 0.0;
        ac.eta = 1e-2;
    }
    return ac;
}

}  // namespace

// --- commands -------------------------------------------------------------

void cmd_train_source(const ExperimentConfig& cfg) {
    if (cfg.output_dir.empty()) throw ConfigError("config: output_dir is required");
    DataSplit data = resolve_dataset(cfg.dataset, cfg.seed);
    fs::create_directories(cfg.output_dir);
    echo_config(cfg, "train-source");

    ModelSpec spec = resolve_model_spec(cfg, data);
    Model model = Model::build(spec);

    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, "train");
    const auto t0 = std::chrono::steady_clock::now();
    TrainStats stats = train_source(model, data.train, tc);
    const auto t1 = std::chrono::steady_clock::now();

    const int64_t n_fisher = std::min<int64_t>(cfg.fisher_samples, data.train.size());
    FisherDiag fisher = estimate_fisher(model, data.train, n_fisher, derive_seed(cfg.seed, "fisher"));

    save_model(model, m0_path(cfg));
    save_fisher(fisher, f0_path(cfg));

    json metrics;
    metrics["epochs_run"] = stats.epochs_run;
    metrics["final_train_loss"] = stats.final_loss;
    metrics["fisher_samples"] = n_fisher;
    metrics["top1_source_train"] = evaluate(model, data.train);
    metrics["top1_source_test"] = evaluate(model, data.test);
    write_text_file((fs::path(cfg.output_dir) / "source_metrics.json").string(), metrics.dump(2) + "\n");

    fprintf(stderr, "train-source: %d epochs, loss %.6f, source test top1 %.4f (%.1fs)\n",
            stats.epochs_run, stats.final_loss, metrics["top1_source_test"].get<double>(),
            std::chrono::duration<double>(t1 - t0).count());
}

void cmd_sweep(const ExperimentConfig& cfg) {
    if (cfg.output_dir.empty()) throw ConfigError("config: output_dir is required");
    if (cfg.corruptions.empty()) throw ConfigError("config: sweep needs at least one corruption");
    Artifacts art = load_artifacts(cfg);
    DataSplit data = resolve_dataset(cfg.dataset, cfg.seed);
    echo_config(cfg, "sweep");

    const double source_clean_acc = evaluate(art.m0, data.test);

    struct DomainPools {
        LabeledSet target_train;
        LabeledSet target_test;
        double source_target_acc = 0.0;
    };
    std::vector<DomainPools> pools;
    for (const auto& c : cfg.corruptions) {
        DomainPools p;
        p.target_train = corrupt_set(data.train, c,
                                     derive_seed(cfg.seed, "corrupt", corruption_str(c), "train"), "train");
        p.target_test =
            corrupt_set(data.test, c, derive_seed(cfg.seed, "corrupt", corruption_str(c), "test"), "test");
        p.source_target_acc = evaluate(art.m0, p.target_test);
        pools.push_back(std::move(p));
    }

    // Cell grid in canonical order.
    struct Cell {
        size_t ci, ni, mi, si;
    };
    std::vector<Cell> cells;
    for (size_t ci = 0; ci < cfg.corruptions.size(); ++ci)
        for (size_t ni = 0; ni < cfg.sample_counts.size(); ++ni)
            for (size_t mi = 0; mi < cfg.methods.size(); ++mi)
                for (size_t si = 0; si < cfg.seeds.size(); ++si) cells.push_back({ci, ni, mi, si});

    std::vector<ResultRow> rows(cells.size());
    const auto t0 = std::chrono::steady_clock::now();
    parallel_cells(static_cast<int64_t>(cells.size()), [&](int64_t i) {
        const Cell& cell = cells[static_cast<size_t>(i)];
        const CorruptionSpec& c = cfg.corruptions[cell.ci];
        const DomainPools& pool = pools[cell.ci];
        const int64_t n = cfg.sample_counts[cell.ni];
        const std::string& method = cfg.methods[cell.mi];
        const uint64_t run_seed = cfg.seeds[cell.si];

        ResultRow row;
        row.method = method;
        row.corruption_kind = corruption_name(c.kind);
        row.severity = c.severity;
        row.n_samples = n;
        row.seed = run_seed;

        if (method == "source") {
            row.top1_source_test = source_clean_acc;
            row.top1_target_test = pool.source_target_acc;
        } else {
            LabeledSet st = sample_target(pool.target_train, n,
                                          derive_seed(run_seed, "st", corruption_str(c), static_cast<uint64_t>(n)));
            const AdaptConfig ac = method_adapt_config(
                cfg, method, derive_seed(run_seed, "adapt", corruption_str(c), static_cast<uint64_t>(n)));
            AdaptResult r = adapt_run(art.m0, ac.lambda > 0.0 ? &art.fisher : nullptr, st, ac);
            Model adapted = materialize(art.m0.spec(), r.adapted_params);
            row.top1_source_test = evaluate(adapted, data.test);
            row.top1_target_test = evaluate(adapted, pool.target_test);
        }
        rows[static_cast<size_t>(i)] = std::move(row);
    });
    const auto t1 = std::chrono::steady_clock::now();

    std::string csv = csv_header() + "\n";
    for (const auto& row : rows) csv += csv_line(row) + "\n";
    write_text_file((fs::path(cfg.output_dir) / "results.csv").string(), csv);
    fprintf(stderr, "sweep: %zu cells in %.1fs -> %s\n", cells.size(),
            std::chrono::duration<double>(t1 - t0).count(),
            (fs::path(cfg.output_dir) / "results.csv").string().c_str());
}

void cmd_dynamic(const ExperimentConfig& cfg) {
    if (cfg.output_dir.empty()) throw ConfigError("config: output_dir is required");
    if (cfg.schedule.empty()) throw ConfigError("config: dynamic needs a nonempty schedule");
    Artifacts art = load_artifacts(cfg);
    DataSplit data = resolve_dataset(cfg.dataset, cfg.seed);
    echo_config(cfg, "dynamic");

    struct DomainPools {
        LabeledSet target_train;
        LabeledSet target_test;
    };
    std::vector<DomainPools> pools;
    for (const auto& c : cfg.schedule) {
        DomainPools p;
        p.target_train = corrupt_set(data.train, c,
                                     derive_seed(cfg.seed, "corrupt", corruption_str(c), "train"), "train");
        p.target_test =
            corrupt_set(data.test, c, derive_seed(cfg.seed, "corrupt", corruption_str(c), "test"), "test");
        pools.push_back(std::move(p));
    }

    struct Cell {
        size_t si, di, ni;
    };
    std::vector<Cell> cells;
    for (size_t si = 0; si < cfg.seeds.size(); ++si)
        for (size_t di = 0; di < cfg.schedule.size(); ++di)
            for (size_t ni = 0; ni < cfg.sample_counts.size(); ++ni) cells.push_back({si, di, ni});

    std::vector<ResultRow> rows(cells.size());
    parallel_cells(static_cast<int64_t>(cells.size()), [&](int64_t i) {
        const Cell& cell = cells[static_cast<size_t>(i)];
        const CorruptionSpec& c = cfg.schedule[cell.di];
        const DomainPools& pool = pools[cell.di];
        const int64_t n = cfg.sample_counts[cell.ni];
        const uint64_t run_seed = cfg.seeds[cell.si];

        // One permutation per (seed, domain): checkpoints see nested sample
        // prefixes, modelling samples that accumulate over time. The draw does
        // not depend on the schedule position, so domain order cannot leak.
        LabeledSet st =
            sample_target(pool.target_train, n, derive_seed(run_seed, "st", corruption_str(c)));
        const AdaptConfig ac = method_adapt_config(
            cfg, "dira", derive_seed(run_seed, "adapt", corruption_str(c), static_cast<uint64_t>(n)));
        AdaptResult r = adapt_run(art.m0, ac.lambda > 0.0 ? &art.fisher : nullptr, st, ac);
        Model adapted = materialize(art.m0.spec(), r.adapted_params);

        ResultRow row;
        row.method = "dira";
        row.corruption_kind = corruption_name(c.kind);
        row.severity = c.severity;
        row.n_samples = n;
        row.seed = run_seed;
        row.top1_source_test = evaluate(adapted, data.test);
        row.top1_target_test = evaluate(adapted, pool.target_test);
        rows[static_cast<size_t>(i)] = std::move(row);
    });

    std::string csv = csv_header() + "\n";
    for (const auto& row : rows) csv += csv_line(row) + "\n";
    write_text_file((fs::path(cfg.output_dir) / "dynamic.csv").string(), csv);
    fprintf(stderr, "dynamic: %zu checkpoints -> %s\n", cells.size(),
            (fs::path(cfg.output_dir) / "dynamic.csv").string().c_str());
}

// --- report -----------------------------------------------------------------

namespace {

const std::vector<std::string> kMethodOrder = {"source", "sgd_high", "sgd_low", "dira"};

std::string format_pct(double v) {
    char buf[48];
    snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string svg_curves(const std::vector<ResultRow>& rows) {
    // Mean target accuracy per (method, n) over corruption kinds and seeds.
    std::vector<int64_t> ns;
    for (const auto& r : rows)
        if (std::find(ns.begin(), ns.end(), r.n_samples) == ns.end()) ns.push_back(r.n_samples);
    std::sort(ns.begin(), ns.end());
    std::vector<std::string> methods;
    for (const auto& want : kMethodOrder)
        for (const auto& r : rows)
            if (r.method == want && std::find(methods.begin(), methods.end(), want) == methods.end())
                methods.push_back(want);

    const double width = 640, height = 440, left = 70, right = 610, top = 30, bottom = 390;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\"" << bottom
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
        << "\" stroke=\"black\"/>\n";
    for (int pct = 0; pct <= 100; pct += 20) {
        const double y = bottom - (bottom - top) * pct / 100.0;
        svg << "<text x=\"" << left - 10 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-size=\"12\">" << pct << "</text>\n";
        svg << "<line x1=\"" << left - 4 << "\" y1=\"" << y << "\" x2=\"" << left << "\" y2=\"" << y
            << "\" stroke=\"black\"/>\n";
    }
    for (size_t i = 0; i < ns.size(); ++i) {
        const double x = ns.size() == 1 ? left : left + (right - left) * static_cast<double>(i) /
                                                            static_cast<double>(ns.size() - 1);
        svg << "<text x=\"" << x << "\" y=\"" << bottom + 18
            << "\" text-anchor=\"middle\" font-size=\"12\">" << ns[i] << "</text>\n";
        svg << "<line x1=\"" << x << "\" y1=\"" << bottom << "\" x2=\"" << x << "\" y2=\"" << bottom + 4
            << "\" stroke=\"black\"/>\n";
    }
    svg << "<text x=\"" << (left + right) / 2 << "\" y=\"" << height - 10
        << "\" text-anchor=\"middle\" font-size=\"13\">target samples</text>\n";
    svg << "<text x=\"16\" y=\"" << (top + bottom) / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
        << (top + bottom) / 2 << ")\">top-1 accuracy (%)</text>\n";

    const char* colors[] = {"#555555", "#d62728", "#1f77b4", "#2ca02c"};
    for (size_t mi = 0; mi < methods.size(); ++mi) {
        std::ostringstream points;
        for (size_t i = 0; i < ns.size(); ++i) {
            double acc = 0.0;
            int64_t count = 0;
            for (const auto& r : rows)
                if (r.method == methods[mi] && r.n_samples == ns[i]) {
                    acc += r.top1_target_test;
                    ++count;
                }
            if (count == 0) continue;
            acc = 100.0 * acc / static_cast<double>(count);
            const double x = ns.size() == 1 ? left : left + (right - left) * static_cast<double>(i) /
                                                                static_cast<double>(ns.size() - 1);
            const double y = bottom - (bottom - top) * acc / 100.0;
            points << (points.tellp() > 0 ? " " : "") << x << "," << y;
        }
        const char* color = colors[std::min<size_t>(mi, 3)];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\""
            << points.str() << "\"/>\n";
        svg << "<text x=\"" << right - 90 << "\" y=\"" << top + 16 + 16 * static_cast<double>(mi)
            << "\" font-size=\"12\" fill=\"" << color << "\">" << methods[mi] << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace

void cmd_report(const std::string& results_csv, const std::string& output_dir, int64_t at_n) {
    const std::vector<ResultRow> rows = read_results_csv(results_csv);
    if (rows.empty()) throw FormatError(results_csv + ": no result rows");

    if (at_n <= 0)
        for (const auto& r : rows) at_n = std::max(at_n, r.n_samples);

    // Methods in canonical order, corruption kinds in order of appearance.
    std::vector<std::string> methods;
    for (const auto& want : kMethodOrder)
        for (const auto& r : rows)
            if (r.method == want && std::find(methods.begin(), methods.end(), want) == methods.end())
                methods.push_back(want);
    std::vector<std::string> kinds;
    for (const auto& r : rows)
        if (std::find(kinds.begin(), kinds.end(), r.corruption_kind) == kinds.end())
            kinds.push_back(r.corruption_kind);

    // Seed-mean target accuracy (percent) per method x kind at n == at_n.
    std::vector<std::vector<double>> cells(methods.size(), std::vector<double>(kinds.size(), 0.0));
    for (size_t mi = 0; mi < methods.size(); ++mi)
        for (size_t ki = 0; ki < kinds.size(); ++ki) {
            double acc = 0.0;
            int64_t count = 0;
            for (const auto& r : rows)
                if (r.method == methods[mi] && r.corruption_kind == kinds[ki] && r.n_samples == at_n) {
                    acc += r.top1_target_test;
                    ++count;
                }
            if (count == 0)
                throw ConfigError(results_csv + ": no rows for method '" + methods[mi] + "', corruption '" +
                                  kinds[ki] + "' at n=" + std::to_string(at_n));
            cells[mi][ki] = 100.0 * acc / static_cast<double>(count);
        }

    // Trailing mean column: the exact arithmetic mean of the row's cells.
    std::vector<double> row_means(methods.size(), 0.0);
    for (size_t mi = 0; mi < methods.size(); ++mi) {
        double sum = 0.0;
        for (double v : cells[mi]) sum += v;
        row_means[mi] = sum / static_cast<double>(kinds.size());
    }

    fs::create_directories(output_dir);

    {
        // Machine-readable table with full-precision values.
        std::ostringstream csv;
        csv << "method";
        for (const auto& k : kinds) csv << ',' << k;
        csv << ",mean\n";
        for (size_t mi = 0; mi < methods.size(); ++mi) {
            csv << methods[mi];
            for (double v : cells[mi]) csv << ',' << format_pct(v);
            csv << ',' << format_pct(row_means[mi]) << "\n";
        }
        write_text_file((fs::path(output_dir) / "report.csv").string(), csv.str());
    }

    {
        // Aligned markdown table, percentages to one decimal.
        auto cell_text = [](double v) {
            char buf[16];
            snprintf(buf, sizeof(buf), "%.1f", v);
            return std::string(buf);
        };
        std::vector<std::vector<std::string>> table;
        std::vector<std::string> header{"method"};
        header.insert(header.end(), kinds.begin(), kinds.end());
        header.push_back("mean");
        table.push_back(header);
        for (size_t mi = 0; mi < methods.size(); ++mi) {
            std::vector<std::string> line{methods[mi]};
            for (double v : cells[mi]) line.push_back(cell_text(v));
            line.push_back(cell_text(row_means[mi]));
            table.push_back(line);
        }
        std::vector<size_t> width(header.size(), 0);
        for (const auto& line : table)
            for (size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
        std::ostringstream md;
        md << "Top-1 accuracy (%) at n=" << at_n << " per corruption\n\n";
        for (size_t li = 0; li < table.size(); ++li) {
            md << '|';
            for (size_t i = 0; i < table[li].size(); ++i) {
                md << ' ' << table[li][i] << std::string(width[i] - table[li][i].size(), ' ') << " |";
            }
            md << '\n';
            if (li == 0) {
                md << '|';
                for (size_t i = 0; i < width.size(); ++i) md << std::string(width[i] + 2, '-') << '|';
                md << '\n';
            }
        }
        write_text_file((fs::path(output_dir) / "report.md").string(), md.str());
    }

    write_text_file((fs::path(output_dir) / "curves.svg").string(), svg_curves(rows));
    fprintf(stderr, "report: %zu methods x %zu corruptions at n=%lld -> %s\n", methods.size(), kinds.size(),
            static_cast<long long>(at_n), (fs::path(output_dir) / "report.md").string().c_str());
}

void cmd_gen_data(const std::string& output_dir, int num_classes, int per_class_train, int per_class_test,
                  int height, int width, uint64_t seed) {
    if (per_class_train < 1 || per_class_test < 1)
        throw ConfigError("gen-data: per-class counts must be positive");
    LabeledSet all = make_glyph_images(num_classes, per_class_train + per_class_test, height, width, seed);
    std::vector<int64_t> train_idx, test_idx;
    const int per_class = per_class_train + per_class_test;
    for (int k = 0; k < num_classes; ++k)
        for (int i = 0; i < per_class; ++i)
            (i < per_class_train ? train_idx : test_idx).push_back(static_cast<int64_t>(k) * per_class + i);

    auto subset = [&](const std::vector<int64_t>& idx, const char* name) {
        LabeledSet s;
        s.images = all.gather_images(idx);
        s.labels = all.gather_labels(idx);
        s.num_classes = num_classes;
        s.name = name;
        return s;
    };
    fs::create_directories(output_dir);
    const fs::path dir(output_dir);
    save_idx(subset(train_idx, "train"), (dir / "train-images-idx3-ubyte").string(),
             (dir / "train-labels-idx1-ubyte").string());
    save_idx(subset(test_idx, "test"), (dir / "test-images-idx3-ubyte").string(),
             (dir / "test-labels-idx1-ubyte").string());
    fprintf(stderr, "gen-data: %d classes, %d+%d per class, %dx%d -> %s\n", num_classes, per_class_train,
            per_class_test, height, width, output_dir.c_str());
}

}  // namespace dira::harness
