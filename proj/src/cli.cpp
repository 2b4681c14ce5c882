#include "fsel/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "fsel/bench.hpp"
#include "fsel/error.hpp"
#include "fsel/random.hpp"

namespace fsel {

namespace {

using nlohmann::json;

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    bool include_problematic = false;
    std::string out;
    std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool config_required = true) {
    auto* config = cmd->add_option("--config", opts.config, "Path to run.json");
    if (config_required) config->required();
    cmd->add_option("--seed", opts.seed, "Override the master seed");
    cmd->add_flag("--include-problematic", opts.include_problematic,
                  "Keep the problematic class in the sample");
    cmd->add_option("--out", opts.out, "Override the output directory");
    cmd->add_option("--threads", opts.threads, "Worker threads (0 = all cores)");
}

RunConfig load_with_overrides(const CommonOptions& opts) {
    if (!std::filesystem::exists(opts.config)) {
        throw ConfigError("config file not found: " + opts.config);
    }
    RunConfig cfg = load_run_config(opts.config);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.include_problematic) cfg.include_problematic = true;
    if (!opts.out.empty()) cfg.output_dir = opts.out;
    if (opts.threads) cfg.threads = *opts.threads;
    cfg.validate();
    return cfg;
}

int exit_code_for(StageError::Kind kind) {
    switch (kind) {
        case StageError::Kind::kConfig: return kExitUsage;
        case StageError::Kind::kSolver: return kExitSolver;
        default: return kExitData;
    }
}

void write_json(const std::filesystem::path& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

int cmd_prepare(const CommonOptions& opts, std::ostream& out) {
    const RunConfig cfg = load_with_overrides(opts);
    const PreparedData data = prepare_data(cfg);
    std::filesystem::create_directories(cfg.output_dir);
    write_dataset_csv(data.sampled, cfg.output_dir / "prepared.csv", cfg.label_column);

    json counts = json::object();
    const auto per_class = data.sampled.class_counts();
    for (std::size_t k = 0; k < per_class.size(); ++k) counts[data.sampled.class_names[k]] = per_class[k];
    json manifest = {
        {"tool_version", kToolVersion},
        {"seed", cfg.seed},
        {"sample_seed", stage_seed(cfg.seed, "sample")},
        {"per_class_cap", cfg.per_class_cap},
        {"excluded_classes", cfg.excluded_classes},
        {"problematic_class", cfg.problematic_class ? json(*cfg.problematic_class) : json()},
        {"include_problematic", cfg.include_problematic},
        {"row_counts",
         {{"raw", data.raw_rows},
          {"cleaned", data.cleaned_rows},
          {"sampled", data.sampled.n_samples()},
          {"train", data.split.train.n_samples()},
          {"test", data.split.test.n_samples()}}},
        {"class_counts", counts},
        {"n_features", data.sampled.n_features()},
    };
    write_json(cfg.output_dir / "prepared.json", manifest);
    out << "prepared " << data.sampled.n_samples() << " rows x " << data.sampled.n_features()
        << " features -> " << (cfg.output_dir / "prepared.csv").string() << "\n";
    return kExitOk;
}

struct Ranked {
    PreparedData data;
    LogRegModel model_l1;
    LogRegModel model_l2;
    FeatureRanking ranking_l1;
    FeatureRanking ranking_l2;
};

Ranked fit_rankings(const RunConfig& cfg) {
    Ranked r;
    r.data = prepare_data(cfg);
    const std::size_t m = r.data.sampled.n_features();
    const auto all = iota_indices(m);
    const ScalerParams* scaler = r.data.scaler ? &*r.data.scaler : nullptr;
    for (auto family : {ModelFamily::kLrL1, ModelFamily::kLrL2}) {
        SagaConfig saga = cfg.solver;
        saga.seed = model_seed(cfg.seed, family, m);
        const bool l1 = family == ModelFamily::kLrL1;
        const PenaltySpec penalty{l1 ? Penalty::kL1 : Penalty::kL2, cfg.C};
        auto model = fit(r.data.split.train, all, penalty, saga, scaler);
        auto ranking = rank_features(model.weights.coefficients, cfg.aggregation, penalty.kind);
        (l1 ? r.model_l1 : r.model_l2) = std::move(model);
        (l1 ? r.ranking_l1 : r.ranking_l2) = std::move(ranking);
    }
    return r;
}

int cmd_rank(const CommonOptions& opts, std::ostream& out) {
    const RunConfig cfg = load_with_overrides(opts);
    const Ranked r = fit_rankings(cfg);
    const auto& names = r.data.sampled.feature_names;
    std::filesystem::create_directories(cfg.output_dir);
    write_json(cfg.output_dir / "weights_l1.json", r.model_l1);
    write_json(cfg.output_dir / "weights_l2.json", r.model_l2);
    write_text_file(cfg.output_dir / "ranking_l1.csv", ranking_csv(r.ranking_l1, names));
    write_text_file(cfg.output_dir / "ranking_l2.csv", ranking_csv(r.ranking_l2, names));
    write_json(cfg.output_dir / "rankings.json", {{"l1", r.ranking_l1}, {"l2", r.ranking_l2}});
    out << "top L1 feature: " << names[r.ranking_l1.ordered.front().index]
        << "; top L2 feature: " << names[r.ranking_l2.ordered.front().index] << "\n";
    return kExitOk;
}

int cmd_curve(const CommonOptions& opts, const std::string& ordering, const std::string& model_name,
              std::ostream& out) {
    if (ordering != "l1" && ordering != "l2") throw ConfigError("--ordering must be l1 or l2");
    const ModelFamily family = model_family_from_string(model_name);
    const RunConfig cfg = load_with_overrides(opts);
    const Ranked r = fit_rankings(cfg);
    const auto order = (ordering == "l1" ? r.ranking_l1 : r.ranking_l2).order();

    ModelConfig model;
    model.C = cfg.C;
    model.saga = cfg.solver;
    model.tree = cfg.tree;
    model.forest = cfg.forest;
    model.forest.tree = cfg.tree;
    model.forest.n_threads = cfg.threads;
    CurveRequest request;
    request.family = family;
    request.model = model;
    request.base_seed = model_seed(cfg.seed, family, 0);
    request.scaler = r.data.scaler ? &*r.data.scaler : nullptr;
    request.n_threads = cfg.threads;
    request.ordering = ordering;
    const AccuracyCurve curve = accuracy_curve(r.data.split, order, request);

    std::filesystem::create_directories(cfg.output_dir);
    const std::string stem = "curve_" + ordering + "_" + to_string(family);
    write_text_file(cfg.output_dir / (stem + ".csv"), curve_csv(curve));
    write_json(cfg.output_dir / (stem + ".json"), curve);
    out << "max accuracy " << max_accuracy(curve) << " over " << curve.points.size() << " points\n";
    return kExitOk;
}

int cmd_grid(const CommonOptions& opts, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = load_with_overrides(opts);
    GridResult result;
    try {
        run_pipeline(cfg, result);
    } catch (const StageError& e) {
        try {
            emit_reports(result, cfg.output_dir);
            write_text_file(cfg.output_dir / "FAILED",
                            "stage: " + e.stage() + "\nerror: " + e.what() + "\n");
        } catch (const std::exception& inner) {
            err << "error: could not flush partial artifacts: " << inner.what() << "\n";
        }
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    }
    emit_reports(result, cfg.output_dir);
    std::filesystem::remove(cfg.output_dir / "FAILED");
    out << "grid complete: " << result.experiments.size() << " experiments, MAX_L1="
        << result.max_l1.value_or(0) << ", MAX_L2=" << result.max_l2.value_or(0)
        << ", |common|=" << (result.common ? result.common->size() : 0) << " -> "
        << cfg.output_dir.string() << "\n";
    for (const auto& flag : result.flags) out << "note: " << flag << "\n";
    return kExitOk;
}

int cmd_report(const std::string& input, const std::string& out_dir, std::ostream& out) {
    std::ifstream in(input);
    if (!in) throw DataError("cannot open '" + input + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("'" + input + "' is not valid JSON: " + e.what());
    }
    const GridResult result = grid_result_from_json(j);
    const std::filesystem::path dir =
        out_dir.empty() ? std::filesystem::path(input).parent_path() : std::filesystem::path(out_dir);
    emit_reports(result, dir.empty() ? "." : dir);
    out << "reports written to " << (dir.empty() ? "." : dir.string()) << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Embedded feature selection with L1/L2 logistic regression"};
    app.name("fsel");
    app.require_subcommand(1);

    CommonOptions prepare_opts;
    auto* prepare = app.add_subcommand("prepare", "Clean, sample and cache the dataset");
    add_common(prepare, prepare_opts);

    CommonOptions rank_opts;
    auto* rank = app.add_subcommand("rank", "Fit full LR+L1 / LR+L2 models and rank features");
    add_common(rank, rank_opts);

    CommonOptions curve_opts;
    std::string ordering = "l1";
    std::string model = "lr-l1";
    auto* curve = app.add_subcommand("curve", "Accuracy versus number of top-ranked features");
    add_common(curve, curve_opts);
    curve->add_option("--ordering", ordering, "Ranking to follow: l1 or l2");
    curve->add_option("--model", model, "Model family: lr-l1, lr-l2, rf or dt");

    CommonOptions grid_opts;
    auto* grid = app.add_subcommand("grid", "Run the full pipeline and emit all reports");
    add_common(grid, grid_opts);

    std::string input;
    std::string report_out;
    auto* report = app.add_subcommand("report", "Re-emit reports from a cached grid_result.json");
    report->add_option("--input", input, "grid_result.json from a previous grid run")->required();
    report->add_option("--out", report_out, "Output directory (default: next to the input)");

    std::vector<std::string> argv_storage{"fsel"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_storage) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (*prepare) return cmd_prepare(prepare_opts, out);
        if (*rank) return cmd_rank(rank_opts, out);
        if (*curve) return cmd_curve(curve_opts, ordering, model, out);
        if (*grid) return cmd_grid(grid_opts, out, err);
        if (*report) return cmd_report(input, report_out, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const SolverError& e) {
        err << "error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const StageError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace fsel
