#pragma once

// Config-driven experiment runner: ingest, rank, curves, common set and the
// model x feature-set grid, plus report emission.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsel/ingest.hpp"
#include "fsel/linear.hpp"
#include "fsel/metrics.hpp"
#include "fsel/select.hpp"

namespace fsel {

inline constexpr const char* kToolVersion = "fsel 1.0.0";

enum class FeatureSet { kAll, kA, kB, kC, kTopL1, kTopL2 };

std::string to_string(FeatureSet s);
FeatureSet feature_set_from_string(const std::string& text);

struct ExperimentSpec {
    ModelFamily model = ModelFamily::kLrL1;
    FeatureSet feature_set = FeatureSet::kAll;

    // "LR+L1-A", "RF-all", ...
    std::string display() const;
    // Filename-safe id: "lr-l1-A", "rf-all", ...
    std::string id() const;

    friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

// All 4 models x 6 feature sets.
std::vector<ExperimentSpec> full_grid();

struct RunConfig {
    std::vector<std::filesystem::path> dataset_paths;
    std::string label_column = "Label";
    std::vector<std::string> drop_columns{"Timestamp"};
    std::size_t per_class_cap = 5000;
    std::vector<std::string> excluded_classes;
    std::optional<std::string> problematic_class;
    bool include_problematic = false;
    double split_ratio = 0.7;
    std::uint64_t seed = 0;
    bool standardize = true;
    double C = 0.5;
    SagaConfig solver;
    TreeParams tree;
    ForestParams forest;
    Aggregation aggregation = Aggregation::kMeanAbs;
    double baseline_fraction = 0.95;
    std::vector<std::string> focus_classes;
    // Models evaluated along each curve; lr-l1 and lr-l2 are always included.
    std::vector<ModelFamily> curve_models{ModelFamily::kLrL1, ModelFamily::kLrL2};
    std::vector<ExperimentSpec> experiments;
    std::size_t threads = 0;
    std::filesystem::path output_dir = "out";

    // Throws ConfigError on out-of-range values.
    void validate() const;
};

// Parses run.json. Relative paths resolve against base_dir. Unknown keys
// are rejected.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

// Seed used for every fit of `family` on a k-feature subset.
std::uint64_t model_seed(std::uint64_t master, ModelFamily family, std::size_t k);
std::uint64_t stage_seed(std::uint64_t master, const std::string& stage);

struct PreparedData {
    Dataset sampled;
    SplitPair split;
    std::optional<ScalerParams> scaler;
    std::size_t raw_rows = 0;
    std::size_t cleaned_rows = 0;
};

PreparedData prepare_data(const RunConfig& cfg);

struct ExperimentResult {
    ExperimentSpec spec;
    std::vector<std::size_t> features;
    double accuracy = 0.0;
    Report report;
    ConfusionMatrix confusion;
    double wall_seconds = 0.0;
};

struct GridResult {
    nlohmann::json config;
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names;
    std::map<std::string, std::size_t> row_counts;
    std::map<std::string, std::uint64_t> seeds;

    std::optional<LogRegModel> full_l1;
    std::optional<LogRegModel> full_l2;
    std::optional<FeatureRanking> ranking_l1;
    std::optional<FeatureRanking> ranking_l2;
    // Keyed "<ordering>/<model>", e.g. "l1/lr-l1".
    std::map<std::string, AccuracyCurve> curves;

    double baseline = 0.0;
    std::optional<std::size_t> max_l1;
    std::optional<std::size_t> max_l2;
    std::optional<CommonFeatureSet> common;
    std::optional<RankStatistics> common_stats;

    std::vector<ExperimentResult> experiments;
    std::vector<std::string> flags;
    std::map<std::string, double> stage_seconds;
    std::vector<std::string> completed_stages;

    bool empty() const { return !ranking_l1 && experiments.empty(); }
};

// Fills `result` stage by stage; on failure throws StageError and leaves
// the completed stages in `result`.
void run_pipeline(const RunConfig& cfg, GridResult& result);
GridResult run_pipeline(const RunConfig& cfg);

// Features used by an experiment, resolved against the run's rankings.
std::vector<std::size_t> resolve_feature_set(const GridResult& result, FeatureSet set);

void emit_reports(const GridResult& result, const std::filesystem::path& dir);

nlohmann::json to_json(const GridResult& result);
GridResult grid_result_from_json(const nlohmann::json& j);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace fsel
