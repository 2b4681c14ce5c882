#include "fsel/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "fsel/error.hpp"
#include "fsel/parallel.hpp"
#include "fsel/random.hpp"

namespace fsel {

namespace {

using nlohmann::json;

constexpr FeatureSet kAllFeatureSets[] = {FeatureSet::kAll, FeatureSet::kA,     FeatureSet::kB,
                                          FeatureSet::kC,   FeatureSet::kTopL1, FeatureSet::kTopL2};
constexpr ModelFamily kAllModels[] = {ModelFamily::kLrL1, ModelFamily::kLrL2,
                                      ModelFamily::kRandomForest, ModelFamily::kDecisionTree};

// Reads keys from a JSON object and rejects any it did not consume.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
    }

    template <typename T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(where_ + "." + key + ": " + e.what());
        }
    }

    template <typename T>
    void read_optional(const char* key, std::optional<T>& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        if (j_.at(key).is_null()) {
            out.reset();
            return;
        }
        T value{};
        read(key, value);
        out = value;
    }

    const json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.contains(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
        }
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

ExperimentSpec parse_experiment(const json& e) {
    if (e.is_string()) {
        const auto text = e.get<std::string>();
        const auto colon = text.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("experiment '" + text + "' must look like model:feature_set");
        }
        return {model_family_from_string(text.substr(0, colon)),
                feature_set_from_string(text.substr(colon + 1))};
    }
    ObjectReader reader(e, "experiments[]");
    std::string model;
    std::string set;
    reader.read("model", model);
    reader.read("feature_set", set);
    reader.finish();
    return {model_family_from_string(model), feature_set_from_string(set)};
}

ModelConfig model_config(const RunConfig& cfg) {
    ModelConfig m;
    m.C = cfg.C;
    m.saga = cfg.solver;
    m.tree = cfg.tree;
    m.forest = cfg.forest;
    m.forest.tree = cfg.tree;
    m.forest.n_threads = cfg.threads;
    return m;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string curve_key(const std::string& ordering, ModelFamily family) {
    return ordering + "/" + to_string(family);
}

std::string format_opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

std::string to_string(FeatureSet s) {
    switch (s) {
        case FeatureSet::kAll: return "all";
        case FeatureSet::kA: return "A";
        case FeatureSet::kB: return "B";
        case FeatureSet::kC: return "C";
        case FeatureSet::kTopL1: return "top-l1";
        case FeatureSet::kTopL2: return "top-l2";
    }
    return "all";
}

FeatureSet feature_set_from_string(const std::string& text) {
    if (text == "all") return FeatureSet::kAll;
    if (text == "A") return FeatureSet::kA;
    if (text == "B") return FeatureSet::kB;
    if (text == "C") return FeatureSet::kC;
    if (text == "top-l1" || text == "top22-l1" || text == "topC-l1") return FeatureSet::kTopL1;
    if (text == "top-l2" || text == "top22-l2" || text == "topC-l2") return FeatureSet::kTopL2;
    throw ConfigError("unknown feature set '" + text + "' (expected all, A, B, C, top-l1, top-l2)");
}

std::string ExperimentSpec::display() const {
    return display_name(model) + "-" + to_string(feature_set);
}

std::string ExperimentSpec::id() const { return to_string(model) + "-" + to_string(feature_set); }

std::vector<ExperimentSpec> full_grid() {
    std::vector<ExperimentSpec> out;
    for (auto model : kAllModels) {
        for (auto set : kAllFeatureSets) out.push_back({model, set});
    }
    return out;
}

void RunConfig::validate() const {
    if (dataset_paths.empty()) throw ConfigError("dataset_paths is empty");
    if (per_class_cap < 1) throw ConfigError("sampling.per_class_cap must be >= 1");
    if (!(split_ratio > 0.0 && split_ratio <= 1.0)) throw ConfigError("split_ratio must lie in (0, 1]");
    if (!(C > 0.0)) throw ConfigError("C must be positive");
    if (solver.max_epochs < 1) throw ConfigError("solver.max_epochs must be >= 1");
    if (!(solver.tolerance > 0.0)) throw ConfigError("solver.tolerance must be positive");
    if (solver.step_size && !(*solver.step_size > 0.0)) throw ConfigError("solver.step_size must be positive");
    if (tree.min_samples_split < 2) throw ConfigError("tree.min_samples_split must be >= 2");
    if (forest.n_trees < 1) throw ConfigError("forest.n_trees must be >= 1");
    if (forest.features_per_split && *forest.features_per_split < 1) {
        throw ConfigError("forest.features_per_split must be >= 1");
    }
    if (!(baseline_fraction > 0.0 && baseline_fraction <= 1.0)) {
        throw ConfigError("baseline_fraction must lie in (0, 1]");
    }
}

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
    RunConfig cfg;
    ObjectReader top(j, "run config");

    std::vector<std::string> paths;
    top.read("dataset_paths", paths);
    for (const auto& p : paths) {
        std::filesystem::path path(p);
        cfg.dataset_paths.push_back(path.is_absolute() ? path : base_dir / path);
    }
    top.read("label_column", cfg.label_column);
    top.read("drop_columns", cfg.drop_columns);
    if (const json* s = top.child("sampling")) {
        ObjectReader reader(*s, "sampling");
        reader.read("per_class_cap", cfg.per_class_cap);
        reader.read("excluded_classes", cfg.excluded_classes);
        reader.read_optional("problematic_class", cfg.problematic_class);
        reader.finish();
    }
    top.read("include_problematic", cfg.include_problematic);
    top.read("split_ratio", cfg.split_ratio);
    top.read("seed", cfg.seed);
    top.read("standardize", cfg.standardize);
    top.read("C", cfg.C);
    if (const json* s = top.child("solver")) {
        ObjectReader reader(*s, "solver");
        reader.read("max_epochs", cfg.solver.max_epochs);
        reader.read("tolerance", cfg.solver.tolerance);
        if (const json* step = reader.child("step_size")) {
            if (step->is_string() && step->get<std::string>() == "auto") {
                cfg.solver.step_size.reset();
            } else if (step->is_number()) {
                cfg.solver.step_size = step->get<double>();
            } else {
                throw ConfigError("solver.step_size must be \"auto\" or a number");
            }
        }
        reader.finish();
    }
    if (const json* s = top.child("tree")) {
        ObjectReader reader(*s, "tree");
        reader.read_optional("max_depth", cfg.tree.max_depth);
        reader.read("min_samples_split", cfg.tree.min_samples_split);
        reader.finish();
    }
    if (const json* s = top.child("forest")) {
        ObjectReader reader(*s, "forest");
        reader.read("n_trees", cfg.forest.n_trees);
        reader.read_optional("features_per_split", cfg.forest.features_per_split);
        reader.read("bootstrap", cfg.forest.bootstrap);
        reader.finish();
    }
    std::string aggregation = to_string(cfg.aggregation);
    top.read("aggregation", aggregation);
    cfg.aggregation = aggregation_from_string(aggregation);
    top.read("baseline_fraction", cfg.baseline_fraction);
    top.read("focus_classes", cfg.focus_classes);
    std::vector<std::string> curve_models;
    top.read("curve_models", curve_models);
    for (const auto& name : curve_models) {
        const auto family = model_family_from_string(name);
        if (std::find(cfg.curve_models.begin(), cfg.curve_models.end(), family) ==
            cfg.curve_models.end()) {
            cfg.curve_models.push_back(family);
        }
    }
    if (const json* e = top.child("experiments")) {
        if (e->is_string()) {
            const auto text = e->get<std::string>();
            if (text == "grid") {
                cfg.experiments = full_grid();
            } else if (text != "none") {
                throw ConfigError("experiments must be \"grid\", \"none\" or a list");
            }
        } else if (e->is_array()) {
            for (const auto& item : *e) cfg.experiments.push_back(parse_experiment(item));
        } else {
            throw ConfigError("experiments must be \"grid\", \"none\" or a list");
        }
    }
    top.read("threads", cfg.threads);
    std::string output_dir;
    top.read("output_dir", output_dir);
    if (!output_dir.empty()) {
        std::filesystem::path out(output_dir);
        cfg.output_dir = out.is_absolute() ? out : base_dir / out;
    } else {
        cfg.output_dir = base_dir / "out";
    }
    top.finish();
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_run_config(j, path.parent_path());
}

json to_json(const RunConfig& cfg) {
    std::vector<std::string> paths;
    for (const auto& p : cfg.dataset_paths) paths.push_back(p.generic_string());
    std::vector<std::string> curve_models;
    for (auto f : cfg.curve_models) curve_models.push_back(to_string(f));
    auto experiments = json::array();
    for (const auto& e : cfg.experiments) {
        experiments.push_back({{"model", to_string(e.model)}, {"feature_set", to_string(e.feature_set)}});
    }
    json step = cfg.solver.step_size ? json(*cfg.solver.step_size) : json("auto");
    return {
        {"dataset_paths", paths},
        {"label_column", cfg.label_column},
        {"drop_columns", cfg.drop_columns},
        {"sampling",
         {{"per_class_cap", cfg.per_class_cap},
          {"excluded_classes", cfg.excluded_classes},
          {"problematic_class", cfg.problematic_class ? json(*cfg.problematic_class) : json()}}},
        {"include_problematic", cfg.include_problematic},
        {"split_ratio", cfg.split_ratio},
        {"seed", cfg.seed},
        {"standardize", cfg.standardize},
        {"C", cfg.C},
        {"solver",
         {{"max_epochs", cfg.solver.max_epochs}, {"step_size", step}, {"tolerance", cfg.solver.tolerance}}},
        {"tree",
         {{"max_depth", cfg.tree.max_depth ? json(*cfg.tree.max_depth) : json()},
          {"min_samples_split", cfg.tree.min_samples_split}}},
        {"forest",
         {{"n_trees", cfg.forest.n_trees},
          {"features_per_split",
           cfg.forest.features_per_split ? json(*cfg.forest.features_per_split) : json()},
          {"bootstrap", cfg.forest.bootstrap}}},
        {"aggregation", to_string(cfg.aggregation)},
        {"baseline_fraction", cfg.baseline_fraction},
        {"focus_classes", cfg.focus_classes},
        {"curve_models", curve_models},
        {"experiments", experiments},
        {"threads", cfg.threads},
        {"output_dir", cfg.output_dir.generic_string()},
    };
}

std::uint64_t stage_seed(std::uint64_t master, const std::string& stage) {
    return derive_seed(master, stage);
}

std::uint64_t model_seed(std::uint64_t master, ModelFamily family, std::size_t k) {
    return derive_seed(master, "model/" + to_string(family)) + k;
}

PreparedData prepare_data(const RunConfig& cfg) {
    PreparedData out;
    const std::set<std::string> drop(cfg.drop_columns.begin(), cfg.drop_columns.end());
    std::vector<Dataset> parts;
    for (const auto& path : cfg.dataset_paths) {
        if (!std::filesystem::exists(path)) throw DataError("dataset file not found: " + path.string());
        std::size_t rows = 0;
        parts.push_back(load_clean_csv(path, cfg.label_column, drop, &rows));
        out.raw_rows += rows;
    }
    const Dataset cleaned = concat(parts);
    out.cleaned_rows = cleaned.n_samples();

    SamplingPlan plan;
    plan.per_class_cap = cfg.per_class_cap;
    plan.excluded_classes = {cfg.excluded_classes.begin(), cfg.excluded_classes.end()};
    plan.problematic_class = cfg.problematic_class;
    plan.include_problematic = cfg.include_problematic;
    plan.seed = stage_seed(cfg.seed, "sample");
    out.sampled = sample_per_class(cleaned, plan);
    out.split = split(out.sampled, cfg.split_ratio, stage_seed(cfg.seed, "split"));
    if (cfg.standardize) out.scaler = fit_scaler(out.split.train.X);
    return out;
}

std::vector<std::size_t> resolve_feature_set(const GridResult& result, FeatureSet set) {
    const std::size_t m = result.feature_names.size();
    const std::size_t common_size = result.common ? result.common->size() : 0;
    switch (set) {
        case FeatureSet::kAll: return iota_indices(m);
        case FeatureSet::kA:
            return result.ranking_l1 && result.max_l1 ? result.ranking_l1->top(*result.max_l1)
                                                       : std::vector<std::size_t>{};
        case FeatureSet::kB:
            return result.ranking_l2 && result.max_l2 ? result.ranking_l2->top(*result.max_l2)
                                                      : std::vector<std::size_t>{};
        case FeatureSet::kC: return result.common ? result.common->indices() : std::vector<std::size_t>{};
        case FeatureSet::kTopL1:
            return result.ranking_l1 ? result.ranking_l1->top(common_size) : std::vector<std::size_t>{};
        case FeatureSet::kTopL2:
            return result.ranking_l2 ? result.ranking_l2->top(common_size) : std::vector<std::size_t>{};
    }
    return {};
}

void run_pipeline(const RunConfig& cfg, GridResult& r) {
    auto stage = [&](const std::string& name, auto&& body) {
        const auto start = std::chrono::steady_clock::now();
        try {
            body();
        } catch (const StageError&) {
            throw;
        } catch (const DataError& e) {
            throw StageError(name, StageError::Kind::kData, e.what());
        } catch (const SolverError& e) {
            throw StageError(name, StageError::Kind::kSolver, e.what());
        } catch (const ConfigError& e) {
            throw StageError(name, StageError::Kind::kConfig, e.what());
        } catch (const std::exception& e) {
            throw StageError(name, StageError::Kind::kOther, e.what());
        }
        r.stage_seconds[name] = seconds_since(start);
        r.completed_stages.push_back(name);
    };

    stage("config", [&] { cfg.validate(); });
    r.config = to_json(cfg);
    const std::uint64_t master = cfg.seed;
    r.seeds["master"] = master;
    r.seeds["sample"] = stage_seed(master, "sample");
    r.seeds["split"] = stage_seed(master, "split");
    for (auto family : kAllModels) r.seeds["model/" + to_string(family)] = model_seed(master, family, 0);

    PreparedData data;
    stage("ingest", [&] {
        data = prepare_data(cfg);
        r.feature_names = data.sampled.feature_names;
        r.class_names = data.sampled.class_names;
        r.row_counts["raw"] = data.raw_rows;
        r.row_counts["cleaned"] = data.cleaned_rows;
        r.row_counts["sampled"] = data.sampled.n_samples();
        r.row_counts["train"] = data.split.train.n_samples();
        r.row_counts["test"] = data.split.test.n_samples();
        const auto counts = data.sampled.class_counts();
        for (std::size_t k = 0; k < counts.size(); ++k) {
            r.row_counts["class:" + data.sampled.class_names[k]] = counts[k];
        }
    });

    const ModelConfig model = model_config(cfg);
    const ScalerParams* scaler = data.scaler ? &*data.scaler : nullptr;
    const std::size_t m = data.sampled.n_features();
    const auto all = iota_indices(m);

    stage("rank", [&] {
        for (auto family : {ModelFamily::kLrL1, ModelFamily::kLrL2}) {
            SagaConfig saga = cfg.solver;
            saga.seed = model_seed(master, family, m);
            const bool l1 = family == ModelFamily::kLrL1;
            const PenaltySpec penalty{l1 ? Penalty::kL1 : Penalty::kL2, cfg.C};
            auto fitted = fit(data.split.train, all, penalty, saga, scaler);
            auto ranking = rank_features(fitted.weights.coefficients, cfg.aggregation, penalty.kind);
            (l1 ? r.full_l1 : r.full_l2) = std::move(fitted);
            (l1 ? r.ranking_l1 : r.ranking_l2) = std::move(ranking);
        }
    });

    auto run_curve = [&](const std::string& ordering, std::span<const std::size_t> order,
                         ModelFamily family) {
        CurveRequest request;
        request.family = family;
        request.model = model;
        request.base_seed = model_seed(master, family, 0);
        request.scaler = scaler;
        request.n_threads = cfg.threads;
        request.ordering = ordering;
        r.curves[curve_key(ordering, family)] = accuracy_curve(data.split, order, request);
    };

    stage("curves", [&] {
        const auto order_l1 = r.ranking_l1->order();
        const auto order_l2 = r.ranking_l2->order();
        for (auto family : cfg.curve_models) {
            run_curve("l1", order_l1, family);
            run_curve("l2", order_l2, family);
        }
    });

    stage("select", [&] {
        const auto& l1_curve = r.curves.at(curve_key("l1", ModelFamily::kLrL1));
        const auto& l2_curve = r.curves.at(curve_key("l2", ModelFamily::kLrL2));
        r.baseline = cfg.baseline_fraction * max_accuracy(l1_curve);
        r.max_l1 = find_max_k(l1_curve, r.baseline);
        if (!r.max_l1) {
            r.flags.push_back("MAX_L1: no k reached the baseline; using all features");
            r.max_l1 = m;
        }
        r.max_l2 = find_max_k(l2_curve, r.baseline);
        if (!r.max_l2) {
            r.flags.push_back("MAX_L2: no k reached the baseline; using all features");
            r.max_l2 = m;
        }
        r.common = common_features(*r.ranking_l1, *r.max_l1, *r.ranking_l2, *r.max_l2);
        if (r.common->size() > 0) {
            r.common_stats = rank_statistics(*r.common);
        } else {
            r.flags.push_back("common feature set is empty");
        }
    });

    stage("common-curves", [&] {
        if (r.common->size() == 0) return;
        const auto order = r.common->indices();
        for (auto family : cfg.curve_models) run_curve("common", order, family);
    });

    stage("grid", [&] {
        std::vector<ExperimentSpec> runnable;
        for (const auto& spec : cfg.experiments) {
            if (resolve_feature_set(r, spec.feature_set).empty()) {
                r.flags.push_back("skipped " + spec.display() + ": empty feature set");
            } else {
                runnable.push_back(spec);
            }
        }
        std::vector<ExperimentResult> results(runnable.size());
        ModelConfig grid_model = model;
        if (resolve_threads(cfg.threads) > 1) grid_model.forest.n_threads = 1;
        parallel_for(runnable.size(), cfg.threads, [&](std::size_t i) {
            const auto start = std::chrono::steady_clock::now();
            auto& out = results[i];
            out.spec = runnable[i];
            out.features = resolve_feature_set(r, out.spec.feature_set);
            const auto pred = fit_predict(out.spec.model, grid_model, data.split, out.features,
                                          model_seed(master, out.spec.model, out.features.size()),
                                          scaler);
            out.confusion = confusion(data.split.test.y, pred, data.split.test.n_classes(),
                                      data.split.test.class_names);
            out.report = prf1(out.confusion);
            out.accuracy = out.report.accuracy;
            out.wall_seconds = seconds_since(start);
        });
        r.experiments = std::move(results);
    });
}

GridResult run_pipeline(const RunConfig& cfg) {
    GridResult result;
    run_pipeline(cfg, result);
    return result;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw DataError("write failure on '" + path.string() + "'");
}

namespace {

// Class indices of the configured focus classes that exist in this run.
std::vector<std::size_t> focus_indices(const GridResult& r) {
    std::vector<std::size_t> out;
    if (!r.config.contains("focus_classes")) return out;
    for (const auto& name : r.config.at("focus_classes").get<std::vector<std::string>>()) {
        const auto it = std::find(r.class_names.begin(), r.class_names.end(), name);
        if (it != r.class_names.end()) out.push_back(static_cast<std::size_t>(it - r.class_names.begin()));
    }
    return out;
}

std::string feature_set_header(FeatureSet set, std::size_t common_size) {
    switch (set) {
        case FeatureSet::kTopL1: return "top" + std::to_string(common_size) + "-L1";
        case FeatureSet::kTopL2: return "top" + std::to_string(common_size) + "-L2";
        default: return to_string(set);
    }
}

std::string curves_table(const GridResult& r, const std::string& ordering,
                         std::span<const std::size_t> order) {
    std::vector<const AccuracyCurve*> curves;
    std::string out = "k,feature_index,feature_name";
    for (auto family : kAllModels) {
        const auto it = r.curves.find(curve_key(ordering, family));
        if (it == r.curves.end()) continue;
        curves.push_back(&it->second);
        out += "," + display_name(family);
    }
    out += '\n';
    if (curves.empty()) return out;
    for (std::size_t p = 0; p < curves.front()->points.size(); ++p) {
        const std::size_t k = curves.front()->points[p].k;
        const std::size_t feature = order[k - 1];
        out += std::to_string(k) + ',' + std::to_string(feature) + ',' + csv_escape(r.feature_names[feature]);
        for (const auto* c : curves) out += ',' + format_double(c->points[p].accuracy);
        out += '\n';
    }
    return out;
}

json summary_json(const GridResult& r) {
    json s;
    s["class_names"] = r.class_names;
    s["n_features"] = r.feature_names.size();
    s["baseline"] = r.baseline;
    s["max_l1"] = r.max_l1 ? json(*r.max_l1) : json();
    s["max_l2"] = r.max_l2 ? json(*r.max_l2) : json();
    if (r.common) {
        auto entries = json::array();
        for (const auto& e : r.common->entries) {
            entries.push_back({{"feature", r.feature_names[e.index]},
                               {"index", e.index},
                               {"l1_rank", e.l1_rank},
                               {"l2_rank", e.l2_rank}});
        }
        s["common_features"] = entries;
    }
    if (r.common_stats) s["common_rank_statistics"] = *r.common_stats;
    const auto full = r.curves.find(curve_key("l1", ModelFamily::kLrL1));
    if (full != r.curves.end() && !full->second.points.empty()) {
        s["lr_l1_max_accuracy"] = max_accuracy(full->second);
    }
    s["flags"] = r.flags;
    return s;
}

}  // namespace

void emit_reports(const GridResult& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> files;
    auto emit = [&](const std::string& name, const std::string& text) {
        write_text_file(dir / name, text);
        files.push_back(name);
    };

    if (!r.empty()) {
        if (r.ranking_l1) emit("ranking_l1.csv", ranking_csv(*r.ranking_l1, r.feature_names));
        if (r.ranking_l2) emit("ranking_l2.csv", ranking_csv(*r.ranking_l2, r.feature_names));
        if (r.common) emit("common_features.csv", common_csv(*r.common, r.feature_names));
        if (r.ranking_l1) emit("curves_l1.csv", curves_table(r, "l1", r.ranking_l1->order()));
        if (r.ranking_l2) emit("curves_l2.csv", curves_table(r, "l2", r.ranking_l2->order()));
        if (r.common && r.common->size() > 0) {
            emit("curves_common.csv", curves_table(r, "common", r.common->indices()));
        }

        if (!r.experiments.empty()) {
            const std::size_t common_size = r.common ? r.common->size() : 0;
            std::string grid = "model";
            for (auto set : kAllFeatureSets) grid += "," + feature_set_header(set, common_size);
            grid += '\n';
            for (auto family : kAllModels) {
                std::vector<std::optional<double>> cells;
                bool any = false;
                for (auto set : kAllFeatureSets) {
                    const auto it = std::find_if(r.experiments.begin(), r.experiments.end(),
                                                 [&](const ExperimentResult& e) {
                                                     return e.spec == ExperimentSpec{family, set};
                                                 });
                    cells.push_back(it == r.experiments.end() ? std::nullopt
                                                              : std::optional<double>(it->accuracy));
                    any = any || it != r.experiments.end();
                }
                if (!any) continue;
                grid += display_name(family);
                for (const auto& c : cells) grid += "," + format_opt(c);
                grid += '\n';
            }
            emit("accuracy_grid.csv", grid);

            std::string metrics =
                "experiment,model,feature_set,n_features,accuracy,macro_precision,macro_recall,"
                "macro_f1,weighted_precision,weighted_recall,weighted_f1,zero_division\n";
            for (const auto& e : r.experiments) {
                const auto& rep = e.report;
                metrics += e.spec.display() + ',' + display_name(e.spec.model) + ',' +
                           feature_set_header(e.spec.feature_set, common_size) + ',' +
                           std::to_string(e.features.size()) + ',' + format_double(e.accuracy) + ',' +
                           format_double(rep.macro.precision) + ',' + format_double(rep.macro.recall) +
                           ',' + format_double(rep.macro.f1) + ',' + format_double(rep.weighted.precision) +
                           ',' + format_double(rep.weighted.recall) + ',' +
                           format_double(rep.weighted.f1) + ',' + (rep.zero_division ? "1" : "0") + '\n';
            }
            emit("metrics.csv", metrics);

            const auto focus = focus_indices(r);
            for (const auto& e : r.experiments) {
                emit("confusion_" + e.spec.id() + ".csv", to_csv(e.confusion));
                if (!focus.empty()) emit("submatrix_" + e.spec.id() + ".csv", to_csv(submatrix(e.confusion, focus)));
            }
            if (!focus.empty()) {
                std::string recall = "model,class";
                for (auto set : kAllFeatureSets) recall += "," + feature_set_header(set, common_size);
                recall += '\n';
                for (auto family : kAllModels) {
                    const bool any = std::any_of(r.experiments.begin(), r.experiments.end(),
                                                 [&](const ExperimentResult& e) { return e.spec.model == family; });
                    if (!any) continue;
                    for (std::size_t k : focus) {
                        recall += display_name(family) + ',' + csv_escape(r.class_names[k]);
                        for (auto set : kAllFeatureSets) {
                            const auto it = std::find_if(r.experiments.begin(), r.experiments.end(),
                                                         [&](const ExperimentResult& e) {
                                                             return e.spec == ExperimentSpec{family, set};
                                                         });
                            std::optional<double> cell;
                            if (it != r.experiments.end() && it->confusion.row_sum(k) > 0) {
                                cell = class_recall(it->confusion, k);
                            }
                            recall += "," + format_opt(cell);
                        }
                        recall += '\n';
                    }
                }
                emit("recall_focus.csv", recall);
            }
        }

        emit("summary.json", summary_json(r).dump(2) + "\n");
        emit("grid_result.json", to_json(r).dump(1) + "\n");

        // Wall times are the only run-to-run variation, so they live outside
        // the manifest's file list. A result reloaded from JSON has none.
        if (!r.stage_seconds.empty()) {
            json timings = {{"stages", r.stage_seconds}};
            json per_experiment = json::object();
            for (const auto& e : r.experiments) per_experiment[e.spec.display()] = e.wall_seconds;
            timings["experiments"] = per_experiment;
            write_text_file(dir / "timings.json", timings.dump(2) + "\n");
        }
    }

    json manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["config"] = r.config;
    manifest["config_hash"] = hex64(fnv1a(r.config.dump()));
    manifest["seeds"] = r.seeds;
    manifest["row_counts"] = r.row_counts;
    manifest["stages_completed"] = r.completed_stages;
    manifest["files"] = files;
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

json to_json(const GridResult& r) {
    json j;
    j["config"] = r.config;
    j["feature_names"] = r.feature_names;
    j["class_names"] = r.class_names;
    j["row_counts"] = r.row_counts;
    j["seeds"] = r.seeds;
    if (r.full_l1) j["full_l1"] = *r.full_l1;
    if (r.full_l2) j["full_l2"] = *r.full_l2;
    if (r.ranking_l1) j["ranking_l1"] = *r.ranking_l1;
    if (r.ranking_l2) j["ranking_l2"] = *r.ranking_l2;
    j["curves"] = r.curves;
    j["baseline"] = r.baseline;
    if (r.max_l1) j["max_l1"] = *r.max_l1;
    if (r.max_l2) j["max_l2"] = *r.max_l2;
    if (r.common) j["common"] = *r.common;
    if (r.common_stats) j["common_stats"] = *r.common_stats;
    auto experiments = json::array();
    for (const auto& e : r.experiments) {
        experiments.push_back({{"model", to_string(e.spec.model)},
                               {"feature_set", to_string(e.spec.feature_set)},
                               {"features", e.features},
                               {"accuracy", e.accuracy},
                               {"report", e.report},
                               {"confusion", e.confusion}});
    }
    j["experiments"] = experiments;
    j["flags"] = r.flags;
    j["completed_stages"] = r.completed_stages;
    return j;
}

GridResult grid_result_from_json(const json& j) {
    GridResult r;
    try {
        r.config = j.at("config");
        r.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        r.class_names = j.at("class_names").get<std::vector<std::string>>();
        r.row_counts = j.at("row_counts").get<std::map<std::string, std::size_t>>();
        r.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
        if (j.contains("full_l1")) r.full_l1 = j.at("full_l1").get<LogRegModel>();
        if (j.contains("full_l2")) r.full_l2 = j.at("full_l2").get<LogRegModel>();
        if (j.contains("ranking_l1")) r.ranking_l1 = j.at("ranking_l1").get<FeatureRanking>();
        if (j.contains("ranking_l2")) r.ranking_l2 = j.at("ranking_l2").get<FeatureRanking>();
        r.curves = j.at("curves").get<std::map<std::string, AccuracyCurve>>();
        r.baseline = j.at("baseline").get<double>();
        if (j.contains("max_l1")) r.max_l1 = j.at("max_l1").get<std::size_t>();
        if (j.contains("max_l2")) r.max_l2 = j.at("max_l2").get<std::size_t>();
        if (j.contains("common")) r.common = j.at("common").get<CommonFeatureSet>();
        if (j.contains("common_stats")) r.common_stats = j.at("common_stats").get<RankStatistics>();
        for (const auto& e : j.at("experiments")) {
            ExperimentResult x;
            x.spec = {model_family_from_string(e.at("model").get<std::string>()),
                      feature_set_from_string(e.at("feature_set").get<std::string>())};
            x.features = e.at("features").get<std::vector<std::size_t>>();
            x.accuracy = e.at("accuracy").get<double>();
            x.report = e.at("report").get<Report>();
            x.confusion = e.at("confusion").get<ConfusionMatrix>();
            r.experiments.push_back(std::move(x));
        }
        r.flags = j.at("flags").get<std::vector<std::string>>();
        r.completed_stages = j.at("completed_stages").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw DataError(std::string("grid result document is malformed: ") + e.what());
    }
    return r;
}

}  // namespace fsel
