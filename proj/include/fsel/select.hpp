#pragma once

// Coefficient-based feature ranking, accuracy-vs-k curves and the
// intersection of the L1 and L2 top sets.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsel/ingest.hpp"
#include "fsel/optim.hpp"
#include "fsel/trees.hpp"

namespace fsel {

// How the K per-class coefficients of a feature collapse to one score.
// kMaxSigned ranks by the largest signed coefficient; its scores may be
// negative.
enum class Aggregation { kMeanAbs, kMaxAbs, kL2Norm, kMaxSigned };

std::string to_string(Aggregation a);
Aggregation aggregation_from_string(const std::string& text);

struct RankedFeature {
    std::size_t index = 0;
    double score = 0.0;
};

struct FeatureRanking {
    std::vector<RankedFeature> ordered;  // best first
    Aggregation aggregation = Aggregation::kMeanAbs;
    Penalty penalty_kind = Penalty::kL1;

    std::size_t size() const noexcept { return ordered.size(); }
    // Feature indices, best first.
    std::vector<std::size_t> order() const;
    // First `k` feature indices.
    std::vector<std::size_t> top(std::size_t k) const;
};

FeatureRanking rank_features(const Matrix& coefficients, Aggregation aggregation,
                             Penalty penalty_kind);

enum class ModelFamily { kLrL1, kLrL2, kRandomForest, kDecisionTree };

std::string to_string(ModelFamily f);
// Display name used in report tables: LR+L1, LR+L2, RF, DT.
std::string display_name(ModelFamily f);
ModelFamily model_family_from_string(const std::string& text);

struct ModelConfig {
    double C = 0.5;
    SagaConfig saga;
    TreeParams tree;
    ForestParams forest;
};

// Fits one model family on the subset columns of pair.train and predicts
// pair.test. seed overrides the seed in cfg. scaler (over all source
// columns) is used by the linear families only.
std::vector<int> fit_predict(ModelFamily family, const ModelConfig& cfg, const SplitPair& pair,
                             std::span<const std::size_t> subset, std::uint64_t seed,
                             const ScalerParams* scaler);

struct CurvePoint {
    std::size_t k = 0;
    double accuracy = 0.0;
};

struct AccuracyCurve {
    std::vector<CurvePoint> points;
    ModelFamily model_family = ModelFamily::kLrL1;
    std::string ordering;  // "l1", "l2" or "common"
};

struct CurveRequest {
    ModelFamily family = ModelFamily::kLrL1;
    ModelConfig model;
    std::vector<std::size_t> k_values;  // empty: 1..|order|
    std::uint64_t base_seed = 0;        // the point for k uses base_seed + k
    const ScalerParams* scaler = nullptr;
    std::size_t n_threads = 0;
    std::string ordering = "l1";
};

// Retrains on the first k features of `order` for every k and scores each
// fit on the test split.
AccuracyCurve accuracy_curve(const SplitPair& pair, std::span<const std::size_t> order,
                             const CurveRequest& request);

// Smallest k whose accuracy reaches target.
std::optional<std::size_t> find_max_k(const AccuracyCurve& curve, double target);

double max_accuracy(const AccuracyCurve& curve);

struct CommonFeature {
    std::size_t index = 0;
    std::size_t l1_rank = 0;  // 1-based
    std::size_t l2_rank = 0;  // 1-based
};

struct CommonFeatureSet {
    std::vector<CommonFeature> entries;  // ascending l1_rank

    std::size_t size() const noexcept { return entries.size(); }
    std::vector<std::size_t> indices() const;
};

CommonFeatureSet common_features(const FeatureRanking& rank_l1, std::size_t max_l1,
                                 const FeatureRanking& rank_l2, std::size_t max_l2);

struct RankStatistics {
    std::size_t count = 0;
    double l1_rank_mean = 0.0;
    double l2_rank_mean = 0.0;
    std::size_t l1_min = 0;
    std::size_t l1_max = 0;
    std::size_t l2_min = 0;
    std::size_t l2_max = 0;
};

RankStatistics rank_statistics(const CommonFeatureSet& common);

// CSV renderings (header row first). Feature names are looked up by index.
std::string ranking_csv(const FeatureRanking& ranking, std::span<const std::string> feature_names);
std::string common_csv(const CommonFeatureSet& common, std::span<const std::string> feature_names);
std::string curve_csv(const AccuracyCurve& curve);

void to_json(nlohmann::json& j, const FeatureRanking& r);
void from_json(const nlohmann::json& j, FeatureRanking& r);
void to_json(nlohmann::json& j, const AccuracyCurve& c);
void from_json(const nlohmann::json& j, AccuracyCurve& c);
void to_json(nlohmann::json& j, const CommonFeatureSet& s);
void from_json(const nlohmann::json& j, CommonFeatureSet& s);
void to_json(nlohmann::json& j, const RankStatistics& s);
void from_json(const nlohmann::json& j, RankStatistics& s);

}  // namespace fsel
