#include "fsel/select.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "fsel/error.hpp"
#include "fsel/linear.hpp"
#include "fsel/metrics.hpp"
#include "fsel/parallel.hpp"

namespace fsel {

std::string to_string(Aggregation a) {
    switch (a) {
        case Aggregation::kMeanAbs: return "mean-abs";
        case Aggregation::kMaxAbs: return "max-abs";
        case Aggregation::kL2Norm: return "l2-norm";
        case Aggregation::kMaxSigned: return "max-signed";
    }
    return "mean-abs";
}

Aggregation aggregation_from_string(const std::string& text) {
    if (text == "mean-abs") return Aggregation::kMeanAbs;
    if (text == "max-abs") return Aggregation::kMaxAbs;
    if (text == "l2-norm") return Aggregation::kL2Norm;
    if (text == "max-signed") return Aggregation::kMaxSigned;
    throw ConfigError("unknown aggregation '" + text + "'");
}

std::vector<std::size_t> FeatureRanking::order() const { return top(ordered.size()); }

std::vector<std::size_t> FeatureRanking::top(std::size_t k) const {
    k = std::min(k, ordered.size());
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t r = 0; r < k; ++r) out.push_back(ordered[r].index);
    return out;
}

FeatureRanking rank_features(const Matrix& coefficients, Aggregation aggregation,
                             Penalty penalty_kind) {
    const std::size_t K = coefficients.rows();
    const std::size_t m = coefficients.cols();
    if (K == 0 || m == 0) throw std::invalid_argument("rank_features: empty coefficient matrix");

    FeatureRanking ranking;
    ranking.aggregation = aggregation;
    ranking.penalty_kind = penalty_kind;
    for (std::size_t j = 0; j < m; ++j) {
        double score = aggregation == Aggregation::kMaxSigned ? coefficients(0, j) : 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double w = coefficients(k, j);
            if (!std::isfinite(w)) throw std::invalid_argument("rank_features: non-finite coefficient");
            switch (aggregation) {
                case Aggregation::kMeanAbs: score += std::abs(w); break;
                case Aggregation::kMaxAbs: score = std::max(score, std::abs(w)); break;
                case Aggregation::kL2Norm: score += w * w; break;
                case Aggregation::kMaxSigned: score = std::max(score, w); break;
            }
        }
        if (aggregation == Aggregation::kMeanAbs) score /= static_cast<double>(K);
        if (aggregation == Aggregation::kL2Norm) score = std::sqrt(score);
        ranking.ordered.push_back({j, score});
    }
    std::stable_sort(ranking.ordered.begin(), ranking.ordered.end(),
                     [](const RankedFeature& a, const RankedFeature& b) { return a.score > b.score; });
    return ranking;
}

std::string to_string(ModelFamily f) {
    switch (f) {
        case ModelFamily::kLrL1: return "lr-l1";
        case ModelFamily::kLrL2: return "lr-l2";
        case ModelFamily::kRandomForest: return "rf";
        case ModelFamily::kDecisionTree: return "dt";
    }
    return "lr-l1";
}

std::string display_name(ModelFamily f) {
    switch (f) {
        case ModelFamily::kLrL1: return "LR+L1";
        case ModelFamily::kLrL2: return "LR+L2";
        case ModelFamily::kRandomForest: return "RF";
        case ModelFamily::kDecisionTree: return "DT";
    }
    return "LR+L1";
}

ModelFamily model_family_from_string(const std::string& text) {
    if (text == "lr-l1") return ModelFamily::kLrL1;
    if (text == "lr-l2") return ModelFamily::kLrL2;
    if (text == "rf") return ModelFamily::kRandomForest;
    if (text == "dt") return ModelFamily::kDecisionTree;
    throw ConfigError("unknown model '" + text + "' (expected lr-l1, lr-l2, rf or dt)");
}

std::vector<int> fit_predict(ModelFamily family, const ModelConfig& cfg, const SplitPair& pair,
                             std::span<const std::size_t> subset, std::uint64_t seed,
                             const ScalerParams* scaler) {
    switch (family) {
        case ModelFamily::kLrL1:
        case ModelFamily::kLrL2: {
            SagaConfig saga = cfg.saga;
            saga.seed = seed;
            const PenaltySpec penalty{
                family == ModelFamily::kLrL1 ? Penalty::kL1 : Penalty::kL2, cfg.C};
            const auto model = fit(pair.train, subset, penalty, saga, scaler);
            return predict(model, pair.test.X);
        }
        case ModelFamily::kDecisionTree: {
            TreeParams params = cfg.tree;
            params.seed = seed;
            const auto tree = dt_fit(pair.train.select_columns(subset), params);
            return dt_predict(tree, pair.test.X.select_columns(subset));
        }
        case ModelFamily::kRandomForest: {
            ForestParams params = cfg.forest;
            params.seed = seed;
            const auto forest = rf_fit(pair.train.select_columns(subset), params);
            return rf_predict(forest, pair.test.X.select_columns(subset));
        }
    }
    throw std::logic_error("unhandled model family");
}

AccuracyCurve accuracy_curve(const SplitPair& pair, std::span<const std::size_t> order,
                             const CurveRequest& request) {
    std::vector<std::size_t> ks = request.k_values;
    if (ks.empty()) {
        for (std::size_t k = 1; k <= order.size(); ++k) ks.push_back(k);
    }
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (ks[i] < 1 || ks[i] > order.size()) {
            throw std::invalid_argument("accuracy_curve: k outside [1, |order|]");
        }
        if (i > 0 && ks[i] <= ks[i - 1]) {
            throw std::invalid_argument("accuracy_curve: k values must be strictly increasing");
        }
    }
    if (pair.test.n_samples() == 0) throw DataError("accuracy_curve: empty test split");

    AccuracyCurve curve;
    curve.model_family = request.family;
    curve.ordering = request.ordering;
    curve.points.resize(ks.size());
    // Forest fits stay single-threaded inside a curve so points can run in
    // parallel without oversubscription.
    ModelConfig model = request.model;
    if (resolve_threads(request.n_threads) > 1) model.forest.n_threads = 1;

    parallel_for(ks.size(), request.n_threads, [&](std::size_t i) {
        const std::size_t k = ks[i];
        const auto pred = fit_predict(request.family, model, pair, order.first(k),
                                      request.base_seed + k, request.scaler);
        const auto cm = confusion(pair.test.y, pred, pair.test.n_classes());
        curve.points[i] = {k, accuracy(cm)};
    });
    return curve;
}

std::optional<std::size_t> find_max_k(const AccuracyCurve& curve, double target) {
    if (curve.points.empty()) throw std::invalid_argument("find_max_k: empty curve");
    for (const auto& point : curve.points) {
        if (point.accuracy >= target) return point.k;
    }
    return std::nullopt;
}

double max_accuracy(const AccuracyCurve& curve) {
    if (curve.points.empty()) throw std::invalid_argument("max_accuracy: empty curve");
    double best = 0.0;
    for (const auto& point : curve.points) best = std::max(best, point.accuracy);
    return best;
}

std::vector<std::size_t> CommonFeatureSet::indices() const {
    std::vector<std::size_t> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.index);
    return out;
}

CommonFeatureSet common_features(const FeatureRanking& rank_l1, std::size_t max_l1,
                                 const FeatureRanking& rank_l2, std::size_t max_l2) {
    if (max_l1 < 1 || max_l1 > rank_l1.size() || max_l2 < 1 || max_l2 > rank_l2.size()) {
        throw std::invalid_argument("common_features: max outside [1, m]");
    }
    std::map<std::size_t, std::size_t> l2_rank;
    for (std::size_t r = 0; r < max_l2; ++r) l2_rank[rank_l2.ordered[r].index] = r + 1;

    CommonFeatureSet out;
    for (std::size_t r = 0; r < max_l1; ++r) {
        const std::size_t index = rank_l1.ordered[r].index;
        if (const auto it = l2_rank.find(index); it != l2_rank.end()) {
            out.entries.push_back({index, r + 1, it->second});
        }
    }
    return out;
}

RankStatistics rank_statistics(const CommonFeatureSet& common) {
    if (common.entries.empty()) throw std::invalid_argument("rank_statistics: empty set");
    RankStatistics s;
    s.count = common.entries.size();
    s.l1_min = s.l2_min = static_cast<std::size_t>(-1);
    double l1_sum = 0.0;
    double l2_sum = 0.0;
    for (const auto& e : common.entries) {
        l1_sum += static_cast<double>(e.l1_rank);
        l2_sum += static_cast<double>(e.l2_rank);
        s.l1_min = std::min(s.l1_min, e.l1_rank);
        s.l1_max = std::max(s.l1_max, e.l1_rank);
        s.l2_min = std::min(s.l2_min, e.l2_rank);
        s.l2_max = std::max(s.l2_max, e.l2_rank);
    }
    s.l1_rank_mean = l1_sum / static_cast<double>(s.count);
    s.l2_rank_mean = l2_sum / static_cast<double>(s.count);
    return s;
}

std::string ranking_csv(const FeatureRanking& ranking, std::span<const std::string> feature_names) {
    std::string out = "rank,feature_index,feature_name,score\n";
    for (std::size_t r = 0; r < ranking.ordered.size(); ++r) {
        const auto& f = ranking.ordered[r];
        out += std::to_string(r + 1) + ',' + std::to_string(f.index) + ',' +
               csv_escape(feature_names[f.index]) + ',' + format_double(f.score) + '\n';
    }
    return out;
}

std::string common_csv(const CommonFeatureSet& common, std::span<const std::string> feature_names) {
    std::string out = "l1_rank,l2_rank,feature_index,feature_name\n";
    for (const auto& e : common.entries) {
        out += std::to_string(e.l1_rank) + ',' + std::to_string(e.l2_rank) + ',' +
               std::to_string(e.index) + ',' + csv_escape(feature_names[e.index]) + '\n';
    }
    return out;
}

std::string curve_csv(const AccuracyCurve& curve) {
    std::string out = "k,accuracy\n";
    for (const auto& p : curve.points) out += std::to_string(p.k) + ',' + format_double(p.accuracy) + '\n';
    return out;
}

void to_json(nlohmann::json& j, const FeatureRanking& r) {
    auto entries = nlohmann::json::array();
    for (const auto& f : r.ordered) entries.push_back({{"index", f.index}, {"score", f.score}});
    j = {{"aggregation", to_string(r.aggregation)},
         {"penalty", to_string(r.penalty_kind)},
         {"ordered", entries}};
}

void from_json(const nlohmann::json& j, FeatureRanking& r) {
    r.aggregation = aggregation_from_string(j.at("aggregation").get<std::string>());
    r.penalty_kind = penalty_from_string(j.at("penalty").get<std::string>());
    r.ordered.clear();
    for (const auto& e : j.at("ordered")) {
        r.ordered.push_back({e.at("index").get<std::size_t>(), e.at("score").get<double>()});
    }
}

void to_json(nlohmann::json& j, const AccuracyCurve& c) {
    auto points = nlohmann::json::array();
    for (const auto& p : c.points) points.push_back({{"k", p.k}, {"accuracy", p.accuracy}});
    j = {{"model", to_string(c.model_family)}, {"ordering", c.ordering}, {"points", points}};
}

void from_json(const nlohmann::json& j, AccuracyCurve& c) {
    c.model_family = model_family_from_string(j.at("model").get<std::string>());
    c.ordering = j.at("ordering").get<std::string>();
    c.points.clear();
    for (const auto& p : j.at("points")) {
        c.points.push_back({p.at("k").get<std::size_t>(), p.at("accuracy").get<double>()});
    }
}

void to_json(nlohmann::json& j, const CommonFeatureSet& s) {
    j = nlohmann::json::array();
    for (const auto& e : s.entries) {
        j.push_back({{"index", e.index}, {"l1_rank", e.l1_rank}, {"l2_rank", e.l2_rank}});
    }
}

void from_json(const nlohmann::json& j, CommonFeatureSet& s) {
    s.entries.clear();
    for (const auto& e : j) {
        s.entries.push_back({e.at("index").get<std::size_t>(), e.at("l1_rank").get<std::size_t>(),
                             e.at("l2_rank").get<std::size_t>()});
    }
}

void to_json(nlohmann::json& j, const RankStatistics& s) {
    j = {{"count", s.count},         {"l1_rank_mean", s.l1_rank_mean},
         {"l2_rank_mean", s.l2_rank_mean}, {"l1_span", {s.l1_min, s.l1_max}},
         {"l2_span", {s.l2_min, s.l2_max}}};
}

void from_json(const nlohmann::json& j, RankStatistics& s) {
    s.count = j.at("count").get<std::size_t>();
    s.l1_rank_mean = j.at("l1_rank_mean").get<double>();
    s.l2_rank_mean = j.at("l2_rank_mean").get<double>();
    s.l1_min = j.at("l1_span").at(0).get<std::size_t>();
    s.l1_max = j.at("l1_span").at(1).get<std::size_t>();
    s.l2_min = j.at("l2_span").at(0).get<std::size_t>();
    s.l2_max = j.at("l2_span").at(1).get<std::size_t>();
}

}  // namespace fsel
