#include "fsel/linear.hpp"

#include <algorithm>
#include <set>

#include "fsel/error.hpp"

namespace fsel {

namespace {

void check_subset(std::span<const std::size_t> subset, std::size_t width) {
    if (subset.empty()) throw std::invalid_argument("feature subset is empty");
    std::set<std::size_t> seen;
    for (std::size_t idx : subset) {
        if (idx >= width) throw std::invalid_argument("feature index out of range");
        if (!seen.insert(idx).second) throw std::invalid_argument("duplicate feature index");
    }
}

}  // namespace

LogRegModel fit(const Dataset& train, std::span<const std::size_t> subset,
                const PenaltySpec& penalty, const SagaConfig& cfg, const ScalerParams* scaler) {
    check_subset(subset, train.n_features());
    Dataset restricted = train.select_columns(subset);

    LogRegModel model;
    model.feature_subset.assign(subset.begin(), subset.end());
    model.source_width = train.n_features();
    model.scaler = scaler ? scaler->select(subset) : ScalerParams::identity(subset.size());
    if (scaler) restricted.X = model.scaler.apply(restricted.X);

    model.weights = saga_fit(restricted, penalty, cfg);
    model.penalty = penalty;
    model.class_names = train.class_names;
    model.feature_names = restricted.feature_names;
    model.seed = cfg.seed;
    return model;
}

Matrix predict_proba(const LogRegModel& model, const Matrix& X) {
    if (X.rows() > 0 && X.cols() != model.source_width) {
        throw std::invalid_argument("predict: row width does not match model source width");
    }
    const std::size_t K = model.weights.n_classes();
    const std::size_t s = model.feature_subset.size();
    Matrix out(X.rows(), K);
    std::vector<double> x(s);
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const auto row = X.row(i);
        for (std::size_t c = 0; c < s; ++c) x[c] = row[model.feature_subset[c]];
        model.scaler.apply_inplace(x);
        auto p = out.row(i);
        class_scores(model.weights, x, p);
        softmax_inplace(p);
    }
    return out;
}

std::vector<int> predict(const LogRegModel& model, const Matrix& X) {
    const Matrix proba = predict_proba(model, X);
    std::vector<int> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const auto p = proba.row(i);
        // max_element returns the first maximum: ties go to the lowest class.
        out[i] = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    }
    return out;
}

CoefficientTable coefficients(const LogRegModel& model) {
    return {model.weights.coefficients, model.feature_names, model.class_names};
}

void to_json(nlohmann::json& j, const LogRegModel& model) {
    WeightDocument doc{model.weights, model.class_names, model.feature_names, model.penalty,
                       model.seed};
    j = doc;
    j["feature_subset"] = model.feature_subset;
    j["source_width"] = model.source_width;
    j["scaler"] = {{"means", model.scaler.means}, {"std_devs", model.scaler.std_devs}};
}

void from_json(const nlohmann::json& j, LogRegModel& model) {
    const auto doc = j.get<WeightDocument>();
    model.weights = doc.weights;
    model.class_names = doc.class_names;
    model.feature_names = doc.feature_names;
    model.penalty = doc.penalty;
    model.seed = doc.seed;
    model.feature_subset = j.at("feature_subset").get<std::vector<std::size_t>>();
    model.source_width = j.at("source_width").get<std::size_t>();
    model.scaler.means = j.at("scaler").at("means").get<std::vector<double>>();
    model.scaler.std_devs = j.at("scaler").at("std_devs").get<std::vector<double>>();
    if (model.feature_subset.size() != model.weights.n_features() ||
        model.scaler.means.size() != model.feature_subset.size()) {
        throw DataError("model document: subset does not match coefficient columns");
    }
    check_subset(model.feature_subset, model.source_width);
}

}  // namespace fsel
