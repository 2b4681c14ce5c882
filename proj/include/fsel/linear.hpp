#pragma once

// Multinomial logistic regression on a feature subset.

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsel/ingest.hpp"
#include "fsel/optim.hpp"

namespace fsel {

// A fitted model. Inputs to predict are rows of the full source width; the
// model picks its subset and applies its stored scaler itself.
struct LogRegModel {
    WeightMatrix weights;
    std::vector<std::size_t> feature_subset;
    std::size_t source_width = 0;
    ScalerParams scaler;  // over the subset columns
    PenaltySpec penalty;
    std::vector<std::string> class_names;
    std::vector<std::string> feature_names;  // names of the subset columns
    std::uint64_t seed = 0;
};

struct CoefficientTable {
    Matrix values;  // K x |subset|
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names;
};

// Fits on the given columns of train. If scaler is provided it covers all
// source columns and is applied before fitting (and at prediction time).
LogRegModel fit(const Dataset& train, std::span<const std::size_t> subset,
                const PenaltySpec& penalty, const SagaConfig& cfg,
                const ScalerParams* scaler = nullptr);

Matrix predict_proba(const LogRegModel& model, const Matrix& X);
std::vector<int> predict(const LogRegModel& model, const Matrix& X);
CoefficientTable coefficients(const LogRegModel& model);

void to_json(nlohmann::json& j, const LogRegModel& model);
void from_json(const nlohmann::json& j, LogRegModel& model);

}  // namespace fsel
