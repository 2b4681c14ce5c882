#pragma once

// Penalized multinomial cross-entropy and a SAGA solver for it.
//
// The objective is a sum (not a mean) over samples:
//
//   F(W, b) = sum_i -log softmax(W x_i + b)[y_i] + (1/C) * R(W)
//
// with R(W) = sum |W_kj| (L1) or sum W_kj^2 (L2). Intercepts b are never
// penalized.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsel/ingest.hpp"
#include "fsel/matrix.hpp"

namespace fsel {

enum class Penalty { kL1, kL2 };

std::string to_string(Penalty p);
Penalty penalty_from_string(const std::string& text);

struct PenaltySpec {
    Penalty kind = Penalty::kL1;
    // Inverse regularization strength; lambda = 1 / C.
    double C = 0.5;

    double lambda() const { return 1.0 / C; }
};

struct WeightMatrix {
    Matrix coefficients;  // K x m
    std::vector<double> intercepts;  // K

    static WeightMatrix zeros(std::size_t K, std::size_t m) {
        return {Matrix(K, m), std::vector<double>(K, 0.0)};
    }
    std::size_t n_classes() const noexcept { return coefficients.rows(); }
    std::size_t n_features() const noexcept { return coefficients.cols(); }

    friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;
};

struct SagaConfig {
    std::size_t max_epochs = 100;
    std::optional<double> step_size;  // nullopt selects the automatic step
    double tolerance = 1e-4;          // relative objective change per epoch
    std::uint64_t seed = 0;
};

// Diagnostics from the last saga_fit call.
struct SagaTrace {
    std::vector<double> epoch_objectives;
    double step_size = 0.0;
    bool converged = false;
};

// Numerically stable softmax (max-subtracted).
std::vector<double> softmax(std::span<const double> scores);
void softmax_inplace(std::span<double> scores);

inline double soft_threshold(double w, double t) {
    if (w > t) return w - t;
    if (w < -t) return w + t;
    return 0.0;
}

// (1/C) * R(W) for the given penalty.
double penalty_value(const Matrix& coefficients, const PenaltySpec& penalty);

double objective(const WeightMatrix& W, const Dataset& data, const PenaltySpec& penalty);

// Gradient of the objective. For L1 only the data term is returned; the
// solver applies the L1 part through its proximal step.
WeightMatrix gradient(const WeightMatrix& W, const Dataset& data, const PenaltySpec& penalty);

// Class scores W x + b for one row.
void class_scores(const WeightMatrix& W, std::span<const double> x, std::span<double> out);

// Automatic step: 1 / (3 L) with L = max_i (|x_i|^2 + 1) (K-1)/K, plus
// lambda for L2.
double auto_step_size(const Dataset& data, const PenaltySpec& penalty);

// Throws SolverError if the objective becomes non-finite.
WeightMatrix saga_fit(const Dataset& data, const PenaltySpec& penalty, const SagaConfig& cfg,
                      SagaTrace* trace = nullptr);

// JSON document {class_names, feature_names, coefficients, intercepts,
// penalty, C, seed}.
struct WeightDocument {
    WeightMatrix weights;
    std::vector<std::string> class_names;
    std::vector<std::string> feature_names;
    PenaltySpec penalty;
    std::uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const WeightDocument& doc);
void from_json(const nlohmann::json& j, WeightDocument& doc);

}  // namespace fsel
