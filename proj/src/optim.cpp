#include "fsel/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fsel/error.hpp"
#include "fsel/random.hpp"

namespace fsel {

namespace {

void check_dimensions(const WeightMatrix& W, const Dataset& data) {
    if (W.n_classes() != data.n_classes() || W.n_features() != data.n_features() ||
        W.intercepts.size() != W.n_classes()) {
        throw std::invalid_argument("weight matrix shape does not match dataset");
    }
}

// log sum_k exp(s_k), max-shifted.
double log_sum_exp(std::span<const double> s) {
    const double hi = *std::max_element(s.begin(), s.end());
    double sum = 0.0;
    for (double v : s) sum += std::exp(v - hi);
    return hi + std::log(sum);
}

}  // namespace

std::string to_string(Penalty p) { return p == Penalty::kL1 ? "l1" : "l2"; }

Penalty penalty_from_string(const std::string& text) {
    if (text == "l1" || text == "L1") return Penalty::kL1;
    if (text == "l2" || text == "L2") return Penalty::kL2;
    throw ConfigError("unknown penalty '" + text + "'");
}

void softmax_inplace(std::span<double> scores) {
    if (scores.empty()) return;
    const double hi = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double& v : scores) {
        v = std::exp(v - hi);
        sum += v;
    }
    for (double& v : scores) v /= sum;
}

std::vector<double> softmax(std::span<const double> scores) {
    std::vector<double> out(scores.begin(), scores.end());
    softmax_inplace(out);
    return out;
}

double penalty_value(const Matrix& coefficients, const PenaltySpec& penalty) {
    double total = 0.0;
    for (double w : coefficients.data()) {
        total += penalty.kind == Penalty::kL1 ? std::abs(w) : w * w;
    }
    return penalty.lambda() * total;
}

void class_scores(const WeightMatrix& W, std::span<const double> x, std::span<double> out) {
    for (std::size_t k = 0; k < W.n_classes(); ++k) {
        const auto w = W.coefficients.row(k);
        double s = W.intercepts[k];
        for (std::size_t j = 0; j < x.size(); ++j) s += w[j] * x[j];
        out[k] = s;
    }
}

double objective(const WeightMatrix& W, const Dataset& data, const PenaltySpec& penalty) {
    check_dimensions(W, data);
    std::vector<double> scores(W.n_classes());
    double loss = 0.0;
    for (std::size_t i = 0; i < data.n_samples(); ++i) {
        class_scores(W, data.X.row(i), scores);
        loss += log_sum_exp(scores) - scores[static_cast<std::size_t>(data.y[i])];
    }
    return loss + penalty_value(W.coefficients, penalty);
}

WeightMatrix gradient(const WeightMatrix& W, const Dataset& data, const PenaltySpec& penalty) {
    check_dimensions(W, data);
    const std::size_t K = W.n_classes();
    const std::size_t m = W.n_features();
    WeightMatrix grad = WeightMatrix::zeros(K, m);
    std::vector<double> p(K);
    for (std::size_t i = 0; i < data.n_samples(); ++i) {
        const auto x = data.X.row(i);
        class_scores(W, x, p);
        softmax_inplace(p);
        p[static_cast<std::size_t>(data.y[i])] -= 1.0;
        for (std::size_t k = 0; k < K; ++k) {
            auto g = grad.coefficients.row(k);
            for (std::size_t j = 0; j < m; ++j) g[j] += p[k] * x[j];
            grad.intercepts[k] += p[k];
        }
    }
    if (penalty.kind == Penalty::kL2) {
        const double scale = 2.0 * penalty.lambda();
        auto g = grad.coefficients.data();
        auto w = W.coefficients.data();
        for (std::size_t t = 0; t < g.size(); ++t) g[t] += scale * w[t];
    }
    return grad;
}

double auto_step_size(const Dataset& data, const PenaltySpec& penalty) {
    double max_sq = 0.0;
    for (std::size_t i = 0; i < data.n_samples(); ++i) {
        double sq = 1.0;  // intercept column
        for (double v : data.X.row(i)) sq += v * v;
        max_sq = std::max(max_sq, sq);
    }
    const double K = static_cast<double>(data.n_classes());
    double lipschitz = max_sq * (K - 1.0) / K;
    if (penalty.kind == Penalty::kL2) lipschitz += penalty.lambda();
    return 1.0 / (3.0 * lipschitz);
}

WeightMatrix saga_fit(const Dataset& data, const PenaltySpec& penalty, const SagaConfig& cfg,
                      SagaTrace* trace) {
    if (!(penalty.C > 0.0)) throw ConfigError("C must be positive");
    if (cfg.max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
    if (!(cfg.tolerance > 0.0)) throw ConfigError("tolerance must be positive");
    const std::size_t n = data.n_samples();
    const std::size_t m = data.n_features();
    const std::size_t K = data.n_classes();
    if (K < 2) throw DataError("logistic regression needs at least two classes");
    if (n < K) throw DataError("fewer samples than classes");

    const double step = cfg.step_size.value_or(auto_step_size(data, penalty));
    if (!(step > 0.0)) throw ConfigError("step size must be positive");
    const double inv_n = 1.0 / static_cast<double>(n);
    const double lambda = penalty.lambda();
    const bool l1 = penalty.kind == Penalty::kL1;
    const double l1_threshold = step * lambda * inv_n;
    const double l2_scale = l1 ? 0.0 : 2.0 * lambda * inv_n;

    WeightMatrix W = WeightMatrix::zeros(K, m);

    // Gradient memory: the per-sample gradient is residual_i (outer) x_i, so
    // only the K residuals are stored.
    std::vector<double> memory(n * K);
    Matrix avg_coef(K, m);
    std::vector<double> avg_int(K, 0.0);
    std::vector<double> p(K);
    std::vector<double> delta(K);

    auto residual = [&](std::size_t i, std::span<double> out) {
        class_scores(W, data.X.row(i), out);
        softmax_inplace(out);
        out[static_cast<std::size_t>(data.y[i])] -= 1.0;
    };

    for (std::size_t i = 0; i < n; ++i) {
        std::span<double> r(memory.data() + i * K, K);
        residual(i, r);
        const auto x = data.X.row(i);
        for (std::size_t k = 0; k < K; ++k) {
            auto a = avg_coef.row(k);
            for (std::size_t j = 0; j < m; ++j) a[j] += r[k] * x[j] * inv_n;
            avg_int[k] += r[k] * inv_n;
        }
    }

    SagaTrace local;
    local.step_size = step;
    double previous = objective(W, data, penalty);
    Rng rng(cfg.seed);
    auto order = iota_indices(n);

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        shuffle(order, rng);
        for (std::size_t i : order) {
            const auto x = data.X.row(i);
            std::span<double> stored(memory.data() + i * K, K);
            residual(i, p);
            for (std::size_t k = 0; k < K; ++k) delta[k] = p[k] - stored[k];

            for (std::size_t k = 0; k < K; ++k) {
                auto w = W.coefficients.row(k);
                const auto a = avg_coef.row(k);
                const double d = delta[k];
                for (std::size_t j = 0; j < m; ++j) {
                    const double g = d * x[j] + a[j] + l2_scale * w[j];
                    w[j] -= step * g;
                }
                W.intercepts[k] -= step * (d + avg_int[k]);
            }
            if (l1) {
                for (double& w : W.coefficients.data()) w = soft_threshold(w, l1_threshold);
            }

            for (std::size_t k = 0; k < K; ++k) {
                const double d = delta[k] * inv_n;
                auto a = avg_coef.row(k);
                for (std::size_t j = 0; j < m; ++j) a[j] += d * x[j];
                avg_int[k] += d;
                stored[k] = p[k];
            }
        }

        const double current = objective(W, data, penalty);
        if (!std::isfinite(current)) {
            throw SolverError("objective became non-finite in epoch " + std::to_string(epoch + 1) +
                              " (step size " + std::to_string(step) + " too large?)");
        }
        local.epoch_objectives.push_back(current);
        const double change = std::abs(previous - current) /
                              std::max(std::abs(previous), std::numeric_limits<double>::min());
        previous = current;
        if (change < cfg.tolerance) {
            local.converged = true;
            break;
        }
    }

    if (l1) {
        for (double& w : W.coefficients.data()) {
            if (std::abs(w) < 1e-10) w = 0.0;
        }
    }
    if (trace) *trace = std::move(local);
    return W;
}

void to_json(nlohmann::json& j, const WeightDocument& doc) {
    const auto& W = doc.weights;
    auto rows = nlohmann::json::array();
    for (std::size_t k = 0; k < W.n_classes(); ++k) {
        const auto r = W.coefficients.row(k);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    j = nlohmann::json{{"class_names", doc.class_names},
                       {"feature_names", doc.feature_names},
                       {"coefficients", std::move(rows)},
                       {"intercepts", W.intercepts},
                       {"penalty", to_string(doc.penalty.kind)},
                       {"C", doc.penalty.C},
                       {"seed", doc.seed}};
}

void from_json(const nlohmann::json& j, WeightDocument& doc) {
    doc.class_names = j.at("class_names").get<std::vector<std::string>>();
    doc.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    const auto rows = j.at("coefficients").get<std::vector<std::vector<double>>>();
    doc.weights.coefficients = Matrix::from_rows(rows);
    if (rows.empty()) doc.weights.coefficients = Matrix(0, doc.feature_names.size());
    doc.weights.intercepts = j.at("intercepts").get<std::vector<double>>();
    doc.penalty.kind = penalty_from_string(j.at("penalty").get<std::string>());
    doc.penalty.C = j.at("C").get<double>();
    doc.seed = j.at("seed").get<std::uint64_t>();
    if (doc.weights.n_classes() != doc.class_names.size() ||
        doc.weights.intercepts.size() != doc.class_names.size() ||
        doc.weights.n_features() != doc.feature_names.size()) {
        throw DataError("weight document: shape does not match names");
    }
}

}  // namespace fsel
