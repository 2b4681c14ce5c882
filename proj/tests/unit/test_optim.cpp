#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "fsel/error.hpp"
#include "fsel/optim.hpp"

using namespace fsel;
using fsel::testing::informative_dataset;
using fsel::testing::random_dataset;
using fsel::testing::finite_differences;
using fsel::testing::random_weights;
using fsel::testing::relative_error;

namespace {

std::vector<std::vector<double>> to_nested(const Matrix& m) {
    std::vector<std::vector<double>> out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) out[i].assign(m.row(i).begin(), m.row(i).end());
    return out;
}

double train_accuracy(const WeightMatrix& W, const Dataset& d) {
    std::vector<double> s(W.n_classes());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < d.n_samples(); ++i) {
        class_scores(W, d.X.row(i), s);
        const auto pred = std::max_element(s.begin(), s.end()) - s.begin();
        hits += pred == d.y[i];
    }
    return static_cast<double>(hits) / static_cast<double>(d.n_samples());
}

}  // namespace

TEST_CASE("softmax examples") {
    const std::vector<double> zeros{0, 0, 0};
    for (double p : softmax(zeros)) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    const std::vector<double> big{1000, 0};
    const auto p = softmax(big);
    CHECK(std::abs(p[0] - 1.0) <= 1e-12);
    CHECK(std::abs(p[1]) <= 1e-12);

    // e^s / sum e^s for (1, 2, 3).
    const std::vector<double> s{1, 2, 3};
    const auto q = softmax(s);
    CHECK(std::abs(q[0] - 0.09003) <= 1e-5);
    CHECK(std::abs(q[1] - 0.24473) <= 1e-5);
    CHECK(std::abs(q[2] - 0.66524) <= 1e-5);
}

TEST_CASE("softmax sums to one and is shift invariant") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t K = 2 + uniform_index(rng, 9);
        std::vector<double> s(K);
        for (double& v : s) v = 20.0 * fsel::testing::normal(rng);
        const auto p = softmax(s);
        double sum = 0.0;
        for (double v : p) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        const double shift = 50.0 * fsel::testing::normal(rng);
        for (double& v : s) v += shift;
        const auto shifted = softmax(s);
        for (std::size_t k = 0; k < K; ++k) CHECK(std::abs(shifted[k] - p[k]) <= 1e-12);
    }
}

TEST_CASE("soft_threshold analytic cases and properties") {
    CHECK(soft_threshold(3.0, 1.0) == 2.0);
    CHECK(soft_threshold(-0.5, 1.0) == 0.0);
    CHECK(soft_threshold(-2.0, 0.5) == -1.5);
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const double w = 10.0 * fsel::testing::normal(rng);
        const double t = std::abs(fsel::testing::normal(rng));
        CHECK(soft_threshold(w, 0.0) == w);
        CHECK(std::abs(soft_threshold(w, t)) <= std::abs(w));
    }
}

TEST_CASE("objective: zero weights give n ln K") {
    const Dataset d = random_dataset(37, 4, 5, 11);
    const auto W = WeightMatrix::zeros(5, 4);
    for (auto kind : {Penalty::kL1, Penalty::kL2}) {
        CHECK(objective(W, d, {kind, 0.5}) == doctest::Approx(37 * std::log(5.0)).epsilon(1e-14));
    }
}

TEST_CASE("objective: unit weights with L1 at C = 0.5 add a penalty of 8") {
    const Dataset d = random_dataset(6, 2, 2, 5);
    WeightMatrix W = WeightMatrix::zeros(2, 2);
    for (double& w : W.coefficients.data()) w = 1.0;
    const double data_term = fsel::testing::reference_objective(to_nested(W.coefficients), W.intercepts,
                                                                d, true, 1e300);
    CHECK(objective(W, d, {Penalty::kL1, 0.5}) == doctest::Approx(data_term + 8.0).epsilon(1e-13));
}

TEST_CASE("objective matches an independent evaluator") {
    const Dataset d = random_dataset(10, 3, 2, 99);
    const auto W = random_weights(2, 3, 100);
    const double expected =
        fsel::testing::reference_objective(to_nested(W.coefficients), W.intercepts, d, false, 0.5);
    CHECK(std::abs(objective(W, d, {Penalty::kL2, 0.5}) - expected) <= 1e-10);
}

TEST_CASE("objective: penalty ordering") {
    const Dataset d = random_dataset(20, 4, 3, 1);
    const auto W = random_weights(3, 4, 2);
    const double tiny = objective(W, d, {Penalty::kL1, 1e300});
    const double weak = objective(W, d, {Penalty::kL1, 2.0});
    const double strong = objective(W, d, {Penalty::kL1, 0.5});
    CHECK(weak >= tiny);
    CHECK(strong >= weak);
    const auto wrong = WeightMatrix::zeros(2, 4);
    CHECK_THROWS_AS(objective(wrong, d, {Penalty::kL1, 0.5}), std::invalid_argument);
}

TEST_CASE("gradient: saturated correct class has zero data gradient") {
    Dataset d;
    d.X = Matrix(1, 2, std::vector<double>{0.3, -0.7});
    d.y = {0};
    d.feature_names = {"a", "b"};
    d.class_names = {"x", "y"};
    WeightMatrix W = WeightMatrix::zeros(2, 2);
    W.intercepts = {1000.0, 0.0};
    const auto g = gradient(W, d, {Penalty::kL1, 0.5});
    for (double v : g.coefficients.data()) CHECK(v == 0.0);
    for (double v : g.intercepts) CHECK(v == 0.0);
}

TEST_CASE("gradient: penalty-only case equals (2/C) W") {
    Dataset d;
    d.X = Matrix(0, 3);
    d.feature_names = {"a", "b", "c"};
    d.class_names = {"x", "y", "z"};
    WeightMatrix W = WeightMatrix::zeros(3, 3);
    for (std::size_t k = 0; k < 3; ++k) W.coefficients(k, k) = 1.0;
    const double C = 0.25;
    const auto g = gradient(W, d, {Penalty::kL2, C});
    for (std::size_t t = 0; t < 9; ++t) CHECK(g.coefficients.data()[t] == 2.0 / C * W.coefficients.data()[t]);
}

TEST_CASE("gradient agrees with central finite differences") {
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        const Dataset d = random_dataset(50, 10, 5, 1000 + trial);
        const auto W = random_weights(5, 10, 2000 + trial);

        const PenaltySpec l2{Penalty::kL2, 0.5};
        const auto analytic = gradient(W, d, l2);
        const auto numeric = finite_differences(W, [&](const WeightMatrix& w) { return objective(w, d, l2); });
        CHECK(relative_error(analytic, numeric) <= 1e-5);

        // L1: the returned gradient is the data term only.
        const PenaltySpec l1{Penalty::kL1, 0.5};
        const auto data_only = gradient(W, d, l1);
        const auto numeric_data = finite_differences(W, [&](const WeightMatrix& w) {
            return objective(w, d, l1) - penalty_value(w.coefficients, l1);
        });
        CHECK(relative_error(data_only, numeric_data) <= 1e-5);
    }
}

TEST_CASE("saga: separable two-class problem is fit") {
    Dataset d;
    d.X = Matrix(100, 2);
    Rng rng(21);
    for (std::size_t i = 0; i < 100; ++i) {
        const int label = static_cast<int>(i % 2);
        d.y.push_back(label);
        d.X(i, 0) = (label ? 2.0 : -2.0) + 0.5 * fsel::testing::normal(rng);
        d.X(i, 1) = fsel::testing::normal(rng);
    }
    d.feature_names = {"a", "b"};
    d.class_names = {"neg", "pos"};
    SagaConfig cfg;
    cfg.seed = 4;
    const auto W = saga_fit(d, {Penalty::kL2, 0.5}, cfg);
    CHECK(train_accuracy(W, d) >= 0.99);
}

TEST_CASE("saga: overwhelming L1 penalty zeroes every coefficient") {
    Dataset d = informative_dataset(90, 4, 3, 2, 3.0, 8);
    // Make class 1 the majority.
    for (std::size_t i = 0; i < 20; ++i) d.y[i] = 1;
    SagaConfig cfg;
    const auto W = saga_fit(d, {Penalty::kL1, 1e-9}, cfg);
    for (double w : W.coefficients.data()) CHECK(w == 0.0);
    const auto top = std::max_element(W.intercepts.begin(), W.intercepts.end()) - W.intercepts.begin();
    CHECK(top == 1);
}

TEST_CASE("saga reaches the full-batch proximal-gradient optimum") {
    const Dataset d = informative_dataset(200, 10, 3, 4, 1.0, 31);
    for (bool l1 : {true, false}) {
        const PenaltySpec penalty{l1 ? Penalty::kL1 : Penalty::kL2, 0.5};
        SagaConfig cfg;
        cfg.seed = 5;
        SagaTrace trace;
        const auto W = saga_fit(d, penalty, cfg, &trace);
        const double saga_obj = objective(W, d, penalty);
        const double oracle = fsel::testing::proximal_gradient_oracle(d, l1, 0.5);
        CAPTURE(l1);
        CAPTURE(saga_obj);
        CAPTURE(oracle);
        CHECK(std::abs(saga_obj - oracle) / std::abs(oracle) <= 1e-3);

        // Epoch-end objectives do not increase after the first epoch.
        for (std::size_t e = 2; e < trace.epoch_objectives.size(); ++e) {
            CHECK(trace.epoch_objectives[e] <=
                  trace.epoch_objectives[e - 1] * (1.0 + 1e-6));
        }
    }
}

TEST_CASE("saga is deterministic for a fixed seed") {
    const Dataset d = informative_dataset(120, 6, 4, 3, 1.5, 2);
    SagaConfig cfg;
    cfg.seed = 77;
    for (auto kind : {Penalty::kL1, Penalty::kL2}) {
        const auto a = saga_fit(d, {kind, 0.5}, cfg);
        const auto b = saga_fit(d, {kind, 0.5}, cfg);
        CHECK(a == b);
    }
}

TEST_CASE("saga reports a diverging step instead of clamping") {
    const Dataset d = informative_dataset(50, 3, 2, 2, 2.0, 9);
    SagaConfig cfg;
    cfg.step_size = 1e6;
    CHECK_THROWS_AS(saga_fit(d, {Penalty::kL2, 0.5}, cfg), SolverError);
}

TEST_CASE("saga preconditions") {
    const Dataset d = random_dataset(2, 3, 3, 1);
    Dataset few = d;
    few.class_names = {"a", "b", "c"};
    CHECK_THROWS_AS(saga_fit(few, {Penalty::kL1, 0.5}, SagaConfig{}), DataError);
    const Dataset ok = random_dataset(20, 3, 2, 1);
    CHECK_THROWS_AS(saga_fit(ok, {Penalty::kL1, 0.0}, SagaConfig{}), ConfigError);
}

TEST_CASE("weight document round-trips through JSON") {
    WeightDocument doc;
    doc.weights = random_weights(3, 2, 5);
    doc.class_names = {"a", "b", "c"};
    doc.feature_names = {"x", "y"};
    doc.penalty = {Penalty::kL2, 0.5};
    doc.seed = 12345678901234ULL;
    const nlohmann::json j = doc;
    const auto back = nlohmann::json::parse(j.dump()).get<WeightDocument>();
    CHECK(back.weights == doc.weights);
    CHECK(back.class_names == doc.class_names);
    CHECK(back.penalty.kind == Penalty::kL2);
    CHECK(back.seed == doc.seed);
    CHECK(j.contains("coefficients"));
    CHECK(j.contains("intercepts"));
    CHECK(j.at("C").get<double>() == 0.5);
}
