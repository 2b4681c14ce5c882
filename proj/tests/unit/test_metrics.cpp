#include <doctest.h>

#include <cmath>

#include "fsel/metrics.hpp"
#include "fsel/random.hpp"

using namespace fsel;

namespace {

ConfusionMatrix from_grid(const std::vector<std::vector<std::size_t>>& grid) {
    ConfusionMatrix cm(grid.size());
    for (std::size_t a = 0; a < grid.size(); ++a)
        for (std::size_t p = 0; p < grid.size(); ++p) cm.at(a, p) = grid[a][p];
    return cm;
}

// Brute-force per-class scores straight from the label vectors.
struct Brute {
    double accuracy;
    std::vector<double> precision, recall, f1;
};

Brute brute_force(const std::vector<int>& t, const std::vector<int>& p, int K) {
    Brute b;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < t.size(); ++i) correct += t[i] == p[i];
    b.accuracy = static_cast<double>(correct) / static_cast<double>(t.size());
    for (int k = 0; k < K; ++k) {
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (p[i] == k && t[i] == k) tp += 1;
            if (p[i] == k && t[i] != k) fp += 1;
            if (p[i] != k && t[i] == k) fn += 1;
        }
        const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        const double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        b.precision.push_back(prec);
        b.recall.push_back(rec);
        b.f1.push_back(prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0);
    }
    return b;
}

}  // namespace

TEST_CASE("two-class example") {
    const auto cm = from_grid({{1, 1}, {0, 2}});
    CHECK(accuracy(cm) == doctest::Approx(0.75));
    const auto r = prf1(cm);
    CHECK(r.accuracy == doctest::Approx(0.75));
    CHECK(r.per_class[0].precision == doctest::Approx(1.0));
    CHECK(r.per_class[0].recall == doctest::Approx(0.5));
    CHECK(r.per_class[0].f1 == doctest::Approx(2.0 / 3.0));
    CHECK(r.per_class[1].precision == doctest::Approx(2.0 / 3.0));
    CHECK(r.per_class[1].recall == doctest::Approx(1.0));
    CHECK(r.per_class[1].f1 == doctest::Approx(0.8));
    CHECK(r.per_class[0].support == 2);
    CHECK(r.per_class[1].support == 2);
    CHECK(r.macro.f1 == doctest::Approx((2.0 / 3.0 + 0.8) / 2));
    CHECK_FALSE(r.zero_division);
}

TEST_CASE("confusion counts pairs") {
    const std::vector<int> t{0, 0, 1, 2, 2, 2};
    const std::vector<int> p{0, 1, 1, 2, 0, 2};
    const auto cm = confusion(t, p, 3, {"a", "b", "c"});
    CHECK(cm.at(0, 0) == 1);
    CHECK(cm.at(0, 1) == 1);
    CHECK(cm.at(2, 0) == 1);
    CHECK(cm.at(2, 2) == 2);
    CHECK(cm.total() == 6);
    CHECK(cm.row_sum(2) == 3);
    CHECK(cm.col_sum(0) == 2);
    CHECK(class_recall(cm, 2) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("confusion and accuracy errors") {
    const std::vector<int> t{0, 1};
    const std::vector<int> p{0};
    CHECK_THROWS_AS(confusion(t, p, 2), std::invalid_argument);
    const std::vector<int> bad{0, 5};
    CHECK_THROWS_AS(confusion(t, bad, 2), std::invalid_argument);
    CHECK_THROWS_AS(accuracy(ConfusionMatrix(2)), std::invalid_argument);
}

TEST_CASE("never-predicted class sets the zero-division flag") {
    const auto cm = from_grid({{3, 0}, {2, 0}});
    const auto r = prf1(cm);
    CHECK(r.per_class[1].precision == 0.0);
    CHECK(r.per_class[1].recall == 0.0);
    CHECK(r.per_class[1].f1 == 0.0);
    CHECK(r.zero_division);
}

TEST_CASE("agreement with a brute-force oracle on random labels") {
    Rng rng(99);
    for (int c = 0; c < 50; ++c) {
        const int K = 2 + static_cast<int>(uniform_index(rng, 5));
        const std::size_t n = 1 + uniform_index(rng, 200);
        std::vector<int> t(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(K)));
            p[i] = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(K)));
        }
        const auto cm = confusion(t, p, static_cast<std::size_t>(K));
        const auto r = prf1(cm);
        const auto b = brute_force(t, p, K);
        CHECK(r.accuracy == doctest::Approx(b.accuracy).epsilon(1e-12));
        for (int k = 0; k < K; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            CHECK(r.per_class[ku].precision == doctest::Approx(b.precision[ku]).epsilon(1e-12));
            CHECK(r.per_class[ku].recall == doctest::Approx(b.recall[ku]).epsilon(1e-12));
            CHECK(r.per_class[ku].f1 == doctest::Approx(b.f1[ku]).epsilon(1e-12));
        }
        // Accuracy equals the prevalence-weighted mean of per-class recall.
        double weighted = 0;
        for (std::size_t k = 0; k < static_cast<std::size_t>(K); ++k)
            weighted += static_cast<double>(cm.row_sum(k)) / static_cast<double>(n) * r.per_class[k].recall;
        CHECK(std::abs(weighted - r.accuracy) <= 1e-12);
        CHECK(r.weighted.recall == doctest::Approx(r.accuracy).epsilon(1e-12));
        CHECK(r.accuracy >= 0.0);
        CHECK(r.accuracy <= 1.0);
    }
}

TEST_CASE("submatrix restricts rows and columns in the given order") {
    const auto cm = from_grid({{5, 1, 2}, {0, 7, 3}, {4, 0, 9}});
    const std::vector<std::size_t> keep{2, 0};
    const auto sub = submatrix(cm, keep);
    CHECK(sub.n_classes() == 2);
    CHECK(sub.at(0, 0) == 9);
    CHECK(sub.at(0, 1) == 4);
    CHECK(sub.at(1, 0) == 2);
    CHECK(sub.at(1, 1) == 5);
    const std::vector<std::size_t> bad{3};
    CHECK_THROWS(submatrix(cm, bad));
}

TEST_CASE("csv and json round trip") {
    const std::vector<int> t{0, 1, 1};
    const std::vector<int> p{0, 1, 0};
    const auto cm = confusion(t, p, 2, {"Benign", "Bot"});
    const auto csv = to_csv(cm);
    CHECK(csv.rfind("actual\\predicted,Benign,Bot\n", 0) == 0);
    CHECK(csv.find("Bot,1,1\n") != std::string::npos);
    nlohmann::json j = cm;
    CHECK(j.get<ConfusionMatrix>() == cm);
    nlohmann::json rj = prf1(cm);
    const auto r = rj.get<Report>();
    CHECK(r.accuracy == doctest::Approx(2.0 / 3.0));
    CHECK(r.per_class.size() == 2);
}
