#pragma once

// Test-only data generators and independent oracles. Nothing here calls into
// the solver code paths it is used to check.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "fsel/ingest.hpp"
#include "fsel/matrix.hpp"
#include "fsel/random.hpp"

namespace fsel::testing {

inline double normal(Rng& rng) {
    // Box-Muller on the portable uniform.
    double u1 = uniform_unit(rng);
    while (u1 <= 0.0) u1 = uniform_unit(rng);
    const double u2 = uniform_unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline std::vector<std::string> numbered(const std::string& prefix, std::size_t count) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

// n x m standard-normal features, uniform random labels over K classes.
inline Dataset random_dataset(std::size_t n, std::size_t m, std::size_t K, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    d.X = Matrix(n, m);
    for (double& v : d.X.data()) v = normal(rng);
    for (std::size_t i = 0; i < n; ++i) d.y.push_back(static_cast<int>(uniform_index(rng, K)));
    d.feature_names = numbered("f", m);
    d.class_names = numbered("c", K);
    return d;
}

// K classes; the first `informative` features carry a class-dependent mean
// offset of size `separation` (noise sd 1), the rest are pure noise.
inline Dataset informative_dataset(std::size_t n, std::size_t m, std::size_t K,
                                   std::size_t informative, double separation,
                                   std::uint64_t seed) {
    Rng rng(seed);
    Matrix centers(K, informative);
    for (double& c : centers.data()) c = separation * normal(rng);
    Dataset d;
    d.X = Matrix(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i % K);
        d.y.push_back(static_cast<int>(k));
        for (std::size_t j = 0; j < m; ++j) {
            d.X(i, j) = normal(rng) + (j < informative ? centers(k, j) : 0.0);
        }
    }
    d.feature_names = numbered("f", m);
    d.class_names = numbered("c", K);
    return d;
}

// Independent evaluator of sum_i -log softmax(Wx_i+b)[y_i] + (1/C) R(W),
// written directly from the formula with plain exp/log.
inline double reference_objective(const std::vector<std::vector<double>>& W,
                                  const std::vector<double>& b, const Dataset& d, bool l1,
                                  double C) {
    double total = 0.0;
    for (std::size_t i = 0; i < d.n_samples(); ++i) {
        std::vector<double> z(W.size());
        double zmax = -1e300;
        for (std::size_t k = 0; k < W.size(); ++k) {
            z[k] = b[k];
            for (std::size_t j = 0; j < d.n_features(); ++j) z[k] += W[k][j] * d.X(i, j);
            zmax = std::max(zmax, z[k]);
        }
        double denom = 0.0;
        for (double v : z) denom += std::exp(v - zmax);
        const double log_p = z[static_cast<std::size_t>(d.y[i])] - zmax - std::log(denom);
        total -= log_p;
    }
    double pen = 0.0;
    for (const auto& row : W) {
        for (double w : row) pen += l1 ? std::abs(w) : w * w;
    }
    return total + pen / C;
}

// Full-batch accelerated proximal gradient (FISTA with restart) on the same
// objective, run to convergence. Returns the final objective value.
inline double proximal_gradient_oracle(const Dataset& d, bool l1, double C,
                                       std::size_t iterations = 20000) {
    const std::size_t n = d.n_samples();
    const std::size_t m = d.n_features();
    const std::size_t K = d.n_classes();
    const double lambda = 1.0 / C;
    // Lipschitz bound of the smooth part: 0.5 * sum_i (|x_i|^2 + 1) (+ 2 lambda for L2).
    double L = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 1.0;
        for (std::size_t j = 0; j < m; ++j) sq += d.X(i, j) * d.X(i, j);
        L += 0.5 * sq;
    }
    if (!l1) L += 2.0 * lambda;
    const double step = 1.0 / L;

    using Mat = std::vector<std::vector<double>>;
    Mat W(K, std::vector<double>(m, 0.0)), W_prev = W, V = W;
    std::vector<double> b(K, 0.0), b_prev = b, bv = b;
    double t = 1.0;
    double f_prev = reference_objective(W, b, d, l1, C);

    for (std::size_t it = 0; it < iterations; ++it) {
        Mat G(K, std::vector<double>(m, 0.0));
        std::vector<double> gb(K, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> p(K);
            double pmax = -1e300;
            for (std::size_t k = 0; k < K; ++k) {
                p[k] = bv[k];
                for (std::size_t j = 0; j < m; ++j) p[k] += V[k][j] * d.X(i, j);
                pmax = std::max(pmax, p[k]);
            }
            double s = 0.0;
            for (double& v : p) s += (v = std::exp(v - pmax));
            for (double& v : p) v /= s;
            p[static_cast<std::size_t>(d.y[i])] -= 1.0;
            for (std::size_t k = 0; k < K; ++k) {
                for (std::size_t j = 0; j < m; ++j) G[k][j] += p[k] * d.X(i, j);
                gb[k] += p[k];
            }
        }
        W_prev = W;
        b_prev = b;
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t j = 0; j < m; ++j) {
                double g = G[k][j] + (l1 ? 0.0 : 2.0 * lambda * V[k][j]);
                double w = V[k][j] - step * g;
                if (l1) {
                    const double thr = step * lambda;
                    w = w > thr ? w - thr : (w < -thr ? w + thr : 0.0);
                }
                W[k][j] = w;
            }
            b[k] = bv[k] - step * gb[k];
        }
        const double f = reference_objective(W, b, d, l1, C);
        double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
        double momentum = (t - 1.0) / t_next;
        if (f > f_prev) {  // adaptive restart
            t_next = 1.0;
            momentum = 0.0;
        }
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t j = 0; j < m; ++j) V[k][j] = W[k][j] + momentum * (W[k][j] - W_prev[k][j]);
            bv[k] = b[k] + momentum * (b[k] - b_prev[k]);
        }
        t = t_next;
        if (std::abs(f_prev - f) < 1e-13 * std::abs(f) && it > 100) {
            f_prev = f;
            break;
        }
        f_prev = f;
    }
    return f_prev;
}

inline std::filesystem::path test_data_dir() {
    if (const char* env = std::getenv("FSEL_TEST_DATA")) return env;
    return std::filesystem::path(FSEL_SOURCE_DIR) / "tests" / "data";
}

inline std::filesystem::path fresh_temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("fsel_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace fsel::testing
