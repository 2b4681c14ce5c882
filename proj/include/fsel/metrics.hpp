#pragma once

// Confusion matrices and accuracy / precision / recall / F1.

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace fsel {

// Rows are actual classes, columns predicted classes.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    ConfusionMatrix(std::size_t K, std::vector<std::string> class_names = {});

    std::size_t n_classes() const noexcept { return K_; }
    std::size_t& at(std::size_t actual, std::size_t predicted) { return counts_[actual * K_ + predicted]; }
    std::size_t at(std::size_t actual, std::size_t predicted) const {
        return counts_[actual * K_ + predicted];
    }
    const std::vector<std::string>& class_names() const noexcept { return names_; }

    std::size_t total() const;
    std::size_t row_sum(std::size_t k) const;
    std::size_t col_sum(std::size_t k) const;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::size_t K_ = 0;
    std::vector<std::size_t> counts_;
    std::vector<std::string> names_;
};

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct Report {
    double accuracy = 0.0;
    std::vector<ClassScores> per_class;
    ClassScores macro;     // unweighted mean over classes
    ClassScores weighted;  // support-weighted mean over classes
    // Set when some precision or recall had an empty denominator and was
    // reported as 0.
    bool zero_division = false;
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, std::size_t K,
                          std::vector<std::string> class_names = {});

double accuracy(const ConfusionMatrix& cm);
Report prf1(const ConfusionMatrix& cm);

// Restriction to the given classes, in the given order.
ConfusionMatrix submatrix(const ConfusionMatrix& cm, std::span<const std::size_t> classes);

double class_recall(const ConfusionMatrix& cm, std::size_t k);

// Grid with a header row and column of class names.
std::string to_csv(const ConfusionMatrix& cm);

void to_json(nlohmann::json& j, const ConfusionMatrix& cm);
void from_json(const nlohmann::json& j, ConfusionMatrix& cm);
void to_json(nlohmann::json& j, const ClassScores& s);
void from_json(const nlohmann::json& j, ClassScores& s);
void to_json(nlohmann::json& j, const Report& r);
void from_json(const nlohmann::json& j, Report& r);

}  // namespace fsel
