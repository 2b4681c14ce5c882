#include "fsel/metrics.hpp"

#include <stdexcept>


namespace fsel {

ConfusionMatrix::ConfusionMatrix(std::size_t K, std::vector<std::string> class_names)
    : K_(K), counts_(K * K, 0), names_(std::move(class_names)) {
    if (names_.empty()) {
        for (std::size_t k = 0; k < K; ++k) names_.push_back("class-" + std::to_string(k));
    }
    if (names_.size() != K) throw std::invalid_argument("confusion: class name count != K");
}

std::size_t ConfusionMatrix::total() const {
    std::size_t sum = 0;
    for (std::size_t c : counts_) sum += c;
    return sum;
}

std::size_t ConfusionMatrix::row_sum(std::size_t k) const {
    std::size_t sum = 0;
    for (std::size_t j = 0; j < K_; ++j) sum += at(k, j);
    return sum;
}

std::size_t ConfusionMatrix::col_sum(std::size_t k) const {
    std::size_t sum = 0;
    for (std::size_t i = 0; i < K_; ++i) sum += at(i, k);
    return sum;
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, std::size_t K,
                          std::vector<std::string> class_names) {
    if (y_true.size() != y_pred.size()) throw std::invalid_argument("confusion: length mismatch");
    ConfusionMatrix cm(K, std::move(class_names));
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] < 0 || y_pred[i] < 0 || static_cast<std::size_t>(y_true[i]) >= K ||
            static_cast<std::size_t>(y_pred[i]) >= K) {
            throw std::invalid_argument("confusion: label out of range");
        }
        ++cm.at(static_cast<std::size_t>(y_true[i]), static_cast<std::size_t>(y_pred[i]));
    }
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    const std::size_t total = cm.total();
    if (total == 0) throw std::invalid_argument("accuracy: empty confusion matrix");
    std::size_t trace = 0;
    for (std::size_t k = 0; k < cm.n_classes(); ++k) trace += cm.at(k, k);
    return static_cast<double>(trace) / static_cast<double>(total);
}

Report prf1(const ConfusionMatrix& cm) {
    Report report;
    report.accuracy = accuracy(cm);
    const std::size_t K = cm.n_classes();
    const auto total = static_cast<double>(cm.total());
    for (std::size_t k = 0; k < K; ++k) {
        ClassScores s;
        const auto hit = static_cast<double>(cm.at(k, k));
        const std::size_t predicted = cm.col_sum(k);
        s.support = cm.row_sum(k);
        if (predicted > 0) {
            s.precision = hit / static_cast<double>(predicted);
        } else {
            report.zero_division = true;
        }
        if (s.support > 0) {
            s.recall = hit / static_cast<double>(s.support);
        } else {
            report.zero_division = true;
        }
        if (s.precision + s.recall > 0.0) {
            s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
        }
        report.per_class.push_back(s);

        const double weight = static_cast<double>(s.support) / total;
        report.macro.precision += s.precision / static_cast<double>(K);
        report.macro.recall += s.recall / static_cast<double>(K);
        report.macro.f1 += s.f1 / static_cast<double>(K);
        report.weighted.precision += s.precision * weight;
        report.weighted.recall += s.recall * weight;
        report.weighted.f1 += s.f1 * weight;
    }
    report.macro.support = cm.total();
    report.weighted.support = cm.total();
    return report;
}

ConfusionMatrix submatrix(const ConfusionMatrix& cm, std::span<const std::size_t> classes) {
    std::vector<std::string> names;
    for (std::size_t k : classes) {
        if (k >= cm.n_classes()) throw std::invalid_argument("submatrix: class out of range");
        names.push_back(cm.class_names()[k]);
    }
    ConfusionMatrix out(classes.size(), std::move(names));
    for (std::size_t a = 0; a < classes.size(); ++a) {
        for (std::size_t b = 0; b < classes.size(); ++b) out.at(a, b) = cm.at(classes[a], classes[b]);
    }
    return out;
}

double class_recall(const ConfusionMatrix& cm, std::size_t k) {
    if (k >= cm.n_classes()) throw std::invalid_argument("class_recall: class out of range");
    const std::size_t row = cm.row_sum(k);
    if (row == 0) throw std::invalid_argument("class_recall: class has no samples");
    return static_cast<double>(cm.at(k, k)) / static_cast<double>(row);
}

std::string to_csv(const ConfusionMatrix& cm) {
    std::string out = "actual\\predicted";
    for (const auto& name : cm.class_names()) out += "," + name;
    out += '\n';
    for (std::size_t i = 0; i < cm.n_classes(); ++i) {
        out += cm.class_names()[i];
        for (std::size_t j = 0; j < cm.n_classes(); ++j) out += "," + std::to_string(cm.at(i, j));
        out += '\n';
    }
    return out;
}

void to_json(nlohmann::json& j, const ConfusionMatrix& cm) {
    auto rows = nlohmann::json::array();
    for (std::size_t i = 0; i < cm.n_classes(); ++i) {
        std::vector<std::size_t> row;
        for (std::size_t c = 0; c < cm.n_classes(); ++c) row.push_back(cm.at(i, c));
        rows.push_back(std::move(row));
    }
    j = {{"class_names", cm.class_names()}, {"counts", rows}};
}

void from_json(const nlohmann::json& j, ConfusionMatrix& cm) {
    auto names = j.at("class_names").get<std::vector<std::string>>();
    const auto rows = j.at("counts").get<std::vector<std::vector<std::size_t>>>();
    const std::size_t K = names.size();
    cm = ConfusionMatrix(K, std::move(names));
    if (rows.size() != cm.n_classes()) throw std::invalid_argument("confusion json: bad shape");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cm.n_classes()) throw std::invalid_argument("confusion json: bad shape");
        for (std::size_t c = 0; c < rows[i].size(); ++c) cm.at(i, c) = rows[i][c];
    }
}

void to_json(nlohmann::json& j, const ClassScores& s) {
    j = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
}

void from_json(const nlohmann::json& j, ClassScores& s) {
    s.precision = j.at("precision").get<double>();
    s.recall = j.at("recall").get<double>();
    s.f1 = j.at("f1").get<double>();
    s.support = j.at("support").get<std::size_t>();
}

void to_json(nlohmann::json& j, const Report& r) {
    j = {{"accuracy", r.accuracy},
         {"per_class", r.per_class},
         {"macro", r.macro},
         {"weighted", r.weighted},
         {"zero_division", r.zero_division}};
}

void from_json(const nlohmann::json& j, Report& r) {
    r.accuracy = j.at("accuracy").get<double>();
    r.per_class = j.at("per_class").get<std::vector<ClassScores>>();
    r.macro = j.at("macro").get<ClassScores>();
    r.weighted = j.at("weighted").get<ClassScores>();
    r.zero_division = j.at("zero_division").get<bool>();
}

}  // namespace fsel
