#pragma once

// Loading, cleaning, sampling, splitting and scaling of flow-record CSVs.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fsel/matrix.hpp"

namespace fsel {

struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    // 1-based source line of each row, for error messages.
    std::vector<std::size_t> line_numbers;
};

// Numeric samples with class labels. Labels index into class_names.
struct Dataset {
    Matrix X;
    std::vector<int> y;
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names;

    std::size_t n_samples() const noexcept { return X.rows(); }
    std::size_t n_features() const noexcept { return X.cols(); }
    std::size_t n_classes() const noexcept { return class_names.size(); }

    // Throws DataError when an invariant is broken (non-finite cell, label
    // out of range, shape disagreement).
    void validate() const;

    Dataset select_rows(std::span<const std::size_t> indices) const;
    Dataset select_columns(std::span<const std::size_t> columns) const;
    std::vector<std::size_t> class_counts() const;
};

struct SamplingPlan {
    std::size_t per_class_cap = 5000;
    std::set<std::string> excluded_classes;
    // The hard-to-separate class; dropped unless include_problematic is set.
    std::optional<std::string> problematic_class;
    bool include_problematic = false;
    std::uint64_t seed = 0;
};

struct SplitPair {
    Dataset train;
    Dataset test;
    double ratio = 0.7;
    std::uint64_t seed = 0;
};

struct ScalerParams {
    std::vector<double> means;
    std::vector<double> std_devs;

    // Identity transform for m features.
    static ScalerParams identity(std::size_t m);

    void apply_inplace(std::span<double> row) const;
    Matrix apply(const Matrix& X) const;
    ScalerParams select(std::span<const std::size_t> columns) const;
};

// RFC-4180 CSV reader: quoted fields, doubled quotes, CRLF line ends.
// Blank lines are skipped. Every record must have as many cells as the
// first one.
class CsvReader {
public:
    explicit CsvReader(std::istream& in);

    // False at end of input.
    bool next(std::vector<std::string>& record);
    // 1-based line on which the last record started.
    std::size_t record_line() const noexcept { return record_line_; }

private:
    bool check_width(const std::vector<std::string>& record);

    std::streambuf& in_;
    std::size_t line_ = 1;
    std::size_t record_line_ = 1;
    std::size_t width_ = 0;
};

RawTable load_csv(const std::filesystem::path& path);
RawTable parse_csv(std::string_view text);

// True for cells treated as missing or non-finite: empty, NaN, Infinity,
// inf (any case, optional sign).
bool is_non_finite_cell(std::string_view cell);

// Drops rows with non-finite cells and stray header rows, removes
// drop_columns, parses the rest as reals. Classes are indexed in byte-wise
// alphabetical order of their names.
Dataset clean(const RawTable& raw,
              const std::string& label_column,
              const std::set<std::string>& drop_columns);

// load_csv followed by clean, without holding the raw cells in memory.
// raw_rows, if given, receives the number of data records read.
Dataset load_clean_csv(const std::filesystem::path& path, const std::string& label_column,
                       const std::set<std::string>& drop_columns, std::size_t* raw_rows = nullptr);

// Concatenates cleaned tables; feature columns are matched by name against
// the first part and class indices are recomputed over the union.
Dataset concat(const std::vector<Dataset>& parts);

Dataset sample_per_class(const Dataset& data, const SamplingPlan& plan);

SplitPair split(const Dataset& data, double ratio, std::uint64_t seed);

// z-scores every feature using train statistics only. Constant train
// columns are left unchanged (mean 0, std 1 recorded).
std::pair<SplitPair, ScalerParams> standardize(const SplitPair& pair);
ScalerParams fit_scaler(const Matrix& X);

// Writes the dataset in the same CSV dialect load_csv reads; the label goes
// in the last column under label_column. Values round-trip exactly.
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path,
                       const std::string& label_column = "Label");

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

// Quotes a CSV field when it contains a delimiter, quote or line break.
std::string csv_escape(const std::string& field);

}  // namespace fsel
