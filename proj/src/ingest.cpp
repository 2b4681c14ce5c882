#include "fsel/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "fsel/error.hpp"
#include "fsel/random.hpp"

namespace fsel {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

std::optional<double> parse_real(std::string_view cell) {
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const char* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(cell.data(), end, value);
    if (ec == std::errc::result_out_of_range) {
        return std::numeric_limits<double>::infinity();
    }
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

std::vector<std::string> sorted_unique(std::vector<std::string> names) {
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    return names;
}

}  // namespace

void Dataset::validate() const {
    if (y.size() != X.rows()) throw DataError("dataset: label count does not match row count");
    if (feature_names.size() != X.cols()) {
        throw DataError("dataset: feature name count does not match column count");
    }
    for (double v : X.data()) {
        if (!std::isfinite(v)) throw DataError("dataset: non-finite value");
    }
    for (int label : y) {
        if (label < 0 || static_cast<std::size_t>(label) >= class_names.size()) {
            throw DataError("dataset: label out of range");
        }
    }
}

Dataset Dataset::select_rows(std::span<const std::size_t> indices) const {
    Dataset out;
    out.X = X.select_rows(indices);
    out.y.reserve(indices.size());
    for (std::size_t i : indices) out.y.push_back(y[i]);
    out.feature_names = feature_names;
    out.class_names = class_names;
    return out;
}

Dataset Dataset::select_columns(std::span<const std::size_t> columns) const {
    Dataset out;
    out.X = X.select_columns(columns);
    out.y = y;
    out.feature_names.reserve(columns.size());
    for (std::size_t c : columns) out.feature_names.push_back(feature_names.at(c));
    out.class_names = class_names;
    return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(class_names.size(), 0);
    for (int label : y) ++counts[static_cast<std::size_t>(label)];
    return counts;
}

ScalerParams ScalerParams::identity(std::size_t m) {
    return {std::vector<double>(m, 0.0), std::vector<double>(m, 1.0)};
}

void ScalerParams::apply_inplace(std::span<double> row) const {
    for (std::size_t j = 0; j < row.size(); ++j) {
        row[j] = (row[j] - means[j]) / std_devs[j];
    }
}

Matrix ScalerParams::apply(const Matrix& X) const {
    if (X.cols() != means.size()) {
        throw std::invalid_argument("scaler: column count mismatch");
    }
    Matrix out = X;
    for (std::size_t i = 0; i < out.rows(); ++i) apply_inplace(out.row(i));
    return out;
}

ScalerParams ScalerParams::select(std::span<const std::size_t> columns) const {
    ScalerParams out;
    for (std::size_t c : columns) {
        out.means.push_back(means.at(c));
        out.std_devs.push_back(std_devs.at(c));
    }
    return out;
}

CsvReader::CsvReader(std::istream& in) : in_(*in.rdbuf()) {}

bool CsvReader::next(std::vector<std::string>& record) {
    record.clear();
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    record_line_ = line_;

    for (;;) {
        const auto ch = in_.sbumpc();
        if (ch == std::char_traits<char>::eof()) {
            if (in_quotes) throw DataError("line " + std::to_string(record_line_) + ": unterminated quote");
            if (record.empty() && !field_started && field.empty()) return false;
            record.push_back(std::move(field));
            return check_width(record);
        }
        const char c = static_cast<char>(ch);
        if (in_quotes) {
            if (c == '"') {
                if (in_.sgetc() == '"') {
                    field += '"';
                    in_.sbumpc();
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line_;
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                record.push_back(std::move(field));
                field.clear();
                field_started = true;
                break;
            case '\r':
                break;
            case '\n':
                ++line_;
                if (record.empty() && !field_started && field.empty()) {
                    record_line_ = line_;
                    break;
                }
                record.push_back(std::move(field));
                return check_width(record);
            default:
                field += c;
                field_started = true;
        }
    }
}

bool CsvReader::check_width(const std::vector<std::string>& record) {
    if (width_ == 0) {
        width_ = record.size();
    } else if (record.size() != width_) {
        throw DataError("line " + std::to_string(record_line_) + ": expected " + std::to_string(width_) +
                        " cells, found " + std::to_string(record.size()));
    }
    return true;
}

namespace {

RawTable read_table(std::istream& in) {
    CsvReader reader(in);
    RawTable table;
    if (!reader.next(table.header)) throw DataError("missing header");
    std::vector<std::string> record;
    while (reader.next(record)) {
        table.rows.push_back(std::move(record));
        table.line_numbers.push_back(reader.record_line());
    }
    return table;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return in;
}

// Row-at-a-time form of the cleaning rules, shared by clean() and
// load_clean_csv().
class RowCleaner {
public:
    RowCleaner(const std::vector<std::string>& header, const std::string& label_column,
               const std::set<std::string>& drop_columns)
        : header_(header), label_column_(label_column) {
        const auto label_it = std::find(header.begin(), header.end(), label_column);
        if (label_it == header.end()) {
            throw DataError("label column '" + label_column + "' not found in header");
        }
        label_idx_ = static_cast<std::size_t>(label_it - header.begin());
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c == label_idx_ || drop_columns.contains(header[c])) continue;
            feature_cols_.push_back(c);
        }
        row_values_.resize(feature_cols_.size());
    }

    void add(const std::vector<std::string>& row, std::size_t line) {
        if (row[label_idx_] == label_column_) return;
        for (std::size_t f = 0; f < feature_cols_.size(); ++f) {
            const std::string& cell = row[feature_cols_[f]];
            if (is_non_finite_cell(cell)) return;
            const auto parsed = parse_real(cell);
            if (!parsed) {
                throw DataError("line " + std::to_string(line) + ": column '" + header_[feature_cols_[f]] +
                                "' is not numeric: '" + cell + "'");
            }
            if (!std::isfinite(*parsed)) return;
            row_values_[f] = *parsed;
        }
        values_.insert(values_.end(), row_values_.begin(), row_values_.end());
        const auto [it, inserted] = label_ids_.try_emplace(row[label_idx_], static_cast<int>(label_ids_.size()));
        labels_.push_back(it->second);
    }

    Dataset finish() {
        if (labels_.empty()) throw DataError("no rows survived cleaning");
        Dataset out;
        for (std::size_t c : feature_cols_) out.feature_names.push_back(header_[c]);
        // std::map iterates in byte-wise order of the names.
        std::vector<int> remap(label_ids_.size());
        for (const auto& [name, id] : label_ids_) {
            remap[static_cast<std::size_t>(id)] = static_cast<int>(out.class_names.size());
            out.class_names.push_back(name);
        }
        out.y.reserve(labels_.size());
        for (int id : labels_) out.y.push_back(remap[static_cast<std::size_t>(id)]);
        out.X = Matrix(labels_.size(), feature_cols_.size(), std::move(values_));
        return out;
    }

private:
    std::vector<std::string> header_;
    std::string label_column_;
    std::size_t label_idx_ = 0;
    std::vector<std::size_t> feature_cols_;
    std::vector<double> row_values_;
    std::vector<double> values_;
    std::map<std::string, int> label_ids_;  // first-seen ids
    std::vector<int> labels_;
};

}  // namespace

RawTable parse_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    return read_table(in);
}

RawTable load_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    try {
        return read_table(in);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

Dataset load_clean_csv(const std::filesystem::path& path, const std::string& label_column,
                       const std::set<std::string>& drop_columns, std::size_t* raw_rows) {
    auto in = open_input(path);
    try {
        CsvReader reader(in);
        std::vector<std::string> header;
        if (!reader.next(header)) throw DataError("missing header");
        RowCleaner cleaner(header, label_column, drop_columns);
        std::vector<std::string> record;
        std::size_t rows = 0;
        while (reader.next(record)) {
            cleaner.add(record, reader.record_line());
            ++rows;
        }
        if (raw_rows) *raw_rows = rows;
        return cleaner.finish();
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

bool is_non_finite_cell(std::string_view cell) {
    cell = trim(cell);
    if (cell.empty()) return true;
    if (cell.front() == '+' || cell.front() == '-') cell.remove_prefix(1);
    std::string lower(cell);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return lower == "nan" || lower == "inf" || lower == "infinity";
}

Dataset clean(const RawTable& raw,
              const std::string& label_column,
              const std::set<std::string>& drop_columns) {
    RowCleaner cleaner(raw.header, label_column, drop_columns);
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
        cleaner.add(raw.rows[r], r < raw.line_numbers.size() ? raw.line_numbers[r] : r + 2);
    }
    return cleaner.finish();
}

Dataset concat(const std::vector<Dataset>& parts) {
    if (parts.empty()) throw DataError("concat: no datasets");
    if (parts.size() == 1) return parts.front();

    const auto& names = parts.front().feature_names;
    std::vector<std::string> all_classes;
    std::size_t total = 0;
    for (const auto& part : parts) {
        all_classes.insert(all_classes.end(), part.class_names.begin(), part.class_names.end());
        total += part.n_samples();
    }
    Dataset out;
    out.feature_names = names;
    out.class_names = sorted_unique(std::move(all_classes));
    std::vector<double> values;
    values.reserve(total * names.size());
    out.y.reserve(total);

    for (const auto& part : parts) {
        std::vector<std::size_t> columns;
        for (const auto& name : names) {
            const auto it = std::find(part.feature_names.begin(), part.feature_names.end(), name);
            if (it == part.feature_names.end()) {
                throw DataError("concat: feature '" + name + "' missing from a later file");
            }
            columns.push_back(static_cast<std::size_t>(it - part.feature_names.begin()));
        }
        if (part.feature_names.size() != names.size()) {
            throw DataError("concat: files disagree on feature columns (list extras in drop_columns)");
        }
        for (std::size_t i = 0; i < part.n_samples(); ++i) {
            for (std::size_t c : columns) values.push_back(part.X(i, c));
            const auto& cls = part.class_names[static_cast<std::size_t>(part.y[i])];
            const auto it = std::lower_bound(out.class_names.begin(), out.class_names.end(), cls);
            out.y.push_back(static_cast<int>(it - out.class_names.begin()));
        }
    }
    out.X = Matrix(total, names.size(), std::move(values));
    return out;
}

Dataset sample_per_class(const Dataset& data, const SamplingPlan& plan) {
    if (plan.per_class_cap < 1) throw ConfigError("per_class_cap must be at least 1");

    std::set<std::string> excluded = plan.excluded_classes;
    if (plan.problematic_class && !plan.include_problematic) {
        excluded.insert(*plan.problematic_class);
    }
    for (const auto& name : excluded) {
        if (std::find(data.class_names.begin(), data.class_names.end(), name) ==
            data.class_names.end()) {
            throw DataError("excluded class '" + name + "' not present in data");
        }
    }

    const std::size_t K = data.n_classes();
    std::vector<int> remap(K, -1);
    std::vector<std::string> kept_names;
    for (std::size_t k = 0; k < K; ++k) {
        if (excluded.contains(data.class_names[k])) continue;
        remap[k] = static_cast<int>(kept_names.size());
        kept_names.push_back(data.class_names[k]);
    }
    if (kept_names.empty()) throw DataError("all classes excluded");

    std::vector<std::vector<std::size_t>> by_class(K);
    for (std::size_t i = 0; i < data.n_samples(); ++i) {
        by_class[static_cast<std::size_t>(data.y[i])].push_back(i);
    }

    Rng rng(plan.seed);
    std::vector<std::size_t> chosen;
    for (std::size_t k = 0; k < K; ++k) {
        if (remap[k] < 0) continue;
        auto& pool = by_class[k];
        const std::size_t take = std::min(plan.per_class_cap, pool.size());
        // Partial Fisher-Yates: the first `take` slots become the draw.
        for (std::size_t i = 0; i < take; ++i) {
            std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
        }
        chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
    }
    shuffle(chosen, rng);

    Dataset out = data.select_rows(chosen);
    for (int& label : out.y) label = remap[static_cast<std::size_t>(label)];
    out.class_names = std::move(kept_names);
    return out;
}

SplitPair split(const Dataset& data, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("split ratio must lie in (0, 1]");
    const std::size_t n = data.n_samples();
    if (n == 0) throw DataError("cannot split an empty dataset");

    auto order = iota_indices(n);
    Rng rng(seed);
    shuffle(order, rng);
    const auto n_train = std::min<std::size_t>(
        n, static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n))));

    std::span<const std::size_t> all(order);
    SplitPair pair;
    pair.train = data.select_rows(all.first(n_train));
    pair.test = data.select_rows(all.subspan(n_train));
    pair.ratio = ratio;
    pair.seed = seed;
    return pair;
}

ScalerParams fit_scaler(const Matrix& X) {
    const std::size_t n = X.rows();
    const std::size_t m = X.cols();
    if (n == 0) throw std::invalid_argument("fit_scaler: empty training matrix");
    ScalerParams params = ScalerParams::identity(m);
    for (std::size_t j = 0; j < m; ++j) {
        double lo = X(0, j);
        double hi = X(0, j);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            lo = std::min(lo, X(i, j));
            hi = std::max(hi, X(i, j));
            sum += X(i, j);
        }
        if (lo == hi) continue;
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = X(i, j) - mean;
            ss += d * d;
        }
        const double sd = std::sqrt(ss / static_cast<double>(n));
        if (!(sd > 0.0)) continue;
        params.means[j] = mean;
        params.std_devs[j] = sd;
    }
    return params;
}

std::pair<SplitPair, ScalerParams> standardize(const SplitPair& pair) {
    ScalerParams params = fit_scaler(pair.train.X);
    SplitPair out = pair;
    out.train.X = params.apply(pair.train.X);
    if (out.test.n_samples() > 0) out.test.X = params.apply(pair.test.X);
    return {std::move(out), std::move(params)};
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path,
                       const std::string& label_column) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    for (const auto& name : data.feature_names) out << csv_escape(name) << ',';
    out << csv_escape(label_column) << '\n';
    for (std::size_t i = 0; i < data.n_samples(); ++i) {
        for (double v : data.X.row(i)) out << format_double(v) << ',';
        out << csv_escape(data.class_names[static_cast<std::size_t>(data.y[i])]) << '\n';
    }
    if (!out) throw DataError("write failure on '" + path.string() + "'");
}

}  // namespace fsel
