#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fsel {

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw std::invalid_argument("Matrix: data size does not match shape");
        }
    }

    static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
        const std::size_t n = rows.size();
        const std::size_t m = n == 0 ? 0 : rows.front().size();
        Matrix out(n, m);
        for (std::size_t i = 0; i < n; ++i) {
            if (rows[i].size() != m) {
                throw std::invalid_argument("Matrix::from_rows: ragged rows");
            }
            std::copy(rows[i].begin(), rows[i].end(), out.row(i).begin());
        }
        return out;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    // Copy of the listed columns, in the given order.
    Matrix select_columns(std::span<const std::size_t> columns) const {
        Matrix out(rows_, columns.size());
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t c = 0; c < columns.size(); ++c) {
                out(i, c) = (*this)(i, columns[c]);
            }
        }
        return out;
    }

    // Copy of the listed rows, in the given order (repeats allowed).
    Matrix select_rows(std::span<const std::size_t> indices) const {
        Matrix out(indices.size(), cols_);
        for (std::size_t r = 0; r < indices.size(); ++r) {
            auto src = row(indices[r]);
            std::copy(src.begin(), src.end(), out.row(r).begin());
        }
        return out;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

}  // namespace fsel
