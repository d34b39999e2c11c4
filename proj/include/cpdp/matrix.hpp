#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cpdp/errors.hpp"

namespace cpdp {

/// Dense row-major matrix of doubles. Value type; rows are contiguous.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

    const std::vector<double>& data() const noexcept { return data_; }
    std::vector<double>& data() noexcept { return data_; }

    void append_row(std::span<const double> values) {
        if (cols_ == 0 && rows_ == 0) cols_ = values.size();
        if (values.size() != cols_)
            throw ShapeMismatchError("append_row: expected " + std::to_string(cols_) +
                                     " columns, got " + std::to_string(values.size()));
        data_.insert(data_.end(), values.begin(), values.end());
        ++rows_;
    }

    /// Stacks rows of `other` below this matrix.
    void append_rows(const Matrix& other) {
        if (other.rows() == 0) return;
        if (cols_ == 0 && rows_ == 0) cols_ = other.cols();
        if (other.cols() != cols_) throw ShapeMismatchError("append_rows: column mismatch");
        data_.insert(data_.end(), other.data_.begin(), other.data_.end());
        rows_ += other.rows_;
    }

    Matrix select_rows(const std::vector<std::size_t>& idx) const {
        Matrix out(idx.size(), cols_);
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t c = 0; c < cols_; ++c) out(i, c) = (*this)(idx[i], c);
        return out;
    }

    Matrix select_cols(const std::vector<std::size_t>& idx) const {
        Matrix out(rows_, idx.size());
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < idx.size(); ++c) out(r, c) = (*this)(r, idx[c]);
        return out;
    }

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Per-column mean over all rows.
inline std::vector<double> column_means(const Matrix& m) {
    std::vector<double> mu(m.cols(), 0.0);
    if (m.rows() == 0) return mu;
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) mu[c] += m(r, c);
    for (auto& v : mu) v /= static_cast<double>(m.rows());
    return mu;
}

/// Per-column population variance (divisor n).
inline std::vector<double> column_variances(const Matrix& m) {
    std::vector<double> mu = column_means(m);
    std::vector<double> var(m.cols(), 0.0);
    if (m.rows() == 0) return var;
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) {
            const double d = m(r, c) - mu[c];
            var[c] += d * d;
        }
    for (auto& v : var) v /= static_cast<double>(m.rows());
    return var;
}

}  // namespace cpdp
