#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "scorecraft/errors.hpp"

namespace scorecraft {

// Dense row-major matrix of doubles. Row and column vectors are 1xN / Nx1.
class Tensor {
public:
    Tensor() = default;

    Tensor(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw ShapeError("tensor data length does not match rows x cols");
        }
    }

    // 2-d brace construction: Tensor{{1, 2}, {3, 4}}.
    Tensor(std::initializer_list<std::initializer_list<double>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_) {
                throw ShapeError("ragged initializer for tensor");
            }
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static Tensor full(std::size_t rows, std::size_t cols, double value) {
        Tensor t(rows, cols);
        for (auto& v : t.data_) v = value;
        return t;
    }

    static Tensor scalar(double value) { return full(1, 1, value); }

    static Tensor row(std::vector<double> values) {
        const std::size_t n = values.size();
        return Tensor(1, n, std::move(values));
    }

    static Tensor column(std::vector<double> values) {
        const std::size_t n = values.size();
        return Tensor(n, 1, std::move(values));
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Tensor& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool is_scalar() const { return rows_ == 1 && cols_ == 1; }

    bool all_finite() const {
        for (double v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    void fill(double value) {
        for (auto& v : data_) v = value;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

}  // namespace scorecraft
