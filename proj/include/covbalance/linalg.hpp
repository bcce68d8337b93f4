#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace covbalance {

/// Dense row-major matrix, just large enough for the toy problems.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {
        if (rows == 0 || cols == 0) {
            throw std::invalid_argument("Matrix: dimensions must be positive");
        }
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    /// r = A x - b. Sizes must already agree.
    std::vector<double> residual(const std::vector<double>& x,
                                 const std::vector<double>& b) const {
        if (x.size() != cols_ || b.size() != rows_) {
            throw std::invalid_argument("Matrix::residual: size mismatch");
        }
        std::vector<double> r(rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            double s = -b[i];
            for (std::size_t j = 0; j < cols_; ++j) s += data_[i * cols_ + j] * x[j];
            r[i] = s;
        }
        return r;
    }

    /// A^T v, the adjoint applied to a residual.
    std::vector<double> transpose_apply(const std::vector<double>& v) const {
        if (v.size() != rows_) {
            throw std::invalid_argument("Matrix::transpose_apply: size mismatch");
        }
        std::vector<double> out(cols_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t j = 0; j < cols_; ++j) out[j] += data_[i * cols_ + j] * v[i];
        }
        return out;
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double squared_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

}  // namespace covbalance
