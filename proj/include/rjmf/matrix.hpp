#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace rjmf {

/// Dense row-major matrix of doubles with span row access.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const {
        return {data_.data() + r * cols_, cols_};
    }

    std::span<double> flat() { return {data_.data(), data_.size()}; }
    std::span<const double> flat() const { return {data_.data(), data_.size()}; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); i++) {
        s += a[i] * b[i];
    }
    return s;
}

inline double frobenius_sq(const Matrix& m) {
    double s = 0.0;
    for (double x : m.flat()) {
        s += x * x;
    }
    return s;
}

/// In-place Cholesky factorization of a symmetric positive definite matrix.
/// Only the lower triangle is referenced. Returns false if a pivot is not
/// strictly positive, which signals a singular or indefinite system.
inline bool cholesky_factor(Matrix& a) {
    const std::size_t k = a.rows();
    for (std::size_t j = 0; j < k; j++) {
        double d = a(j, j);
        for (std::size_t t = 0; t < j; t++) {
            d -= a(j, t) * a(j, t);
        }
        if (!(d > 0.0)) {
            return false;
        }
        const double l = std::sqrt(d);
        a(j, j) = l;
        for (std::size_t i = j + 1; i < k; i++) {
            double s = a(i, j);
            for (std::size_t t = 0; t < j; t++) {
                s -= a(i, t) * a(j, t);
            }
            a(i, j) = s / l;
        }
    }
    return true;
}

/// Solves L L^T x = b given the factor produced by cholesky_factor.
inline void cholesky_solve(const Matrix& l, std::span<double> b) {
    const std::size_t k = l.rows();
    for (std::size_t i = 0; i < k; i++) {
        double s = b[i];
        for (std::size_t t = 0; t < i; t++) {
            s -= l(i, t) * b[t];
        }
        b[i] = s / l(i, i);
    }
    for (std::size_t ii = k; ii > 0; ii--) {
        const std::size_t i = ii - 1;
        double s = b[i];
        for (std::size_t t = i + 1; t < k; t++) {
            s -= l(t, i) * b[t];
        }
        b[i] = s / l(i, i);
    }
}

}  // namespace rjmf
