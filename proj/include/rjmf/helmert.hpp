#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

// Orthonormal mixing transform y = A x used by the dimension moves.
// Row 1 of A averages all inputs, row i (i >= 2) contrasts the first
// i-1 inputs against input i:
//
//   y_1 = (x_1 + ... + x_m) / sqrt(m)
//   y_i = (x_1 + ... + x_{i-1} - (i-1) x_i) / sqrt(i (i-1))
//
// A is orthogonal with |det A| = 1, so the inverse is the transpose.
// Both directions run in O(m) via prefix and suffix sums; A itself is
// never materialized.

namespace rjmf {

inline std::vector<double> helmert_apply(std::span<const double> x) {
    const std::size_t m = x.size();
    if (m == 0) {
        throw std::invalid_argument("helmert_apply: empty input");
    }
    std::vector<double> y(m);
    double prefix = 0.0;  // x_1 + ... + x_{i-1}
    for (std::size_t r = 1; r < m; r++) {
        prefix += x[r - 1];
        const double i = static_cast<double>(r + 1);
        y[r] = (prefix - static_cast<double>(r) * x[r]) / std::sqrt(i * (i - 1.0));
    }
    y[0] = (prefix + x[m - 1]) / std::sqrt(static_cast<double>(m));
    return y;
}

inline std::vector<double> helmert_invert(std::span<const double> y) {
    const std::size_t m = y.size();
    if (m == 0) {
        throw std::invalid_argument("helmert_invert: empty input");
    }
    std::vector<double> x(m);
    const double ybar = y[0] / std::sqrt(static_cast<double>(m));
    double suffix = 0.0;  // sum over rows below the current one
    for (std::size_t r = m; r-- > 1;) {
        const double i = static_cast<double>(r + 1);
        const double w = 1.0 / std::sqrt(i * (i - 1.0));
        x[r] = ybar + suffix - static_cast<double>(r) * w * y[r];
        suffix += w * y[r];
    }
    x[0] = ybar + suffix;
    return x;
}

/// Mixes a row with auxiliary values: returns A * concat(x, u).
inline std::vector<double> helmert_birth_map(std::span<const double> x,
                                             std::span<const double> u) {
    if (u.empty()) {
        throw std::invalid_argument("helmert_birth_map: no auxiliary values");
    }
    std::vector<double> xu(x.size() + u.size());
    std::copy(x.begin(), x.end(), xu.begin());
    std::copy(u.begin(), u.end(), xu.begin() + x.size());
    return helmert_apply(xu);
}

/// Inverse of helmert_birth_map: recovers (head of size k0, discarded tail).
inline std::pair<std::vector<double>, std::vector<double>> helmert_death_map(
    std::span<const double> xp, std::size_t k0) {
    if (k0 == 0 || k0 >= xp.size()) {
        throw std::invalid_argument("helmert_death_map: k0 out of range");
    }
    std::vector<double> full = helmert_invert(xp);
    std::vector<double> tail(full.begin() + k0, full.end());
    full.resize(k0);
    return {std::move(full), std::move(tail)};
}

}  // namespace rjmf
