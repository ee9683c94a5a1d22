#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rjmf/matrix.hpp"
#include "rjmf/model.hpp"
#include "rjmf/ratings.hpp"

namespace rjmf {

struct AlsOptions {
    std::size_t max_iters = 50;
    double tol = 1e-6;  // stop when the train loss change falls below this
};

struct AlsIterRecord {
    std::size_t iteration;
    double train_loss;
    double test_rmse;
};

struct AlsResult {
    FactorState state;
    std::vector<AlsIterRecord> trace;
};

namespace detail {

// Solves (G + lambda I) x = rhs for one row, where G is the Gram matrix
// of the factor rows observed with it. Rows with no observations shrink
// to zero under the pure prior.
inline void solve_rows(Matrix& target, const Matrix& other,
                       const std::vector<std::vector<std::uint32_t>>& index,
                       const std::vector<RatingTriple>& entries, bool user_side,
                       double lambda, const char* side) {
    const std::size_t k = target.cols();
    Matrix gram(k, k);
    std::vector<double> rhs(k);
    for (std::size_t row = 0; row < target.rows(); row++) {
        if (index[row].empty()) {
            for (double& x : target.row(row)) {
                x = 0.0;
            }
            continue;
        }
        for (std::size_t a = 0; a < k; a++) {
            rhs[a] = 0.0;
            for (std::size_t b = 0; b <= a; b++) {
                gram(a, b) = a == b ? lambda : 0.0;
            }
        }
        for (std::uint32_t e : index[row]) {
            const RatingTriple& t = entries[e];
            const auto o = other.row(user_side ? t.item : t.user);
            for (std::size_t a = 0; a < k; a++) {
                rhs[a] += t.rating * o[a];
                for (std::size_t b = 0; b <= a; b++) {
                    gram(a, b) += o[a] * o[b];
                }
            }
        }
        if (!cholesky_factor(gram)) {
            throw std::runtime_error("als: singular normal equations for " +
                                     std::string(side) + " " + std::to_string(row + 1));
        }
        cholesky_solve(gram, rhs);
        auto out = target.row(row);
        for (std::size_t a = 0; a < k; a++) {
            out[a] = rhs[a];
        }
    }
}

}  // namespace detail

/// One sweep of exact per-user ridge solves against fixed item factors.
inline void update_users(FactorState& s, const SparseRatings& r, double lambda1) {
    detail::solve_rows(s.u, s.v, r.by_user, r.entries, true, lambda1, "user");
}

/// One sweep of exact per-item ridge solves against fixed user factors.
inline void update_items(FactorState& s, const SparseRatings& r, double lambda2) {
    detail::solve_rows(s.v, s.u, r.by_item, r.entries, false, lambda2, "item");
}

/// Alternating least squares at fixed dimension k. Each iteration runs
/// a user sweep then an item sweep, both exact minimizers, so the train
/// loss never increases. Stops when the loss change drops below tol.
inline AlsResult als_fit(const SparseRatings& train, const SparseRatings& test,
                         std::size_t k, const HyperParams& hp, std::uint64_t seed,
                         const AlsOptions& opts = {}) {
    if (opts.max_iters == 0) {
        throw std::invalid_argument("als_fit: max_iters must be positive");
    }
    AlsResult res;
    res.state = init_factors(train.n, train.p, k, seed);
    double prev = regularized_loss(res.state, train, hp);
    for (std::size_t it = 1; it <= opts.max_iters; it++) {
        update_users(res.state, train, hp.lambda1);
        update_items(res.state, train, hp.lambda2);
        const double loss = regularized_loss(res.state, train, hp);
        const double rmse_now = test.entries.empty()
                                    ? std::numeric_limits<double>::quiet_NaN()
                                    : test_rmse(res.state, test);
        res.trace.push_back({it, loss, rmse_now});
        if (std::abs(prev - loss) < opts.tol) {
            break;
        }
        prev = loss;
    }
    return res;
}

}  // namespace rjmf
