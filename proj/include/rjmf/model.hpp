#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>

#include "rjmf/matrix.hpp"
#include "rjmf/ratings.hpp"

namespace rjmf {

/// Regularization weights for the user and item factor norms.
struct HyperParams {
    double lambda1;
    double lambda2;
};

/// Factorization state: user factors u (n x k) and item factors v (p x k).
struct FactorState {
    Matrix u;
    Matrix v;

    std::size_t k() const { return u.cols(); }
};

/// Sufficient statistics of a state against a rating set. Loss and
/// acceptance exponents are cheap functions of this triple, so callers
/// can cache it and re-evaluate under new hyperparameters or
/// temperatures without another pass over the data.
struct EnergyBreakdown {
    double sq_error_sum = 0.0;
    double frob_u = 0.0;
    double frob_v = 0.0;
    std::size_t kappa = 0;
};

inline double predict(const FactorState& s, std::size_t user, std::size_t item) {
    return dot(s.u.row(user), s.v.row(item));
}

/// Draws factor entries iid Normal(sqrt(3/k), sigma0) so a fresh state
/// predicts ratings near 3. Pass sigma0 = 0 to pin every entry to the
/// mean exactly.
inline FactorState init_factors(std::size_t n, std::size_t p, std::size_t k,
                                std::uint64_t seed, double sigma0) {
    if (n == 0 || p == 0 || k == 0) {
        throw std::invalid_argument("init_factors: empty shape");
    }
    if (sigma0 < 0.0) {
        throw std::invalid_argument("init_factors: negative sigma0");
    }
    FactorState s;
    s.u = Matrix(n, k);
    s.v = Matrix(p, k);
    const double mean = std::sqrt(3.0 / static_cast<double>(k));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(mean, sigma0 > 0.0 ? sigma0 : 1.0);
    for (double& x : s.u.flat()) {
        x = sigma0 > 0.0 ? dist(rng) : mean;
    }
    for (double& x : s.v.flat()) {
        x = sigma0 > 0.0 ? dist(rng) : mean;
    }
    return s;
}

/// Default spread: sd 1/sqrt(2k), which keeps the prediction variance
/// of order one at any k.
inline FactorState init_factors(std::size_t n, std::size_t p, std::size_t k,
                                std::uint64_t seed) {
    return init_factors(n, p, k, seed, 1.0 / std::sqrt(2.0 * static_cast<double>(k)));
}

inline EnergyBreakdown accumulate_energy(const FactorState& s, const SparseRatings& r) {
    EnergyBreakdown b;
    for (const RatingTriple& t : r.entries) {
        const double d = t.rating - predict(s, t.user, t.item);
        b.sq_error_sum += d * d;
    }
    b.frob_u = frobenius_sq(s.u);
    b.frob_v = frobenius_sq(s.v);
    b.kappa = r.entries.size();
    return b;
}

/// Training objective: mean squared error over observed entries plus
/// lambda1 ||U||_F^2 + lambda2 ||V||_F^2.
inline double regularized_loss(const EnergyBreakdown& b, const HyperParams& hp) {
    if (b.kappa == 0) {
        throw std::invalid_argument("regularized_loss: no observed entries");
    }
    return b.sq_error_sum / static_cast<double>(b.kappa) + hp.lambda1 * b.frob_u +
           hp.lambda2 * b.frob_v;
}

inline double regularized_loss(const FactorState& s, const SparseRatings& r,
                               const HyperParams& hp) {
    return regularized_loss(accumulate_energy(s, r), hp);
}

/// Log of the unnormalized sampling density at temperature t: the whole
/// bracket of squared error and weighted norms, divided by -(kappa t).
/// Always negative of the energy, so larger is more probable.
inline double boltzmann_exponent(const EnergyBreakdown& b, const HyperParams& hp,
                                 double t) {
    if (b.kappa == 0) {
        throw std::invalid_argument("boltzmann_exponent: no observed entries");
    }
    if (!(t > 0.0)) {
        throw std::invalid_argument("boltzmann_exponent: temperature must be positive");
    }
    const double bracket =
        b.sq_error_sum + hp.lambda1 * b.frob_u + hp.lambda2 * b.frob_v;
    return -bracket / (static_cast<double>(b.kappa) * t);
}

inline double boltzmann_exponent(const FactorState& s, const SparseRatings& r,
                                 const HyperParams& hp, double t) {
    return boltzmann_exponent(accumulate_energy(s, r), hp, t);
}

/// RMSE of the state's predictions over a rating set.
inline double test_rmse(const FactorState& s, const SparseRatings& r) {
    if (r.entries.empty()) {
        throw std::invalid_argument("test_rmse: no observed entries");
    }
    double sq = 0.0;
    for (const RatingTriple& t : r.entries) {
        const double d = t.rating - predict(s, t.user, t.item);
        sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(r.entries.size()));
}

}  // namespace rjmf
