#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "rjmf/matrix.hpp"
#include "rjmf/model.hpp"

namespace rjmf {

/// Adam step-size constants for the hyperparameter updates.
struct AdamConfig {
    double alpha = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Per-coordinate Adam moments for (lambda1, lambda2). Once frozen is
/// set the hyperparameters never move again.
struct AdamState {
    AdamConfig cfg;
    double m1 = 0.0, v1 = 0.0;
    double m2 = 0.0, v2 = 0.0;
    std::uint64_t t = 0;
    bool frozen = false;
};

/// Hyperparameters are floored here instead of going to zero.
inline constexpr double kLambdaFloor = 1e-6;

/// Stochastic gradient of the log factor prior with respect to lambda1
/// at temperature t: the lambda1-linear term of the exponent is
/// -(lambda1 / t) ||U||_F^2, so the derivative is -||U||_F^2 / t.
inline double grad_h_lambda1(const Matrix& u, double t) {
    if (!(t > 0.0)) {
        throw std::invalid_argument("grad_h_lambda1: temperature must be positive");
    }
    return -frobenius_sq(u) / t;
}

inline double grad_h_lambda2(const Matrix& v, double t) {
    if (!(t > 0.0)) {
        throw std::invalid_argument("grad_h_lambda2: temperature must be positive");
    }
    return -frobenius_sq(v) / t;
}

namespace detail {

inline double adam_coord(double lambda, double h, double& m, double& v,
                         const AdamConfig& c, std::uint64_t t) {
    m = c.beta1 * m + (1.0 - c.beta1) * h;
    v = c.beta2 * v + (1.0 - c.beta2) * h * h;
    const double mhat = m / (1.0 - std::pow(c.beta1, static_cast<double>(t)));
    const double vhat = v / (1.0 - std::pow(c.beta2, static_cast<double>(t)));
    const double next = lambda - c.alpha * mhat / (std::sqrt(vhat) + c.eps);
    return next < kLambdaFloor ? kLambdaFloor : next;
}

}  // namespace detail

/// One Adam step on both hyperparameters from gradients (h1, h2).
/// Identity when frozen.
inline HyperParams adam_update(AdamState& s, const HyperParams& hp, double h1,
                               double h2) {
    if (s.frozen) {
        return hp;
    }
    s.t++;
    HyperParams next;
    next.lambda1 = detail::adam_coord(hp.lambda1, h1, s.m1, s.v1, s.cfg, s.t);
    next.lambda2 = detail::adam_coord(hp.lambda2, h2, s.m2, s.v2, s.cfg, s.t);
    return next;
}

/// True when both hyperparameters moved less than tol, the signal to
/// stop updating them for the rest of the run.
inline bool check_freeze(const HyperParams& prev, const HyperParams& next, double tol) {
    return std::abs(next.lambda1 - prev.lambda1) < tol &&
           std::abs(next.lambda2 - prev.lambda2) < tol;
}

}  // namespace rjmf
