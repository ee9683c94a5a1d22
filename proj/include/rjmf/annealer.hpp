#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rjmf/empirical_bayes.hpp"
#include "rjmf/helmert.hpp"
#include "rjmf/matrix.hpp"
#include "rjmf/model.hpp"
#include "rjmf/ratings.hpp"

// Annealed sampler over factorization states of varying dimension.
// Each step proposes a dimension k' uniformly from {1..k_max}: larger
// than the current k is a birth (rows extended with Gaussian draws and
// mixed by the orthonormal transform), smaller is a death (the inverse
// mixing, discarding tails), equal is a plain random walk on all
// entries. Acceptance follows the Boltzmann density at the current
// temperature, and the regularization weights are tuned on the fly by
// Adam between moves until they freeze.

namespace rjmf {

enum class MoveKind { birth, death, within };

inline const char* to_string(MoveKind k) {
    switch (k) {
        case MoveKind::birth: return "birth";
        case MoveKind::death: return "death";
        default: return "within";
    }
}

/// Geometric cooling: temperature t0 * beta^i, run until it dips under tmin.
struct AnnealSchedule {
    double t0 = 1.0;
    double beta = 0.995;
    double tmin = 1e-3;
};

struct AnnealOptions {
    AnnealSchedule schedule;
    std::size_t k_max = 50;
    double step_scale = 0.05;
    double lambda1_init = 30.0;
    double lambda2_init = 30.0;
    AdamConfig adam;
    double freeze_tol = 1e-5;
    std::size_t init_k = 0;  // 0 draws the starting dimension uniformly
};

/// A candidate state plus the log density of the auxiliary draws that
/// built it (zero for within moves).
struct MoveProposal {
    MoveKind kind;
    std::size_t k_from;
    std::size_t k_to;
    double log_g;
    FactorState candidate;
};

struct ChainTraceRecord {
    std::size_t iteration;
    double temperature;
    std::size_t k;
    MoveKind kind;
    bool accepted;
    double train_loss;
    double test_rmse;
    double lambda1;
    double lambda2;
};

namespace detail {

inline double log_normal_pdf(double x, double sd) {
    static const double half_log_2pi = 0.5 * std::log(8.0 * std::atan(1.0));
    const double z = x / sd;
    return -0.5 * z * z - std::log(sd) - half_log_2pi;
}

inline void validate(const AnnealOptions& o) {
    if (!(o.schedule.beta > 0.0 && o.schedule.beta < 1.0)) {
        throw std::invalid_argument("annealer: beta must lie in (0, 1)");
    }
    if (!(o.schedule.tmin > 0.0 && o.schedule.tmin < o.schedule.t0)) {
        throw std::invalid_argument("annealer: need 0 < tmin < t0");
    }
    if (o.k_max == 0) {
        throw std::invalid_argument("annealer: k_max must be positive");
    }
    if (!(o.step_scale > 0.0)) {
        throw std::invalid_argument("annealer: step_scale must be positive");
    }
    if (!(o.lambda1_init > 0.0 && o.lambda2_init > 0.0)) {
        throw std::invalid_argument("annealer: lambda inits must be positive");
    }
    if (o.init_k > o.k_max) {
        throw std::invalid_argument("annealer: init_k exceeds k_max");
    }
}

// Probability that a uniform dimension draw from state a moves toward
// b, i.e. lands strictly below a (b < a) or strictly above a (b > a).
inline double log_jump_prob(std::size_t a, std::size_t b, std::size_t k_max) {
    const double n = static_cast<double>(k_max);
    const double c = b < a ? static_cast<double>(a - 1) : static_cast<double>(k_max - a);
    return std::log(c / n);
}

inline double acceptance_from_breakdowns(const MoveProposal& prop,
                                         const EnergyBreakdown& current,
                                         const EnergyBreakdown& candidate,
                                         const HyperParams& hp, double t,
                                         std::size_t k_max) {
    const double delta =
        boltzmann_exponent(candidate, hp, t) - boltzmann_exponent(current, hp, t);
    switch (prop.kind) {
        case MoveKind::birth:
            return delta + log_jump_prob(prop.k_to, prop.k_from, k_max) - prop.log_g -
                   log_jump_prob(prop.k_from, prop.k_to, k_max);
        case MoveKind::death:
            return delta + prop.log_g + log_jump_prob(prop.k_to, prop.k_from, k_max) -
                   log_jump_prob(prop.k_from, prop.k_to, k_max);
        default:
            return delta;
    }
}

}  // namespace detail

/// Uniform dimension proposal on {1, ..., k_max}.
inline std::size_t propose_dimension(std::mt19937_64& rng, std::size_t k_max) {
    return std::uniform_int_distribution<std::size_t>(1, k_max)(rng);
}

/// Deterministic core of the birth move: mixes each row of the state
/// with the matching row of auxiliary draws (aux_u is n x delta, aux_v
/// is p x delta) and scores the draws under their proposal density.
inline MoveProposal birth_from_aux(const FactorState& s, const Matrix& aux_u,
                                   const Matrix& aux_v, const HyperParams& hp,
                                   double t) {
    const std::size_t delta = aux_u.cols();
    if (delta == 0 || aux_v.cols() != delta || aux_u.rows() != s.u.rows() ||
        aux_v.rows() != s.v.rows()) {
        throw std::invalid_argument("birth_from_aux: bad auxiliary shape");
    }
    const std::size_t k_new = s.k() + delta;
    const double sd_u = std::sqrt(t / hp.lambda1);
    const double sd_v = std::sqrt(t / hp.lambda2);
    MoveProposal prop;
    prop.kind = MoveKind::birth;
    prop.k_from = s.k();
    prop.k_to = k_new;
    prop.log_g = 0.0;
    prop.candidate.u = Matrix(s.u.rows(), k_new);
    prop.candidate.v = Matrix(s.v.rows(), k_new);
    const auto mix = [&](const Matrix& src, const Matrix& aux, Matrix& dst, double sd) {
        for (std::size_t r = 0; r < src.rows(); r++) {
            for (double a : aux.row(r)) {
                prop.log_g += detail::log_normal_pdf(a, sd);
            }
            const std::vector<double> mixed = helmert_birth_map(src.row(r), aux.row(r));
            std::copy(mixed.begin(), mixed.end(), dst.row(r).begin());
        }
    };
    mix(s.u, aux_u, prop.candidate.u, sd_u);
    mix(s.v, aux_v, prop.candidate.v, sd_v);
    return prop;
}

/// Birth move to dimension k_to > k: auxiliary entries are drawn
/// Normal(0, sqrt(t / lambda)) row by row, users first, then mixed in.
inline MoveProposal propose_birth(const FactorState& s, std::size_t k_to,
                                  const HyperParams& hp, double t,
                                  std::mt19937_64& rng) {
    if (k_to <= s.k()) {
        throw std::invalid_argument("propose_birth: k_to must exceed current k");
    }
    const std::size_t delta = k_to - s.k();
    Matrix aux_u(s.u.rows(), delta);
    Matrix aux_v(s.v.rows(), delta);
    std::normal_distribution<double> du(0.0, std::sqrt(t / hp.lambda1));
    for (double& x : aux_u.flat()) {
        x = du(rng);
    }
    std::normal_distribution<double> dv(0.0, std::sqrt(t / hp.lambda2));
    for (double& x : aux_v.flat()) {
        x = dv(rng);
    }
    return birth_from_aux(s, aux_u, aux_v, hp, t);
}

/// Death move to dimension k_to < k: inverse-mixes every row, keeps the
/// leading k_to coordinates and scores the discarded tails under the
/// birth proposal density.
inline MoveProposal propose_death(const FactorState& s, std::size_t k_to,
                                  const HyperParams& hp, double t) {
    if (k_to == 0 || k_to >= s.k()) {
        throw std::invalid_argument("propose_death: k_to must lie in [1, k)");
    }
    const double sd_u = std::sqrt(t / hp.lambda1);
    const double sd_v = std::sqrt(t / hp.lambda2);
    MoveProposal prop;
    prop.kind = MoveKind::death;
    prop.k_from = s.k();
    prop.k_to = k_to;
    prop.log_g = 0.0;
    prop.candidate.u = Matrix(s.u.rows(), k_to);
    prop.candidate.v = Matrix(s.v.rows(), k_to);
    const auto unmix = [&](const Matrix& src, Matrix& dst, double sd) {
        for (std::size_t r = 0; r < src.rows(); r++) {
            auto [head, tail] = helmert_death_map(src.row(r), k_to);
            std::copy(head.begin(), head.end(), dst.row(r).begin());
            for (double x : tail) {
                prop.log_g += detail::log_normal_pdf(x, sd);
            }
        }
    };
    unmix(s.u, prop.candidate.u, sd_u);
    unmix(s.v, prop.candidate.v, sd_v);
    return prop;
}

/// Fixed-dimension random walk: every entry of both factor matrices is
/// perturbed by step_scale * Normal(0, 1), user entries first.
inline MoveProposal propose_within(const FactorState& s, double step_scale,
                                   std::mt19937_64& rng) {
    if (step_scale < 0.0) {
        throw std::invalid_argument("propose_within: negative step_scale");
    }
    MoveProposal prop;
    prop.kind = MoveKind::within;
    prop.k_from = s.k();
    prop.k_to = s.k();
    prop.log_g = 0.0;
    prop.candidate = s;
    std::normal_distribution<double> d(0.0, 1.0);
    for (double& x : prop.candidate.u.flat()) {
        x += step_scale * d(rng);
    }
    for (double& x : prop.candidate.v.flat()) {
        x += step_scale * d(rng);
    }
    return prop;
}

/// Log acceptance ratio of a proposal against the current state. The
/// caller accepts when log(Uniform(0,1)) < min(0, result). Births
/// divide by the auxiliary density, deaths multiply by it, and both
/// weigh the chance of proposing the move against its reverse.
inline double acceptance_log_ratio(const FactorState& current, const MoveProposal& prop,
                                   const HyperParams& hp, const SparseRatings& train,
                                   double t, std::size_t k_max) {
    return detail::acceptance_from_breakdowns(prop, accumulate_energy(current, train),
                                              accumulate_energy(prop.candidate, train),
                                              hp, t, k_max);
}

/// Live sampler state. The breakdown mirrors the current factor state
/// against the training entries at all times.
struct Chain {
    AnnealOptions opts;
    FactorState state;
    HyperParams hp;
    AdamState adam;
    EnergyBreakdown breakdown;
    double temperature = 0.0;
    std::size_t iteration = 0;
    std::mt19937_64 rng;
};

inline Chain make_chain(const AnnealOptions& opts, const SparseRatings& train,
                        std::uint64_t seed) {
    detail::validate(opts);
    if (train.entries.empty()) {
        throw std::invalid_argument("make_chain: no training entries");
    }
    Chain c;
    c.opts = opts;
    c.rng.seed(seed);
    const std::size_t k0 =
        opts.init_k > 0 ? opts.init_k : propose_dimension(c.rng, opts.k_max);
    c.state = init_factors(train.n, train.p, k0, c.rng());
    c.hp = {opts.lambda1_init, opts.lambda2_init};
    c.adam.cfg = opts.adam;
    c.breakdown = accumulate_energy(c.state, train);
    c.temperature = opts.schedule.t0;
    return c;
}

/// One sampler step: propose, accept or reject, tune hyperparameters,
/// cool. Returns the trace record for the step.
inline ChainTraceRecord anneal_step(Chain& c, const SparseRatings& train,
                                    const SparseRatings& test) {
    if (!(c.temperature > c.opts.schedule.tmin)) {
        throw std::logic_error("anneal_step: schedule exhausted");
    }
    const double t = c.temperature;
    const std::size_t k_prime = propose_dimension(c.rng, c.opts.k_max);
    MoveProposal prop =
        k_prime > c.state.k()
            ? propose_birth(c.state, k_prime, c.hp, t, c.rng)
            : (k_prime < c.state.k() ? propose_death(c.state, k_prime, c.hp, t)
                                     : propose_within(c.state, c.opts.step_scale, c.rng));
    const EnergyBreakdown cand = accumulate_energy(prop.candidate, train);
    const double log_alpha =
        detail::acceptance_from_breakdowns(prop, c.breakdown, cand, c.hp, t,
                                           c.opts.k_max);
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(c.rng);
    const bool accepted = std::log(u) < std::min(0.0, log_alpha);
    if (accepted) {
        c.state = std::move(prop.candidate);
        c.breakdown = cand;
    }
    if (!c.adam.frozen) {
        const HyperParams prev = c.hp;
        c.hp = adam_update(c.adam, c.hp, -c.breakdown.frob_u / t,
                           -c.breakdown.frob_v / t);
        if (check_freeze(prev, c.hp, c.opts.freeze_tol)) {
            c.adam.frozen = true;
        }
    }
    ChainTraceRecord rec;
    rec.iteration = c.iteration;
    rec.temperature = t;
    rec.k = c.state.k();
    rec.kind = prop.kind;
    rec.accepted = accepted;
    rec.train_loss = regularized_loss(c.breakdown, c.hp);
    rec.test_rmse = test.entries.empty() ? std::numeric_limits<double>::quiet_NaN()
                                         : test_rmse(c.state, test);
    rec.lambda1 = c.hp.lambda1;
    rec.lambda2 = c.hp.lambda2;
    c.temperature *= c.opts.schedule.beta;
    c.iteration++;
    return rec;
}

struct ChainResult {
    FactorState final_state;
    FactorState best_state;
    HyperParams hp;
    AdamState adam;
    std::vector<ChainTraceRecord> trace;
    std::size_t best_iteration = 0;
    std::size_t best_k = 0;
    double best_train_loss = 0.0;
    double best_test_rmse = 0.0;
};

/// Runs a full cooling schedule and keeps the lowest-train-loss state
/// seen along the way (the reported solution).
inline ChainResult run_chain(const AnnealOptions& opts, const SparseRatings& train,
                             const SparseRatings& test, std::uint64_t seed) {
    Chain c = make_chain(opts, train, seed);
    ChainResult res;
    res.best_state = c.state;
    res.best_k = c.state.k();
    res.best_train_loss = regularized_loss(c.breakdown, c.hp);
    while (c.temperature > c.opts.schedule.tmin) {
        const ChainTraceRecord rec = anneal_step(c, train, test);
        if (rec.train_loss < res.best_train_loss) {
            res.best_train_loss = rec.train_loss;
            res.best_state = c.state;
            res.best_iteration = rec.iteration;
            res.best_k = rec.k;
        }
        res.trace.push_back(rec);
    }
    res.final_state = std::move(c.state);
    res.hp = c.hp;
    res.adam = c.adam;
    res.best_test_rmse = test.entries.empty()
                             ? std::numeric_limits<double>::quiet_NaN()
                             : test_rmse(res.best_state, test);
    return res;
}

}  // namespace rjmf
