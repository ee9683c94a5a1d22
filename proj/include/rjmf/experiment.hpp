#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rjmf/als.hpp"
#include "rjmf/annealer.hpp"
#include "rjmf/ratings.hpp"

namespace rjmf {

/// Everything a run needs. Values can come from defaults, a flat
/// key=value config file, or command line flags, in that order.
struct ExperimentConfig {
    std::string data_path;
    std::string method = "rjmcmc";  // or "als"
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    std::size_t chains = 1;
    double split_fraction = 0.8;

    std::size_t k = 2;  // als only; the sampler picks its own dimension
    std::size_t k_max = 50;
    std::size_t init_k = 0;
    double lambda1_init = 30.0;
    double lambda2_init = 30.0;
    double adam_alpha = 0.001;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double freeze_tol = 1e-5;
    double t0 = 1.0;
    double cooling_beta = 0.995;
    double tmin = 1e-3;
    double step_scale = 0.05;
    std::size_t smooth_window = 10;
    std::size_t als_max_iters = 50;
    double als_tol = 1e-6;
};

struct SummaryReport {
    std::string method;
    std::uint64_t seed = 0;
    std::size_t selected_k = 0;
    double test_rmse_at_selected_k = 0.0;
    double final_lambda1 = 0.0;
    double final_lambda2 = 0.0;
    std::size_t stabilized_k = 0;
    double wall_time_s = 0.0;
};

struct SyntheticData {
    SparseRatings ratings;
    FactorState truth;
};

/// Rank-k_true ratings with Gaussian noise, observed independently with
/// the given density and clipped into [1,5]. The true factors use the
/// mean sqrt(3/k) initialization recipe so products land near 3.
inline SyntheticData gen_synthetic(std::size_t n, std::size_t p, std::size_t k_true,
                                   double noise_sd, double density,
                                   std::uint64_t seed) {
    if (n == 0 || p == 0 || k_true == 0) {
        throw std::invalid_argument("gen_synthetic: empty shape");
    }
    if (!(density > 0.0 && density <= 1.0)) {
        throw std::invalid_argument("gen_synthetic: density must lie in (0, 1]");
    }
    if (noise_sd < 0.0) {
        throw std::invalid_argument("gen_synthetic: negative noise_sd");
    }
    std::mt19937_64 rng(seed);
    SyntheticData out;
    out.truth.u = Matrix(n, k_true);
    out.truth.v = Matrix(p, k_true);
    const double mean = std::sqrt(3.0 / static_cast<double>(k_true));
    const double sd = 1.0 / std::sqrt(2.0 * static_cast<double>(k_true));
    std::normal_distribution<double> fdist(mean, sd);
    for (double& x : out.truth.u.flat()) {
        x = fdist(rng);
    }
    for (double& x : out.truth.v.flat()) {
        x = fdist(rng);
    }
    std::uniform_real_distribution<double> udist(0.0, 1.0);
    std::normal_distribution<double> ndist(0.0, 1.0);
    std::vector<RatingTriple> entries;
    for (std::size_t i = 0; i < n; i++) {
        for (std::size_t j = 0; j < p; j++) {
            if (udist(rng) >= density) {
                continue;
            }
            double x = predict(out.truth, i, j);
            if (noise_sd > 0.0) {
                x += noise_sd * ndist(rng);
            }
            entries.push_back({static_cast<std::uint32_t>(i),
                               static_cast<std::uint32_t>(j),
                               std::min(5.0, std::max(1.0, x))});
        }
    }
    if (entries.empty()) {
        throw std::runtime_error("gen_synthetic: no entries observed, raise density");
    }
    out.ratings = make_sparse(n, p, std::move(entries));
    return out;
}

/// Trailing moving average with partial windows at the start.
inline std::vector<double> smooth(std::span<const double> values, std::size_t window) {
    if (window == 0) {
        throw std::invalid_argument("smooth: window must be positive");
    }
    std::vector<double> out(values.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); i++) {
        acc += values[i];
        if (i >= window) {
            acc -= values[i - window];
        }
        const std::size_t span_len = std::min(i + 1, window);
        out[i] = acc / static_cast<double>(span_len);
    }
    return out;
}

namespace detail {

inline std::string fmt12(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

inline void apply_config_kv(ExperimentConfig& c, const std::string& key,
                            const std::string& value) {
    const auto as_u64 = [&] { return std::stoull(value); };
    const auto as_f = [&] { return std::stod(value); };
    if (key == "data_path") c.data_path = value;
    else if (key == "method") c.method = value;
    else if (key == "out_dir") c.out_dir = value;
    else if (key == "seed") c.seed = as_u64();
    else if (key == "chains") c.chains = as_u64();
    else if (key == "split_fraction") c.split_fraction = as_f();
    else if (key == "k") c.k = as_u64();
    else if (key == "k_max") c.k_max = as_u64();
    else if (key == "init_k") c.init_k = as_u64();
    else if (key == "lambda1_init") c.lambda1_init = as_f();
    else if (key == "lambda2_init") c.lambda2_init = as_f();
    else if (key == "adam_alpha") c.adam_alpha = as_f();
    else if (key == "adam_beta1") c.adam_beta1 = as_f();
    else if (key == "adam_beta2") c.adam_beta2 = as_f();
    else if (key == "adam_eps") c.adam_eps = as_f();
    else if (key == "freeze_tol") c.freeze_tol = as_f();
    else if (key == "t0") c.t0 = as_f();
    else if (key == "cooling_beta") c.cooling_beta = as_f();
    else if (key == "tmin") c.tmin = as_f();
    else if (key == "step_scale") c.step_scale = as_f();
    else if (key == "smooth_window") c.smooth_window = as_u64();
    else if (key == "als_max_iters") c.als_max_iters = as_u64();
    else if (key == "als_tol") c.als_tol = as_f();
    else {
        throw std::invalid_argument("config: unknown key '" + key + "'");
    }
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) {
        return "";
    }
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

/// Loads key=value lines over the given defaults. '#' starts a comment,
/// blank lines are fine, unknown keys are an error.
inline ExperimentConfig load_config_file(const std::string& path,
                                         ExperimentConfig base = {}) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("config: cannot open " + path);
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.resize(hash);
        }
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        const std::string t = detail::trim(line);
        if (t.empty()) {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config: missing '=' at line " +
                                     std::to_string(lineno) + " of " + path);
        }
        try {
            detail::apply_config_kv(base, detail::trim(t.substr(0, eq)),
                                    detail::trim(t.substr(eq + 1)));
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(std::string(e.what()) + " at line " +
                                     std::to_string(lineno) + " of " + path);
        }
    }
    return base;
}

namespace detail {

inline constexpr const char* kTraceHeader =
    "iteration,temperature,k,move_kind,accepted,train_loss,test_rmse,lambda1,lambda2";

inline void write_trace_csv(const std::string& path,
                            const std::vector<ChainTraceRecord>& trace) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << kTraceHeader << "\n";
    for (const ChainTraceRecord& r : trace) {
        out << r.iteration << ',' << fmt12(r.temperature) << ',' << r.k << ','
            << to_string(r.kind) << ',' << (r.accepted ? 1 : 0) << ','
            << fmt12(r.train_loss) << ',' << fmt12(r.test_rmse) << ','
            << fmt12(r.lambda1) << ',' << fmt12(r.lambda2) << "\n";
    }
}

inline void write_summary(const std::string& path, const SummaryReport& s) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << "method: " << s.method << "\n"
        << "seed: " << s.seed << "\n"
        << "selected_k: " << s.selected_k << "\n"
        << "test_rmse_at_selected_k: " << fmt12(s.test_rmse_at_selected_k) << "\n"
        << "final_lambda1: " << fmt12(s.final_lambda1) << "\n"
        << "final_lambda2: " << fmt12(s.final_lambda2) << "\n"
        << "stabilized_k: " << s.stabilized_k << "\n"
        << "wall_time_s: " << fmt12(s.wall_time_s) << "\n";
}

// Smallest visited dimension whose mean smoothed test error is within
// 1% of every larger visited dimension's. A diagnostic, not a target.
inline std::size_t stabilized_k(const std::vector<ChainTraceRecord>& trace,
                                std::size_t window) {
    std::vector<double> series(trace.size());
    for (std::size_t i = 0; i < trace.size(); i++) {
        series[i] = trace[i].test_rmse;
    }
    const std::vector<double> sm = smooth(series, window);
    std::vector<std::size_t> ks;
    std::vector<double> sum;
    std::vector<std::size_t> cnt;
    for (std::size_t i = 0; i < trace.size(); i++) {
        const std::size_t k = trace[i].k;
        auto it = std::find(ks.begin(), ks.end(), k);
        std::size_t slot = it - ks.begin();
        if (it == ks.end()) {
            ks.push_back(k);
            sum.push_back(0.0);
            cnt.push_back(0);
        }
        sum[slot] += sm[i];
        cnt[slot]++;
    }
    std::vector<std::pair<std::size_t, double>> mean_by_k;
    for (std::size_t s = 0; s < ks.size(); s++) {
        mean_by_k.emplace_back(ks[s], sum[s] / static_cast<double>(cnt[s]));
    }
    std::sort(mean_by_k.begin(), mean_by_k.end());
    for (std::size_t a = 0; a < mean_by_k.size(); a++) {
        bool stable = true;
        for (std::size_t b = a + 1; b < mean_by_k.size(); b++) {
            if (!(std::abs(mean_by_k[b].second - mean_by_k[a].second) <
                  0.01 * mean_by_k[a].second)) {
                stable = false;
                break;
            }
        }
        if (stable) {
            return mean_by_k[a].first;
        }
    }
    return mean_by_k.back().first;
}

inline AnnealOptions anneal_options_from(const ExperimentConfig& c) {
    AnnealOptions o;
    o.schedule = {c.t0, c.cooling_beta, c.tmin};
    o.k_max = c.k_max;
    o.init_k = c.init_k;
    o.step_scale = c.step_scale;
    o.lambda1_init = c.lambda1_init;
    o.lambda2_init = c.lambda2_init;
    o.adam = {c.adam_alpha, c.adam_beta1, c.adam_beta2, c.adam_eps};
    o.freeze_tol = c.freeze_tol;
    return o;
}

}  // namespace detail

/// Loads the data, splits, runs the chosen method and writes trace.csv
/// plus summary.txt under out_dir (suffixed _chain<i> when running more
/// than one chain). Returns the first chain's report.
inline SummaryReport run_experiment(const ExperimentConfig& cfg) {
    if (cfg.data_path.empty()) {
        throw std::invalid_argument("run_experiment: data_path is required");
    }
    if (cfg.chains == 0) {
        throw std::invalid_argument("run_experiment: chains must be positive");
    }
    if (cfg.method != "als" && cfg.method != "rjmcmc") {
        throw std::invalid_argument("run_experiment: method must be als or rjmcmc");
    }
    const auto started = std::chrono::steady_clock::now();
    const SparseRatings ratings = parse_movielens(cfg.data_path);
    DataSplit data = split(ratings, cfg.split_fraction, cfg.seed);
    std::filesystem::create_directories(cfg.out_dir);
    const auto out_path = [&](const char* stem, const char* ext, std::size_t chain) {
        std::string file = stem;
        if (cfg.chains > 1) {
            file += "_chain" + std::to_string(chain);
        }
        return (std::filesystem::path(cfg.out_dir) / (file + ext)).string();
    };
    const auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    };

    if (cfg.method == "als") {
        const AlsResult res =
            als_fit(data.train, data.test, cfg.k, {cfg.lambda1_init, cfg.lambda2_init},
                    cfg.seed, {cfg.als_max_iters, cfg.als_tol});
        std::vector<ChainTraceRecord> trace;
        std::size_t best = 0;
        for (std::size_t i = 0; i < res.trace.size(); i++) {
            const AlsIterRecord& r = res.trace[i];
            trace.push_back({r.iteration, std::numeric_limits<double>::quiet_NaN(),
                             cfg.k, MoveKind::within, true, r.train_loss, r.test_rmse,
                             cfg.lambda1_init, cfg.lambda2_init});
            if (r.train_loss < res.trace[best].train_loss) {
                best = i;
            }
        }
        SummaryReport rep;
        rep.method = cfg.method;
        rep.seed = cfg.seed;
        rep.selected_k = cfg.k;
        rep.test_rmse_at_selected_k = res.trace[best].test_rmse;
        rep.final_lambda1 = cfg.lambda1_init;
        rep.final_lambda2 = cfg.lambda2_init;
        rep.stabilized_k = cfg.k;
        rep.wall_time_s = elapsed();
        detail::write_trace_csv(out_path("trace", ".csv", 0), trace);
        detail::write_summary(out_path("summary", ".txt", 0), rep);
        return rep;
    }

    const AnnealOptions opts = detail::anneal_options_from(cfg);
    std::vector<std::future<ChainResult>> futures;
    for (std::size_t i = 0; i < cfg.chains; i++) {
        futures.push_back(std::async(std::launch::async, [&, i] {
            return run_chain(opts, data.train, data.test, cfg.seed + i);
        }));
    }
    SummaryReport first;
    for (std::size_t i = 0; i < cfg.chains; i++) {
        const ChainResult res = futures[i].get();
        SummaryReport rep;
        rep.method = cfg.method;
        rep.seed = cfg.seed + i;
        rep.selected_k = res.best_k;
        rep.test_rmse_at_selected_k = res.best_test_rmse;
        rep.final_lambda1 = res.hp.lambda1;
        rep.final_lambda2 = res.hp.lambda2;
        rep.stabilized_k = detail::stabilized_k(res.trace, cfg.smooth_window);
        rep.wall_time_s = elapsed();
        detail::write_trace_csv(out_path("trace", ".csv", i), res.trace);
        detail::write_summary(out_path("summary", ".txt", i), rep);
        if (i == 0) {
            first = rep;
        }
    }
    return first;
}

}  // namespace rjmf
