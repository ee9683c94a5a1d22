#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "rjmf/rjmf.hpp"

namespace {

// The config file must be applied before the other flags are bound, so
// it is pulled out of argv ahead of the real parse.
std::string config_path_from_argv(int argc, char** argv) {
    for (int i = 1; i < argc; i++) {
        const std::string a = argv[i];
        if (a == "--config" && i + 1 < argc) {
            return argv[i + 1];
        }
        if (a.rfind("--config=", 0) == 0) {
            return a.substr(9);
        }
    }
    return "";
}

void print_report(const rjmf::SummaryReport& r) {
    using rjmf::detail::fmt12;
    std::printf("method: %s\n", r.method.c_str());
    std::printf("seed: %llu\n", static_cast<unsigned long long>(r.seed));
    std::printf("selected_k: %zu\n", r.selected_k);
    std::printf("test_rmse_at_selected_k: %s\n", fmt12(r.test_rmse_at_selected_k).c_str());
    std::printf("final_lambda1: %s\n", fmt12(r.final_lambda1).c_str());
    std::printf("final_lambda2: %s\n", fmt12(r.final_lambda2).c_str());
    std::printf("stabilized_k: %zu\n", r.stabilized_k);
    std::printf("wall_time_s: %s\n", fmt12(r.wall_time_s).c_str());
}

}  // namespace

int main(int argc, char** argv) {
    rjmf::ExperimentConfig cfg;
    try {
        const std::string preload = config_path_from_argv(argc, argv);
        if (!preload.empty()) {
            cfg = rjmf::load_config_file(preload);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "rjmf: %s\n", e.what());
        return 1;
    }

    CLI::App app{"Rating matrix factorization: annealed dimension-jumping sampler "
                 "with a least-squares baseline"};
    std::string ignored_config;
    app.add_option("--config", ignored_config,
                   "key=value file applied before any other flag");
    app.add_option("--data", cfg.data_path,
                   "tab-separated ratings file (user, item, rating[, timestamp])");
    app.add_option("--method", cfg.method, "als or rjmcmc")
        ->check(CLI::IsMember({"als", "rjmcmc"}));
    app.add_option("--out", cfg.out_dir, "directory for trace.csv and summary.txt")
        ->capture_default_str();
    app.add_option("--seed", cfg.seed, "master random seed")->capture_default_str();
    app.add_option("--chains", cfg.chains, "independent sampler chains (seed, seed+1, ...)")
        ->capture_default_str();
    app.add_option("--split-fraction", cfg.split_fraction,
                   "fraction of ratings used for training")
        ->capture_default_str();
    app.add_option("--k", cfg.k, "factor dimension for the als baseline")
        ->capture_default_str();
    app.add_option("--k-max", cfg.k_max, "largest dimension the sampler may visit")
        ->capture_default_str();
    app.add_option("--init-k", cfg.init_k,
                   "starting dimension; 0 draws it uniformly from 1..k_max")
        ->capture_default_str();
    app.add_option("--lambda1-init", cfg.lambda1_init, "initial user-factor weight")
        ->capture_default_str();
    app.add_option("--lambda2-init", cfg.lambda2_init, "initial item-factor weight")
        ->capture_default_str();
    app.add_option("--adam-alpha", cfg.adam_alpha, "adam step size")
        ->capture_default_str();
    app.add_option("--adam-beta1", cfg.adam_beta1, "adam first-moment decay")
        ->capture_default_str();
    app.add_option("--adam-beta2", cfg.adam_beta2, "adam second-moment decay")
        ->capture_default_str();
    app.add_option("--adam-eps", cfg.adam_eps, "adam denominator offset")
        ->capture_default_str();
    app.add_option("--freeze-tol", cfg.freeze_tol,
                   "stop tuning lambdas once both move less than this")
        ->capture_default_str();
    app.add_option("--t0", cfg.t0, "initial temperature")->capture_default_str();
    app.add_option("--cooling-beta", cfg.cooling_beta, "geometric cooling factor")
        ->capture_default_str();
    app.add_option("--tmin", cfg.tmin, "stopping temperature")->capture_default_str();
    app.add_option("--step-scale", cfg.step_scale, "within-move perturbation scale")
        ->capture_default_str();
    app.add_option("--smooth-window", cfg.smooth_window,
                   "trailing window for smoothed diagnostics")
        ->capture_default_str();
    app.add_option("--als-max-iters", cfg.als_max_iters, "als iteration cap")
        ->capture_default_str();
    app.add_option("--als-tol", cfg.als_tol, "als loss-change stopping tolerance")
        ->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    if (cfg.data_path.empty()) {
        std::fprintf(stderr, "rjmf: --data is required (or data_path in --config)\n");
        return 1;
    }
    try {
        print_report(rjmf::run_experiment(cfg));
    } catch (const std::exception& e) {
        std::fprintf(stderr, "rjmf: %s\n", e.what());
        return 1;
    }
    return 0;
}
