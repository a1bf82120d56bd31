#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cosguide/modal.hpp"
#include "cosguide/runner.hpp"

namespace {

// OpenBLAS threading would fight the sweep's own worker pool.
void pin_blas_threads() { setenv("OPENBLAS_NUM_THREADS", "1", 0); }

cosguide::RunConfig build_config(const std::string& config_path,
                                 const std::vector<std::string>& overrides,
                                 const std::string& out_dir, int threads, long long seed,
                                 double a2) {
    cosguide::Config cfg;
    if (!config_path.empty()) cfg = cosguide::Config::from_file(config_path);
    for (const std::string& kv : overrides) cfg.set_line(kv);
    if (!out_dir.empty()) cfg.set("out", out_dir);
    if (threads >= 0) cfg.set("threads", std::to_string(threads));
    if (seed >= 0) cfg.set("classical.seed", std::to_string(seed));
    if (a2 > 0.0) cfg.set("geometry.a2", std::to_string(a2));
    return cosguide::RunConfig::from(cfg);
}

} // namespace

int main(int argc, char** argv) {
    pin_blas_threads();

    CLI::App app{"Diffusive periodic waveguide toolkit: classical transport statistics, "
                 "Bloch mode counting, and their square-root-law comparison"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    int threads = -1;
    long long seed = -1;
    double a2 = -1.0;

    app.add_option("-c,--config", config_path, "Configuration file (key = value lines)");
    app.add_option("-s,--set", overrides, "Override a config key, e.g. --set wave.n_evan=40");
    app.add_option("-o,--out", out_dir, "Output directory");
    app.add_option("-t,--threads", threads, "Worker threads (0 = hardware)");
    app.add_option("--seed", seed, "Classical ensemble seed");
    app.add_option("--a2", a2, "Cosine wall amplitude");

    auto* classical = app.add_subcommand(
        "classical", "Run the billiard ensemble: autocorrelation, moments, histogram, D1");
    auto* spectrum = app.add_subcommand(
        "spectrum", "Sweep k, count propagating Bloch modes, smooth the series");
    auto* bands =
        app.add_subcommand("bands", "Fine band diagram around a wavenumber plus slope statistics");
    auto* compare =
        app.add_subcommand("compare", "Fit the smoothed mode count and compare D1 estimates");
    auto* smoke = app.add_subcommand("smoke", "Tiny end-to-end run (seconds)");

    CLI11_PARSE(app, argc, argv);

    try {
        cosguide::RunConfig cfg = build_config(config_path, overrides, out_dir, threads, seed, a2);

        if (classical->parsed()) {
            auto res = cosguide::run_classical(cfg);
            std::printf("d1 = %.6g +- %.2g (second moment), %.6g +- %.2g (first moment)\n",
                        res.d1.d1, res.d1.se, res.d1.d1_first, res.d1.se_first);
            std::printf("gaussianity ratio (pi/2)<|x|>^2/<x^2> = %.4f +- %.4f at t=%g\n",
                        res.ratio.value, res.ratio.se, res.ratio.t);
        } else if (spectrum->parsed()) {
            auto res = cosguide::run_spectrum(cfg);
            std::printf("swept %zu wavenumbers; N_B range [%d, %d]\n", res.points.size(),
                        res.points.front().nb, res.points.back().nb);
        } else if (bands->parsed()) {
            auto res = cosguide::run_bands(cfg);
            std::printf("band points: %zu, slope samples: %zu, variance ratio: %.3f\n",
                        res.points.size(), res.slopes.slopes.size(), res.slopes.ratio);
        } else if (compare->parsed()) {
            auto res = cosguide::run_compare(cfg);
            std::printf("d1_classical = %.6g +- %.2g\n", res.d1_classical, res.se_classical);
            std::printf("d1_quantum   = %.6g +- %.2g (a=%.6g, c0=%.4g)\n", res.fit.d1_quantum,
                        res.fit.se_d1, res.fit.a, res.fit.c0);
            std::printf("relative difference: %.2f%%\n", 100.0 * res.rel_diff);
        } else if (smoke->parsed()) {
            cosguide::run_smoke(cfg);
        }
    } catch (const cosguide::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const cosguide::ConvergenceError& e) {
        std::cerr << "convergence failure: " << e.what() << "\n";
        return 2;
    } catch (const cosguide::near_cutoff_error& e) {
        std::cerr << "convergence failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
