#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cosguide/config.hpp"
#include "cosguide/diffusion_stats.hpp"
#include "cosguide/semiclassics.hpp"

namespace cosguide {

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Symmetry factor of the level-velocity variance: the combination of time
/// reversal with the transverse mirror keeps the chain in the orthogonal
/// universality class for every Bloch phase.
inline constexpr double kSymmetryFactor = 2.0;

/// Typed view of the configuration with every default pinned.
struct RunConfig {
    Config raw;

    // geometry
    std::string profile_kind = "cosine"; // cosine | flat
    double a2 = 0.3;
    double flat_width = 1.0;

    // classical ensemble
    std::size_t count = 10000;
    double horizon = 5000.0;
    std::uint64_t seed = 20240817;
    std::size_t batches = 25;
    double corr_tmax = 25.0;
    std::size_t corr_points = 201;
    std::size_t checkpoints = 201;
    double transient = 0.0; // 0: ten times the autocorrelation noise-crossing time
    int hist_bins = 61;
    int dump_count = 0;

    // wave sweep
    double kmin_over_pi = 1.0;
    double kmax_over_pi = 40.0;
    double dk_over_pi = 0.37147;
    int n_evan = 27;
    int n_slices = 0; // 0: auto_slices per wavenumber
    double unimodular_tol = 1e-6;
    double tol_inf = 1e-8;
    double symmetry_tol = 1e-6;
    std::string cache_dir;

    // analysis
    std::string kernel = "gaussian";
    double sigma_over_pi = 1.0;
    double fit_kmin_over_pi = 1.0;
    double fit_kmax_over_pi = 1e9;
    std::vector<double> window_centers_over_pi; // empty: no window study
    int window_points = 153;
    double window_span_spacings = 300.0;
    double rconv_rmin = 2.0;
    double rconv_rmax = 300.0;
    double rconv_rstep = 2.0;

    // band diagram / slope statistics
    double bands_center_over_pi = 39.5;
    int bands_points = 121;
    double bands_dk = 1.75e-4;
    double bands_d1 = 0.0; // 0: take D1 from classical_summary.csv in out_dir

    int threads = 0;
    std::string out_dir = "out";

    static RunConfig from(const Config& cfg);
    std::unique_ptr<Profile> make_profile() const;
    std::uint64_t hash() const { return raw.hash(); }
};

struct ClassicalResult {
    AutocorrSeries autocorr;
    MomentSeries moments;
    DiffusionEstimate d1;
    RatioEstimate ratio; // at the final time
    GaussianFitReport histogram;
    double transient_cut = 0.0;
    std::string profile_sig;
    std::uint64_t grazing_total = 0;
    std::uint64_t marked_trajectories = 0;
    double max_flight = 0.0;
};

ClassicalResult run_classical(const RunConfig& cfg, bool write_outputs = true);

struct SpectrumPoint {
    double k = 0.0;
    int nb = 0;
    int flags = 0;
    double symmetry_residual = 0.0;
    int n_positive = 0;
    int n_negative = 0;
    bool converged = true;
};

struct WindowStudy {
    double k_center = 0.0;
    std::vector<double> k;
    std::vector<int> nb;
    std::vector<WindowedMean> means; // over the configured r ladder
};

struct SpectrumResult {
    ModeCountSeries series;
    std::vector<SpectrumPoint> points;
    SmoothedSeries smoothed;
    std::vector<WindowStudy> windows;
    std::string profile_sig;
    bool all_converged = true;
};

SpectrumResult run_spectrum(const RunConfig& cfg, bool write_outputs = true);

struct BandsResult {
    std::vector<BandPoint> points;
    std::vector<double> flagged_k;
    SlopeStats slopes;
    std::string profile_sig;
};

BandsResult run_bands(const RunConfig& cfg, bool write_outputs = true);

struct CompareResult {
    double d1_classical = 0.0;
    double se_classical = 0.0;
    SqrtFitReport fit;
    double rel_diff = 0.0;
    bool classical_loaded = false;
    bool spectrum_loaded = false;
};

CompareResult run_compare(const RunConfig& cfg, bool write_outputs = true);

/// Tiny end-to-end run (reduced ensemble and sweep); seconds, not minutes.
void run_smoke(const RunConfig& cfg);

/// Uniform k grid from the config, with points landing within 1e-9 of a
/// lead cutoff shifted by 1e-6 of the local mean level spacing.
std::vector<double> make_k_grid(const RunConfig& cfg, const Profile& profile);
std::vector<double> window_k_grid(const Profile& profile, double k_center, double span_spacings,
                                  int points);

/// Staircase slice count actually used at k (auto formula plus the
/// even-count round-up of the mirror-symmetric fast path).
int resolved_slices(const Profile& profile, double k, int requested);

SpectrumPoint solve_point(const Profile& profile, double k, const RunConfig& cfg,
                          const class ScatteringCache* cache);

} // namespace cosguide
