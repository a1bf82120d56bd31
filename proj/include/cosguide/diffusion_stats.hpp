#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cosguide/dynamics.hpp"

namespace cosguide {

struct AutocorrSeries {
    std::vector<double> t;
    std::vector<double> c; // <vx(t) vx(0)>
    std::size_t sample_count = 0;
    double noise_floor() const; // 1/sqrt(sample_count)
};

/// First absolute and second moments of the displacement x(t) - x(0),
/// with per-batch means kept for standard errors.
struct MomentSeries {
    std::vector<double> t;
    std::vector<double> m1; // <|dx|>
    std::vector<double> m2; // <dx^2>
    std::size_t sample_count = 0;
    std::vector<std::vector<double>> batch_m1; // [batch][time]
    std::vector<std::vector<double>> batch_m2;
    std::vector<std::size_t> batch_count;
};

struct DiffusionEstimate {
    double d1 = 0.0; // second-moment estimator, time-averaged past the cut
    double se = 0.0;
    double d1_first = 0.0; // (pi/2) <|x|>^2 / t estimator
    double se_first = 0.0;
    double transient_cut = 0.0;
    bool non_gaussian_warning = false; // estimators differ by > 2 combined SE
};

struct RatioEstimate {
    double value = 0.0; // (pi/2) m1^2 / m2
    double se = 0.0;
    double t = 0.0;
};

struct GaussianFitReport {
    std::vector<double> bin_center;
    std::vector<double> density;
    std::vector<double> fit_density;
    double sigma2 = 0.0; // fitted variance
    double mean = 0.0;   // 0 when zero_mean is enforced
    bool zero_mean = true;
    double chi2 = 0.0;
    int dof = 0;
    double skewness = 0.0;
    double skewness_se = 0.0;
    std::size_t count = 0;
};

/// Per-trajectory checkpoint samples; the streaming form of the ensemble
/// statistics below, so large runs never materialize event lists.
struct TrajectorySample {
    double vx0 = 0.0;
    std::vector<double> vx_at; // velocity at the autocorrelation grid
    std::vector<double> dx_at; // displacement at the moment grid
    EvolveStats stats;
};

TrajectorySample sample_trajectory(const Profile& profile, const ParticleState& ic,
                                   std::span<const double> corr_grid,
                                   std::span<const double> moment_grid);

/// Interpolated state within the free-flight segment containing t.
ParticleState state_at(const Trajectory& traj, double t);

AutocorrSeries velocity_autocorrelation(std::span<const Trajectory> trajectories,
                                        std::span<const double> time_grid);

MomentSeries displacement_moments(std::span<const Trajectory> trajectories,
                                  std::span<const double> time_grid, std::size_t n_batches = 25);

DiffusionEstimate diffusion_coefficient(const MomentSeries& moments, double transient_cut);

/// Gaussianity ratio (pi/2) m1(t)^2 / m2(t) with a batch-spread standard
/// error, evaluated at the grid time nearest t.
RatioEstimate moment_ratio(const MomentSeries& moments, double t);

GaussianFitReport fit_gaussian_histogram(std::span<const double> samples, int bins,
                                         bool zero_mean = true);

GaussianFitReport normalized_displacement_histogram(std::span<const Trajectory> trajectories,
                                                    double t, int bins, bool zero_mean = true);

/// Accumulates TrajectorySamples into batch sums; merging is associative so
/// parallel workers combine deterministically in batch order.
class EnsembleAccumulator {
public:
    EnsembleAccumulator(std::vector<double> corr_grid, std::vector<double> moment_grid,
                        std::size_t n_batches);

    void add(const TrajectorySample& s, std::size_t batch);

    std::span<const double> corr_grid() const { return corr_grid_; }
    std::span<const double> moment_grid() const { return moment_grid_; }
    std::size_t n_batches() const { return n_batches_; }

    void merge(const EnsembleAccumulator& other);

    AutocorrSeries autocorrelation() const;
    MomentSeries moments() const;

private:
    std::vector<double> corr_grid_;
    std::vector<double> moment_grid_;
    std::size_t n_batches_;
    std::vector<std::size_t> count_;              // per batch
    std::vector<std::vector<double>> sum_vv_;     // [batch][corr time]
    std::vector<std::vector<double>> sum_absdx_;  // [batch][moment time]
    std::vector<std::vector<double>> sum_dx2_;    // [batch][moment time]
};

std::vector<double> linear_grid(double t0, double t1, std::size_t points);

} // namespace cosguide
