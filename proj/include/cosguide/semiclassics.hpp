#pragma once

#include <span>
#include <string>
#include <vector>

#include "cosguide/bloch.hpp"

namespace cosguide {

/// Mean level spacing in k from the leading-order state count
/// N(k) = k^2 A_c / (4 pi).
double mean_level_spacing(double cell_area, double k);

struct ModeCountSeries {
    std::vector<double> k;
    std::vector<int> nb;
    std::vector<int> flags; // BlochFlags::bits() per point
    double dk = 0.0;        // nominal grid spacing
    // run metadata
    std::string profile_sig;
    double cell_area = 0.0;
    double period = 0.0;
    int n_evan = 0;
    int n_slices = 0; // 0 when auto per point
    double unimodular_tol = 0.0;
};

enum class KernelShape { Gaussian, Boxcar };

struct KernelSpec {
    KernelShape shape = KernelShape::Gaussian;
    double width = 0.0; // std for Gaussian, full width for boxcar, in k units
};

struct SmoothedSeries {
    std::vector<double> k;
    std::vector<double> value;
    KernelSpec kernel;
    int min_support = 0;         // fewest samples under the kernel
    bool support_warning = false; // fewer than 10 samples somewhere
};

/// Discrete convolution with a unit-mass kernel; edge windows are
/// truncated and renormalized.
SmoothedSeries smooth(const ModeCountSeries& series, const KernelSpec& kernel);

struct WindowedMean {
    double k_center = 0.0;
    double r = 0.0; // window width in units of the local mean level spacing
    double mean = 0.0;
    double se = 0.0;
    int count = 0;
};

/// Boxcar mean of N_B over a window of width r * dk_mean(k_center).
WindowedMean windowed_average(std::span<const double> k, std::span<const int> nb, double k_center,
                              double r, double cell_area);

struct SemiclassicalPrediction {
    double g = 2.0;
    double cell_area = 0.0;
    double d1 = 0.0;
    double period = 0.0;
    double c0 = 0.0;

    double slope() const; // sqrt(g A_c D1 / 2 pi) / L
    double operator()(double k) const { return slope() * std::sqrt(k) + c0; }
};

struct SqrtFitReport {
    double a = 0.0;  // coefficient of sqrt(k)
    double c0 = 0.0; // additive constant
    double d1_quantum = 0.0;
    double se_a = 0.0;
    double se_c0 = 0.0;
    double se_d1 = 0.0;
    double cov_ac0 = 0.0;
    double residual_rms = 0.0;
    std::size_t n = 0;
    bool rejected = false;
    std::string reason;
};

/// Least-squares fit of a sqrt(k) + c0; d1_quantum = 2 pi L^2 a^2 / (g A_c).
SqrtFitReport fit_sqrt_law(const SmoothedSeries& smoothed, double g, double cell_area,
                           double period);
SqrtFitReport fit_sqrt_law(std::span<const double> k, std::span<const double> value, double g,
                           double cell_area, double period);

struct SlopeStats {
    std::vector<double> slopes; // u = L dk/dtheta from matched differences
    double variance = 0.0;
    double predicted_variance = 0.0; // g D1 / (A_c k_center)
    double ratio = 0.0;
    double kurtosis = 0.0;
    double k_center = 0.0;
    std::size_t matched = 0;
    std::size_t dropped = 0;
};

/// Band-slope samples by nearest-theta matching across adjacent k grid
/// points; unmatched points are dropped, never interpolated.
SlopeStats band_slope_statistics(std::span<const BandPoint> points, double period, double g,
                                 double cell_area, double d1);

} // namespace cosguide
