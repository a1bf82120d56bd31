#include "cosguide/diffusion_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace cosguide {

namespace {

constexpr double half_pi = std::numbers::pi / 2.0;

std::size_t nearest_index(std::span<const double> grid, double t) {
    if (grid.empty()) throw std::invalid_argument("empty time grid");
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (std::abs(grid[i] - t) < std::abs(grid[best] - t)) best = i;
    return best;
}

// Weighted batch mean and its standard error from the batch spread.
void batch_mean_se(std::span<const double> values, std::span<const std::size_t> counts,
                   double& mean, double& se) {
    double wsum = 0.0, vsum = 0.0;
    std::size_t used = 0;
    for (std::size_t b = 0; b < values.size(); ++b) {
        if (counts[b] == 0) continue;
        wsum += static_cast<double>(counts[b]);
        vsum += static_cast<double>(counts[b]) * values[b];
        ++used;
    }
    mean = vsum / wsum;
    double var = 0.0;
    for (std::size_t b = 0; b < values.size(); ++b) {
        if (counts[b] == 0) continue;
        double d = values[b] - mean;
        var += d * d;
    }
    se = used > 1 ? std::sqrt(var / (static_cast<double>(used) * (used - 1.0))) : 0.0;
}

} // namespace

double AutocorrSeries::noise_floor() const {
    return sample_count > 0 ? 1.0 / std::sqrt(static_cast<double>(sample_count)) : 0.0;
}

std::vector<double> linear_grid(double t0, double t1, std::size_t points) {
    if (points < 2 || !(t1 > t0)) throw std::invalid_argument("linear_grid: bad arguments");
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(points - 1);
    return g;
}

TrajectorySample sample_trajectory(const Profile& profile, const ParticleState& ic,
                                   std::span<const double> corr_grid,
                                   std::span<const double> moment_grid) {
    double horizon = 0.0;
    for (double t : corr_grid) horizon = std::max(horizon, t);
    for (double t : moment_grid) horizon = std::max(horizon, t);
    if (!(horizon > 0.0)) throw std::invalid_argument("sample_trajectory: empty grids");

    TrajectorySample out;
    out.vx0 = ic.vx;
    out.vx_at.resize(corr_grid.size());
    out.dx_at.resize(moment_grid.size());
    std::size_t ci = 0, mi = 0;
    const double x0 = ic.x;

    out.stats = evolve_visit(
        profile, ic, horizon,
        [&](const ParticleState& start, double dt, const CollisionEvent*) {
            const double t_end = start.t - ic.t + dt; // trajectory-relative time
            const double t0 = start.t - ic.t;
            while (ci < corr_grid.size() && corr_grid[ci] <= t_end + 1e-12) {
                out.vx_at[ci] = start.vx;
                ++ci;
            }
            while (mi < moment_grid.size() && moment_grid[mi] <= t_end + 1e-12) {
                double s = std::clamp(moment_grid[mi] - t0, 0.0, dt);
                out.dx_at[mi] = start.x + start.vx * s - x0;
                ++mi;
            }
        });
    if (ci < corr_grid.size() || mi < moment_grid.size())
        throw std::runtime_error("sample_trajectory: grid extends past the trajectory horizon");
    return out;
}

ParticleState state_at(const Trajectory& traj, double t) {
    if (t < traj.initial.t - 1e-12 || t > traj.final_state.t + 1e-12)
        throw std::invalid_argument("state_at: time outside trajectory span");
    // Find the last event at or before t; segments carry constant velocity.
    ParticleState base = traj.initial;
    auto it = std::upper_bound(traj.events.begin(), traj.events.end(), t,
                               [](double tv, const TrajectoryEvent& e) { return tv < e.t; });
    if (it != traj.events.begin()) {
        const TrajectoryEvent& e = *(it - 1);
        base = {e.x, e.y, e.vx, e.vy, e.t};
    }
    double dt = t - base.t;
    return {base.x + base.vx * dt, base.y + base.vy * dt, base.vx, base.vy, t};
}

EnsembleAccumulator::EnsembleAccumulator(std::vector<double> corr_grid,
                                         std::vector<double> moment_grid, std::size_t n_batches)
    : corr_grid_(std::move(corr_grid)), moment_grid_(std::move(moment_grid)),
      n_batches_(n_batches), count_(n_batches, 0),
      sum_vv_(n_batches, std::vector<double>(corr_grid_.size(), 0.0)),
      sum_absdx_(n_batches, std::vector<double>(moment_grid_.size(), 0.0)),
      sum_dx2_(n_batches, std::vector<double>(moment_grid_.size(), 0.0)) {
    if (n_batches == 0) throw std::invalid_argument("EnsembleAccumulator: need >= 1 batch");
}

void EnsembleAccumulator::add(const TrajectorySample& s, std::size_t batch) {
    if (batch >= n_batches_) throw std::out_of_range("EnsembleAccumulator: bad batch index");
    ++count_[batch];
    for (std::size_t j = 0; j < corr_grid_.size(); ++j)
        sum_vv_[batch][j] += s.vx_at[j] * s.vx0;
    for (std::size_t j = 0; j < moment_grid_.size(); ++j) {
        sum_absdx_[batch][j] += std::abs(s.dx_at[j]);
        sum_dx2_[batch][j] += s.dx_at[j] * s.dx_at[j];
    }
}

void EnsembleAccumulator::merge(const EnsembleAccumulator& other) {
    for (std::size_t b = 0; b < n_batches_; ++b) {
        count_[b] += other.count_[b];
        for (std::size_t j = 0; j < corr_grid_.size(); ++j)
            sum_vv_[b][j] += other.sum_vv_[b][j];
        for (std::size_t j = 0; j < moment_grid_.size(); ++j) {
            sum_absdx_[b][j] += other.sum_absdx_[b][j];
            sum_dx2_[b][j] += other.sum_dx2_[b][j];
        }
    }
}

AutocorrSeries EnsembleAccumulator::autocorrelation() const {
    AutocorrSeries s;
    s.t.assign(corr_grid_.begin(), corr_grid_.end());
    s.c.assign(corr_grid_.size(), 0.0);
    std::size_t total = std::accumulate(count_.begin(), count_.end(), std::size_t{0});
    s.sample_count = total;
    for (std::size_t j = 0; j < corr_grid_.size(); ++j) {
        double sum = 0.0;
        for (std::size_t b = 0; b < n_batches_; ++b) sum += sum_vv_[b][j];
        s.c[j] = sum / static_cast<double>(total);
    }
    return s;
}

MomentSeries EnsembleAccumulator::moments() const {
    MomentSeries m;
    m.t.assign(moment_grid_.begin(), moment_grid_.end());
    m.sample_count = std::accumulate(count_.begin(), count_.end(), std::size_t{0});
    m.batch_count = count_;
    m.batch_m1.resize(n_batches_);
    m.batch_m2.resize(n_batches_);
    for (std::size_t b = 0; b < n_batches_; ++b) {
        m.batch_m1[b].assign(moment_grid_.size(), 0.0);
        m.batch_m2[b].assign(moment_grid_.size(), 0.0);
        if (count_[b] == 0) continue;
        for (std::size_t j = 0; j < moment_grid_.size(); ++j) {
            m.batch_m1[b][j] = sum_absdx_[b][j] / static_cast<double>(count_[b]);
            m.batch_m2[b][j] = sum_dx2_[b][j] / static_cast<double>(count_[b]);
        }
    }
    m.m1.assign(moment_grid_.size(), 0.0);
    m.m2.assign(moment_grid_.size(), 0.0);
    for (std::size_t j = 0; j < moment_grid_.size(); ++j) {
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t b = 0; b < n_batches_; ++b) {
            s1 += sum_absdx_[b][j];
            s2 += sum_dx2_[b][j];
        }
        m.m1[j] = s1 / static_cast<double>(m.sample_count);
        m.m2[j] = s2 / static_cast<double>(m.sample_count);
    }
    return m;
}

AutocorrSeries velocity_autocorrelation(std::span<const Trajectory> trajectories,
                                        std::span<const double> time_grid) {
    AutocorrSeries s;
    s.t.assign(time_grid.begin(), time_grid.end());
    s.c.assign(time_grid.size(), 0.0);
    s.sample_count = trajectories.size();
    for (const Trajectory& tr : trajectories) {
        for (std::size_t j = 0; j < time_grid.size(); ++j) {
            ParticleState st = state_at(tr, tr.initial.t + time_grid[j]);
            s.c[j] += st.vx * tr.initial.vx;
        }
    }
    for (double& v : s.c) v /= static_cast<double>(trajectories.size());
    return s;
}

MomentSeries displacement_moments(std::span<const Trajectory> trajectories,
                                  std::span<const double> time_grid, std::size_t n_batches) {
    n_batches = std::min(n_batches, trajectories.size());
    EnsembleAccumulator acc({}, std::vector<double>(time_grid.begin(), time_grid.end()),
                            std::max<std::size_t>(n_batches, 1));
    const std::size_t n = trajectories.size();
    for (std::size_t i = 0; i < n; ++i) {
        TrajectorySample s;
        s.vx0 = trajectories[i].initial.vx;
        s.dx_at.resize(time_grid.size());
        for (std::size_t j = 0; j < time_grid.size(); ++j)
            s.dx_at[j] =
                state_at(trajectories[i], trajectories[i].initial.t + time_grid[j]).x -
                trajectories[i].initial.x;
        acc.add(s, i * acc.n_batches() / n);
    }
    return acc.moments();
}

DiffusionEstimate diffusion_coefficient(const MomentSeries& moments, double transient_cut) {
    DiffusionEstimate est;
    est.transient_cut = transient_cut;
    const std::size_t nb = moments.batch_m1.size();
    std::vector<double> d2(nb, 0.0), d1st(nb, 0.0);
    std::size_t used_times = 0;
    for (std::size_t j = 0; j < moments.t.size(); ++j)
        if (moments.t[j] > transient_cut) ++used_times;
    if (used_times == 0)
        throw std::invalid_argument("diffusion_coefficient: grid does not extend past the cut");

    for (std::size_t b = 0; b < nb; ++b) {
        if (moments.batch_count[b] == 0) continue;
        double s2 = 0.0, s1 = 0.0;
        for (std::size_t j = 0; j < moments.t.size(); ++j) {
            double t = moments.t[j];
            if (!(t > transient_cut)) continue;
            s2 += moments.batch_m2[b][j] / t;
            double m1 = moments.batch_m1[b][j];
            s1 += half_pi * m1 * m1 / t;
        }
        d2[b] = s2 / static_cast<double>(used_times);
        d1st[b] = s1 / static_cast<double>(used_times);
    }
    batch_mean_se(d2, moments.batch_count, est.d1, est.se);
    batch_mean_se(d1st, moments.batch_count, est.d1_first, est.se_first);
    double combined = std::sqrt(est.se * est.se + est.se_first * est.se_first);
    est.non_gaussian_warning = std::abs(est.d1 - est.d1_first) > 2.0 * combined;
    return est;
}

RatioEstimate moment_ratio(const MomentSeries& moments, double t) {
    std::size_t j = nearest_index(moments.t, t);
    RatioEstimate r;
    r.t = moments.t[j];
    const std::size_t nb = moments.batch_m1.size();
    std::vector<double> ratios(nb, 0.0);
    for (std::size_t b = 0; b < nb; ++b) {
        if (moments.batch_count[b] == 0 || moments.batch_m2[b][j] <= 0.0) continue;
        double m1 = moments.batch_m1[b][j];
        ratios[b] = half_pi * m1 * m1 / moments.batch_m2[b][j];
    }
    batch_mean_se(ratios, moments.batch_count, r.value, r.se);
    return r;
}

GaussianFitReport fit_gaussian_histogram(std::span<const double> samples, int bins,
                                         bool zero_mean) {
    if (samples.size() < 10) throw std::invalid_argument("fit_gaussian_histogram: too few samples");
    if (bins < 5) throw std::invalid_argument("fit_gaussian_histogram: too few bins");
    GaussianFitReport rep;
    rep.zero_mean = zero_mean;
    rep.count = samples.size();
    const double n = static_cast<double>(samples.size());

    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= n;
    if (zero_mean) mean = 0.0;
    double var = 0.0, m3 = 0.0;
    for (double v : samples) {
        double d = v - mean;
        var += d * d;
        m3 += d * d * d;
    }
    var /= n;
    m3 /= n;
    rep.mean = mean;
    rep.sigma2 = var;
    rep.skewness = m3 / std::pow(var, 1.5);
    rep.skewness_se = std::sqrt(6.0 / n);

    const double sigma = std::sqrt(var);
    const double lo = mean - 4.0 * sigma;
    const double hi = mean + 4.0 * sigma;
    const double dx = (hi - lo) / bins;
    std::vector<double> counts(bins, 0.0);
    for (double v : samples) {
        int b = static_cast<int>((v - lo) / dx);
        if (b >= 0 && b < bins) counts[b] += 1.0;
    }
    rep.bin_center.resize(bins);
    rep.density.resize(bins);
    rep.fit_density.resize(bins);
    rep.chi2 = 0.0;
    rep.dof = 0;
    const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
    for (int b = 0; b < bins; ++b) {
        double xc = lo + (b + 0.5) * dx;
        rep.bin_center[b] = xc;
        rep.density[b] = counts[b] / (n * dx);
        double z = (xc - mean) / sigma;
        rep.fit_density[b] = norm * std::exp(-0.5 * z * z);
        double expected = rep.fit_density[b] * n * dx;
        if (expected >= 5.0) {
            double d = counts[b] - expected;
            rep.chi2 += d * d / expected;
            ++rep.dof;
        }
    }
    rep.dof = std::max(rep.dof - (zero_mean ? 1 : 2), 1);
    return rep;
}

GaussianFitReport normalized_displacement_histogram(std::span<const Trajectory> trajectories,
                                                    double t, int bins, bool zero_mean) {
    std::vector<double> xt;
    xt.reserve(trajectories.size());
    for (const Trajectory& tr : trajectories)
        xt.push_back((state_at(tr, tr.initial.t + t).x - tr.initial.x) / std::sqrt(t));
    return fit_gaussian_histogram(xt, bins, zero_mean);
}

} // namespace cosguide
