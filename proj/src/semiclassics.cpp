#include "cosguide/semiclassics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

namespace cosguide {

namespace {
constexpr double pi = std::numbers::pi;
constexpr double two_pi = 2.0 * std::numbers::pi;
} // namespace

double mean_level_spacing(double cell_area, double k) {
    if (!(k > 0.0) || !(cell_area > 0.0))
        throw std::invalid_argument("mean_level_spacing: need k, cell_area > 0");
    return two_pi / (k * cell_area);
}

SmoothedSeries smooth(const ModeCountSeries& series, const KernelSpec& kernel) {
    if (series.k.size() < 2) throw std::invalid_argument("smooth: series too short");
    if (!(kernel.width > 0.0)) throw std::invalid_argument("smooth: kernel width must be positive");
    const double support =
        kernel.shape == KernelShape::Gaussian ? 4.0 * kernel.width : 0.5 * kernel.width;

    SmoothedSeries out;
    out.kernel = kernel;
    out.k = series.k;
    out.value.resize(series.k.size());
    out.min_support = static_cast<int>(series.k.size());
    for (std::size_t i = 0; i < series.k.size(); ++i) {
        double wsum = 0.0, vsum = 0.0;
        int used = 0;
        for (std::size_t j = 0; j < series.k.size(); ++j) {
            double d = series.k[j] - series.k[i];
            if (std::abs(d) > support) continue;
            double w = kernel.shape == KernelShape::Gaussian
                           ? std::exp(-0.5 * d * d / (kernel.width * kernel.width))
                           : 1.0;
            wsum += w;
            vsum += w * series.nb[j];
            ++used;
        }
        out.value[i] = vsum / wsum;
        out.min_support = std::min(out.min_support, used);
    }
    out.support_warning = out.min_support < 10;
    return out;
}

WindowedMean windowed_average(std::span<const double> k, std::span<const int> nb, double k_center,
                              double r, double cell_area) {
    if (k.size() != nb.size()) throw std::invalid_argument("windowed_average: size mismatch");
    WindowedMean wm;
    wm.k_center = k_center;
    wm.r = r;
    const double half = 0.5 * r * mean_level_spacing(cell_area, k_center);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (std::abs(k[i] - k_center) > half) continue;
        sum += nb[i];
        sum2 += static_cast<double>(nb[i]) * nb[i];
        ++wm.count;
    }
    if (wm.count == 0) return wm;
    wm.mean = sum / wm.count;
    if (wm.count > 1) {
        double var = (sum2 - wm.count * wm.mean * wm.mean) / (wm.count - 1.0);
        wm.se = std::sqrt(std::max(var, 0.0) / wm.count);
    }
    return wm;
}

double SemiclassicalPrediction::slope() const {
    return std::sqrt(g * cell_area * d1 / two_pi) / period;
}

SqrtFitReport fit_sqrt_law(std::span<const double> k, std::span<const double> value, double g,
                           double cell_area, double period) {
    SqrtFitReport rep;
    rep.n = k.size();
    if (k.size() < 3) {
        rep.rejected = true;
        rep.reason = "too few points";
        return rep;
    }
    // Trend gate: the mean over the upper third must exceed the mean over
    // the lower third, otherwise a sqrt fit is meaningless (e.g. still
    // below the first band).
    std::size_t third = k.size() / 3;
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < third; ++i) lo += value[i];
    for (std::size_t i = k.size() - third; i < k.size(); ++i) hi += value[i];
    if (!(hi > lo)) {
        rep.rejected = true;
        rep.reason = "series has no increasing trend";
        return rep;
    }

    // Normal equations for y = a sqrt(k) + c0.
    double sxx = 0.0, sx = 0.0, sxy = 0.0, sy = 0.0;
    const double n = static_cast<double>(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) {
        double x = std::sqrt(k[i]);
        sxx += x * x;
        sx += x;
        sxy += x * value[i];
        sy += value[i];
    }
    double det = sxx * n - sx * sx;
    rep.a = (n * sxy - sx * sy) / det;
    rep.c0 = (sxx * sy - sx * sxy) / det;

    double rss = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        double r = value[i] - (rep.a * std::sqrt(k[i]) + rep.c0);
        rss += r * r;
    }
    rep.residual_rms = std::sqrt(rss / n);
    double sigma2 = rss / std::max(n - 2.0, 1.0);
    rep.se_a = std::sqrt(sigma2 * n / det);
    rep.se_c0 = std::sqrt(sigma2 * sxx / det);
    rep.cov_ac0 = -sigma2 * sx / det;

    if (rep.a <= 0.0) {
        rep.rejected = true;
        rep.reason = "non-positive sqrt coefficient";
        return rep;
    }
    rep.d1_quantum = two_pi * period * period * rep.a * rep.a / (g * cell_area);
    rep.se_d1 = 2.0 * two_pi * period * period * rep.a * rep.se_a / (g * cell_area);
    return rep;
}

SqrtFitReport fit_sqrt_law(const SmoothedSeries& smoothed, double g, double cell_area,
                           double period) {
    return fit_sqrt_law(smoothed.k, smoothed.value, g, cell_area, period);
}

SlopeStats band_slope_statistics(std::span<const BandPoint> points, double period, double g,
                                 double cell_area, double d1) {
    SlopeStats st;
    if (points.empty()) return st;

    // Group thetas by k; the map orders the grid.
    std::map<double, std::vector<double>> by_k;
    for (const BandPoint& p : points) by_k[p.k].push_back(p.theta);

    double k_lo = by_k.begin()->first;
    double k_hi = by_k.rbegin()->first;
    st.k_center = 0.5 * (k_lo + k_hi);

    auto wrap = [](double d) {
        while (d > pi) d -= two_pi;
        while (d < -pi) d += two_pi;
        return d;
    };

    auto it = by_k.begin();
    auto next = std::next(it);
    for (; next != by_k.end(); ++it, ++next) {
        const double dk = next->first - it->first;
        if (!(dk > 0.0)) continue;
        std::vector<double> a = it->second;
        std::vector<double> b = next->second;
        // Nearest-theta matching with a continuity bound of slightly under
        // half the typical angular spacing; anything farther is dropped.
        const double spacing = two_pi / static_cast<double>(std::max<std::size_t>(a.size(), 1));
        const double bound = 0.45 * spacing;
        std::vector<bool> used(b.size(), false);
        for (double theta : a) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_j = b.size();
            for (std::size_t j = 0; j < b.size(); ++j) {
                if (used[j]) continue;
                double d = std::abs(wrap(b[j] - theta));
                if (d < best) {
                    best = d;
                    best_j = j;
                }
            }
            if (best_j == b.size() || best > bound || best == 0.0) {
                ++st.dropped;
                continue;
            }
            used[best_j] = true;
            double dtheta = wrap(b[best_j] - theta);
            st.slopes.push_back(period * dk / dtheta);
            ++st.matched;
        }
    }

    if (st.slopes.size() > 1) {
        double mean = 0.0;
        for (double u : st.slopes) mean += u;
        mean /= static_cast<double>(st.slopes.size());
        double m2 = 0.0, m4 = 0.0;
        for (double u : st.slopes) {
            double d = u - mean;
            m2 += d * d;
            m4 += d * d * d * d;
        }
        m2 /= static_cast<double>(st.slopes.size());
        m4 /= static_cast<double>(st.slopes.size());
        st.variance = m2;
        st.kurtosis = m4 / (m2 * m2);
    }
    st.predicted_variance = g * d1 / (cell_area * st.k_center);
    st.ratio = st.predicted_variance > 0.0 ? st.variance / st.predicted_variance : 0.0;
    return st;
}

} // namespace cosguide
