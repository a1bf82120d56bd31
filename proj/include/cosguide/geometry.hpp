#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cosguide {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

enum class Wall { Lower, Upper };

/// Transverse cross-section of the channel at fixed x: lower <= y <= upper.
struct CrossSection {
    double lower = 0.0;
    double upper = 0.0;
    double width() const { return upper - lower; }
};

/// Periodic channel geometry. Wall heights and their derivatives are
/// analytic; collision detection relies on exact slopes, not finite
/// differences. Implementations are immutable and safe to share across
/// threads.
class Profile {
public:
    virtual ~Profile() = default;

    virtual double period() const = 0;
    virtual double lower(double x) const = 0;
    virtual double upper(double x) const = 0;
    virtual double lower_slope(double x) const = 0;
    virtual double upper_slope(double x) const = 0;

    /// Area enclosed between the walls over one period.
    virtual double cell_area() const = 0;

    /// Global bounds majorizing |h'| and |h''| on both walls.
    virtual double max_slope() const = 0;
    virtual double max_curvature() const = 0;

    virtual bool mirror_symmetric() const = 0;

    /// Stable identifier used in cache keys and output metadata.
    virtual std::string signature() const = 0;

    CrossSection cross_section(double x) const { return {lower(x), upper(x)}; }
    double gap(double x) const { return upper(x) - lower(x); }

    /// Cross-section of the straight leads attached at x = ±period/2.
    CrossSection lead_section() const { return cross_section(period() / 2.0); }
    double lead_width() const { return lead_section().width(); }
};

/// Cosine-walled unit cell on [-1, 1]: lower wall (1/2)(1+cos(pi x)),
/// upper wall 1 + (a2/2)(1+cos(pi x)). Both walls share the period 2 and
/// the mirror symmetry about x = 0; the minimum gap a2 sits at x = 0 and
/// the cell ends in a flat cross-section [0, 1].
class CosineProfile final : public Profile {
public:
    explicit CosineProfile(double a2) : a2_(a2) {
        if (!(a2 > 0.0))
            throw std::invalid_argument("CosineProfile: amplitude must be positive, got " +
                                        std::to_string(a2));
    }

    double a2() const { return a2_; }

    double period() const override { return 2.0; }
    double lower(double x) const override { return 0.5 * (1.0 + std::cos(pi * x)); }
    double upper(double x) const override { return 1.0 + 0.5 * a2_ * (1.0 + std::cos(pi * x)); }
    double lower_slope(double x) const override { return -0.5 * pi * std::sin(pi * x); }
    double upper_slope(double x) const override { return -0.5 * a2_ * pi * std::sin(pi * x); }

    double cell_area() const override { return 1.0 + a2_; }

    double max_slope() const override { return 0.5 * pi * std::max(1.0, a2_); }
    double max_curvature() const override { return 0.5 * pi * pi * std::max(1.0, a2_); }

    bool mirror_symmetric() const override { return true; }

    std::string signature() const override {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "cosine:a2=%.17g", a2_);
        return buf;
    }

private:
    static constexpr double pi = std::numbers::pi;
    double a2_;
};

/// Straight channel 0 <= y <= width. Degenerate (ballistic) geometry kept
/// for oracle tests; never used in production sweeps.
class FlatProfile final : public Profile {
public:
    explicit FlatProfile(double width, double period = 2.0) : width_(width), period_(period) {
        if (!(width > 0.0) || !(period > 0.0))
            throw std::invalid_argument("FlatProfile: width and period must be positive");
    }

    double width() const { return width_; }

    double period() const override { return period_; }
    double lower(double) const override { return 0.0; }
    double upper(double) const override { return width_; }
    double lower_slope(double) const override { return 0.0; }
    double upper_slope(double) const override { return 0.0; }

    double cell_area() const override { return width_ * period_; }

    double max_slope() const override { return 0.0; }
    double max_curvature() const override { return 0.0; }

    bool mirror_symmetric() const override { return true; }

    std::string signature() const override {
        char buf[80];
        std::snprintf(buf, sizeof(buf), "flat:w=%.17g:l=%.17g", width_, period_);
        return buf;
    }

private:
    double width_;
    double period_;
};

inline CosineProfile cosine_profile(double a2) { return CosineProfile(a2); }

/// Inward unit normal of the named wall at longitudinal position x.
inline Vec2 wall_normal(const Profile& profile, Wall wall, double x) {
    double s = (wall == Wall::Lower) ? profile.lower_slope(x) : profile.upper_slope(x);
    double inv = 1.0 / std::sqrt(1.0 + s * s);
    if (wall == Wall::Lower) return {-s * inv, inv};
    return {s * inv, -inv};
}

} // namespace cosguide
