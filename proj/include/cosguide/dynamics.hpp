#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "cosguide/geometry.hpp"

namespace cosguide {

/// Phase-space point on the unit-speed shell. x is kept unwrapped.
struct ParticleState {
    double x = 0.0;
    double y = 0.0;
    double vx = 0.0;
    double vy = 0.0;
    double t = 0.0;

    double speed() const { return std::hypot(vx, vy); }
};

struct CollisionEvent {
    double time_of_flight = 0.0; // measured from the query state
    Wall wall = Wall::Lower;
    double x = 0.0;
    double y = 0.0;
    bool grazing = false; // |v.n| below the grazing tolerance at impact
};

struct TrajectoryEvent {
    double t;
    double x;
    double y;
    double vx; // post-reflection velocity
    double vy;
    Wall wall;
};

struct EvolveStats {
    std::uint64_t collisions = 0;
    std::uint64_t grazing_hits = 0;
    double max_flight = 0.0;
    bool marked = false; // grazing count exceeded the threshold
};

struct Trajectory {
    ParticleState initial;
    std::vector<TrajectoryEvent> events;
    ParticleState final_state;
    EvolveStats stats;
};

inline constexpr double kGrazingTol = 1e-10;
inline constexpr std::uint64_t kGrazingMarkThreshold = 16;

/// Uniform initial conditions: positions uniform over the cell interior
/// (rejection sampling against the walls), velocity angle uniform, unit
/// speed. Deterministic for a fixed seed.
std::vector<ParticleState> sample_initial_conditions(const Profile& profile, std::size_t count,
                                                     std::uint64_t seed);

/// First intersection of the free-flight ray with either wall, or nullopt
/// if no collision occurs within s_max. Impact satisfies |y - h(x)| < 1e-12.
std::optional<CollisionEvent> next_collision(const Profile& profile, const ParticleState& state,
                                             double s_max);

/// Specular reflection at the wall; speed renormalized to exactly 1.
/// Grazing hits receive a tiny inward-normal nudge so the particle leaves
/// the wall; callers count them via CollisionEvent::grazing.
ParticleState reflect(const Profile& profile, const ParticleState& state_at_wall, Wall wall);

/// Event-driven evolution until t reaches horizon; the final state is
/// interpolated along the last free flight so final_state.t == horizon.
/// Visitor receives every free-flight segment:
///   visit(const ParticleState& start, double dt, const CollisionEvent* hit)
/// with constant velocity over [start.t, start.t + dt]; hit is null for the
/// final (horizon-clipped) segment.
template <class Visitor>
EvolveStats evolve_visit(const Profile& profile, ParticleState state, double horizon,
                         Visitor&& visit);

Trajectory evolve(const Profile& profile, const ParticleState& state, double horizon);

namespace detail {

// No-collision-within bound from f(s+d) >= f + f'*d - c2*d^2/2 (f is the
// signed gap to a wall along the ray, c2 majorizes |f''|).
inline double safe_advance(double f, double fp, double c2) {
    if (f <= 0.0) return 0.0;
    if (c2 <= 0.0) return fp < 0.0 ? f / -fp : std::numeric_limits<double>::infinity();
    return (fp + std::sqrt(fp * fp + 2.0 * c2 * f)) / c2;
}

struct WallGap {
    double f;  // distance function: >0 strictly inside
    double fp; // d/ds along the ray
};

inline WallGap gap_lower(const Profile& p, double x, double y, double vx, double vy) {
    return {y - p.lower(x), vy - p.lower_slope(x) * vx};
}

inline WallGap gap_upper(const Profile& p, double x, double y, double vx, double vy) {
    return {p.upper(x) - y, p.upper_slope(x) * vx - vy};
}

} // namespace detail

template <class Visitor>
EvolveStats evolve_visit(const Profile& profile, ParticleState state, double horizon,
                         Visitor&& visit) {
    EvolveStats stats;
    if (!(horizon > 0.0)) throw std::invalid_argument("evolve: horizon must be positive");
    const double flight_cap = 50.0 * std::max(1.0, profile.period());
    const double t_end = state.t + horizon;

    while (state.t < t_end) {
        const double remaining = t_end - state.t;
        const double s_max = std::min(remaining, flight_cap);
        auto hit = next_collision(profile, state, s_max);
        if (!hit) {
            if (s_max < remaining)
                throw std::runtime_error("evolve: no collision within conservative horizon (x=" +
                                         std::to_string(state.x) + ", y=" + std::to_string(state.y) +
                                         ", vx=" + std::to_string(state.vx) +
                                         ", vy=" + std::to_string(state.vy) + ")");
            visit(static_cast<const ParticleState&>(state), remaining,
                  static_cast<const CollisionEvent*>(nullptr));
            state.x += state.vx * remaining;
            state.y += state.vy * remaining;
            state.t = t_end;
            break;
        }
        visit(static_cast<const ParticleState&>(state), hit->time_of_flight, &*hit);
        stats.max_flight = std::max(stats.max_flight, hit->time_of_flight);
        ParticleState at_wall{hit->x, hit->y, state.vx, state.vy, state.t + hit->time_of_flight};
        state = reflect(profile, at_wall, hit->wall);
        ++stats.collisions;
        if (hit->grazing) ++stats.grazing_hits;
        if (stats.grazing_hits > kGrazingMarkThreshold) stats.marked = true;
    }
    return stats;
}

} // namespace cosguide
