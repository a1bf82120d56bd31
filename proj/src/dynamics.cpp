#include "cosguide/dynamics.hpp"

#include <cmath>

#include "cosguide/rng.hpp"

namespace cosguide {

std::vector<ParticleState> sample_initial_conditions(const Profile& profile, std::size_t count,
                                                     std::uint64_t seed) {
    if (count == 0) throw std::invalid_argument("sample_initial_conditions: count must be >= 1");
    const double half = profile.period() / 2.0;
    // Bounding box for rejection sampling; cosine walls attain their global
    // extrema at the cell center and edges, so probing a coarse grid is safe
    // for any smooth profile at this resolution.
    double y_lo = std::numeric_limits<double>::infinity();
    double y_hi = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 256; ++i) {
        double x = -half + profile.period() * i / 256.0;
        y_lo = std::min(y_lo, profile.lower(x));
        y_hi = std::max(y_hi, profile.upper(x));
    }

    auto eng = make_engine(seed);
    std::uniform_real_distribution<double> ux(-half, half);
    std::uniform_real_distribution<double> uy(y_lo, y_hi);
    std::uniform_real_distribution<double> uphi(0.0, 2.0 * std::numbers::pi);

    std::vector<ParticleState> states;
    states.reserve(count);
    while (states.size() < count) {
        double x = ux(eng);
        double y = uy(eng);
        if (y <= profile.lower(x) || y >= profile.upper(x)) continue;
        double phi = uphi(eng);
        states.push_back({x, y, std::cos(phi), std::sin(phi), 0.0});
    }
    return states;
}

std::optional<CollisionEvent> next_collision(const Profile& profile, const ParticleState& state,
                                             double s_max) {
    using detail::WallGap;
    const double c2 = profile.max_curvature() * state.vx * state.vx;
    const double f_stop = 5e-14;
    const int max_steps = 20000;

    double s = 0.0;
    double x = state.x;
    double y = state.y;
    for (int step = 0; step < max_steps; ++step) {
        WallGap lo = detail::gap_lower(profile, x, y, state.vx, state.vy);
        WallGap up = detail::gap_upper(profile, x, y, state.vx, state.vy);

        if (s > 0.0) {
            // Converged onto a wall, or (rare grazing overshoot) slightly past it.
            if (lo.f < f_stop || up.f < f_stop) {
                Wall wall = (lo.f <= up.f) ? Wall::Lower : Wall::Upper;
                double xi = x;
                double yi = (wall == Wall::Lower) ? profile.lower(xi) : profile.upper(xi);
                const WallGap& g = (wall == Wall::Lower) ? lo : up;
                return CollisionEvent{s, wall, xi, yi, std::abs(g.fp) < kGrazingTol};
            }
        }

        double d_lo = detail::safe_advance(lo.f, lo.fp, c2);
        double d_up = detail::safe_advance(up.f, up.fp, c2);
        double d = std::min(d_lo, d_up);
        if (!(d > 0.0)) {
            // Sitting on a wall while moving inward: caller violated the
            // precondition (reflect() prevents this); treat as immediate hit.
            Wall wall = (lo.f <= up.f) ? Wall::Lower : Wall::Upper;
            return CollisionEvent{s, wall, x, (wall == Wall::Lower) ? profile.lower(x) : profile.upper(x),
                                  true};
        }
        // Certified collision-free until s + d.
        if (s + d > s_max) return std::nullopt;
        // Near-root steps contract like a guarded Newton iteration; the
        // floor keeps tangential approaches from stalling below f_stop scale.
        d = std::max(d, 1e-13);
        s += d;
        if (s > s_max) return std::nullopt;
        x = state.x + state.vx * s;
        y = state.y + state.vy * s;
    }
    throw std::runtime_error("next_collision: marching failed to converge (x=" +
                             std::to_string(state.x) + ", y=" + std::to_string(state.y) + ", vx=" +
                             std::to_string(state.vx) + ", vy=" + std::to_string(state.vy) + ")");
}

ParticleState reflect(const Profile& profile, const ParticleState& state_at_wall, Wall wall) {
    Vec2 n = wall_normal(profile, wall, state_at_wall.x);
    Vec2 v{state_at_wall.vx, state_at_wall.vy};
    double vn = dot(v, n);
    Vec2 out{v.x - 2.0 * vn * n.x, v.y - 2.0 * vn * n.y};
    if (dot(out, n) < 1e-12) {
        // Grazing: nudge along the inward normal so the next flight leaves
        // the wall; the perturbation is far below any reported statistic.
        out.x += 1e-10 * n.x;
        out.y += 1e-10 * n.y;
    }
    double inv = 1.0 / norm(out);
    return {state_at_wall.x, state_at_wall.y, out.x * inv, out.y * inv, state_at_wall.t};
}

Trajectory evolve(const Profile& profile, const ParticleState& state, double horizon) {
    Trajectory traj;
    traj.initial = state;
    ParticleState cur = state;
    traj.stats = evolve_visit(
        profile, state, horizon,
        [&](const ParticleState& start, double dt, const CollisionEvent* hit) {
            cur = start;
            cur.x += cur.vx * dt;
            cur.y += cur.vy * dt;
            cur.t += dt;
            if (hit) {
                ParticleState at_wall{hit->x, hit->y, start.vx, start.vy, start.t + dt};
                ParticleState out = reflect(profile, at_wall, hit->wall);
                traj.events.push_back({out.t, out.x, out.y, out.vx, out.vy, hit->wall});
            }
        });
    traj.final_state = cur;
    traj.final_state.t = state.t + horizon;
    return traj;
}

} // namespace cosguide
