#pragma once

#include "magbump/geometry.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <optional>
#include <variant>
#include <vector>

namespace magbump {

/// Continuation of trajectories tangent to a bump boundary.
enum class GlancingPolicy {
    Straight, ///< extend the incoming ray as a straight line
    Larmor,   ///< insert the full Larmor circle when it fits inside the bump
};

/// Unit-speed phase point. `inside` names the bump containing q, if any.
struct State {
    Vec2 q{0, 0};
    Vec2 v{1, 0};
    std::optional<std::size_t> inside;
};

/// Larmor center q + J v / b.
inline Vec2 larmor_center(const Vec2& q, const Vec2& v, double b)
{
    if (b == 0) throw Error(ErrorCode::ZeroField, "larmor_center needs b != 0");
    return q + quarter_turn(v) / b;
}

/// Closed-form motion in a constant field b for time t.
inline State advance_in_field(const State& s, double b, double t)
{
    const double bt = b * t;
    const double sn = std::sin(bt);
    const double half = std::sin(0.5 * bt);
    const double one_minus_cos = 2.0 * half * half;
    const Vec2& v = s.v;
    State out = s;
    out.q = s.q + Vec2(sn * v.x() - one_minus_cos * v.y(), one_minus_cos * v.x() + sn * v.y()) / b;
    out.v = Vec2(std::cos(bt) * v.x() - sn * v.y(), sn * v.x() + std::cos(bt) * v.y());
    return out;
}

inline State advance_free(const State& s, double t)
{
    State out = s;
    out.q = s.q + t * s.v;
    return out;
}

/// First boundary met by the forward ray of an outside state.
struct Encounter {
    std::size_t bump;
    double time;
    Vec2 point;
    bool glancing;
};

namespace detail {
inline constexpr double event_time_floor = 1e-11;
}

/// Classify the ray against one bump; nullopt when it is not met ahead.
inline std::optional<Encounter> ray_encounter(const Bump& bump, std::size_t index, const Vec2& q, const Vec2& v,
                                              const Tolerances& tol = {})
{
    const RayRoots r = bump.ray_roots(q, v);
    if (r.discriminant < -tol.glancing_discriminant) return std::nullopt;
    if (r.discriminant <= tol.glancing_discriminant) {
        const double t = 0.5 * (r.t_enter + r.t_leave);
        if (t <= detail::event_time_floor) return std::nullopt;
        return Encounter{index, t, bump.snap(q + t * v), true};
    }
    if (r.t_leave <= detail::event_time_floor || r.t_enter < -detail::event_time_floor) return std::nullopt;
    const double t = std::max(r.t_enter, 0.0);
    return Encounter{index, t, bump.snap(q + t * v), false};
}

/// Earliest encounter of the straight ray with any bump (glancing ones included, flagged).
inline std::optional<Encounter> next_entry(const State& s, const Scene& scene, const Tolerances& tol = {})
{
    std::optional<Encounter> best;
    for (std::size_t i = 0; i < scene.size(); ++i) {
        auto e = ray_encounter(scene.bump(i), i, s.q, s.v, tol);
        if (e && (!best || e->time < best->time)) best = e;
    }
    return best;
}

/// Interior passage through one bump.
struct ArcPassage {
    State exit;
    double duration;
    double angle; ///< signed turning angle b * duration
    Vec2 center;
};

/// True iff the Larmor circle never meets the boundary (strictly).
inline bool interior_trapped(const State& s, const Bump& bump)
{
    const Vec2 m = larmor_center(s.q, s.v, bump.field());
    return bump.contains(m) && bump.boundary_distance(m) > bump.larmor_radius();
}

namespace detail {

/// Rotation angle in the sense of b from point a to point p about center m, in [0, 2pi).
inline double sweep_angle(const Vec2& m, const Vec2& a, const Vec2& p, double b)
{
    const Vec2 ra = a - m;
    const Vec2 rp = p - m;
    const double signed_angle = std::atan2(cross(ra, rp), ra.dot(rp));
    return wrap_positive(b > 0 ? signed_angle : -signed_angle);
}

inline ArcPassage finish_passage(const State& start, const Bump& bump, double sweep, const Vec2& m,
                                 const std::optional<Vec2>& exact_exit)
{
    const double b = bump.field();
    ArcPassage out;
    out.duration = sweep / std::abs(b);
    out.angle = b > 0 ? sweep : -sweep;
    out.center = m;
    out.exit = advance_in_field(start, b, out.duration);
    out.exit.q = bump.snap(exact_exit ? *exact_exit : out.exit.q);
    out.exit.inside.reset();
    return out;
}

/// Larmor circle exit from a disk, closed form.
inline ArcPassage disk_passage(const State& start, const Bump& bump, bool on_boundary)
{
    const double b = bump.field();
    const Vec2 m = larmor_center(start.q, start.v, b);
    const Vec2 c = bump.center();
    const double r = bump.semi_major();
    const double rho = bump.larmor_radius();
    const Vec2 axis = m - c;
    const double dist = axis.norm();
    if (dist == 0) throw Error(ErrorCode::DomainError, "Larmor circle concentric with the disk");
    const Vec2 u = axis / dist;

    if (on_boundary) {
        // the exit is the mirror image of the entry in the line of centers
        const Vec2 rel = start.q - c;
        const Vec2 exit = c + 2.0 * rel.dot(u) * u - rel;
        return finish_passage(start, bump, sweep_angle(m, start.q, exit, b), m, exit);
    }
    if (dist + rho < r) throw Error(ErrorCode::InteriorTrapped, "Larmor circle lies inside the bump");
    // circle-circle intersection
    const double along = (dist * dist + r * r - rho * rho) / (2 * dist);
    const double h = std::sqrt(std::max(0.0, r * r - along * along));
    const Vec2 base = c + along * u;
    const Vec2 p1 = base + h * quarter_turn(u);
    const Vec2 p2 = base - h * quarter_turn(u);
    const double a1 = sweep_angle(m, start.q, p1, b);
    const double a2 = sweep_angle(m, start.q, p2, b);
    return a1 < a2 ? finish_passage(start, bump, a1, m, p1) : finish_passage(start, bump, a2, m, p2);
}

/// First return of the Larmor circle to a general (elliptic) boundary.
inline ArcPassage general_passage(const State& start, const Bump& bump, bool on_boundary, const Tolerances& tol)
{
    const double b = bump.field();
    const Vec2 m = larmor_center(start.q, start.v, b);
    const double period = two_pi / std::abs(b);
    const auto level_at = [&](double t) { return bump.level(advance_in_field(start, b, t).q); };
    // On the boundary the level vanishes at t = 0 and again at t = period; divide both out so
    // that the sampled function changes sign even when the arc leaves only briefly.
    const double slope0 = bump.level_gradient(start.q).dot(start.v);
    const auto g = [&](double t) {
        if (!on_boundary) return level_at(t);
        if (t <= 0) return slope0 / period;
        if (t >= period) return -slope0 / period;
        return level_at(t) / (t * (period - t));
    };

    constexpr int samples = 1024;
    const double h = period / samples;
    double lo = 0;
    double glo = g(0);
    if (glo >= 0 && !on_boundary) throw Error(ErrorCode::DomainError, "start point is not inside the bump");
    if (glo >= 0) throw Error(ErrorCode::GlancingNearby, "entry velocity does not point inward");
    for (int i = 1; i <= samples; ++i) {
        const double t = i * h;
        const double gt = g(t);
        if (gt >= 0) {
            std::uintmax_t iters = 100;
            auto bracket = boost::math::tools::toms748_solve(
                g, lo, t, glo, gt, [](double x, double y) { return std::abs(x - y) < 1e-15 * (1 + x); }, iters);
            double root = 0.5 * (bracket.first + bracket.second);
            // Newton polish on the level itself
            for (int k = 0; k < 4; ++k) {
                const State st = advance_in_field(start, b, root);
                const double f = bump.level(st.q);
                if (std::abs(f) < tol.root_residual) break;
                const double df = bump.level_gradient(st.q).dot(st.v);
                if (df == 0) break;
                root -= f / df;
            }
            return finish_passage(start, bump, std::abs(b) * root, m, std::nullopt);
        }
        lo = t;
        glo = gt;
    }
    throw Error(ErrorCode::InteriorTrapped, "Larmor circle lies inside the bump");
}

} // namespace detail

/// Exit of the Larmor arc starting at `start` (an entry point on the boundary with inward
/// velocity, or an interior point).
inline ArcPassage arc_exit(const State& start, const Bump& bump, const Tolerances& tol = {})
{
    const bool on_boundary = std::abs(bump.level(start.q)) < 1e-9;
    if (on_boundary && bump.normal_at(start.q).dot(start.v) >= 0)
        throw Error(ErrorCode::DomainError, "arc_exit needs an inward velocity at the boundary");
    if (!on_boundary && interior_trapped(start, bump))
        throw Error(ErrorCode::InteriorTrapped, "Larmor circle lies inside the bump");
    if (bump.kind() == ShapeKind::Disk) return detail::disk_passage(start, bump, on_boundary);
    return detail::general_passage(start, bump, on_boundary, tol);
}

// ---- orbits -----------------------------------------------------------------------------

struct LineSegment {
    Vec2 from;
    Vec2 direction;
    double t_start;
    double length;

    Vec2 to() const { return from + length * direction; }
};

struct Arc {
    std::size_t bump;
    Vec2 center;
    Vec2 from;
    Vec2 v_from;
    double b;
    double t_start;
    double duration;
    double angle; ///< signed, b * duration

    double radius() const { return 1.0 / std::abs(b); }
    State at(double t) const { return advance_in_field(State{from, v_from, bump}, b, t); }
};

using Piece = std::variant<LineSegment, Arc>;

enum class EventKind { Entry, Exit, Glancing };

struct Event {
    EventKind kind;
    std::size_t bump;
    double time;
    State state;
};

enum class Termination { Escaped, EventLimit, TimeLimit, InteriorTrapped };

inline const char* to_string(Termination t)
{
    switch (t) {
    case Termination::Escaped: return "escaped";
    case Termination::EventLimit: return "event-limit";
    case Termination::TimeLimit: return "time-limit";
    case Termination::InteriorTrapped: return "interior-trapped";
    }
    return "?";
}

struct Orbit {
    State initial;
    std::vector<Piece> pieces;
    std::vector<Event> events;
    /// State at the end: the outgoing ray when escaped.
    State final_state;
    double final_time = 0;
    Termination termination = Termination::Escaped;
    bool glancing_encountered = false;

    /// Bump indices in visiting order.
    std::vector<std::size_t> itinerary() const
    {
        std::vector<std::size_t> out;
        for (const auto& e : events)
            if (e.kind == EventKind::Entry) out.push_back(e.bump);
        return out;
    }
};

struct Limits {
    std::size_t max_events = 10000;
    double max_time = std::numeric_limits<double>::infinity();
};

namespace detail {

inline bool larmor_circle_fits(const State& tangent_state, const Bump& bump)
{
    if (classify_field(bump) != FieldRegime::Strong) return false;
    const Vec2 m = larmor_center(tangent_state.q, tangent_state.v, bump.field());
    return bump.contains(m);
}

} // namespace detail

/// Event-driven propagation: straight segments outside, exact Larmor arcs inside.
inline Orbit propagate(const State& initial, const Scene& scene, const Limits& limits = {},
                       GlancingPolicy policy = GlancingPolicy::Straight, const Tolerances& tol = {})
{
    Orbit orbit;
    orbit.initial = initial;
    State state = initial;
    double t = 0;

    auto hit_limit = [&] {
        if (orbit.events.size() >= limits.max_events) {
            orbit.termination = Termination::EventLimit;
            return true;
        }
        return false;
    };

    // Runs one interior passage; false when the orbit ends inside.
    auto traverse = [&](std::size_t index) {
        const Bump& bump = scene.bump(index);
        const double b = bump.field();
        if (std::abs(bump.level(state.q)) >= 1e-9) {
            if (interior_trapped(state, bump)) {
                const double period = two_pi / std::abs(b);
                const double duration = std::min(period, limits.max_time - t);
                orbit.pieces.push_back(Arc{index, larmor_center(state.q, state.v, b), state.q, state.v, b, t,
                                           duration, b * duration});
                state = advance_in_field(state, b, duration);
                t += duration;
                orbit.termination = Termination::InteriorTrapped;
                return false;
            }
        }
        const ArcPassage p = arc_exit(state, bump, tol);
        if (t + p.duration > limits.max_time) {
            const double d = limits.max_time - t;
            orbit.pieces.push_back(Arc{index, p.center, state.q, state.v, b, t, d, b * d});
            state = advance_in_field(state, b, d);
            t = limits.max_time;
            orbit.termination = Termination::TimeLimit;
            return false;
        }
        orbit.pieces.push_back(Arc{index, p.center, state.q, state.v, b, t, p.duration, p.angle});
        t += p.duration;
        state = p.exit;
        orbit.events.push_back(Event{EventKind::Exit, index, t, state});
        return !hit_limit();
    };

    bool running = true;
    if (state.inside) running = traverse(*state.inside);

    while (running) {
        const auto enc = next_entry(state, scene, tol);
        if (!enc) {
            orbit.termination = Termination::Escaped;
            break;
        }
        if (t + enc->time > limits.max_time) {
            const double d = limits.max_time - t;
            orbit.pieces.push_back(LineSegment{state.q, state.v, t, d});
            state = advance_free(state, d);
            t = limits.max_time;
            orbit.termination = Termination::TimeLimit;
            break;
        }
        if (enc->time > 0) orbit.pieces.push_back(LineSegment{state.q, state.v, t, enc->time});
        t += enc->time;
        state.q = enc->point;
        const Bump& bump = scene.bump(enc->bump);

        if (enc->glancing) {
            orbit.glancing_encountered = true;
            orbit.events.push_back(Event{EventKind::Glancing, enc->bump, t, state});
            if (policy == GlancingPolicy::Larmor && detail::larmor_circle_fits(state, bump)) {
                const double b = bump.field();
                const double period = two_pi / std::abs(b);
                orbit.pieces.push_back(Arc{enc->bump, larmor_center(state.q, state.v, b), state.q, state.v, b, t,
                                           period, b > 0 ? two_pi : -two_pi});
                t += period;
            }
            if (hit_limit()) break;
            continue;
        }

        state.inside = enc->bump;
        orbit.events.push_back(Event{EventKind::Entry, enc->bump, t, state});
        if (hit_limit()) break;
        running = traverse(enc->bump);
    }

    orbit.final_state = state;
    orbit.final_time = t;
    return orbit;
}

} // namespace magbump
