#pragma once

#include "magbump/flow.hpp"

namespace magbump {

enum class Side { Inward, Outward };

/// Point of a Poincaré section H-/H+ over a bump boundary: arclength s and tangential
/// velocity component u = <v, T(s)>.
struct SectionState {
    std::size_t bump = 0;
    double s = 0;
    double u = 0;
    Side side = Side::Inward;
};

inline State to_state(const SectionState& x, const Scene& scene)
{
    if (!(std::abs(x.u) < 1)) throw Error(ErrorCode::DomainError, "section state needs |u| < 1");
    const Bump& bump = scene.bump(x.bump);
    const Vec2 t = bump.tangent(x.s);
    const Vec2 n = bump.normal(x.s);
    const double w = std::sqrt((1 - x.u) * (1 + x.u));
    State out;
    out.q = bump.point(x.s);
    out.v = x.u * t + (x.side == Side::Inward ? -w : w) * n;
    if (x.side == Side::Inward) out.inside = x.bump;
    return out;
}

/// Section coordinates of a boundary state.
inline SectionState to_section(const State& state, std::size_t bump_index, const Scene& scene)
{
    const Bump& bump = scene.bump(bump_index);
    SectionState x;
    x.bump = bump_index;
    x.s = bump.arclength_at(state.q);
    x.u = state.v.dot(bump.tangent(x.s));
    x.side = state.v.dot(bump.normal(x.s)) < 0 ? Side::Inward : Side::Outward;
    return x;
}

/// Signed arclength difference a - b on a boundary of the given perimeter, in (-P/2, P/2].
inline double arclength_difference(double a, double b, double perimeter)
{
    double d = std::remainder(a - b, perimeter);
    if (d <= -perimeter / 2) d += perimeter;
    return d;
}

/// Everything produced by one application of the bump-to-bump map P = P_ext o P_int.
struct PoincareStep {
    SectionState from;
    State entry;
    ArcPassage interior;
    std::size_t target = 0;
    double free_length = 0;
    State arrival;
    SectionState to;
};

/// One application of P from an inward section state. With `target` set, the free flight is
/// continued to that bump regardless of other bumps in the way (used by orbit shooting).
inline PoincareStep poincare_step(const SectionState& x, const Scene& scene,
                                  std::optional<std::size_t> target = std::nullopt, const Tolerances& tol = {})
{
    if (x.side != Side::Inward) throw Error(ErrorCode::DomainError, "poincare_step starts on H-");
    PoincareStep step;
    step.from = x;
    step.entry = to_state(x, scene);
    step.interior = arc_exit(step.entry, scene.bump(x.bump), tol);

    const State& exit = step.interior.exit;
    std::optional<Encounter> enc;
    if (target) {
        if (*target == x.bump) throw Error(ErrorCode::NotInDomain, "target bump equals departure bump");
        enc = ray_encounter(scene.bump(*target), *target, exit.q, exit.v, tol);
    } else {
        enc = next_entry(exit, scene, tol);
    }
    if (!enc) throw Error(ErrorCode::Escaped, "orbit leaves without meeting another bump");
    if (enc->glancing) throw Error(ErrorCode::GlancingNearby, "orbit grazes the next bump");

    step.target = enc->bump;
    step.free_length = enc->time;
    step.arrival = State{enc->point, exit.v, enc->bump};
    step.to = to_section(step.arrival, enc->bump, scene);
    return step;
}

} // namespace magbump
