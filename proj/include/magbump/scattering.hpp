#pragma once

#include "magbump/flow.hpp"

#include <algorithm>
#include <vector>

namespace magbump {

/// Oriented line in the plane: direction angle phi and angular momentum L = <Jq, v> = q x v.
struct OrientedLine {
    double phi = 0;
    double L = 0;
};

/// Incoming state on the line, a distance `standoff` upstream of its closest point to the origin.
inline State line_to_state(const OrientedLine& line, double standoff)
{
    const Vec2 e = unit_from_angle(line.phi);
    return State{-standoff * e - line.L * quarter_turn(e), e, std::nullopt};
}

inline OrientedLine state_to_line(const State& s) { return {angle_of(s.v), cross(s.q, s.v)}; }

/// Range of L over the lines of direction phi that meet the bump.
inline std::pair<double, double> line_support(const Bump& bump, double phi)
{
    const Vec2 n = quarter_turn(unit_from_angle(phi));
    return {-bump.support(n), bump.support(-n)};
}

inline double total_curvature(const Orbit& orbit)
{
    double sum = 0;
    for (const auto& piece : orbit.pieces)
        if (const auto* arc = std::get_if<Arc>(&piece)) sum += arc->angle;
    return sum;
}

struct ScatteringResult {
    OrientedLine out;
    Orbit orbit;
};

/// Orbit of the incoming line through a single bump and its outgoing line.
inline ScatteringResult scatter(const Bump& bump, const OrientedLine& line,
                                GlancingPolicy policy = GlancingPolicy::Straight, const Tolerances& tol = {})
{
    if (classify_field(bump) == FieldRegime::Neither)
        throw Error(ErrorCode::IndeterminateRegime, "scattering map undefined for fields neither weak nor strong");
    const Scene scene({bump});
    const double standoff = bump.center().norm() + bump.extent() + std::abs(line.L) + 1.0;
    ScatteringResult r;
    r.orbit = propagate(line_to_state(line, standoff), scene, Limits{}, policy, tol);
    r.out = state_to_line(r.orbit.final_state);
    if (r.orbit.events.empty()) r.out = line; // free flight: bitwise identity
    return r;
}

inline OrientedLine scattering_map(const Bump& bump, const OrientedLine& line,
                                   GlancingPolicy policy = GlancingPolicy::Straight, const Tolerances& tol = {})
{
    return scatter(bump, line, policy, tol).out;
}

struct DegreeGrid {
    int points = 1024;
    GlancingPolicy policy = GlancingPolicy::Straight;
};

struct DegreeSample {
    double L;
    OrientedLine out;
    double total_curvature;
};

struct DegreeResult {
    int degree = 0;
    double winding = 0; ///< accumulated increments / 2pi
    double max_increment = 0;
    std::vector<DegreeSample> samples;
};

/// Winding number of L -> outgoing direction over the compactified L-line, for incoming
/// direction phi. The grid is L = L_mid + w tan(u), u uniform in (-pi/2, pi/2), with the two
/// glancing values and one-sided neighbours inserted.
inline DegreeResult scattering_degree(const Bump& bump, double phi, const DegreeGrid& grid = {},
                                      const Tolerances& tol = {})
{
    if (classify_field(bump) == FieldRegime::Neither)
        throw Error(ErrorCode::IndeterminateRegime, "degree undefined for fields neither weak nor strong");
    if (grid.points < 8) throw Error(ErrorCode::GridTooCoarse, "degree grid needs at least 8 points");

    const auto [lo, hi] = line_support(bump, phi);
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    std::vector<double> ls;
    ls.reserve(static_cast<std::size_t>(grid.points) + 6);
    for (int i = 0; i < grid.points; ++i) {
        const double u = -pi / 2 + (i + 0.5) * pi / grid.points;
        ls.push_back(mid + half * std::tan(u));
    }
    const double nudge = 1e-9 * half;
    for (double g : {lo, hi}) {
        ls.push_back(g - nudge);
        ls.push_back(g);
        ls.push_back(g + nudge);
    }
    std::sort(ls.begin(), ls.end());

    DegreeResult result;
    double previous = phi; // compactification point: S is the identity there
    double accumulated = 0;
    auto step_to = [&](double next) {
        const double inc = wrap_angle(next - previous);
        result.max_increment = std::max(result.max_increment, std::abs(inc));
        accumulated += inc;
        previous = next;
    };
    for (double L : ls) {
        const ScatteringResult r = scatter(bump, OrientedLine{phi, L}, grid.policy, tol);
        result.samples.push_back(DegreeSample{L, r.out, total_curvature(r.orbit)});
        step_to(r.out.phi);
    }
    step_to(phi);

    if (result.max_increment > pi / 2)
        throw Error(ErrorCode::GridTooCoarse, "direction increment exceeds pi/2; refine the L-grid");
    result.winding = accumulated / two_pi;
    result.degree = static_cast<int>(std::lround(result.winding));
    return result;
}

} // namespace magbump
