#pragma once

// Scenes and independent oracles shared by the test executables.

#include "magbump/conefield.hpp"
#include "magbump/scattering.hpp"
#include "magbump/symbolic.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <random>
#include <vector>

namespace magbump::test {

/// Finite-difference step that stays well inside the section strip |u| < 1.
inline double fd_step(const SectionState& x)
{
    return std::clamp(0.01 * (1 - std::abs(x.u)), 1e-8, 1e-6);
}

/// Unit disks on an equilateral triangle of the given side, all with field b.
inline Scene equilateral(double b, double side = 10.0, double radius = 1.0)
{
    std::vector<Bump> bumps;
    for (int i = 0; i < 3; ++i) {
        const double a = pi / 2 + i * two_pi / 3;
        bumps.push_back(Bump::disk(unit_from_angle(a) * side / std::sqrt(3.0), radius, b));
    }
    return Scene(bumps);
}

/// Two unit disks symmetric about the y-axis.
inline Scene two_disks(double b, double half_distance = 3.0)
{
    return Scene({Bump::disk({-half_distance, 0}, 1, b), Bump::disk({half_distance, 0}, 1, b)});
}

inline double section_distance(const SectionState& a, const SectionState& b, const Scene& scene)
{
    if (a.bump != b.bump) return std::numeric_limits<double>::infinity();
    return std::max(std::abs(arclength_difference(a.s, b.s, scene.bump(a.bump).perimeter())), std::abs(a.u - b.u));
}

/// Scene with every field negated (time reversal of a magnetic flow needs b -> -b).
inline Scene reversed_fields(const Scene& scene)
{
    std::vector<Bump> bumps;
    for (const auto& b : scene.bumps()) bumps.push_back(b.with_field(-b.field()));
    return Scene(bumps);
}

// ---- ODE oracle --------------------------------------------------------------------------

/// Crossing found by direct integration of q' = v, v' = b(q) J v with a hard field jump.
struct OracleEvent {
    bool entry;
    std::size_t bump;
    double time;
    Vec2 q;
    Vec2 v;
};

/// Integrates the equations of motion with an adaptive Runge-Kutta-Fehlberg 7(8) stepper and
/// locates every boundary crossing by bisection on the crossing time. Uses only the implicit
/// level functions of the bumps, never the closed-form arcs.
inline std::vector<OracleEvent> ode_events(const Scene& scene, Vec2 q, Vec2 v, std::size_t max_events,
                                           double max_step = 0.01)
{
    using Y = std::array<double, 4>;
    namespace ode = boost::numeric::odeint;
    auto region_of = [&](const Y& y) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < scene.size(); ++i)
            if (scene.bump(i).level(Vec2(y[0], y[1])) < 0) return i;
        return std::nullopt;
    };
    auto advance = [&](Y y, double b, double dt) {
        auto rhs = [b](const Y& s, Y& ds, double) {
            ds[0] = s[2];
            ds[1] = s[3];
            ds[2] = -b * s[3];
            ds[3] = b * s[2];
        };
        auto stepper = ode::make_controlled(1e-15, 1e-15, ode::runge_kutta_fehlberg78<Y>());
        ode::integrate_adaptive(stepper, rhs, y, 0.0, dt, std::min(dt, 1e-3));
        return y;
    };

    std::vector<OracleEvent> events;
    Y y{q.x(), q.y(), v.x(), v.y()};
    std::optional<std::size_t> region = region_of(y);
    double t = 0;
    const double far = scene.radius() + 1;
    while (events.size() < max_events) {
        const Vec2 pos(y[0], y[1]);
        const Vec2 vel(y[2], y[3]);
        if (!region && pos.norm() > far && pos.dot(vel) > 0) break; // escaped
        const double b = region ? scene.bump(*region).field() : 0.0;
        const Y next = advance(y, b, max_step);
        if (region_of(next) == region) {
            y = next;
            t += max_step;
            continue;
        }
        double lo = 0;
        double hi = max_step;
        for (int k = 0; k < 80 && hi - lo > 1e-16; ++k) {
            const double mid = 0.5 * (lo + hi);
            if (region_of(advance(y, b, mid)) == region) lo = mid;
            else hi = mid;
        }
        const Y at = advance(y, b, hi);
        const std::optional<std::size_t> after = region_of(at);
        const std::size_t bump = after ? *after : *region;
        events.push_back(OracleEvent{after.has_value(), bump, t + hi, Vec2(at[0], at[1]), Vec2(at[2], at[3])});
        y = at;
        t += hi;
        region = after;
    }
    return events;
}

// ---- grid oracles -------------------------------------------------------------------------

/// Interior angle at y of the triangle x, y, z.
inline double angle_at(const Vec2& x, const Vec2& y, const Vec2& z)
{
    const Vec2 a = (x - y).normalized();
    const Vec2 c = (z - y).normalized();
    return std::acos(std::clamp(a.dot(c), -1.0, 1.0));
}

/// Minimum over boundary samples of the triple angle, by a coarse grid over all ordered triples
/// followed by repeated zooming around the best grid point.
inline double alpha_min_grid(const Scene& scene, int coarse = 48, int zoom_levels = 60)
{
    const std::size_t n = scene.size();
    auto point = [&](std::size_t i, double theta) { return scene.bump(i).point_at_parameter(theta); };
    double best = pi / 3;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l)
            for (std::size_t m = k + 1; m < n; ++m) {
                if (k == l || l == m) continue;
                std::array<double, 3> arg{};
                double local = std::numeric_limits<double>::infinity();
                for (int i = 0; i < coarse; ++i)
                    for (int j = 0; j < coarse; ++j)
                        for (int h = 0; h < coarse; ++h) {
                            const std::array<double, 3> th{two_pi * i / coarse, two_pi * j / coarse,
                                                           two_pi * h / coarse};
                            const double a = angle_at(point(k, th[0]), point(l, th[1]), point(m, th[2]));
                            if (a < local) {
                                local = a;
                                arg = th;
                            }
                        }
                double width = two_pi / coarse;
                for (int level = 0; level < zoom_levels; ++level) {
                    const std::array<double, 3> centre = arg;
                    for (int i = -4; i <= 4; ++i)
                        for (int j = -4; j <= 4; ++j)
                            for (int h = -4; h <= 4; ++h) {
                                const std::array<double, 3> th{centre[0] + width * i / 4, centre[1] + width * j / 4,
                                                               centre[2] + width * h / 4};
                                const double a = angle_at(point(k, th[0]), point(l, th[1]), point(m, th[2]));
                                if (a < local) {
                                    local = a;
                                    arg = th;
                                }
                            }
                    width *= 0.6;
                }
                best = std::min(best, local);
            }
    return best;
}

/// Distance between two bump boundaries by a dense double loop with zoom refinement.
inline double gap_grid(const Bump& p, const Bump& q, int coarse = 720, int zoom_levels = 60)
{
    double best = std::numeric_limits<double>::infinity();
    double ai = 0;
    double aj = 0;
    for (int i = 0; i < coarse; ++i)
        for (int j = 0; j < coarse; ++j) {
            const double d = (p.point_at_parameter(two_pi * i / coarse) - q.point_at_parameter(two_pi * j / coarse)).norm();
            if (d < best) {
                best = d;
                ai = two_pi * i / coarse;
                aj = two_pi * j / coarse;
            }
        }
    double width = two_pi / coarse;
    for (int level = 0; level < zoom_levels; ++level) {
        const double ci = ai;
        const double cj = aj;
        for (int i = -4; i <= 4; ++i)
            for (int j = -4; j <= 4; ++j) {
                const double ti = ci + width * i / 4;
                const double tj = cj + width * j / 4;
                const double d = (p.point_at_parameter(ti) - q.point_at_parameter(tj)).norm();
                if (d < best) {
                    best = d;
                    ai = ti;
                    aj = tj;
                }
            }
        width *= 0.6;
    }
    return best;
}

/// Positive root of 1/d = x (x - k) alpha / (x + k) by bisection on [k, k + 1/(d alpha) + 2k + 1].
inline double threshold_bisection(double d, double alpha, double k)
{
    auto f = [&](double x) { return x * (x - k) * alpha * d - (x + k); };
    double lo = k;
    double hi = k + 1 / (d * alpha) + 2 * k + 1;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// ---- random scenes -----------------------------------------------------------------------

/// Random scene of 2 to 4 disks and ellipses with pairwise gaps of at least `min_gap`.
inline Scene random_scene(std::mt19937_64& rng, double field_lo = 0.6, double field_hi = 5.0, double min_gap = 0.5)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = 2 + static_cast<int>(unit(rng) * 3);
    while (true) {
        std::vector<Bump> bumps;
        for (int i = 0; i < n; ++i) {
            const Vec2 c(-6 + 12 * unit(rng), -6 + 12 * unit(rng));
            double b = field_lo + (field_hi - field_lo) * unit(rng);
            if (unit(rng) < 0.5) b = -b;
            if (unit(rng) < 0.7) {
                bumps.push_back(Bump::disk(c, 0.6 + unit(rng), b));
            } else {
                const double a = 0.8 + unit(rng);
                bumps.push_back(Bump::ellipse(c, a, a * (0.5 + 0.45 * unit(rng)), two_pi * unit(rng), b));
            }
        }
        bool ok = true;
        for (int i = 0; i < n && ok; ++i)
            for (int j = i + 1; j < n && ok; ++j) {
                const double centre = (bumps[i].center() - bumps[j].center()).norm();
                if (centre < bumps[i].extent() + bumps[j].extent() + min_gap) ok = false;
            }
        if (ok) return Scene(bumps);
    }
}

} // namespace magbump::test
