#pragma once

#include "magbump/section.hpp"

#include <vector>

namespace magbump {

/// Transverse Jacobi data in the moving frame (v, Jv).
struct TransverseJacobi {
    double J = 0;
    double Jdot = 0;

    Vec2 vec() const { return {J, Jdot}; }
};

using TransferMatrix = Mat2;

/// Free flight over length d.
inline TransferMatrix free_transfer(double d)
{
    TransferMatrix m;
    m << 1, d, 0, 1;
    return m;
}

/// Motion for time T in field b.
inline TransferMatrix arc_transfer(double b, double T)
{
    const double c = std::cos(b * T);
    const double s = std::sin(b * T);
    TransferMatrix m;
    m << c, s / b, -b * s, c;
    return m;
}

/// Correction for crossing a field jump from `b_before` to `b_after` at a boundary with
/// normal `n` (either orientation). Position data J is continuous; Jdot jumps by
/// -(b_before - b_after) <n, Jv>/<n, v> J.
inline TransferMatrix crossing_transfer(double b_before, double b_after, const Vec2& n, const Vec2& v)
{
    const double sigma = n.dot(quarter_turn(v)) / n.dot(v);
    TransferMatrix m;
    m << 1, 0, -(b_before - b_after) * sigma, 1;
    return m;
}

/// Chart of the inward section at a boundary point, (ds, du) -> (J, Jdot) of the outside flow.
/// `w` is <v, N> (negative on H-) and `kappa` the boundary curvature there.
inline Mat2 section_to_jacobi(double kappa, double w)
{
    Mat2 m;
    m << w, 0, kappa, 1.0 / w;
    return m;
}

inline Mat2 section_chart(const State& boundary_state, const Bump& bump)
{
    const double w = boundary_state.v.dot(bump.normal_at(boundary_state.q));
    return section_to_jacobi(bump.curvature_at(boundary_state.q), w);
}

/// Interior map: outside Jacobi data at the entry to outside Jacobi data at the exit.
inline TransferMatrix interior_transfer(const State& entry, const ArcPassage& passage, const Bump& bump)
{
    const double b = bump.field();
    const Mat2 enter = crossing_transfer(0.0, b, bump.normal_at(entry.q), entry.v);
    const Mat2 leave = crossing_transfer(b, 0.0, bump.normal_at(passage.exit.q), passage.exit.v);
    return leave * arc_transfer(b, passage.duration) * enter;
}

struct PoincareDerivative {
    PoincareStep step;
    /// Derivative in section coordinates (s, u).
    Mat2 section;
    /// Derivative in Jacobi coordinates (J, Jdot).
    Mat2 jacobi;
    /// Interior factor in Jacobi coordinates.
    Mat2 interior;
};

namespace detail {

inline void require_transversal(const State& s, const Bump& bump, const Tolerances& tol, const char* where)
{
    if (std::abs(s.v.dot(bump.normal_at(s.q))) < tol.glancing_cutoff)
        throw Error(ErrorCode::GlancingNearby, std::string("near-tangent crossing at ") + where);
}

} // namespace detail

/// Analytic derivative of the bump-to-bump map, assembled from the crossing, arc and free
/// factors.
inline PoincareDerivative linearize_poincare(const SectionState& x, const Scene& scene,
                                             std::optional<std::size_t> target = std::nullopt,
                                             const Tolerances& tol = {})
{
    PoincareDerivative out;
    try {
        out.step = poincare_step(x, scene, target, tol);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Escaped) throw Error(ErrorCode::NotInDomain, e.what());
        throw;
    }
    const PoincareStep& st = out.step;
    const Bump& from = scene.bump(st.from.bump);
    const Bump& to = scene.bump(st.target);
    detail::require_transversal(st.entry, from, tol, "entry");
    detail::require_transversal(st.interior.exit, from, tol, "exit");
    detail::require_transversal(st.arrival, to, tol, "arrival");

    out.interior = interior_transfer(st.entry, st.interior, from);
    out.jacobi = free_transfer(st.free_length) * out.interior;
    const Mat2 chart_from = section_chart(st.entry, from);
    const Mat2 chart_to = section_chart(st.arrival, to);
    out.section = chart_to.inverse() * out.jacobi * chart_from;
    return out;
}

/// Central-difference Jacobian of the exact map in section coordinates, with one Richardson
/// extrapolation step (eps and eps/2).
inline Mat2 fd_oracle(const SectionState& x, const Scene& scene, double eps,
                      std::optional<std::size_t> target = std::nullopt, const Tolerances& tol = {})
{
    if (!(eps >= 1e-8 && eps <= 1e-3)) throw Error(ErrorCode::DomainError, "fd_oracle eps must lie in [1e-8, 1e-3]");
    std::size_t arrival_bump = 0;
    bool have_target = false;
    auto image = [&](const SectionState& p) {
        PoincareStep st;
        try {
            st = poincare_step(p, scene, target, tol);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Escaped) throw Error(ErrorCode::NotInDomain, e.what());
            throw;
        }
        if (have_target && st.target != arrival_bump)
            throw Error(ErrorCode::NotInDomain, "finite-difference stencil straddles two target bumps");
        arrival_bump = st.target;
        have_target = true;
        return st.to;
    };
    image(x);
    const double perimeter = scene.bump(arrival_bump).perimeter();

    auto central = [&](double h) {
        Mat2 d;
        for (int j = 0; j < 2; ++j) {
            SectionState plus = x;
            SectionState minus = x;
            if (j == 0) {
                plus.s += h;
                minus.s -= h;
            } else {
                plus.u += h;
                minus.u -= h;
            }
            const SectionState yp = image(plus);
            const SectionState ym = image(minus);
            d(0, j) = arclength_difference(yp.s, ym.s, perimeter) / (2 * h);
            d(1, j) = (yp.u - ym.u) / (2 * h);
        }
        return d;
    };
    const Mat2 coarse = central(eps);
    const Mat2 fine = central(eps / 2);
    return (4.0 * fine - coarse) / 3.0;
}

// ---- focusing --------------------------------------------------------------------------

/// An entry into a single bump: boundary arclength and inward angle relative to -N
/// (angle in (-pi/2, pi/2), positive towards the tangent T).
struct EntrySpec {
    double s;
    double angle;
};

inline State entry_state(const Bump& bump, const EntrySpec& e)
{
    const Vec2 n = bump.normal(e.s);
    const Vec2 t = bump.tangent(e.s);
    State st;
    st.q = bump.point(e.s);
    st.v = -std::cos(e.angle) * n + std::sin(e.angle) * t;
    return st;
}

struct FocusingSample {
    EntrySpec entry;
    TransverseJacobi out; ///< image of the parallel field (1, 0)
    double margin;        ///< max(J, Jdot); negative means focused
};

struct FocusingReport {
    std::vector<FocusingSample> samples;
    double worst_margin = -std::numeric_limits<double>::infinity();
    bool all_focused = true;
};

/// Propagate the parallel incoming field (J, Jdot) = (1, 0) through the interior map for
/// each entry and check that both outgoing components are negative.
inline FocusingReport focusing_check(const Bump& bump, const std::vector<EntrySpec>& entries,
                                     const Tolerances& tol = {})
{
    if (classify_field(bump) != FieldRegime::Strong)
        throw Error(ErrorCode::NotStrong, "focusing_check needs a strong-field bump");
    FocusingReport report;
    for (const auto& e : entries) {
        const State entry = entry_state(bump, e);
        detail::require_transversal(entry, bump, tol, "entry");
        const ArcPassage p = arc_exit(entry, bump, tol);
        detail::require_transversal(p.exit, bump, tol, "exit");
        const Vec2 out = interior_transfer(entry, p, bump) * Vec2(1, 0);
        FocusingSample sample{e, {out.x(), out.y()}, std::max(out.x(), out.y())};
        report.worst_margin = std::max(report.worst_margin, sample.margin);
        if (!(sample.margin < 0)) report.all_focused = false;
        report.samples.push_back(sample);
    }
    return report;
}

/// Point where the Jacobi field started as (1, 0) at the entry first vanishes inside the
/// bump (the caustic point of a parallel beam).
inline Vec2 focal_point(const Bump& bump, const State& entry)
{
    const double b = bump.field();
    const Vec2 start = crossing_transfer(0.0, b, bump.normal_at(entry.q), entry.v) * Vec2(1, 0);
    // J(theta) = J0 cos(theta) + Jdot0 sin(theta) / |b| with theta = |b| t
    const double ab = std::abs(b);
    const double t1 = wrap_positive(std::atan2(-start.x() * ab, start.y()));
    const double t2 = wrap_positive(std::atan2(start.x() * ab, -start.y()));
    double theta = std::min(t1 > 0 ? t1 : two_pi, t2 > 0 ? t2 : two_pi);
    return advance_in_field(entry, b, theta / ab).q;
}

} // namespace magbump
