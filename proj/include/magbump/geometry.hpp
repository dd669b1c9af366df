#pragma once

#include "magbump/core.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

namespace magbump {

enum class ShapeKind { Disk, Ellipse };

/// Angular interval of directions under which a convex set is seen from an outside point.
struct VisualInterval {
    double center; ///< direction angle of the bisector
    double half_width;
};

/// Roots of |p + t w| = 1 for a ray against a bump boundary (times in ray units).
struct RayRoots {
    double discriminant; ///< 1 - (perpendicular distance in the unit frame)^2
    double t_enter;
    double t_leave;
};

namespace detail {

/// Minimize a 1-periodic-in-[0, 2pi) function by grid seeding plus Brent refinement.
/// Returns (argmin, min).
template <class F>
std::pair<double, double> minimize_periodic(F&& f, int grid, int keep = 4)
{
    std::vector<double> values(static_cast<std::size_t>(grid));
    const double h = two_pi / grid;
    for (int i = 0; i < grid; ++i) values[static_cast<std::size_t>(i)] = f(i * h);

    // local minima of the sampled sequence, best first
    std::vector<int> candidates;
    for (int i = 0; i < grid; ++i) {
        const double prev = values[static_cast<std::size_t>((i + grid - 1) % grid)];
        const double next = values[static_cast<std::size_t>((i + 1) % grid)];
        const double here = values[static_cast<std::size_t>(i)];
        if (here <= prev && here <= next) candidates.push_back(i);
    }
    std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
        return values[static_cast<std::size_t>(a)] < values[static_cast<std::size_t>(b)];
    });
    if (static_cast<int>(candidates.size()) > keep) candidates.resize(static_cast<std::size_t>(keep));

    std::pair<double, double> best{0.0, std::numeric_limits<double>::infinity()};
    for (int i : candidates) {
        std::uintmax_t iters = 200;
        auto r = boost::math::tools::brent_find_minima(f, (i - 1) * h, (i + 1) * h,
                                                       std::numeric_limits<double>::digits / 2, iters);
        if (values[static_cast<std::size_t>(i)] < r.second) r = {i * h, values[static_cast<std::size_t>(i)]};
        if (r.second < best.second) best = r;
    }
    best.first = wrap_positive(best.first);
    return best;
}

} // namespace detail

/// A convex bump carrying a constant field. Disks are stored as circular ellipses;
/// all boundary queries go through the boundary arclength s measured counter-clockwise
/// from the end of the major axis.
class Bump {
public:
    static Bump disk(const Vec2& center, double radius, double field)
    {
        if (!(radius > 0) || !std::isfinite(radius))
            throw Error(ErrorCode::InvalidBump, "disk radius must be positive");
        return Bump(ShapeKind::Disk, center, radius, radius, 0.0, field);
    }

    static Bump ellipse(const Vec2& center, double semi_major, double semi_minor, double angle, double field)
    {
        if (!(semi_minor > 0) || !(semi_major >= semi_minor) || !std::isfinite(semi_major))
            throw Error(ErrorCode::InvalidBump, "ellipse semi-axes must satisfy a >= b > 0");
        return Bump(ShapeKind::Ellipse, center, semi_major, semi_minor, angle, field);
    }

    ShapeKind kind() const { return kind_; }
    const Vec2& center() const { return center_; }
    double semi_major() const { return a_; }
    double semi_minor() const { return b_; }
    double angle() const { return angle_; }
    /// Field strength b (nonzero).
    double field() const { return field_; }
    double larmor_radius() const { return 1.0 / std::abs(field_); }
    double perimeter() const { return perimeter_; }
    /// Maximal distance from the center to the boundary.
    double extent() const { return a_; }

    Bump with_field(double field) const
    {
        Bump copy = *this;
        if (field == 0 || !std::isfinite(field)) throw Error(ErrorCode::ZeroField, "bump field must be nonzero");
        copy.field_ = field;
        return copy;
    }

    Bump moved(const Vec2& center) const
    {
        Bump copy = *this;
        copy.center_ = center;
        return copy;
    }

    // ---- boundary parametrization -------------------------------------------------

    /// Ellipse parameter theta of arclength s.
    double parameter_at(double s) const
    {
        s = std::fmod(s, perimeter_);
        if (s < 0) s += perimeter_;
        if (kind_ == ShapeKind::Disk) return s / a_;
        double theta = two_pi * s / perimeter_;
        for (int i = 0; i < 50; ++i) {
            const double step = (arclength_of_parameter(theta) - s) / speed(theta);
            theta -= step;
            if (std::abs(step) < 1e-15) break;
        }
        return theta;
    }

    /// Arclength of ellipse parameter theta in [0, 2pi).
    double arclength_of_parameter(double theta) const
    {
        if (kind_ == ShapeKind::Disk) return a_ * theta;
        const double quarter = perimeter_ / 4.0;
        const double k = std::floor(theta / (pi / 2));
        const auto integrand = [this](double t) { return speed(t); };
        // every quarter of the ellipse has the same length
        const double partial = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            integrand, k * (pi / 2), theta, 8, 1e-15);
        return k * quarter + partial;
    }

    Vec2 point_at_parameter(double theta) const
    {
        return center_ + rotate(Vec2(a_ * std::cos(theta), b_ * std::sin(theta)), angle_);
    }

    Vec2 point(double s) const { return point_at_parameter(parameter_at(s)); }

    /// Unit tangent, counter-clockwise orientation.
    Vec2 tangent(double s) const
    {
        const double t = parameter_at(s);
        return rotate(Vec2(-a_ * std::sin(t), b_ * std::cos(t)), angle_).normalized();
    }

    /// Unit outward normal N = -J T.
    Vec2 normal(double s) const
    {
        const Vec2 t = tangent(s);
        return {t.y(), -t.x()};
    }

    double curvature(double s) const { return curvature_at_parameter(parameter_at(s)); }

    double curvature_at_parameter(double theta) const
    {
        const double sp = speed(theta);
        return a_ * b_ / (sp * sp * sp);
    }

    /// Arclength of a point (assumed on or near the boundary).
    double arclength_at(const Vec2& q) const { return arclength_of_parameter(parameter_of(q)); }

    /// Ellipse parameter of the radial projection of q.
    double parameter_of(const Vec2& q) const
    {
        const Vec2 p = to_local(q);
        return wrap_positive(std::atan2(p.y() / b_, p.x() / a_));
    }

    /// Outward normal at a boundary point.
    Vec2 normal_at(const Vec2& q) const
    {
        const Vec2 p = to_local(q);
        return rotate(Vec2(p.x() / (a_ * a_), p.y() / (b_ * b_)).normalized(), angle_);
    }

    double curvature_at(const Vec2& q) const { return curvature_at_parameter(parameter_of(q)); }

    // ---- implicit description ----------------------------------------------------

    /// Level function: negative inside, zero on the boundary.
    double level(const Vec2& q) const
    {
        const Vec2 p = to_local(q);
        return (p.x() / a_) * (p.x() / a_) + (p.y() / b_) * (p.y() / b_) - 1.0;
    }

    Vec2 level_gradient(const Vec2& q) const
    {
        const Vec2 p = to_local(q);
        return rotate(Vec2(2 * p.x() / (a_ * a_), 2 * p.y() / (b_ * b_)), angle_);
    }

    bool contains(const Vec2& q) const { return level(q) < 0; }

    /// Project onto the boundary (orthogonal for disks, radial in the unit frame otherwise).
    Vec2 snap(const Vec2& q) const
    {
        if (kind_ == ShapeKind::Disk) {
            const Vec2 d = q - center_;
            const double n = d.norm();
            return n > 0 ? Vec2(center_ + d * (a_ / n)) : Vec2(center_ + Vec2(a_, 0));
        }
        return point_at_parameter(parameter_of(q));
    }

    /// Unsigned distance from q to the boundary curve.
    double boundary_distance(const Vec2& q) const
    {
        if (kind_ == ShapeKind::Disk) return std::abs((q - center_).norm() - a_);
        auto f = [&](double t) { return (point_at_parameter(t) - q).squaredNorm(); };
        return std::sqrt(detail::minimize_periodic(f, 64, 2).second);
    }

    /// Support function h(d) = max_{x in C} <x, d> for a unit direction d.
    double support(const Vec2& d) const
    {
        const Vec2 e1 = unit_from_angle(angle_);
        const Vec2 e2 = quarter_turn(e1);
        const double p1 = a_ * d.dot(e1);
        const double p2 = b_ * d.dot(e2);
        return center_.dot(d) + std::sqrt(p1 * p1 + p2 * p2);
    }

    /// Intersection times of the ray q + t v with the boundary.
    RayRoots ray_roots(const Vec2& q, const Vec2& v) const
    {
        const Vec2 p = to_unit_frame(q);
        const Vec2 w = local_scale(to_local_direction(v));
        const double wn = w.norm();
        const Vec2 wh = w / wn;
        const double along = p.dot(wh);
        const double perp = cross(p, wh);
        const double disc = 1.0 - perp * perp;
        const double root = disc > 0 ? std::sqrt(disc) : 0.0;
        return {disc, (-along - root) / wn, (-along + root) / wn};
    }

    /// Directions under which the bump is seen from an outside point.
    VisualInterval visual_interval(const Vec2& from) const
    {
        const Vec2 y = to_unit_frame(from);
        const double dist = y.norm();
        const double beta = angle_of(y);
        const double spread = std::acos(std::min(1.0, 1.0 / dist));
        const Vec2 x1 = from_unit_frame(unit_from_angle(beta + spread)) - from;
        const Vec2 x2 = from_unit_frame(unit_from_angle(beta - spread)) - from;
        const Vec2 u1 = x1.normalized();
        const Vec2 u2 = x2.normalized();
        const double half = 0.5 * std::abs(std::atan2(cross(u1, u2), u1.dot(u2)));
        return {angle_of(u1 + u2), half};
    }

    /// Exact (min, max) boundary curvature.
    std::pair<double, double> curvature_range() const
    {
        if (kind_ == ShapeKind::Disk) return {1.0 / a_, 1.0 / a_};
        return {b_ / (a_ * a_), a_ / (b_ * b_)};
    }

    Vec2 to_local(const Vec2& q) const { return rotate(q - center_, -angle_); }
    Vec2 to_local_direction(const Vec2& v) const { return rotate(v, -angle_); }
    Vec2 local_scale(const Vec2& p) const { return {p.x() / a_, p.y() / b_}; }
    Vec2 to_unit_frame(const Vec2& q) const { return local_scale(to_local(q)); }
    Vec2 from_unit_frame(const Vec2& p) const { return center_ + rotate(Vec2(p.x() * a_, p.y() * b_), angle_); }

private:
    Bump(ShapeKind kind, const Vec2& center, double a, double b, double angle, double field)
        : kind_(kind), center_(center), a_(a), b_(b), angle_(angle), field_(field)
    {
        if (field == 0 || !std::isfinite(field)) throw Error(ErrorCode::ZeroField, "bump field must be nonzero");
        if (!center.allFinite()) throw Error(ErrorCode::InvalidBump, "bump center must be finite");
        if (kind == ShapeKind::Disk) {
            perimeter_ = two_pi * a;
        } else {
            const auto integrand = [this](double t) { return speed(t); };
            perimeter_ = 4.0 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                                   integrand, 0.0, pi / 2, 10, 1e-15);
        }
    }

    /// |dp/dtheta|
    double speed(double theta) const
    {
        const double sa = a_ * std::sin(theta);
        const double cb = b_ * std::cos(theta);
        return std::sqrt(sa * sa + cb * cb);
    }

    ShapeKind kind_;
    Vec2 center_;
    double a_;
    double b_;
    double angle_;
    double field_;
    double perimeter_ = 0;
};

/// Minimal distance between the two convex sets (negative never returned; overlap throws).
inline double bump_distance(const Bump& p, const Bump& q)
{
    if (p.kind() == ShapeKind::Disk && q.kind() == ShapeKind::Disk) {
        const double d = (p.center() - q.center()).norm() - p.semi_major() - q.semi_major();
        if (!(d > 0)) throw Error(ErrorCode::OverlappingBumps, "disks intersect or touch");
        return d;
    }
    if (p.contains(q.center()) || q.contains(p.center()))
        throw Error(ErrorCode::OverlappingBumps, "one bump contains the other's center");
    auto f = [&](double t) {
        const Vec2 x = p.point_at_parameter(t);
        if (q.contains(x)) return -q.boundary_distance(x);
        return q.boundary_distance(x);
    };
    const double d = detail::minimize_periodic(f, 128, 3).second;
    if (!(d > 0)) throw Error(ErrorCode::OverlappingBumps, "bump boundaries intersect");
    return d;
}

/// The scene: an ordered list of pairwise disjoint bumps (alphabet 1..n in user-facing output).
class Scene {
public:
    Scene() = default;

    explicit Scene(std::vector<Bump> bumps) : bumps_(std::move(bumps))
    {
        const std::size_t n = bumps_.size();
        distances_.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double d;
                try {
                    d = bump_distance(bumps_[i], bumps_[j]);
                } catch (const Error& e) {
                    std::ostringstream msg;
                    msg << "bumps " << i + 1 << " and " << j + 1 << ": " << e.what();
                    throw Error(ErrorCode::OverlappingBumps, msg.str());
                }
                distances_[i * n + j] = distances_[j * n + i] = d;
            }
        }
    }

    std::size_t size() const { return bumps_.size(); }
    const Bump& bump(std::size_t i) const { return bumps_.at(i); }
    const std::vector<Bump>& bumps() const { return bumps_; }

    double distance(std::size_t i, std::size_t j) const { return distances_.at(i * bumps_.size() + j); }

    /// d_l: distance from bump l to the nearest other bump.
    double gap(std::size_t l) const
    {
        if (bumps_.size() < 2) throw Error(ErrorCode::SingleBump, "gap needs at least two bumps");
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < bumps_.size(); ++m)
            if (m != l) best = std::min(best, distance(l, m));
        return best;
    }

    /// Radius of a disk about the origin containing every bump.
    double radius() const
    {
        double r = 0;
        for (const auto& b : bumps_) r = std::max(r, b.center().norm() + b.extent());
        return r;
    }

private:
    std::vector<Bump> bumps_;
    std::vector<double> distances_;
};

inline std::pair<double, double> curvature_range(const Bump& bump) { return bump.curvature_range(); }

inline double pairwise_gap(const Scene& scene, std::size_t l) { return scene.gap(l); }

// ---- field regimes -------------------------------------------------------------------

enum class FieldRegime { Weak, Strong, Neither };

inline const char* to_string(FieldRegime r)
{
    switch (r) {
    case FieldRegime::Weak: return "weak";
    case FieldRegime::Strong: return "strong";
    case FieldRegime::Neither: return "neither";
    }
    return "?";
}

inline FieldRegime classify_field(const Bump& bump)
{
    const auto [kmin, kmax] = bump.curvature_range();
    const double b = std::abs(bump.field());
    if (b < kmin) return FieldRegime::Weak;
    if (b > kmax) return FieldRegime::Strong;
    return FieldRegime::Neither;
}

/// Minimal interior angle at the middle bump over all point triples of three distinct bumps,
/// or pi/3 for two bumps. Throws CollinearBumps when some line meets three bumps.
///
/// For a fixed middle point y the inner minimum over x and z is the angular gap between the
/// visual intervals of the two outer bumps, so only y is optimized (on the boundary, where the
/// minimum is attained).
inline double alpha_min(const Scene& scene, const Tolerances& tol = {})
{
    const std::size_t n = scene.size();
    if (n < 2) throw Error(ErrorCode::SingleBump, "alpha_min needs at least two bumps");
    if (n == 2) return pi / 3;

    double best = pi / 3;
    for (std::size_t l = 0; l < n; ++l) {
        const Bump& middle = scene.bump(l);
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t m = k + 1; m < n; ++m) {
                if (k == l || m == l) continue;
                const Bump& bk = scene.bump(k);
                const Bump& bm = scene.bump(m);
                auto gap_angle = [&](double theta) {
                    const Vec2 y = middle.point_at_parameter(theta);
                    const auto ik = bk.visual_interval(y);
                    const auto im = bm.visual_interval(y);
                    const double sep = std::abs(wrap_angle(ik.center - im.center));
                    return std::max(0.0, sep - ik.half_width - im.half_width);
                };
                const double value = detail::minimize_periodic(gap_angle, 512, 4).second;
                if (value < tol.collinear_angle) {
                    std::ostringstream msg;
                    msg << "a line meets bumps " << k + 1 << ", " << l + 1 << " and " << m + 1;
                    throw Error(ErrorCode::CollinearBumps, msg.str());
                }
                best = std::min(best, value);
            }
        }
    }
    return best;
}

inline bool check_no_three_on_line(const Scene& scene, const Tolerances& tol = {})
{
    if (scene.size() < 3) return true;
    try {
        alpha_min(scene, tol);
        return true;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::CollinearBumps) return false;
        throw;
    }
}

/// Positive root x of 1/d = x (x - kappa) alpha / (x + kappa).
inline double very_strong_threshold(double d, double alpha, double kappa_max)
{
    if (!(d > 0) || !(alpha > 0) || !(kappa_max > 0))
        throw Error(ErrorCode::DomainError, "very_strong_threshold needs positive d, alpha, kappa");
    const double c = 1.0 / (d * alpha);
    return 0.5 * (c + kappa_max + std::sqrt(c * c + 6 * c * kappa_max + kappa_max * kappa_max));
}

struct SceneRegime {
    std::vector<FieldRegime> bumps;
    bool single_bump = false;
    bool very_strong = false;
    double alpha_min = 0; ///< 0 when undefined (single bump)
    std::vector<double> gaps;
    /// 1/(d alpha) + 2 kappa_max per bump
    std::vector<double> very_strong_bounds;

    bool all_strong() const
    {
        return !bumps.empty() && std::all_of(bumps.begin(), bumps.end(),
                                             [](FieldRegime r) { return r == FieldRegime::Strong; });
    }
};

inline SceneRegime classify_scene(const Scene& scene, const Tolerances& tol = {})
{
    SceneRegime out;
    for (const auto& b : scene.bumps()) out.bumps.push_back(classify_field(b));
    if (scene.size() < 2) {
        out.single_bump = true;
        return out;
    }
    out.alpha_min = alpha_min(scene, tol);
    out.very_strong = true;
    for (std::size_t l = 0; l < scene.size(); ++l) {
        const double d = scene.gap(l);
        const double bound = 1.0 / (d * out.alpha_min) + 2.0 * scene.bump(l).curvature_range().second;
        out.gaps.push_back(d);
        out.very_strong_bounds.push_back(bound);
        if (!(std::abs(scene.bump(l).field()) > bound)) out.very_strong = false;
    }
    return out;
}

} // namespace magbump
