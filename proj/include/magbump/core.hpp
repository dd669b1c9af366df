#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace magbump {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// The quarter turn J = [[0,-1],[1,0]].
inline Vec2 quarter_turn(const Vec2& v) { return {-v.y(), v.x()}; }

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline Vec2 unit_from_angle(double phi) { return {std::cos(phi), std::sin(phi)}; }

inline double angle_of(const Vec2& v) { return std::atan2(v.y(), v.x()); }

inline Vec2 rotate(const Vec2& v, double angle)
{
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

/// Wrap to (-pi, pi].
inline double wrap_angle(double a)
{
    a = std::remainder(a, two_pi);
    if (a <= -pi) a += two_pi;
    return a;
}

/// Wrap to [0, 2pi).
inline double wrap_positive(double a)
{
    a = std::fmod(a, two_pi);
    if (a < 0) a += two_pi;
    return a;
}

enum class ErrorCode {
    InvalidBump,
    OverlappingBumps,
    SingleBump,
    CollinearBumps,
    DomainError,
    ZeroField,
    InteriorTrapped,
    NotInDomain,
    GlancingNearby,
    IndeterminateRegime,
    NotStrong,
    GridTooCoarse,
    ZeroVector,
    Escaped,
    NoEvents,
    NoConvergence,
    NotVeryStrong,
    ExcludedDirection,
    NotFound,
    InadmissibleWord,
    ParseError,
};

inline const char* to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidBump: return "InvalidBump";
    case ErrorCode::OverlappingBumps: return "OverlappingBumps";
    case ErrorCode::SingleBump: return "SingleBump";
    case ErrorCode::CollinearBumps: return "CollinearBumps";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::ZeroField: return "ZeroField";
    case ErrorCode::InteriorTrapped: return "InteriorTrapped";
    case ErrorCode::NotInDomain: return "NotInDomain";
    case ErrorCode::GlancingNearby: return "GlancingNearby";
    case ErrorCode::IndeterminateRegime: return "IndeterminateRegime";
    case ErrorCode::NotStrong: return "NotStrong";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::Escaped: return "Escaped";
    case ErrorCode::NoEvents: return "NoEvents";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotVeryStrong: return "NotVeryStrong";
    case ErrorCode::ExcludedDirection: return "ExcludedDirection";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::InadmissibleWord: return "InadmissibleWord";
    case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Numerical thresholds shared across modules. Defaults are the documented ones.
struct Tolerances {
    /// Normalized ray/boundary discriminant below which a crossing counts as tangent.
    double glancing_discriminant = 1e-10;
    /// Residual to which boundary roots are polished.
    double root_residual = 1e-13;
    /// |<v, N>| below which differentiation is refused.
    double glancing_cutoff = 1e-6;
    /// Triple-point infimum angle below which bumps count as collinear.
    double collinear_angle = 1e-9;
    /// Sup-norm residual for orbit finding.
    double newton_residual = 1e-10;
    /// Distance under which two orbit solutions count as identical.
    double uniqueness = 1e-8;
    int newton_max_iterations = 100;
};

} // namespace magbump
