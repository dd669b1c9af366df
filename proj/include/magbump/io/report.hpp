#pragma once

#include "magbump/section.hpp"

#include <json.hpp>

#include <string>

namespace magbump::io {

using nlohmann::json;

/// Apply a "NAME=VALUE" override to a tolerance set. Values must be positive.
inline void apply_tolerance(Tolerances& tol, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw Error(ErrorCode::ParseError, "tolerance override '" + assignment + "' is not NAME=VALUE");
    const std::string name = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    double value = 0;
    try {
        std::size_t used = 0;
        value = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
    } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "tolerance " + name + ": '" + text + "' is not a number");
    }
    if (!(value > 0) || !std::isfinite(value))
        throw Error(ErrorCode::ParseError, "tolerance " + name + " must be positive");

    if (name == "glancing_discriminant") tol.glancing_discriminant = value;
    else if (name == "root_residual") tol.root_residual = value;
    else if (name == "glancing_cutoff") tol.glancing_cutoff = value;
    else if (name == "collinear_angle") tol.collinear_angle = value;
    else if (name == "newton_residual") tol.newton_residual = value;
    else if (name == "uniqueness") tol.uniqueness = value;
    else if (name == "newton_max_iterations") {
        if (value != std::floor(value)) throw Error(ErrorCode::ParseError, "newton_max_iterations must be an integer");
        tol.newton_max_iterations = static_cast<int>(value);
    } else {
        throw Error(ErrorCode::ParseError, "unknown tolerance '" + name + "'");
    }
}

inline json to_json(const Tolerances& tol)
{
    return json{{"glancing_discriminant", tol.glancing_discriminant},
                {"root_residual", tol.root_residual},
                {"glancing_cutoff", tol.glancing_cutoff},
                {"collinear_angle", tol.collinear_angle},
                {"newton_residual", tol.newton_residual},
                {"uniqueness", tol.uniqueness},
                {"newton_max_iterations", tol.newton_max_iterations}};
}

inline json to_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

inline json to_json(const Mat2& m)
{
    return json::array({json::array({m(0, 0), m(0, 1)}), json::array({m(1, 0), m(1, 1)})});
}

inline json to_json(const SectionState& x)
{
    return json{{"bump", x.bump + 1}, {"s", x.s}, {"u", x.u}, {"side", x.side == Side::Inward ? "in" : "out"}};
}

inline json to_json(const Bump& b)
{
    json j{{"kind", b.kind() == ShapeKind::Disk ? "disk" : "ellipse"}, {"center", to_json(b.center())}, {"b", b.field()}};
    if (b.kind() == ShapeKind::Disk) {
        j["radius"] = b.semi_major();
    } else {
        j["semi_axes"] = json::array({b.semi_major(), b.semi_minor()});
        j["angle"] = b.angle();
    }
    return j;
}

/// JSON numbers cannot be infinite or NaN; those are written as null.
inline json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

} // namespace magbump::io
