#pragma once

#include "magbump/flow.hpp"

#include <array>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace magbump::io {

namespace detail {

inline std::string num(double x, int digits = 12)
{
    if (x == 0) x = 0; // no "-0"
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

inline std::string fixed(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    std::string s = buf;
    if (s == "-0.000000") s = "0.000000";
    return s;
}

} // namespace detail

struct CsvOptions {
    /// Arclength between samples along each piece (unit speed, so also time).
    double resolution = 0.05;
    /// Length of the outgoing ray drawn after an escape; 0 omits it.
    double tail = 0;
};

/// Trajectory samples with columns piece_index, type, t_start, t_end, x, y, vx, vy, bump.
/// Each piece contributes its start, interior samples, and its end point. Bump is 1-based, empty
/// for straight pieces.
inline std::string trajectory_csv(const Orbit& orbit, const CsvOptions& opt = {})
{
    if (!(opt.resolution > 0)) throw Error(ErrorCode::DomainError, "csv resolution must be positive");
    std::ostringstream out;
    out << "piece_index,type,t_start,t_end,x,y,vx,vy,bump\n";
    auto row = [&](std::size_t index, const char* type, double t0, double t1, const State& s,
                   std::optional<std::size_t> bump) {
        out << index << ',' << type << ',' << detail::num(t0) << ',' << detail::num(t1) << ','
            << detail::num(s.q.x()) << ',' << detail::num(s.q.y()) << ',' << detail::num(s.v.x()) << ','
            << detail::num(s.v.y()) << ',';
        if (bump) out << *bump + 1;
        out << '\n';
    };
    auto sample = [&](std::size_t index, const char* type, double t0, double length, auto&& at,
                      std::optional<std::size_t> bump) {
        const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(length / opt.resolution)));
        for (std::size_t k = 0; k <= steps; ++k) row(index, type, t0, t0 + length, at(length * k / steps), bump);
    };

    std::size_t index = 0;
    for (const auto& piece : orbit.pieces) {
        if (const auto* seg = std::get_if<LineSegment>(&piece)) {
            sample(index, "line", seg->t_start, seg->length,
                   [&](double t) { return advance_free(State{seg->from, seg->direction, std::nullopt}, t); },
                   std::nullopt);
        } else {
            const auto& arc = std::get<Arc>(piece);
            sample(index, "arc", arc.t_start, arc.duration, [&](double t) { return arc.at(t); }, arc.bump);
        }
        ++index;
    }
    if (orbit.termination == Termination::Escaped && opt.tail > 0) {
        const State end{orbit.final_state.q, orbit.final_state.v, std::nullopt};
        sample(index, "ray", orbit.final_time, opt.tail, [&](double t) { return advance_free(end, t); },
               std::nullopt);
    }
    return out.str();
}

struct SvgOptions {
    /// Pixels per unit length.
    double scale = 40;
    /// Margin around the drawing, in scene units.
    double margin = 1;
    /// Length of outgoing rays after escapes.
    double tail = 0;
    /// Explicit view box (xmin, ymin, xmax, ymax); computed from the content when absent.
    std::optional<std::array<double, 4>> view;
    double stroke_width = 0.02;
};

/// An SVG of the bumps (filled, shade by field sign) and orbits (true circular arcs).
/// Output depends only on the inputs.
inline std::string render_svg(const Scene& scene, const std::vector<Orbit>& orbits, const SvgOptions& opt = {},
                              const std::vector<Vec2>& markers = {})
{
    using detail::fixed;
    double xmin = std::numeric_limits<double>::infinity();
    double ymin = xmin;
    double xmax = -xmin;
    double ymax = -xmin;
    auto grow = [&](const Vec2& p, double r = 0) {
        xmin = std::min(xmin, p.x() - r);
        ymin = std::min(ymin, p.y() - r);
        xmax = std::max(xmax, p.x() + r);
        ymax = std::max(ymax, p.y() + r);
    };
    for (const auto& b : scene.bumps()) grow(b.center(), b.extent());
    for (const auto& o : orbits) {
        grow(o.initial.q);
        for (const auto& piece : o.pieces) {
            if (const auto* seg = std::get_if<LineSegment>(&piece)) {
                grow(seg->from);
                grow(seg->to());
            } else {
                const auto& arc = std::get<Arc>(piece);
                grow(arc.center, arc.radius());
            }
        }
        if (o.termination == Termination::Escaped && opt.tail > 0)
            grow(o.final_state.q + opt.tail * o.final_state.v);
    }
    if (!std::isfinite(xmin)) xmin = ymin = -1, xmax = ymax = 1;
    if (opt.view) {
        xmin = (*opt.view)[0];
        ymin = (*opt.view)[1];
        xmax = (*opt.view)[2];
        ymax = (*opt.view)[3];
    } else {
        xmin -= opt.margin;
        ymin -= opt.margin;
        xmax += opt.margin;
        ymax += opt.margin;
    }
    const double w = xmax - xmin;
    const double h = ymax - ymin;

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(w * opt.scale) << "\" height=\""
        << fixed(h * opt.scale) << "\" viewBox=\"" << fixed(xmin) << ' ' << fixed(-ymax) << ' ' << fixed(w) << ' '
        << fixed(h) << "\">\n";
    out << "<rect x=\"" << fixed(xmin) << "\" y=\"" << fixed(-ymax) << "\" width=\"" << fixed(w) << "\" height=\""
        << fixed(h) << "\" fill=\"white\"/>\n";
    out << "<g transform=\"scale(1,-1)\">\n";
    for (const auto& b : scene.bumps()) {
        const char* fill = b.field() > 0 ? "#f4c7a1" : b.field() < 0 ? "#a9c8ec" : "#dddddd";
        if (b.kind() == ShapeKind::Disk) {
            out << "<circle cx=\"" << fixed(b.center().x()) << "\" cy=\"" << fixed(b.center().y()) << "\" r=\""
                << fixed(b.semi_major()) << "\" fill=\"" << fill << "\" stroke=\"#555555\" stroke-width=\""
                << fixed(opt.stroke_width) << "\"/>\n";
        } else {
            out << "<ellipse cx=\"" << fixed(b.center().x()) << "\" cy=\"" << fixed(b.center().y()) << "\" rx=\""
                << fixed(b.semi_major()) << "\" ry=\"" << fixed(b.semi_minor()) << "\" transform=\"rotate("
                << fixed(b.angle() * 180 / pi) << ' ' << fixed(b.center().x()) << ' ' << fixed(b.center().y())
                << ")\" fill=\"" << fill << "\" stroke=\"#555555\" stroke-width=\"" << fixed(opt.stroke_width)
                << "\"/>\n";
        }
    }
    for (const auto& o : orbits) {
        out << "<path fill=\"none\" stroke=\"#202020\" stroke-width=\"" << fixed(opt.stroke_width) << "\" d=\"M "
            << fixed(o.initial.q.x()) << ' ' << fixed(o.initial.q.y());
        for (const auto& piece : o.pieces) {
            if (const auto* seg = std::get_if<LineSegment>(&piece)) {
                out << " L " << fixed(seg->to().x()) << ' ' << fixed(seg->to().y());
                continue;
            }
            const auto& arc = std::get<Arc>(piece);
            // chunks below a half turn keep the large-arc flag at 0
            const int chunks = std::max(1, static_cast<int>(std::ceil(std::abs(arc.angle) / (pi / 2))));
            const double r = arc.radius();
            for (int k = 1; k <= chunks; ++k) {
                const Vec2 p = arc.at(arc.duration * k / chunks).q;
                out << " A " << fixed(r) << ' ' << fixed(r) << " 0 0 " << (arc.b > 0 ? 1 : 0) << ' ' << fixed(p.x())
                    << ' ' << fixed(p.y());
            }
        }
        if (o.termination == Termination::Escaped && opt.tail > 0) {
            const Vec2 end = o.final_state.q + opt.tail * o.final_state.v;
            out << " L " << fixed(end.x()) << ' ' << fixed(end.y());
        }
        out << "\"/>\n";
    }
    for (const auto& m : markers)
        out << "<circle cx=\"" << fixed(m.x()) << "\" cy=\"" << fixed(m.y()) << "\" r=\""
            << fixed(2.5 * opt.stroke_width) << "\" fill=\"#c0392b\"/>\n";
    out << "</g>\n</svg>\n";
    return out.str();
}

} // namespace magbump::io
