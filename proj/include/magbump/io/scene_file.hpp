#pragma once

#include "magbump/geometry.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace magbump::io {

namespace detail {

inline std::string where(const std::string& source, const YAML::Mark& mark)
{
    return source + ":" + std::to_string(mark.line + 1);
}

[[noreturn]] inline void fail(const std::string& source, const YAML::Node& node, const std::string& field,
                              const std::string& message)
{
    throw Error(ErrorCode::ParseError, where(source, node.Mark()) + ": " + field + ": " + message);
}

inline double scalar(const std::string& source, const YAML::Node& node, const std::string& field)
{
    if (!node.IsScalar()) fail(source, node, field, "expected a number");
    try {
        return node.as<double>();
    } catch (const YAML::Exception&) {
        fail(source, node, field, "'" + node.Scalar() + "' is not a number");
    }
}

inline Vec2 pair(const std::string& source, const YAML::Node& node, const std::string& field)
{
    if (!node.IsSequence() || node.size() != 2) fail(source, node, field, "expected a list [x, y]");
    return {scalar(source, node[0], field), scalar(source, node[1], field)};
}

inline const YAML::Node required(const std::string& source, const YAML::Node& map, const std::string& key,
                                 const std::string& context)
{
    const YAML::Node n = map[key];
    if (!n) fail(source, map, context + "." + key, "missing");
    return n;
}

} // namespace detail

/// Parse a scene from YAML text:
///
///     bumps:
///       - {kind: disk, center: [0, 0], radius: 1, b: 2}
///       - {kind: ellipse, center: [5, 0], semi_axes: [2, 1], angle: 0.3, b: -4}
///
/// `source` names the input in diagnostics ("file:line: field: message").
inline Scene parse_scene(const std::string& text, const std::string& source = "<scene>")
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw Error(ErrorCode::ParseError, detail::where(source, e.mark) + ": " + e.msg);
    }
    if (!root.IsMap()) throw Error(ErrorCode::ParseError, source + ":1: expected a mapping with key 'bumps'");
    for (const auto& kv : root) {
        const std::string key = kv.first.as<std::string>();
        if (key != "bumps") detail::fail(source, kv.first, key, "unknown key");
    }
    const YAML::Node list = detail::required(source, root, "bumps", "scene");
    if (!list.IsSequence() && !list.IsNull()) detail::fail(source, list, "bumps", "expected a list");

    std::vector<Bump> bumps;
    std::size_t index = 0;
    for (const auto& node : list) {
        ++index;
        const std::string ctx = "bumps[" + std::to_string(index) + "]";
        if (!node.IsMap()) detail::fail(source, node, ctx, "expected a mapping");
        const YAML::Node kind_node = detail::required(source, node, "kind", ctx);
        const std::string kind = kind_node.as<std::string>();
        std::set<std::string> allowed{"kind", "center", "b"};
        if (kind == "disk") {
            allowed.insert("radius");
        } else if (kind == "ellipse") {
            allowed.insert({"semi_axes", "angle"});
        } else {
            detail::fail(source, kind_node, ctx + ".kind", "expected 'disk' or 'ellipse', got '" + kind + "'");
        }
        for (const auto& kv : node) {
            const std::string key = kv.first.as<std::string>();
            if (!allowed.count(key)) detail::fail(source, kv.first, ctx + "." + key, "unknown key for a " + kind);
        }
        const YAML::Node center_node = detail::required(source, node, "center", ctx);
        const Vec2 center = detail::pair(source, center_node, ctx + ".center");
        const YAML::Node b_node = detail::required(source, node, "b", ctx);
        const double field = detail::scalar(source, b_node, ctx + ".b");
        try {
            if (kind == "disk") {
                const YAML::Node r = detail::required(source, node, "radius", ctx);
                bumps.push_back(Bump::disk(center, detail::scalar(source, r, ctx + ".radius"), field));
            } else {
                const YAML::Node axes = detail::required(source, node, "semi_axes", ctx);
                const Vec2 ab = detail::pair(source, axes, ctx + ".semi_axes");
                const double angle = node["angle"] ? detail::scalar(source, node["angle"], ctx + ".angle") : 0.0;
                bumps.push_back(Bump::ellipse(center, ab.x(), ab.y(), angle, field));
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ParseError) throw;
            throw Error(e.code(), detail::where(source, node.Mark()) + ": " + ctx + ": " + e.what());
        }
    }
    try {
        return Scene(std::move(bumps));
    } catch (const Error& e) {
        throw Error(e.code(), source + ": " + e.what());
    }
}

inline Scene load_scene(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, path + ": cannot open scene file");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scene(text.str(), path);
}

/// YAML text for a scene, readable by parse_scene.
inline std::string format_scene(const Scene& scene)
{
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap << YAML::Key << "bumps" << YAML::Value << YAML::BeginSeq;
    for (const auto& b : scene.bumps()) {
        out << YAML::Flow << YAML::BeginMap;
        if (b.kind() == ShapeKind::Disk) {
            out << YAML::Key << "kind" << YAML::Value << "disk";
            out << YAML::Key << "center" << YAML::Value << YAML::Flow << YAML::BeginSeq << b.center().x()
                << b.center().y() << YAML::EndSeq;
            out << YAML::Key << "radius" << YAML::Value << b.semi_major();
        } else {
            out << YAML::Key << "kind" << YAML::Value << "ellipse";
            out << YAML::Key << "center" << YAML::Value << YAML::Flow << YAML::BeginSeq << b.center().x()
                << b.center().y() << YAML::EndSeq;
            out << YAML::Key << "semi_axes" << YAML::Value << YAML::Flow << YAML::BeginSeq << b.semi_major()
                << b.semi_minor() << YAML::EndSeq;
            out << YAML::Key << "angle" << YAML::Value << b.angle();
        }
        out << YAML::Key << "b" << YAML::Value << b.field();
        out << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

} // namespace magbump::io
