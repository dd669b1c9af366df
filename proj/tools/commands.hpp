#pragma once

#include "magbump/conefield.hpp"
#include "magbump/io/export.hpp"
#include "magbump/io/report.hpp"
#include "magbump/io/scene_file.hpp"
#include "magbump/symbolic.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

namespace magbump::cli {

using io::json;

struct RunConfig {
    std::string scene_path;
    std::string out_dir = ".";
    std::set<std::string> formats;
    Tolerances tol;
    std::size_t samples = 1000;
    std::uint64_t seed = 1;
    unsigned parallel = 1;
    GlancingPolicy glancing = GlancingPolicy::Straight;
    std::ostream* log = &std::cout;

    bool wants(const std::string& format) const { return formats.count(format) > 0; }
};

/// Exit codes.
inline constexpr int exit_pass = 0;
inline constexpr int exit_fail = 1;
inline constexpr int exit_usage = 2;

/// Errors that stem from the configuration rather than from a check outcome.
inline bool is_config_error(ErrorCode code)
{
    switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::InvalidBump:
    case ErrorCode::OverlappingBumps:
    case ErrorCode::DomainError:
    case ErrorCode::InadmissibleWord:
    case ErrorCode::SingleBump:
    case ErrorCode::NotStrong:
    case ErrorCode::NotVeryStrong:
    case ErrorCode::IndeterminateRegime:
    case ErrorCode::ExcludedDirection:
        return true;
    default:
        return false;
    }
}

namespace detail {

inline json header(const std::string& command, const RunConfig& cfg)
{
    return json{{"command", command},
                {"scene", cfg.scene_path},
                {"tolerances", io::to_json(cfg.tol)},
                {"glancing", cfg.glancing == GlancingPolicy::Straight ? "straight" : "larmor"},
                {"samples", cfg.samples},
                {"seed", cfg.seed},
                {"parallel", cfg.parallel}};
}

inline void write_file(const RunConfig& cfg, const std::string& name, const std::string& content)
{
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    const auto path = std::filesystem::path(cfg.out_dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path.string());
    out << content;
    if (!out) throw Error(ErrorCode::ParseError, "failed writing " + path.string());
}

inline void write_json(const RunConfig& cfg, const std::string& name, const json& report)
{
    if (cfg.wants("json")) write_file(cfg, name, report.dump(2) + "\n");
}

inline Scene load(const RunConfig& cfg)
{
    if (cfg.scene_path.empty()) throw Error(ErrorCode::ParseError, "--scene is required");
    return io::load_scene(cfg.scene_path);
}

inline json orbit_summary(const Orbit& o)
{
    json events = json::array();
    for (const auto& e : o.events) {
        const char* kind = e.kind == EventKind::Entry ? "entry" : e.kind == EventKind::Exit ? "exit" : "glancing";
        events.push_back(json{{"kind", kind}, {"bump", e.bump + 1}, {"time", e.time},
                              {"q", io::to_json(e.state.q)}, {"v", io::to_json(e.state.v)}});
    }
    std::vector<std::size_t> itinerary;
    for (std::size_t b : o.itinerary()) itinerary.push_back(b + 1);
    return json{{"initial", json{{"q", io::to_json(o.initial.q)}, {"v", io::to_json(o.initial.v)}}},
                {"itinerary", itinerary},
                {"termination", to_string(o.termination)},
                {"glancing_encountered", o.glancing_encountered},
                {"final", json{{"q", io::to_json(o.final_state.q)}, {"v", io::to_json(o.final_state.v)},
                               {"time", o.final_time}}},
                {"events", events}};
}

inline std::string word_text(const std::vector<std::size_t>& symbols)
{
    Word w;
    w.symbols = symbols;
    return w.symbols.empty() ? std::string("-") : format_word(w);
}

/// Runs `work(i)` for i in [0, n) on up to `workers` threads.
template <class F>
void parallel_for(std::size_t n, unsigned workers, F&& work)
{
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < n; i = next++) work(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace detail

// ---- simulate ----------------------------------------------------------------------------

struct SimulateParams {
    /// x, y, direction angle
    std::vector<double> state;
    /// phi, L
    std::vector<double> line;
    /// phi, count[, L_lo, L_hi]
    std::vector<double> beam;
    std::size_t max_events = 10000;
    double max_time = std::numeric_limits<double>::infinity();
    double resolution = 0.05;
    /// Outgoing ray length in outputs; negative picks one from the scene size.
    double tail = -1;
    /// Mark the caustic points of entries into strong bumps.
    bool foci = false;
};

inline int cmd_simulate(const RunConfig& cfg, const SimulateParams& p)
{
    const Scene scene = detail::load(cfg);
    const int given = !p.state.empty() + !p.line.empty() + !p.beam.empty();
    if (given != 1) throw Error(ErrorCode::ParseError, "simulate needs exactly one of --state, --line, --beam");

    const double standoff = scene.radius() + 1.0;
    std::vector<State> starts;
    if (!p.state.empty()) {
        if (p.state.size() != 3) throw Error(ErrorCode::ParseError, "--state expects x,y,angle");
        State s{Vec2(p.state[0], p.state[1]), unit_from_angle(p.state[2]), std::nullopt};
        for (std::size_t i = 0; i < scene.size(); ++i)
            if (scene.bump(i).contains(s.q)) s.inside = i;
        starts.push_back(s);
    } else if (!p.line.empty()) {
        if (p.line.size() != 2) throw Error(ErrorCode::ParseError, "--line expects phi,L");
        starts.push_back(line_to_state(OrientedLine{p.line[0], p.line[1]}, standoff));
    } else {
        if (p.beam.size() != 2 && p.beam.size() != 4)
            throw Error(ErrorCode::ParseError, "--beam expects phi,count or phi,count,L_lo,L_hi");
        const double phi = p.beam[0];
        const double count = p.beam[1];
        if (!(count >= 1) || count != std::floor(count))
            throw Error(ErrorCode::ParseError, "--beam count must be a positive integer");
        double lo = -1;
        double hi = 1;
        if (p.beam.size() == 4) {
            lo = p.beam[2];
            hi = p.beam[3];
        } else if (scene.size() > 0) {
            lo = std::numeric_limits<double>::infinity();
            hi = -lo;
            for (const auto& b : scene.bumps()) {
                const auto [a, c] = line_support(b, phi);
                lo = std::min(lo, a);
                hi = std::max(hi, c);
            }
        }
        const auto n = static_cast<std::size_t>(count);
        for (std::size_t k = 0; k < n; ++k)
            starts.push_back(line_to_state(OrientedLine{phi, lo + (hi - lo) * (k + 0.5) / n}, standoff));
    }

    Limits limits;
    limits.max_events = p.max_events;
    limits.max_time = p.max_time;
    std::vector<Orbit> orbits(starts.size());
    detail::parallel_for(starts.size(), cfg.parallel,
                         [&](std::size_t i) { orbits[i] = propagate(starts[i], scene, limits, cfg.glancing, cfg.tol); });

    const double tail = p.tail >= 0 ? p.tail : 2 * standoff;
    std::vector<Vec2> foci;
    if (p.foci) {
        for (const auto& o : orbits)
            for (const auto& e : o.events)
                if (e.kind == EventKind::Entry && classify_field(scene.bump(e.bump)) == FieldRegime::Strong)
                    foci.push_back(focal_point(scene.bump(e.bump), e.state));
    }

    json report = detail::header("simulate", cfg);
    report["orbits"] = json::array();
    for (std::size_t i = 0; i < orbits.size(); ++i) {
        const Orbit& o = orbits[i];
        *cfg.log << "orbit " << i + 1 << ": itinerary " << detail::word_text(o.itinerary()) << ", "
                 << to_string(o.termination) << ", " << o.events.size() << " events\n";
        report["orbits"].push_back(detail::orbit_summary(o));
    }
    if (p.foci) {
        report["foci"] = json::array();
        for (const auto& f : foci) report["foci"].push_back(io::to_json(f));
    }

    if (cfg.wants("csv")) {
        io::CsvOptions copt{p.resolution, tail};
        if (orbits.size() == 1) {
            detail::write_file(cfg, "trajectory.csv", io::trajectory_csv(orbits[0], copt));
        } else {
            for (std::size_t i = 0; i < orbits.size(); ++i) {
                char name[64];
                std::snprintf(name, sizeof name, "trajectory_%03zu.csv", i + 1);
                detail::write_file(cfg, name, io::trajectory_csv(orbits[i], copt));
            }
        }
    }
    if (cfg.wants("svg")) {
        io::SvgOptions sopt;
        sopt.tail = tail;
        detail::write_file(cfg, "trajectory.svg", io::render_svg(scene, orbits, sopt, foci));
    }
    detail::write_json(cfg, "simulate.json", report);
    return exit_pass;
}

// ---- degree ------------------------------------------------------------------------------

struct DegreeParams {
    std::size_t bump = 1;
    double phi = 0;
    int grid = 1024;
    int directions = 8;
};

inline int cmd_degree(const RunConfig& cfg, const DegreeParams& p)
{
    const Scene scene = detail::load(cfg);
    if (p.bump < 1 || p.bump > scene.size()) throw Error(ErrorCode::ParseError, "--bump out of range");
    const Bump& bump = scene.bump(p.bump - 1);
    const FieldRegime regime = classify_field(bump);
    if (regime == FieldRegime::Neither)
        throw Error(ErrorCode::IndeterminateRegime, "bump " + std::to_string(p.bump) + " is neither weak nor strong");

    DegreeGrid grid{p.grid, cfg.glancing};
    const DegreeResult base = scattering_degree(bump, p.phi, grid, cfg.tol);
    DegreeGrid fine = grid;
    fine.points *= 2;
    const DegreeResult refined = scattering_degree(bump, p.phi, fine, cfg.tol);

    json per_direction = json::array();
    bool consistent = refined.degree == base.degree;
    const auto n = static_cast<std::size_t>(std::max(1, p.directions));
    std::vector<DegreeResult> results(n);
    detail::parallel_for(n, cfg.parallel, [&](std::size_t k) {
        results[k] = scattering_degree(bump, p.phi + two_pi * static_cast<double>(k) / n, grid, cfg.tol);
    });
    for (std::size_t k = 0; k < n; ++k) {
        consistent = consistent && results[k].degree == base.degree;
        per_direction.push_back(json{{"phi", p.phi + two_pi * static_cast<double>(k) / n},
                                     {"degree", results[k].degree},
                                     {"winding", results[k].winding},
                                     {"max_increment", results[k].max_increment}});
    }

    json report = detail::header("degree", cfg);
    report["bump"] = p.bump;
    report["regime"] = to_string(regime);
    report["phi"] = p.phi;
    report["grid"] = p.grid;
    report["degree"] = base.degree;
    report["winding"] = base.winding;
    report["refined_degree"] = refined.degree;
    report["directions"] = per_direction;
    report["consistent"] = consistent;
    *cfg.log << "degree " << base.degree << " (" << to_string(regime) << ", "
             << (consistent ? "stable across directions and refinement" : "INCONSISTENT") << ")\n";

    if (cfg.wants("csv")) {
        std::ostringstream csv;
        csv << "L,phi_out,L_out,total_curvature\n";
        for (const auto& s : base.samples)
            csv << io::detail::num(s.L, 15) << ',' << io::detail::num(s.out.phi, 15) << ','
                << io::detail::num(s.out.L, 15) << ',' << io::detail::num(s.total_curvature, 15) << '\n';
        detail::write_file(cfg, "degree.csv", csv.str());
    }
    detail::write_json(cfg, "degree.json", report);
    return consistent ? exit_pass : exit_fail;
}

// ---- cone-check --------------------------------------------------------------------------

inline json cone_json(const ConeReport& r)
{
    json per_bump = json::array();
    for (std::size_t l = 0; l < r.per_bump.size(); ++l) {
        const auto& s = r.per_bump[l];
        per_bump.push_back(json{{"bump", l + 1},
                                {"samples", s.samples},
                                {"min_margin", io::number(s.min_margin)},
                                {"histogram", s.histogram},
                                {"histogram_max", s.histogram_max}});
    }
    return json{{"pass", r.pass()},
                {"very_strong", r.very_strong},
                {"accepted", r.accepted},
                {"attempts", r.attempts},
                {"skipped_escaped", r.skipped_escaped},
                {"skipped_glancing", r.skipped_glancing},
                {"violations", r.violations},
                {"determinant_failures", r.determinant_failures},
                {"min_margin", io::number(r.min_margin)},
                {"min_margin_departure_d", io::number(r.min_margin_departure)},
                {"per_bump", per_bump}};
}

inline int cmd_cone_check(const RunConfig& cfg)
{
    const Scene scene = detail::load(cfg);
    ConeCheckSpec spec;
    spec.samples = cfg.samples;
    spec.seed = cfg.seed;
    spec.parallel = cfg.parallel;
    const ConeReport r = cone_invariance_check(scene, spec, cfg.tol);
    json report = detail::header("cone-check", cfg);
    report["result"] = cone_json(r);
    *cfg.log << (r.pass() ? "PASS" : "FAIL") << ": " << r.accepted << " samples, " << r.violations
             << " violations, min margin " << r.min_margin << (r.very_strong ? "" : " (scene not very strong)")
             << "\n";
    detail::write_json(cfg, "cone.json", report);
    return r.pass() ? exit_pass : exit_fail;
}

// ---- find-orbit --------------------------------------------------------------------------

struct FindOrbitParams {
    std::string word;
    WordKind kind = WordKind::Periodic;
    double phi_in = 0;
    double phi_out = 0;
    int grid = 32;
};

inline int cmd_find_orbit(const RunConfig& cfg, const FindOrbitParams& p)
{
    const Scene scene = detail::load(cfg);
    const Word word = parse_word(p.word, p.kind, scene.size());
    json report = detail::header("find-orbit", cfg);
    report["word"] = format_word(word);
    report["kind"] = p.kind == WordKind::Periodic ? "periodic" : "segment";

    Orbit drawn;
    std::vector<Vec2> markers;
    if (p.kind == WordKind::Periodic) {
        const PeriodicOrbit orbit = find_periodic_orbit(scene, word, OrbitSearch{p.grid, cfg.seed}, cfg.tol);
        const Monodromy m = monodromy(scene, orbit, cfg.tol);
        drawn = replay(scene, orbit, 1, cfg.tol);
        json states = json::array();
        for (const auto& x : orbit.states) {
            states.push_back(io::to_json(x));
            markers.push_back(to_state(x, scene).q);
        }
        std::vector<std::size_t> it;
        for (std::size_t b : drawn.itinerary()) it.push_back(b + 1);
        report["states"] = states;
        report["residual"] = orbit.residual;
        report["iterations"] = orbit.iterations;
        report["residual_trace"] = orbit.trace;
        report["monodromy"] = json{{"matrix", io::to_json(m.matrix)},
                                   {"determinant", m.determinant},
                                   {"trace", m.trace},
                                   {"hyperbolic", m.hyperbolic}};
        report["replay_itinerary"] = it;
        *cfg.log << "word " << format_word(word) << ": residual " << orbit.residual << ", monodromy trace "
                 << m.trace << (m.hyperbolic ? " (hyperbolic)" : " (not hyperbolic)") << "\n";
    } else {
        const ScatteringOrbit orbit = find_scattering_orbit(scene, word, p.phi_in, p.phi_out, {}, cfg.tol);
        drawn = orbit.orbit;
        report["incoming"] = json{{"phi", orbit.incoming.phi}, {"L", orbit.incoming.L}};
        report["outgoing"] = json{{"phi", orbit.outgoing.phi}, {"L", orbit.outgoing.L}};
        report["residual"] = orbit.residual;
        report["orbit"] = detail::orbit_summary(orbit.orbit);
        *cfg.log << "word " << format_word(word) << ": incoming L " << orbit.incoming.L << ", residual "
                 << orbit.residual << "\n";
    }

    const double tail = 2 * (scene.radius() + 1.0);
    if (cfg.wants("csv")) detail::write_file(cfg, "orbit.csv", io::trajectory_csv(drawn, {0.05, tail}));
    if (cfg.wants("svg")) {
        io::SvgOptions sopt;
        sopt.tail = tail;
        detail::write_file(cfg, "orbit.svg", io::render_svg(scene, {drawn}, sopt, markers));
    }
    detail::write_json(cfg, "orbit.json", report);
    return exit_pass;
}

// ---- alpha-min and classify --------------------------------------------------------------

inline int cmd_alpha_min(const RunConfig& cfg)
{
    const Scene scene = detail::load(cfg);
    const double a = alpha_min(scene, cfg.tol);
    json report = detail::header("alpha-min", cfg);
    report["alpha_min"] = a;
    *cfg.log << "alpha_min " << io::detail::num(a, 12) << "\n";
    detail::write_json(cfg, "alpha_min.json", report);
    return exit_pass;
}

inline json classify_json(const Scene& scene, const SceneRegime& regime)
{
    json bumps = json::array();
    for (std::size_t l = 0; l < scene.size(); ++l) {
        const auto [kmin, kmax] = scene.bump(l).curvature_range();
        json b = io::to_json(scene.bump(l));
        b["regime"] = to_string(regime.bumps[l]);
        b["curvature_range"] = json::array({kmin, kmax});
        if (!regime.single_bump) {
            b["gap"] = regime.gaps[l];
            b["very_strong_bound"] = regime.very_strong_bounds[l];
        }
        bumps.push_back(b);
    }
    json out{{"bumps", bumps}, {"very_strong", regime.very_strong}};
    if (!regime.single_bump) out["alpha_min"] = regime.alpha_min;
    return out;
}

inline int cmd_classify(const RunConfig& cfg)
{
    const Scene scene = detail::load(cfg);
    const SceneRegime regime = classify_scene(scene, cfg.tol);
    json report = detail::header("classify", cfg);
    report["result"] = classify_json(scene, regime);
    for (std::size_t l = 0; l < scene.size(); ++l)
        *cfg.log << "bump " << l + 1 << ": " << to_string(regime.bumps[l]) << "\n";
    if (!regime.single_bump) *cfg.log << "very strong: " << (regime.very_strong ? "yes" : "no") << "\n";
    detail::write_json(cfg, "classify.json", report);
    return exit_pass;
}

// ---- sweep -------------------------------------------------------------------------------

struct SweepParams {
    /// Only the field strength "b" is supported.
    std::string param = "b";
    /// 1-based bump whose field varies; 0 varies every bump.
    std::size_t bump = 0;
    double from = 0.25;
    double to = 4;
    int steps = 16;
    double phi = 0;
    int grid = 512;
};

inline int cmd_sweep(const RunConfig& cfg, const SweepParams& p)
{
    const Scene scene = detail::load(cfg);
    if (p.param != "b") throw Error(ErrorCode::ParseError, "sweep supports --param b only");
    if (p.steps < 1) throw Error(ErrorCode::ParseError, "--steps must be positive");
    if (p.bump > scene.size()) throw Error(ErrorCode::ParseError, "--bump out of range");
    if (scene.size() == 0) throw Error(ErrorCode::ParseError, "sweep needs at least one bump");
    const std::size_t probe = p.bump == 0 ? 0 : p.bump - 1;

    struct Row {
        double value = 0;
        FieldRegime regime = FieldRegime::Neither;
        std::optional<int> degree;
        std::string degree_error;
        bool very_strong = false;
        std::optional<ConeReport> cone;
    };
    const auto n = static_cast<std::size_t>(p.steps);
    std::vector<Row> rows(n);
    // items run one per worker; the cone check inside each stays sequential
    detail::parallel_for(n, cfg.parallel, [&](std::size_t i) {
        Row& row = rows[i];
        row.value = n == 1 ? p.from : p.from + (p.to - p.from) * static_cast<double>(i) / (n - 1);
        std::vector<Bump> bumps = scene.bumps();
        for (std::size_t l = 0; l < bumps.size(); ++l)
            if (p.bump == 0 || l == probe) bumps[l] = bumps[l].with_field(row.value);
        const Scene varied(bumps);
        row.regime = classify_field(varied.bump(probe));
        if (row.regime != FieldRegime::Neither) {
            try {
                row.degree =
                    scattering_degree(varied.bump(probe), p.phi, DegreeGrid{p.grid, cfg.glancing}, cfg.tol).degree;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::GridTooCoarse) throw;
                row.degree_error = e.what();
            }
        }
        if (varied.size() >= 2) {
            const SceneRegime regime = classify_scene(varied, cfg.tol);
            row.very_strong = regime.very_strong;
            if (regime.all_strong()) {
                ConeCheckSpec spec;
                spec.samples = cfg.samples;
                spec.seed = cfg.seed;
                row.cone = cone_invariance_check(varied, spec, cfg.tol);
            }
        }
    });

    json report = detail::header("sweep", cfg);
    report["param"] = p.param;
    report["bump"] = p.bump;
    json table = json::array();
    std::ostringstream csv;
    csv << "b,regime,degree,very_strong,cone_min_margin,cone_violations\n";
    for (const auto& row : rows) {
        json r{{"b", row.value}, {"regime", to_string(row.regime)}, {"very_strong", row.very_strong}};
        r["degree"] = row.degree ? json(*row.degree) : json(nullptr);
        if (!row.degree_error.empty()) r["degree_error"] = row.degree_error;
        csv << io::detail::num(row.value, 15) << ',' << to_string(row.regime) << ','
            << (row.degree ? std::to_string(*row.degree) : "") << ',' << (row.very_strong ? 1 : 0) << ',';
        if (row.cone) {
            r["cone_min_margin"] = io::number(row.cone->min_margin);
            r["cone_violations"] = row.cone->violations;
            csv << io::detail::num(row.cone->min_margin, 15) << ',' << row.cone->violations;
        } else {
            csv << ',';
        }
        csv << '\n';
        table.push_back(r);
        *cfg.log << "b=" << io::detail::num(row.value, 6) << " " << to_string(row.regime) << " degree "
                 << (row.degree ? std::to_string(*row.degree) : "-") << "\n";
    }
    report["rows"] = table;
    if (cfg.wants("csv")) detail::write_file(cfg, "sweep.csv", csv.str());
    detail::write_json(cfg, "sweep.json", report);
    return exit_pass;
}

// ---- check -------------------------------------------------------------------------------

/// Runs every applicable check and exits 0 only when all asserted checks pass.
inline int cmd_check(const RunConfig& cfg)
{
    const Scene scene = detail::load(cfg);
    const SceneRegime regime = classify_scene(scene, cfg.tol);
    json report = detail::header("check", cfg);
    report["classify"] = classify_json(scene, regime);
    json failures = json::array();

    json degrees = json::array();
    for (std::size_t l = 0; l < scene.size(); ++l) {
        const Bump& bump = scene.bump(l);
        json entry{{"bump", l + 1}, {"regime", to_string(regime.bumps[l])}};
        if (regime.bumps[l] == FieldRegime::Neither) {
            entry["degree"] = nullptr;
            entry["status"] = "not applicable";
        } else {
            // winding of L -> outgoing direction; reversing b mirrors the scene, which preserves it
            const int expected = regime.bumps[l] == FieldRegime::Weak ? 0 : 1;
            const int d = scattering_degree(bump, 0.0, DegreeGrid{1024, cfg.glancing}, cfg.tol).degree;
            entry["degree"] = d;
            entry["expected"] = expected;
            if (d != expected) failures.push_back("degree of bump " + std::to_string(l + 1));
        }
        degrees.push_back(entry);
    }
    report["degrees"] = degrees;

    json focusing = json::array();
    for (std::size_t l = 0; l < scene.size(); ++l) {
        if (regime.bumps[l] != FieldRegime::Strong) continue;
        const Bump& bump = scene.bump(l);
        std::vector<EntrySpec> entries;
        for (int i = 0; i < 24; ++i)
            for (int j = 0; j < 9; ++j)
                entries.push_back(EntrySpec{bump.perimeter() * i / 24.0, -1.2 + 2.4 * j / 8.0});
        const FocusingReport f = focusing_check(bump, entries, cfg.tol);
        focusing.push_back(json{{"bump", l + 1},
                                {"entries", f.samples.size()},
                                {"worst_margin", f.worst_margin},
                                {"all_focused", f.all_focused}});
        if (!f.all_focused) failures.push_back("focusing of bump " + std::to_string(l + 1));
    }
    report["focusing"] = focusing;

    if (scene.size() >= 2 && regime.all_strong()) {
        ConeCheckSpec spec;
        spec.samples = cfg.samples;
        spec.seed = cfg.seed;
        spec.parallel = cfg.parallel;
        const ConeReport r = cone_invariance_check(scene, spec, cfg.tol);
        report["cone"] = cone_json(r);
        report["cone"]["asserted"] = regime.very_strong;
        if (regime.very_strong && !r.pass()) failures.push_back("cone invariance");
    } else {
        report["cone"] = json{{"status", "not applicable"}};
    }

    report["failures"] = failures;
    report["pass"] = failures.empty();
    for (const auto& f : failures) *cfg.log << "FAIL: " << f.get<std::string>() << "\n";
    *cfg.log << (failures.empty() ? "all checks passed" : "checks failed") << "\n";
    detail::write_json(cfg, "check.json", report);
    return failures.empty() ? exit_pass : exit_fail;
}

} // namespace magbump::cli
