#include "commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <list>

using namespace magbump;
using namespace magbump::cli;

namespace {

struct CommonOptions {
    std::string scene;
    std::string out = ".";
    std::string format;
    std::vector<std::string> tolerances;
    std::size_t samples = 1000;
    std::uint64_t seed = 1;
    unsigned parallel = 1;
    std::string glancing = "straight";
};

CommonOptions& add_common(CLI::App* cmd, std::list<CommonOptions>& all, const std::string& default_format)
{
    CommonOptions& o = all.emplace_back();
    o.format = default_format;
    cmd->add_option("--scene", o.scene, "Scene file (YAML)")->required();
    cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
    cmd->add_option("--format", o.format, "Comma-separated output formats: csv, svg, json")->capture_default_str();
    cmd->add_option("--tolerance", o.tolerances, "Tolerance override NAME=VALUE (repeatable)");
    cmd->add_option("--samples", o.samples, "Sample count for sampled checks")->capture_default_str();
    cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    cmd->add_option("--parallel", o.parallel, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--glancing", o.glancing, "Glancing continuation: straight or larmor")
        ->capture_default_str()
        ->check(CLI::IsMember({"straight", "larmor"}));
    return o;
}

RunConfig make_config(const CommonOptions& o)
{
    RunConfig cfg;
    cfg.scene_path = o.scene;
    cfg.out_dir = o.out;
    std::size_t pos = 0;
    while (pos <= o.format.size()) {
        std::size_t comma = o.format.find(',', pos);
        if (comma == std::string::npos) comma = o.format.size();
        const std::string f = o.format.substr(pos, comma - pos);
        if (!f.empty()) {
            if (f != "csv" && f != "svg" && f != "json")
                throw Error(ErrorCode::ParseError, "unknown format '" + f + "' (expected csv, svg, json)");
            cfg.formats.insert(f);
        }
        pos = comma + 1;
    }
    for (const auto& t : o.tolerances) io::apply_tolerance(cfg.tol, t);
    cfg.samples = o.samples;
    cfg.seed = o.seed;
    cfg.parallel = o.parallel;
    cfg.glancing = o.glancing == "larmor" ? GlancingPolicy::Larmor : GlancingPolicy::Straight;
    return cfg;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Magnetic billiards: exact orbits, scattering degree, cone fields and symbolic orbits"};
    app.require_subcommand(1);

    std::vector<std::pair<CLI::App*, std::function<int()>>> commands;
    std::list<CommonOptions> options;

    auto* simulate = app.add_subcommand("simulate", "Propagate an orbit or a parallel beam");
    SimulateParams sim;
    auto& simulate_opts = add_common(simulate, options, "csv,svg,json");
    simulate->add_option("--state", sim.state, "Initial state x,y,angle")->delimiter(',')->expected(3);
    simulate->add_option("--line", sim.line, "Incoming oriented line phi,L")->delimiter(',')->expected(2);
    simulate->add_option("--beam", sim.beam, "Parallel beam phi,count[,L_lo,L_hi]")->delimiter(',')->expected(2, 4);
    simulate->add_option("--max-events", sim.max_events, "Event limit")->capture_default_str();
    simulate->add_option("--max-time", sim.max_time, "Time limit");
    simulate->add_option("--resolution", sim.resolution, "CSV sample spacing")->capture_default_str();
    simulate->add_option("--tail", sim.tail, "Length of drawn outgoing rays");
    simulate->add_flag("--foci", sim.foci, "Mark caustic points inside strong bumps");
    commands.emplace_back(simulate, [&] { return cmd_simulate(make_config(simulate_opts), sim); });

    auto* degree = app.add_subcommand("degree", "Scattering degree of one bump");
    DegreeParams deg;
    auto& degree_opts = add_common(degree, options, "json");
    degree->add_option("--bump", deg.bump, "Bump index (1-based)")->capture_default_str();
    degree->add_option("--phi", deg.phi, "Incoming direction")->capture_default_str();
    degree->add_option("--grid", deg.grid, "L-grid size")->capture_default_str();
    degree->add_option("--directions", deg.directions, "Directions compared")->capture_default_str();
    commands.emplace_back(degree, [&] { return cmd_degree(make_config(degree_opts), deg); });

    auto* cone = app.add_subcommand("cone-check", "Sampled cone-field invariance check");
    auto& cone_opts = add_common(cone, options, "json");
    commands.emplace_back(cone, [&] { return cmd_cone_check(make_config(cone_opts)); });

    auto* find = app.add_subcommand("find-orbit", "Orbit realizing a symbol word");
    FindOrbitParams fo;
    std::string kind = "periodic";
    auto& find_opts = add_common(find, options, "csv,svg,json");
    find->add_option("--word", fo.word, "Comma-separated 1-based symbols, e.g. 1,2,3")->required();
    find->add_option("--kind", kind, "periodic or segment")
        ->capture_default_str()
        ->check(CLI::IsMember({"periodic", "segment"}));
    find->add_option("--phi-in", fo.phi_in, "Incoming direction (segment words)");
    find->add_option("--phi-out", fo.phi_out, "Outgoing direction (segment words)");
    find->add_option("--grid", fo.grid, "Seed grid per symbol")->capture_default_str();
    commands.emplace_back(find, [&] {
        fo.kind = kind == "segment" ? WordKind::Segment : WordKind::Periodic;
        return cmd_find_orbit(make_config(find_opts), fo);
    });

    auto* alpha = app.add_subcommand("alpha-min", "Minimal three-bump turning angle");
    auto& alpha_opts = add_common(alpha, options, "json");
    commands.emplace_back(alpha, [&] { return cmd_alpha_min(make_config(alpha_opts)); });

    auto* classify = app.add_subcommand("classify", "Field regime of every bump");
    auto& classify_opts = add_common(classify, options, "json");
    commands.emplace_back(classify, [&] { return cmd_classify(make_config(classify_opts)); });

    auto* sweep = app.add_subcommand("sweep", "Vary a field strength and tabulate regime, degree, cone margin");
    SweepParams sw;
    auto& sweep_opts = add_common(sweep, options, "csv,json");
    sweep->add_option("--param", sw.param, "Swept parameter (b)")->capture_default_str();
    sweep->add_option("--bump", sw.bump, "Bump whose field varies; 0 for all")->capture_default_str();
    sweep->add_option("--from", sw.from, "First value")->capture_default_str();
    sweep->add_option("--to", sw.to, "Last value")->capture_default_str();
    sweep->add_option("--steps", sw.steps, "Number of values")->capture_default_str();
    sweep->add_option("--phi", sw.phi, "Incoming direction for the degree")->capture_default_str();
    sweep->add_option("--grid", sw.grid, "L-grid size for the degree")->capture_default_str();
    commands.emplace_back(sweep, [&] { return cmd_sweep(make_config(sweep_opts), sw); });

    auto* check = app.add_subcommand("check", "Run every applicable check");
    auto& check_opts = add_common(check, options, "json");
    commands.emplace_back(check, [&] { return cmd_check(make_config(check_opts)); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    for (auto& [cmd, run] : commands) {
        if (!cmd->parsed()) continue;
        try {
            return run();
        } catch (const Error& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return is_config_error(e.code()) ? exit_usage : exit_fail;
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return exit_fail;
        }
    }
    return exit_usage;
}
