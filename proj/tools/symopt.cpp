// Command-line front end: batch verification and tracing driven by JSON
// scene files.
//
//   symopt trace        --scene S   trace the scene's rays, emit results
//   symopt check-map    --scene S   symplecticity check per interface
//   symopt check-family --scene S   normality sweep of the scene's family
//   symopt wavefront    --scene S   reconstruct a wavefront from the family
//   symopt malus        --scene S   normality before and after the system
//   symopt structure    [--scene S] structural identities of line space
//
// Exit codes: 0 all checks passed, 1 a check failed, 2 usage or scene
// error, 3 numerical failure (miss / total internal reflection /
// grazing). Diagnostics go to stderr; data goes to stdout or --out.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "symopt/symopt.hpp"

namespace {

using namespace symopt;

constexpr int kExitPass = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct CommonOpts {
    std::string scene_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    std::optional<std::string> grid;
    std::optional<double> eps;
    std::string format = "text";
};

void add_common(CLI::App* cmd, CommonOpts& o, bool scene_required) {
    CLI::Option* scene = cmd->add_option("--scene", o.scene_path, "scene file (JSON)");
    if (scene_required) scene->required();
    cmd->add_option("--out", o.out_path, "write data to this file instead of stdout");
    cmd->add_option("--seed", o.seed, "override the scene seed");
    cmd->add_option("--tol", o.tol, "override the scene tolerance");
    cmd->add_option("--grid", o.grid, "override the grid, e.g. 21x21");
    cmd->add_option("--eps", o.eps, "override the finite-difference step scale");
    cmd->add_option("--format", o.format, "output format")
        ->check(CLI::IsMember({"text", "csv", "structured"}))
        ->capture_default_str();
}

std::pair<int, int> parse_grid(const std::string& s) {
    std::size_t x = s.find('x');
    if (x == std::string::npos || x == 0 || x + 1 >= s.size())
        throw SceneError(SceneErrorCode::kInvariant, "--grid: expected <n1>x<n2>");
    int n1 = 0, n2 = 0;
    try {
        std::size_t used = 0;
        n1 = std::stoi(s.substr(0, x), &used);
        if (used != x) throw std::invalid_argument(s);
        n2 = std::stoi(s.substr(x + 1), &used);
        if (used != s.size() - x - 1) throw std::invalid_argument(s);
    } catch (const std::exception&) {
        throw SceneError(SceneErrorCode::kInvariant, "--grid: expected <n1>x<n2>");
    }
    if (n1 < 3 || n2 < 3)
        throw SceneError(SceneErrorCode::kInvariant, "--grid: grids must be at least 3x3");
    return {n1, n2};
}

/// Load the scene and fold command-line overrides into it. Commands
/// that can run without a scene (structure) pass allow_missing.
Scene load_with_overrides(const CommonOpts& o, bool allow_missing = false) {
    Scene s;
    if (!o.scene_path.empty())
        s = load_scene(o.scene_path);
    else if (!allow_missing)
        throw SceneError(SceneErrorCode::kInvariant, "--scene is required");
    if (o.seed) s.seed = *o.seed;
    if (o.tol) {
        if (!(*o.tol > 0.0))
            throw SceneError(SceneErrorCode::kInvariant, "--tol: must be positive");
        s.tolerance = *o.tol;
    }
    if (o.eps) {
        if (!(*o.eps > 0.0))
            throw SceneError(SceneErrorCode::kInvariant, "--eps: must be positive");
        s.fd_eps = *o.eps;
    }
    if (o.grid) {
        std::tie(s.grid_n1, s.grid_n2) = parse_grid(*o.grid);
        std::tie(s.wgrid_n1, s.wgrid_n2) = parse_grid(*o.grid);
    }
    return s;
}

void write_output(const CommonOpts& o, const std::string& data) {
    if (o.out_path.empty()) {
        std::cout << data;
        return;
    }
    std::ofstream f(o.out_path, std::ios::binary);
    if (!f) throw SceneError(SceneErrorCode::kInvariant,
                             "--out: cannot open '" + o.out_path + "' for writing");
    f << data;
}

int cmd_trace(const CommonOpts& o) {
    Scene s = load_with_overrides(o);
    if (s.system.empty()) {
        std::cerr << "error: scene has no optical system\n";
        return kExitUsage;
    }
    if (s.rays.empty()) {
        std::cerr << "error: scene has no rays to trace\n";
        return kExitUsage;
    }
    OpticalSystem sys = build_system(s);
    std::vector<TraceResult> results;
    bool failed = false;
    for (std::size_t i = 0; i < s.rays.size(); ++i) {
        OrientedLine line = line_from_point_dir(s.rays[i].point, s.rays[i].direction);
        TraceOpts opts = trace_opts(s);
        opts.from = s.rays[i].point;
        Expected<TraceResult, TraceFailure> r = trace(line, sys, opts);
        if (!r) {
            std::cerr << "error: ray " << i << ": " << to_string(r.error().code)
                      << " at interface " << r.error().interface_index << "\n";
            failed = true;
            continue;
        }
        results.push_back(std::move(*r));
    }
    if (failed) return kExitNumerical;
    write_output(o, emit_traces(results, sys.size(), parse_format(o.format)));
    return kExitPass;
}

int cmd_check_map(const CommonOpts& o) {
    Scene s = load_with_overrides(o);
    if (s.system.empty()) {
        std::cerr << "error: scene has no optical system\n";
        return kExitUsage;
    }
    OpticalSystem sys = build_system(s);
    std::vector<CheckReport> subs;
    for (std::size_t i = 0; i < sys.size(); ++i) {
        CheckReport c = check_symplectic(sys[i], s.sampler.sampler, s.sampler.lines,
                                         s.sampler.pairs, s.fd_eps, s.tolerance,
                                         s.seed + i);
        c.check = "interface " + std::to_string(i) + ": " + c.check;
        subs.push_back(std::move(c));
    }
    CheckReport rep = composite_report("check-map", s.seed, std::move(subs));
    write_output(o, emit_report(rep, parse_format(o.format)));
    return rep.pass ? kExitPass : kExitCheckFailed;
}

int cmd_check_family(const CommonOpts& o) {
    Scene s = load_with_overrides(o);
    if (!s.family) {
        std::cerr << "error: scene has no family\n";
        return kExitUsage;
    }
    RayFamily family = build_family(s);
    NormalityReport rep = is_normal(family, s.grid_n1, s.grid_n2, s.tolerance);
    write_output(o, emit_report(rep, parse_format(o.format)));
    if (!rep.pass)
        std::cerr << "check-family: max |coefficient| " << float_short(rep.max_abs_coefficient)
                  << " at k1=" << float_short(rep.max_k1) << " k2=" << float_short(rep.max_k2)
                  << " exceeds " << float_short(rep.tolerance) << "\n";
    return rep.pass ? kExitPass : kExitCheckFailed;
}

int cmd_wavefront(const CommonOpts& o) {
    Scene s = load_with_overrides(o);
    if (!s.family) {
        std::cerr << "error: scene has no family\n";
        return kExitUsage;
    }
    RayFamily family = build_family(s);
    const Domain& d = family.domain();
    double k1_0 = s.wavefront.has_k0 ? s.wavefront.k0_1 : d.k1_lo + 0.5 * d.span1();
    double k2_0 = s.wavefront.has_k0 ? s.wavefront.k0_2 : d.k2_lo + 0.5 * d.span2();
    std::vector<WavefrontSample> samples =
        wavefront(family, k1_0, k2_0, s.wavefront.lambda0, s.wgrid_n1, s.wgrid_n2,
                  s.wavefront.order, s.tolerance);
    write_output(o, emit_wavefront(samples, parse_format(o.format)));
    return kExitPass;
}

int cmd_malus(const CommonOpts& o) {
    Scene s = load_with_overrides(o);
    if (!s.family) {
        std::cerr << "error: scene has no family\n";
        return kExitUsage;
    }
    if (s.system.empty()) {
        std::cerr << "error: scene has no optical system\n";
        return kExitUsage;
    }
    RayFamily family = build_family(s);
    OpticalSystem sys = build_system(s);
    CheckReport rep =
        malus_check(family, sys, s.grid_n1, s.grid_n2, s.tolerance, trace_opts(s));
    rep.seed = s.seed;
    write_output(o, emit_report(rep, parse_format(o.format)));
    return rep.pass ? kExitPass : kExitCheckFailed;
}

int cmd_structure(const CommonOpts& o) {
    Scene s = load_with_overrides(o, /*allow_missing=*/true);
    CheckReport rep = structure_checks(s.seed);
    write_output(o, emit_report(rep, parse_format(o.format)));
    return rep.pass ? kExitPass : kExitCheckFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"oriented-line optics toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;
    int (*run)(const CommonOpts&) = nullptr;

    struct Sub {
        const char* name;
        const char* help;
        bool scene_required;
        int (*fn)(const CommonOpts&);
    };
    const Sub subs[] = {
        {"trace", "trace the scene's rays through its optical system", true, cmd_trace},
        {"check-map", "verify each interface map scales the symplectic form by n1/n2",
         true, cmd_check_map},
        {"check-family", "sweep the family's pullback coefficient over a grid", true,
         cmd_check_family},
        {"wavefront", "reconstruct a wavefront by optical-length propagation", true,
         cmd_wavefront},
        {"malus", "verify the family is still normal after the optical system", true,
         cmd_malus},
        {"structure", "verify the structural identities of the space of lines", false,
         cmd_structure},
    };
    for (const Sub& sub : subs) {
        CLI::App* cmd = app.add_subcommand(sub.name, sub.help);
        add_common(cmd, opts, sub.scene_required);
        cmd->callback([&run, &sub]() { run = sub.fn; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitPass : kExitUsage;
    }

    try {
        return run(opts);
    } catch (const SceneError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NotNormalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckFailed;
    } catch (const TraceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
