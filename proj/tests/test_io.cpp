// Serialization: reports in three formats, family grid files, and the
// scene format with its validation diagnostics.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "symopt/symopt.hpp"

using namespace symopt;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

SceneErrorCode code_of(const std::string& scene_text) {
    try {
        parse_scene(scene_text);
    } catch (const SceneError& e) {
        return e.code();
    }
    FAIL("expected SceneError");
    return SceneErrorCode::kParse;
}

const char* kMinimalScene = R"({
  "surfaces": {"mirror": {"kind": "plane", "point": [0, 0, 0], "normal": [0, 0, 1]}},
  "system": [{"surface": "mirror", "action": "reflect"}],
  "family": {"builtin": "point_source", "point": [0, 0, 1], "direction": [0, 0, -1]}
})";

} // namespace

// ---------------------------------------------------------------------------
// Reports

TEST_CASE("check reports round-trip bytewise through the structured form", "[io]") {
    CheckReport rep = check_symplectic(
        Interface{ImplicitSurface{Plane({0, 0, 0}, {0, 0, 1})}, SurfaceAction::kReflect},
        LineSampler{{-1, -1, 0.5}, {1, 1, 1.5}, {0, 0, -1}, 0.4, 1000}, 5, 2, 1e-5, 1e-6, 3);

    std::string s1 = emit_report(rep, ReportFormat::kStructured);
    CheckReport back = parse_check_report(s1);
    std::string s2 = emit_report(back, ReportFormat::kStructured);
    CHECK(s1 == s2);
    CHECK(back.check == rep.check);
    CHECK(back.seed == rep.seed);
    CHECK(back.max_residual == rep.max_residual);  // 17 digits: lossless

    std::string text = emit_report(rep, ReportFormat::kText);
    CHECK(text.find("PASS") != std::string::npos);
    CHECK(text.find("reflect(plane)") != std::string::npos);

    std::string csv = emit_report(rep, ReportFormat::kCsv);
    CHECK(csv.rfind("check,samples,max_residual,location,tolerance,pass,seed\n", 0) == 0);
    CHECK(count_lines(csv) == 2);  // header + one report row
}

TEST_CASE("composite reports nest in every format", "[io]") {
    CheckReport rep = structure_checks(1, 10);
    std::string s1 = emit_report(rep, ReportFormat::kStructured);
    std::string s2 = emit_report(parse_check_report(s1), ReportFormat::kStructured);
    CHECK(s1 == s2);

    // One CSV row per check, sub-checks path-prefixed.
    std::string csv = emit_report(rep, ReportFormat::kCsv);
    CHECK(count_lines(csv) == 1 + 1 + 5);
    CHECK(csv.find("structure_checks/omega_algebra") != std::string::npos);

    // Text form indents sub-checks.
    std::string text = emit_report(rep, ReportFormat::kText);
    CHECK(text.find("\n  [PASS] omega_algebra") != std::string::npos);
}

TEST_CASE("failed reports say FAIL in the text form", "[io]") {
    NormalityReport rep = is_normal(skew_family(), 3, 3, 1e-6);
    std::string text = emit_report(rep, ReportFormat::kText);
    CHECK(text.find("[FAIL]") != std::string::npos);
    CHECK(text.find("skew_family") != std::string::npos);
}

TEST_CASE("normality sweeps emit one CSV row per grid node", "[io]") {
    NormalityReport rep = is_normal(skew_family(), 3, 3, 1e-6);
    std::string csv = emit_report(rep, ReportFormat::kCsv);
    CHECK(csv.rfind("i,j,k1,k2,coefficient\n", 0) == 0);
    CHECK(count_lines(csv) == 1 + 9);

    std::string s1 = emit_report(rep, ReportFormat::kStructured);
    NormalityReport back = parse_normality_report(s1);
    CHECK(emit_report(back, ReportFormat::kStructured) == s1);
    CHECK(back.coefficients == rep.coefficients);
    CHECK(back.max_abs_coefficient == rep.max_abs_coefficient);
}

TEST_CASE("floats serialize with 17 significant digits", "[io]") {
    CheckReport rep;
    rep.check = "x";
    rep.max_residual = 0.1;  // not exactly representable
    std::string s = emit_report(rep, ReportFormat::kStructured);
    CHECK(s.find("0.10000000000000001") != std::string::npos);
    CHECK(parse_check_report(s).max_residual == 0.1);
}

TEST_CASE("wavefront samples emit as CSV and structured arrays", "[io]") {
    RayFamily fam = point_source({0, 0, 1});
    auto samples = wavefront(fam, 0.0, 0.0, 1.0, 3, 3);
    std::string csv = emit_wavefront(samples, ReportFormat::kCsv);
    CHECK(csv.rfind("k1,k2,lambda,wx,wy,wz\n", 0) == 0);
    CHECK(count_lines(csv) == 1 + 9);

    nlohmann::json arr = nlohmann::json::parse(emit_wavefront(samples, ReportFormat::kStructured));
    REQUIRE(arr.is_array());
    REQUIRE(arr.size() == 9);
    CHECK(arr[0].at("lambda").get<double>() == samples[0].lambda);
}

TEST_CASE("trace rows carry hits, segments, and the final line", "[io]") {
    OpticalSystem sys;
    sys.push_back({ImplicitSurface{Plane({0, 0, 0}, {0, 0, 1})}, SurfaceAction::kReflect});
    auto r = trace(OrientedLine({0, 0, 1}, {0, 0, -1}), sys, {.from = Point3{0, 0, 1}});
    REQUIRE(r.has_value());
    std::vector<TraceResult> traces{*r};

    std::string csv = emit_traces(traces, sys.size(), ReportFormat::kCsv);
    CHECK(csv.rfind("ray,hit0_x,hit0_y,hit0_z,seg0_len,final_ux,final_uy,final_uz,"
                    "final_qx,final_qy,final_qz,optical_path_length\n",
                    0) == 0);
    CHECK(count_lines(csv) == 2);

    nlohmann::json arr = nlohmann::json::parse(emit_traces(traces, sys.size(),
                                                           ReportFormat::kStructured));
    REQUIRE(arr.size() == 1);
    CHECK(arr[0].at("hits").size() == 1);
    CHECK(arr[0].at("optical_path_length").get<double>() == r->optical_path_length);
}

// ---------------------------------------------------------------------------
// Family grid files

TEST_CASE("family grids round-trip bytewise", "[io]") {
    FamilyGridFile grid = sample_family_grid(point_source({0, 0, 2}), 5, 4);
    std::string text = write_family_grid(grid);
    FamilyGridFile back = parse_family_grid(text);
    CHECK(back.n1 == 5);
    CHECK(back.n2 == 4);
    CHECK(back.domain.k1_lo == grid.domain.k1_lo);
    CHECK(back.points.size() == 20);
    CHECK(write_family_grid(back) == text);
}

TEST_CASE("family grid parsing rejects malformed input", "[io]") {
    FamilyGridFile grid = sample_family_grid(point_source({0, 0, 2}), 3, 3);
    std::string good = write_family_grid(grid);

    // Non-unit direction row.
    std::string bad = good;
    std::string::size_type pos = bad.rfind(",");
    bad.replace(pos + 1, bad.size() - pos - 2, "7");
    CHECK_THROWS_AS(parse_family_grid(bad), Error);

    // Row count mismatch with the declared shape.
    std::string truncated = good.substr(0, good.rfind("\n", good.size() - 2) + 1);
    CHECK_THROWS_AS(parse_family_grid(truncated), Error);

    // Missing headers.
    std::string no_header;
    std::istringstream in(good);
    std::string line;
    while (std::getline(in, line))
        if (line.empty() || line[0] != '#') no_header += line + "\n";
    CHECK_THROWS_AS(parse_family_grid(no_header), Error);

    // Wrong column count.
    CHECK_THROWS_AS(parse_family_grid("# n1 2 n2 2\n# domain 0 1 0 1\n1,2,3\n"), Error);

    // Unreadable path.
    CHECK_THROWS_AS(read_family_grid("/nonexistent/grid.csv"), Error);
}

TEST_CASE("tabulated grids act as interpolated families", "[io]") {
    // The plane congruence is affine in its parameters, so bilinear
    // interpolation reproduces it exactly, direction included.
    RayFamily exact = normal_congruence(ImplicitSurface{Plane({0, 0, 0}, {0, 0, 1})});
    RayFamily interp = grid_family(sample_family_grid(exact, 4, 4));
    CHECK(interp.name() == "grid_family");
    CHECK_FALSE(interp.has_analytic_partials());

    Rng rng(5);
    for (int i = 0; i < 30; ++i) {
        double k1 = rng.uniform(-0.5, 0.5), k2 = rng.uniform(-0.5, 0.5);
        FamilyPoint a = exact.eval(k1, k2);
        FamilyPoint b = interp.eval(k1, k2);
        CHECK((a.P - b.P).norm() < 1e-12);
        CHECK((a.u.vec() - b.u.vec()).norm() < 1e-12);
    }
    CHECK_THROWS_AS(interp.eval(0.6, 0.0), Error);

    // And it passes the normality check in FD mode.
    CHECK(is_normal(interp, 5, 5, 1e-6).pass);
}

// ---------------------------------------------------------------------------
// Scenes

TEST_CASE("a minimal scene loads with documented defaults", "[scene]") {
    Scene s = parse_scene(kMinimalScene);
    CHECK(s.schema_version == 1);
    CHECK(s.seed == 0);
    CHECK(s.tolerance == 1e-6);
    CHECK(s.fd_eps == 1e-5);
    CHECK(s.grid_n1 == 21);
    CHECK(s.grid_n2 == 21);
    CHECK(s.wgrid_n1 == 41);
    CHECK(s.wgrid_n2 == 41);
    CHECK(s.sampler.lines == 100);
    CHECK(s.sampler.pairs == 4);
    CHECK(s.trace.t_span == 16.0);
    CHECK(s.trace.bracket_steps == 256);

    OpticalSystem sys = build_system(s);
    REQUIRE(sys.size() == 1);
    CHECK(sys[0].action == SurfaceAction::kReflect);

    RayFamily fam = build_family(s);
    CHECK(fam.name() == "point_source");
    CHECK((fam.eval(0, 0).P - Point3{0, 0, 1}).norm() == 0.0);
}

TEST_CASE("scene diagnostics carry a code and a field path", "[scene]") {
    // Malformed JSON.
    CHECK(code_of("{ not json") == SceneErrorCode::kParse);

    // Unknown keys anywhere.
    CHECK(code_of(R"({"bogus": 1})") == SceneErrorCode::kInvariant);
    try {
        parse_scene(R"({"bogus": 1})");
    } catch (const SceneError& e) {
        CHECK(std::string(e.what()).find("scene.bogus") != std::string::npos);
    }

    // Unknown surface kind.
    CHECK(code_of(R"({"surfaces": {"c": {"kind": "cone"}}})") ==
          SceneErrorCode::kUnknownKind);

    // Dangling interface reference.
    std::string dangling = R"({
      "surfaces": {"lens1": {"kind": "sphere", "center": [0,0,0], "radius": 1}},
      "system": [{"surface": "lens2", "action": "refract", "n1": 1, "n2": 1.5}]
    })";
    CHECK(code_of(dangling) == SceneErrorCode::kDanglingReference);
    try {
        parse_scene(dangling);
    } catch (const SceneError& e) {
        CHECK(std::string(e.what()).find("lens2") != std::string::npos);
    }

    // Bad surface parameters are invariant violations, with the path.
    CHECK(code_of(R"({"surfaces": {"s": {"kind": "sphere", "center": [0,0,0], "radius": -1}}})") ==
          SceneErrorCode::kInvariant);
}

TEST_CASE("media must chain across refractions", "[scene]") {
    std::string mismatch = R"({
      "surfaces": {
        "a": {"kind": "plane", "point": [0,0,0], "normal": [0,0,1]},
        "b": {"kind": "plane", "point": [0,0,-1], "normal": [0,0,1]},
        "m": {"kind": "plane", "point": [0,0,-0.5], "normal": [0,0,1]}
      },
      "system": [
        {"surface": "a", "action": "refract", "n1": 1, "n2": 1.5},
        {"surface": "b", "action": "refract", "n1": 1.2, "n2": 1}
      ]
    })";
    CHECK(code_of(mismatch) == SceneErrorCode::kInvariant);

    // A mirror between refractions keeps the medium: 1.5 carries over it.
    std::string chained = R"({
      "surfaces": {
        "a": {"kind": "plane", "point": [0,0,0], "normal": [0,0,1]},
        "b": {"kind": "plane", "point": [0,0,-1], "normal": [0,0,1]},
        "m": {"kind": "plane", "point": [0,0,-0.5], "normal": [0,0,1]}
      },
      "system": [
        {"surface": "a", "action": "refract", "n1": 1, "n2": 1.5},
        {"surface": "m", "action": "reflect"},
        {"surface": "b", "action": "refract", "n1": 1.5, "n2": 1}
      ]
    })";
    CHECK_NOTHROW(parse_scene(chained));

    // Mirrors take no indices; refractions require physical ones.
    CHECK(code_of(R"({
      "surfaces": {"m": {"kind": "plane", "point": [0,0,0], "normal": [0,0,1]}},
      "system": [{"surface": "m", "action": "reflect", "n1": 1}]
    })") == SceneErrorCode::kInvariant);
    CHECK(code_of(R"({
      "surfaces": {"m": {"kind": "plane", "point": [0,0,0], "normal": [0,0,1]}},
      "system": [{"surface": "m", "action": "refract", "n1": 0.5, "n2": 1}]
    })") == SceneErrorCode::kInvariant);
    CHECK(code_of(R"({
      "surfaces": {"m": {"kind": "plane", "point": [0,0,0], "normal": [0,0,1]}},
      "system": [{"surface": "m", "action": "polarize"}]
    })") == SceneErrorCode::kInvariant);
}

TEST_CASE("family specs are validated member by member", "[scene]") {
    CHECK(code_of(R"({"family": {}})") == SceneErrorCode::kInvariant);
    CHECK(code_of(R"({"family": {"builtin": "skew", "grid_file": "g.csv"}})") ==
          SceneErrorCode::kInvariant);
    CHECK(code_of(R"({"family": {"builtin": "vortex"}})") == SceneErrorCode::kUnknownKind);
    CHECK(code_of(R"({"family": {"builtin": "point_source"}})") == SceneErrorCode::kInvariant);
    CHECK(code_of(R"({"family": {"builtin": "normal_congruence"}})") ==
          SceneErrorCode::kInvariant);
    CHECK(code_of(R"({"family": {"builtin": "normal_congruence", "surface": "nope"}})") ==
          SceneErrorCode::kDanglingReference);
    CHECK(code_of(R"({"family": {"builtin": "skew", "point": [0,0,0]}})") ==
          SceneErrorCode::kInvariant);
    CHECK(code_of(R"({"family": {"grid_file": "g.csv", "domain": [0,1,0,1]}})") ==
          SceneErrorCode::kInvariant);
    CHECK(code_of(R"({"family": {"builtin": "point_source", "point": [0,0,1],
                                 "domain": [1,0,0,1]}})") == SceneErrorCode::kInvariant);

    // Domain overrides reach the built family.
    Scene s = parse_scene(R"({"family": {"builtin": "skew", "domain": [0.1, 0.9, 0.2, 0.8]}})");
    RayFamily fam = build_family(s);
    CHECK(fam.name() == "skew_family");
    CHECK(fam.domain().k1_lo == 0.1);
    CHECK(fam.domain().k2_hi == 0.8);
    CHECK(fam.has_analytic_partials());
    CHECK(pullback_coefficient(fam, 0.5, 0.5) ==
          Catch::Approx(-1.3608276348795434).margin(1e-12));
}

TEST_CASE("other scalar fields are validated", "[scene]") {
    CHECK(code_of(R"({"schema_version": 2})") == SceneErrorCode::kInvariant);
    CHECK(code_of(R"({"seed": -1})") == SceneErrorCode::kInvariant);
    CHECK(code_of(R"({"tolerance": 0})") == SceneErrorCode::kInvariant);
    CHECK(code_of(R"({"grid": [2, 5]})") == SceneErrorCode::kInvariant);
    CHECK(code_of(R"({"grid": [21]})") == SceneErrorCode::kInvariant);
    CHECK(code_of(R"({"rays": [{"point": [0,0,0], "direction": [0,0,0]}]})") ==
          SceneErrorCode::kInvariant);
    CHECK(code_of(R"({"sampler": {"box_lo": [1,0,0], "box_hi": [0,1,1]}})") ==
          SceneErrorCode::kInvariant);
    CHECK(code_of(R"({"wavefront": {"k0": [1]}})") == SceneErrorCode::kInvariant);
    CHECK(code_of(R"({"wavefront": {"order": "diagonal"}})") == SceneErrorCode::kInvariant);
    CHECK(code_of(R"({"trace": {"steps": 0}})") == SceneErrorCode::kInvariant);
    CHECK(code_of(R"({"trace": {"t_span": -1}})") == SceneErrorCode::kInvariant);
}

TEST_CASE("scenes round-trip through save and load", "[scene]") {
    std::string full = R"({
      "schema_version": 1,
      "seed": 12345,
      "tolerance": 1e-7,
      "fd_eps": 2e-5,
      "grid": [11, 13],
      "wavefront_grid": [21, 23],
      "surfaces": {
        "window": {"kind": "plane", "point": [0, 0, 2], "normal": [0, 0, 1]},
        "bowl": {"kind": "paraboloid", "vertex": [0, 0, -1], "axis": [0, 0, 1], "focal": 2},
        "ball": {"kind": "sphere", "center": [0.3, -0.2, 6.2], "radius": 2.5},
        "ripple": {"kind": "sinusoid-bump", "amplitude": 0.02, "omega_x": 1.5, "omega_y": 2.5},
        "ring": {"kind": "torus", "center": [0,0,0], "axis": [0,0,1],
                 "major_radius": 2, "minor_radius": 0.5}
      },
      "system": [
        {"surface": "window", "action": "refract", "n1": 1, "n2": 1.5},
        {"surface": "bowl", "action": "reflect"},
        {"surface": "ball", "action": "refract", "n1": 1.5, "n2": 1}
      ],
      "family": {"builtin": "point_source", "point": [0, 0, 3],
                 "direction": [0, 0, -1], "domain": [-0.02, 0.02, -0.02, 0.02]},
      "rays": [{"point": [0, 0, 3], "direction": [0, 0, -1]}],
      "sampler": {"box_lo": [-1, -1, -1], "box_hi": [1, 1, 1],
                  "cap_axis": [0, 0, -1], "cap_half_angle": 0.5,
                  "lines": 50, "pairs": 2},
      "wavefront": {"lambda0": 1.5, "k0": [0, 0], "order": "column-major"},
      "trace": {"t_span": 20, "steps": 128, "t_eps": 1e-8, "forward_only": true}
    })";
    Scene s = parse_scene(full);
    std::string saved = save_scene(s);
    Scene back = parse_scene(saved);
    CHECK(s == back);
    CHECK(save_scene(back) == saved);  // canonical form is a fixpoint

    // Saved text is itself valid JSON with the full key set materialized.
    nlohmann::json j = nlohmann::json::parse(saved);
    CHECK(j.at("wavefront").at("order") == "column-major");
    CHECK(j.at("trace").at("forward_only") == true);
    CHECK(j.at("family").at("domain").size() == 4);

    // Distinct scenes compare unequal.
    Scene other = parse_scene(kMinimalScene);
    CHECK_FALSE(s == other);
}

TEST_CASE("scene files load from disk with relative grid paths", "[scene]") {
    auto dir = std::filesystem::temp_directory_path() / "symopt_scene_test";
    std::filesystem::create_directories(dir);

    write_file(dir / "fam.csv",
               write_family_grid(sample_family_grid(point_source({0, 0, 2}), 5, 5)));
    write_file(dir / "scene.json", R"({"family": {"grid_file": "fam.csv"}})");

    Scene s = load_scene(dir / "scene.json");
    CHECK(s.base_dir == dir);
    RayFamily fam = build_family(s);
    CHECK(fam.name() == "grid_family");
    CHECK((fam.eval(0, 0).P - Point3{0, 0, 2}).norm() < 1e-12);

    CHECK_THROWS_AS(load_scene(dir / "missing.json"), SceneError);
    try {
        load_scene(dir / "missing.json");
    } catch (const SceneError& e) {
        CHECK(e.code() == SceneErrorCode::kParse);
    }

    std::filesystem::remove_all(dir);
}

TEST_CASE("runtime options are drawn from the scene", "[scene]") {
    Scene s = parse_scene(R"({"trace": {"t_span": 8, "steps": 64, "t_eps": 1e-7,
                                        "forward_only": true}})");
    TraceOpts topts = trace_opts(s);
    CHECK(topts.t_span == 8.0);
    CHECK(topts.bracket_steps == 64);
    CHECK(topts.t_eps == 1e-7);
    CHECK(topts.forward_only);

    IntersectOpts iopts = intersect_opts(s);
    CHECK(iopts.t_min == -8.0);
    CHECK(iopts.t_max == 8.0);

    CHECK_THROWS_AS(build_family(parse_scene("{}")), Error);
}
