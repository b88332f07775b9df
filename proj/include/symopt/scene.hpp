#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "symopt/error.hpp"
#include "symopt/families.hpp"
#include "symopt/fmt.hpp"
#include "symopt/grid_file.hpp"
#include "symopt/optics.hpp"
#include "symopt/surfaces.hpp"
#include "symopt/verify.hpp"

namespace symopt {

/// Scene files fail in four distinguishable ways; the code is part of
/// the diagnostic line so scripts can tell them apart (the process exit
/// code lumps them all under "scene/usage error").
enum class SceneErrorCode { kParse, kUnknownKind, kDanglingReference, kInvariant };

inline std::string_view to_string(SceneErrorCode c) {
    switch (c) {
        case SceneErrorCode::kParse: return "E_PARSE";
        case SceneErrorCode::kUnknownKind: return "E_UNKNOWN_KIND";
        case SceneErrorCode::kDanglingReference: return "E_DANGLING_REF";
        case SceneErrorCode::kInvariant: return "E_INVARIANT";
    }
    return "E_UNKNOWN";
}

class SceneError : public Error {
public:
    SceneError(SceneErrorCode code, const std::string& what)
        : Error(std::string(to_string(code)) + ": " + what), code_(code) {}
    SceneErrorCode code() const { return code_; }

private:
    SceneErrorCode code_;
};

struct InterfaceSpec {
    std::string surface;
    SurfaceAction action = SurfaceAction::kReflect;
    double n1 = 1.0, n2 = 1.0;
};

struct RaySpec {
    Point3 point;
    Vec3 direction;
};

/// Family selection: exactly one of `builtin` (with its parameters) or
/// `grid_file` (path to a tabulated family, relative to the scene file).
struct FamilySpec {
    std::string builtin;
    std::string grid_file;
    Point3 point{0, 0, 0};      ///< point_source: source location
    Vec3 direction{0, 0, 1};    ///< point_source: central direction
    std::string surface;        ///< normal_congruence: surface reference
    bool has_domain = false;
    Domain domain;
};

struct SamplerSpec {
    LineSampler sampler;
    int lines = 100;
    int pairs = 4;
};

struct WavefrontSpec {
    double lambda0 = 0.0;
    bool has_k0 = false;        ///< anchor defaults to the domain center
    double k0_1 = 0.0, k0_2 = 0.0;
    PathOrder order = PathOrder::kRowMajor;
};

struct TraceSpec {
    double t_span = 16.0;
    int bracket_steps = 256;
    double t_eps = 1e-9;
    bool forward_only = false;
};

/// A fully validated scene: named surfaces, an ordered optical system
/// over them, an optional ray family, explicit rays for tracing, and
/// the numeric knobs every command shares.
struct Scene {
    int schema_version = 1;
    std::uint64_t seed = 0;
    double tolerance = 1e-6;
    double fd_eps = 1e-5;       ///< step scale for map differentials
    int grid_n1 = 21, grid_n2 = 21;
    int wgrid_n1 = 41, wgrid_n2 = 41;
    std::map<std::string, ImplicitSurface> surfaces;
    std::vector<InterfaceSpec> system;
    std::optional<FamilySpec> family;
    SamplerSpec sampler;
    std::vector<RaySpec> rays;
    WavefrontSpec wavefront;
    TraceSpec trace;
    std::filesystem::path base_dir;  ///< directory of the scene file; not serialized
};

namespace scene_detail {

using json = nlohmann::json;

[[noreturn]] inline void fail(SceneErrorCode code, const std::string& path,
                              const std::string& msg) {
    throw SceneError(code, path.empty() ? msg : path + ": " + msg);
}

inline void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(SceneErrorCode::kInvariant, path, "expected an object");
}

inline void check_keys(const json& obj, const std::string& path,
                       std::initializer_list<std::string_view> allowed) {
    for (const auto& item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
            fail(SceneErrorCode::kInvariant, path + "." + item.key(), "unknown key");
    }
}

inline double num(const json& j, const std::string& path) {
    if (!j.is_number()) fail(SceneErrorCode::kInvariant, path, "expected a number");
    return j.get<double>();
}

inline int integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(SceneErrorCode::kInvariant, path, "expected an integer");
    return j.get<int>();
}

inline bool boolean(const json& j, const std::string& path) {
    if (!j.is_boolean()) fail(SceneErrorCode::kInvariant, path, "expected a boolean");
    return j.get<bool>();
}

inline std::string str(const json& j, const std::string& path) {
    if (!j.is_string()) fail(SceneErrorCode::kInvariant, path, "expected a string");
    return j.get<std::string>();
}

inline Vec3 vec3(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3)
        fail(SceneErrorCode::kInvariant, path, "expected an array of 3 numbers");
    return {num(j[0], path + "[0]"), num(j[1], path + "[1]"), num(j[2], path + "[2]")};
}

inline Domain domain4(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 4)
        fail(SceneErrorCode::kInvariant, path,
             "expected [k1_lo, k1_hi, k2_lo, k2_hi]");
    Domain d{num(j[0], path), num(j[1], path), num(j[2], path), num(j[3], path)};
    if (!(d.span1() > 0.0) || !(d.span2() > 0.0))
        fail(SceneErrorCode::kInvariant, path, "domain spans must be positive");
    return d;
}

inline std::pair<int, int> grid2(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2)
        fail(SceneErrorCode::kInvariant, path, "expected [n1, n2]");
    int n1 = integer(j[0], path + "[0]");
    int n2 = integer(j[1], path + "[1]");
    if (n1 < 3 || n2 < 3) fail(SceneErrorCode::kInvariant, path, "grids must be at least 3x3");
    return {n1, n2};
}

inline ImplicitSurface parse_surface(const json& j, const std::string& path) {
    require_object(j, path);
    if (!j.contains("kind")) fail(SceneErrorCode::kInvariant, path, "missing 'kind'");
    std::string kind = str(j["kind"], path + ".kind");
    try {
        if (kind == "plane") {
            check_keys(j, path, {"kind", "point", "normal"});
            if (!j.contains("point") || !j.contains("normal"))
                fail(SceneErrorCode::kInvariant, path, "plane needs 'point' and 'normal'");
            return ImplicitSurface(
                Plane(vec3(j["point"], path + ".point"), vec3(j["normal"], path + ".normal")));
        }
        if (kind == "sphere") {
            check_keys(j, path, {"kind", "center", "radius"});
            if (!j.contains("center") || !j.contains("radius"))
                fail(SceneErrorCode::kInvariant, path, "sphere needs 'center' and 'radius'");
            return ImplicitSurface(Sphere(vec3(j["center"], path + ".center"),
                                          num(j["radius"], path + ".radius")));
        }
        if (kind == "paraboloid") {
            check_keys(j, path, {"kind", "vertex", "axis", "focal"});
            if (!j.contains("vertex") || !j.contains("axis") || !j.contains("focal"))
                fail(SceneErrorCode::kInvariant, path,
                     "paraboloid needs 'vertex', 'axis' and 'focal'");
            return ImplicitSurface(Paraboloid(vec3(j["vertex"], path + ".vertex"),
                                              vec3(j["axis"], path + ".axis"),
                                              num(j["focal"], path + ".focal")));
        }
        if (kind == "sinusoid-bump") {
            check_keys(j, path, {"kind", "amplitude", "omega_x", "omega_y"});
            if (!j.contains("amplitude") || !j.contains("omega_x") || !j.contains("omega_y"))
                fail(SceneErrorCode::kInvariant, path,
                     "sinusoid-bump needs 'amplitude', 'omega_x' and 'omega_y'");
            return ImplicitSurface(SinusoidBump(num(j["amplitude"], path + ".amplitude"),
                                                num(j["omega_x"], path + ".omega_x"),
                                                num(j["omega_y"], path + ".omega_y")));
        }
        if (kind == "torus") {
            check_keys(j, path, {"kind", "center", "axis", "major_radius", "minor_radius"});
            if (!j.contains("center") || !j.contains("axis") ||
                !j.contains("major_radius") || !j.contains("minor_radius"))
                fail(SceneErrorCode::kInvariant, path,
                     "torus needs 'center', 'axis', 'major_radius' and 'minor_radius'");
            return ImplicitSurface(Torus(vec3(j["center"], path + ".center"),
                                         vec3(j["axis"], path + ".axis"),
                                         num(j["major_radius"], path + ".major_radius"),
                                         num(j["minor_radius"], path + ".minor_radius")));
        }
    } catch (const SceneError&) {
        throw;
    } catch (const Error& e) {
        // Shape constructors enforce parameter invariants.
        fail(SceneErrorCode::kInvariant, path, e.what());
    }
    fail(SceneErrorCode::kUnknownKind, path + ".kind", "unknown surface kind '" + kind + "'");
}

} // namespace scene_detail

/// Parse and validate a scene from JSON text. Every diagnostic carries
/// the dotted field path; base_dir anchors relative grid-file paths.
inline Scene parse_scene(const std::string& text,
                         const std::filesystem::path& base_dir = {}) {
    using namespace scene_detail;
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        fail(SceneErrorCode::kParse, "", e.what());
    }
    require_object(root, "scene");
    check_keys(root, "scene",
               {"schema_version", "seed", "tolerance", "fd_eps", "grid", "wavefront_grid",
                "surfaces", "system", "family", "rays", "sampler", "wavefront", "trace"});

    Scene s;
    s.base_dir = base_dir;
    if (root.contains("schema_version")) {
        s.schema_version = integer(root["schema_version"], "scene.schema_version");
        if (s.schema_version != 1)
            fail(SceneErrorCode::kInvariant, "scene.schema_version",
                 "unsupported version " + std::to_string(s.schema_version));
    }
    if (root.contains("seed")) {
        const json& j = root["seed"];
        if (!j.is_number_unsigned() && !j.is_number_integer())
            fail(SceneErrorCode::kInvariant, "scene.seed", "expected an unsigned integer");
        if (j.is_number_integer() && j.get<long long>() < 0)
            fail(SceneErrorCode::kInvariant, "scene.seed", "seed must be non-negative");
        s.seed = j.get<std::uint64_t>();
    }
    if (root.contains("tolerance")) {
        s.tolerance = num(root["tolerance"], "scene.tolerance");
        if (!(s.tolerance > 0.0))
            fail(SceneErrorCode::kInvariant, "scene.tolerance", "must be positive");
    }
    if (root.contains("fd_eps")) {
        s.fd_eps = num(root["fd_eps"], "scene.fd_eps");
        if (!(s.fd_eps > 0.0))
            fail(SceneErrorCode::kInvariant, "scene.fd_eps", "must be positive");
    }
    if (root.contains("grid"))
        std::tie(s.grid_n1, s.grid_n2) = grid2(root["grid"], "scene.grid");
    if (root.contains("wavefront_grid"))
        std::tie(s.wgrid_n1, s.wgrid_n2) = grid2(root["wavefront_grid"], "scene.wavefront_grid");

    if (root.contains("surfaces")) {
        require_object(root["surfaces"], "scene.surfaces");
        for (const auto& item : root["surfaces"].items())
            s.surfaces.emplace(item.key(),
                               parse_surface(item.value(), "scene.surfaces." + item.key()));
    }

    if (root.contains("system")) {
        const json& sys = root["system"];
        if (!sys.is_array())
            fail(SceneErrorCode::kInvariant, "scene.system", "expected an array");
        for (std::size_t i = 0; i < sys.size(); ++i) {
            std::string path = "scene.system[" + std::to_string(i) + "]";
            const json& j = sys[i];
            require_object(j, path);
            check_keys(j, path, {"surface", "action", "n1", "n2"});
            if (!j.contains("surface") || !j.contains("action"))
                fail(SceneErrorCode::kInvariant, path, "needs 'surface' and 'action'");
            InterfaceSpec spec;
            spec.surface = str(j["surface"], path + ".surface");
            if (!s.surfaces.count(spec.surface))
                fail(SceneErrorCode::kDanglingReference, path + ".surface",
                     "surface '" + spec.surface + "' is not defined");
            std::string action = str(j["action"], path + ".action");
            if (action == "reflect") {
                spec.action = SurfaceAction::kReflect;
                if (j.contains("n1") || j.contains("n2"))
                    fail(SceneErrorCode::kInvariant, path,
                         "mirrors do not take refractive indices");
            } else if (action == "refract") {
                spec.action = SurfaceAction::kRefract;
                if (!j.contains("n1") || !j.contains("n2"))
                    fail(SceneErrorCode::kInvariant, path,
                         "refraction needs 'n1' and 'n2'");
                spec.n1 = num(j["n1"], path + ".n1");
                spec.n2 = num(j["n2"], path + ".n2");
                if (!(spec.n1 >= 1.0) || !(spec.n2 >= 1.0))
                    fail(SceneErrorCode::kInvariant, path,
                         "refractive indices must be >= 1");
            } else {
                fail(SceneErrorCode::kInvariant, path + ".action",
                     "expected 'reflect' or 'refract'");
            }
            s.system.push_back(std::move(spec));
        }
        // Media must be continuous along the chain of refractions
        // (mirrors keep the ray in its current medium).
        const InterfaceSpec* prev_refract = nullptr;
        for (std::size_t i = 0; i < s.system.size(); ++i) {
            if (s.system[i].action != SurfaceAction::kRefract) continue;
            if (prev_refract && prev_refract->n2 != s.system[i].n1)
                fail(SceneErrorCode::kInvariant,
                     "scene.system[" + std::to_string(i) + "].n1",
                     "medium mismatch: previous refraction exits into n=" +
                         float_short(prev_refract->n2) + " but this one starts in n=" +
                         float_short(s.system[i].n1));
            prev_refract = &s.system[i];
        }
    }

    if (root.contains("family")) {
        const json& j = root["family"];
        require_object(j, "scene.family");
        check_keys(j, "scene.family",
                   {"builtin", "grid_file", "point", "direction", "surface", "domain"});
        FamilySpec f;
        bool has_builtin = j.contains("builtin"), has_file = j.contains("grid_file");
        if (has_builtin == has_file)
            fail(SceneErrorCode::kInvariant, "scene.family",
                 "exactly one of 'builtin' or 'grid_file' required");
        if (has_file) {
            f.grid_file = str(j["grid_file"], "scene.family.grid_file");
            for (const char* k : {"point", "direction", "surface", "domain"})
                if (j.contains(k))
                    fail(SceneErrorCode::kInvariant, std::string("scene.family.") + k,
                         "not applicable to grid-file families");
        } else {
            f.builtin = str(j["builtin"], "scene.family.builtin");
            if (j.contains("domain")) {
                f.domain = domain4(j["domain"], "scene.family.domain");
                f.has_domain = true;
            }
            if (f.builtin == "point_source") {
                if (!j.contains("point"))
                    fail(SceneErrorCode::kInvariant, "scene.family",
                         "point_source needs 'point'");
                f.point = vec3(j["point"], "scene.family.point");
                if (j.contains("direction"))
                    f.direction = vec3(j["direction"], "scene.family.direction");
                if (j.contains("surface"))
                    fail(SceneErrorCode::kInvariant, "scene.family.surface",
                         "not applicable to point_source");
            } else if (f.builtin == "normal_congruence") {
                if (!j.contains("surface"))
                    fail(SceneErrorCode::kInvariant, "scene.family",
                         "normal_congruence needs 'surface'");
                f.surface = str(j["surface"], "scene.family.surface");
                if (!s.surfaces.count(f.surface))
                    fail(SceneErrorCode::kDanglingReference, "scene.family.surface",
                         "surface '" + f.surface + "' is not defined");
                for (const char* k : {"point", "direction"})
                    if (j.contains(k))
                        fail(SceneErrorCode::kInvariant, std::string("scene.family.") + k,
                             "not applicable to normal_congruence");
            } else if (f.builtin == "skew") {
                for (const char* k : {"point", "direction", "surface"})
                    if (j.contains(k))
                        fail(SceneErrorCode::kInvariant, std::string("scene.family.") + k,
                             "not applicable to skew");
            } else {
                fail(SceneErrorCode::kUnknownKind, "scene.family.builtin",
                     "unknown builtin family '" + f.builtin + "'");
            }
        }
        s.family = std::move(f);
    }

    if (root.contains("rays")) {
        const json& rays = root["rays"];
        if (!rays.is_array())
            fail(SceneErrorCode::kInvariant, "scene.rays", "expected an array");
        for (std::size_t i = 0; i < rays.size(); ++i) {
            std::string path = "scene.rays[" + std::to_string(i) + "]";
            const json& j = rays[i];
            require_object(j, path);
            check_keys(j, path, {"point", "direction"});
            if (!j.contains("point") || !j.contains("direction"))
                fail(SceneErrorCode::kInvariant, path, "needs 'point' and 'direction'");
            RaySpec r{vec3(j["point"], path + ".point"),
                      vec3(j["direction"], path + ".direction")};
            if (r.direction.norm() <= kZeroDirectionTol)
                fail(SceneErrorCode::kInvariant, path + ".direction", "zero direction");
            s.rays.push_back(r);
        }
    }

    if (root.contains("sampler")) {
        const json& j = root["sampler"];
        require_object(j, "scene.sampler");
        check_keys(j, "scene.sampler",
                   {"box_lo", "box_hi", "cap_axis", "cap_half_angle", "lines", "pairs"});
        if (j.contains("box_lo")) s.sampler.sampler.box_lo = vec3(j["box_lo"], "scene.sampler.box_lo");
        if (j.contains("box_hi")) s.sampler.sampler.box_hi = vec3(j["box_hi"], "scene.sampler.box_hi");
        const Point3& lo = s.sampler.sampler.box_lo;
        const Point3& hi = s.sampler.sampler.box_hi;
        if (!(lo.x <= hi.x && lo.y <= hi.y && lo.z <= hi.z))
            fail(SceneErrorCode::kInvariant, "scene.sampler", "box_lo must be <= box_hi");
        if (j.contains("cap_axis"))
            s.sampler.sampler.cap_axis = vec3(j["cap_axis"], "scene.sampler.cap_axis");
        if (s.sampler.sampler.cap_axis.norm() <= kZeroDirectionTol)
            fail(SceneErrorCode::kInvariant, "scene.sampler.cap_axis", "zero direction");
        if (j.contains("cap_half_angle")) {
            s.sampler.sampler.cap_half_angle =
                num(j["cap_half_angle"], "scene.sampler.cap_half_angle");
            if (!(s.sampler.sampler.cap_half_angle > 0.0))
                fail(SceneErrorCode::kInvariant, "scene.sampler.cap_half_angle",
                     "must be positive");
        }
        if (j.contains("lines")) {
            s.sampler.lines = integer(j["lines"], "scene.sampler.lines");
            if (s.sampler.lines < 1)
                fail(SceneErrorCode::kInvariant, "scene.sampler.lines", "must be >= 1");
        }
        if (j.contains("pairs")) {
            s.sampler.pairs = integer(j["pairs"], "scene.sampler.pairs");
            if (s.sampler.pairs < 1)
                fail(SceneErrorCode::kInvariant, "scene.sampler.pairs", "must be >= 1");
        }
    }

    if (root.contains("wavefront")) {
        const json& j = root["wavefront"];
        require_object(j, "scene.wavefront");
        check_keys(j, "scene.wavefront", {"lambda0", "k0", "order"});
        if (j.contains("lambda0"))
            s.wavefront.lambda0 = num(j["lambda0"], "scene.wavefront.lambda0");
        if (j.contains("k0")) {
            const json& k0 = j["k0"];
            if (!k0.is_array() || k0.size() != 2)
                fail(SceneErrorCode::kInvariant, "scene.wavefront.k0",
                     "expected [k1, k2]");
            s.wavefront.has_k0 = true;
            s.wavefront.k0_1 = num(k0[0], "scene.wavefront.k0[0]");
            s.wavefront.k0_2 = num(k0[1], "scene.wavefront.k0[1]");
        }
        if (j.contains("order")) {
            std::string order = str(j["order"], "scene.wavefront.order");
            if (order == "row-major")
                s.wavefront.order = PathOrder::kRowMajor;
            else if (order == "column-major")
                s.wavefront.order = PathOrder::kColumnMajor;
            else
                fail(SceneErrorCode::kInvariant, "scene.wavefront.order",
                     "expected 'row-major' or 'column-major'");
        }
    }

    if (root.contains("trace")) {
        const json& j = root["trace"];
        require_object(j, "scene.trace");
        check_keys(j, "scene.trace", {"t_span", "steps", "t_eps", "forward_only"});
        if (j.contains("t_span")) {
            s.trace.t_span = num(j["t_span"], "scene.trace.t_span");
            if (!(s.trace.t_span > 0.0))
                fail(SceneErrorCode::kInvariant, "scene.trace.t_span", "must be positive");
        }
        if (j.contains("steps")) {
            s.trace.bracket_steps = integer(j["steps"], "scene.trace.steps");
            if (s.trace.bracket_steps < 1)
                fail(SceneErrorCode::kInvariant, "scene.trace.steps", "must be >= 1");
        }
        if (j.contains("t_eps")) {
            s.trace.t_eps = num(j["t_eps"], "scene.trace.t_eps");
            if (!(s.trace.t_eps >= 0.0))
                fail(SceneErrorCode::kInvariant, "scene.trace.t_eps", "must be >= 0");
        }
        if (j.contains("forward_only"))
            s.trace.forward_only = boolean(j["forward_only"], "scene.trace.forward_only");
    }

    return s;
}

inline Scene load_scene(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f)
        throw SceneError(SceneErrorCode::kParse,
                         "cannot open scene file '" + path.string() + "'");
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_scene(buf.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Building runtime objects from a scene

inline TraceOpts trace_opts(const Scene& s) {
    TraceOpts o;
    o.forward_only = s.trace.forward_only;
    o.t_eps = s.trace.t_eps;
    o.t_span = s.trace.t_span;
    o.bracket_steps = s.trace.bracket_steps;
    return o;
}

inline IntersectOpts intersect_opts(const Scene& s) {
    return {-s.trace.t_span, s.trace.t_span, s.trace.bracket_steps};
}

inline OpticalSystem build_system(const Scene& s) {
    OpticalSystem sys;
    for (const InterfaceSpec& spec : s.system)
        sys.push_back({s.surfaces.at(spec.surface), spec.action, spec.n1, spec.n2});
    return sys;
}

inline RayFamily build_family(const Scene& s) {
    if (!s.family) throw Error("scene has no family");
    const FamilySpec& f = *s.family;
    if (!f.grid_file.empty())
        return grid_family(read_family_grid((s.base_dir / f.grid_file).string()));
    if (f.builtin == "point_source")
        return f.has_domain ? point_source(f.point, f.direction, f.domain)
                            : point_source(f.point, f.direction);
    if (f.builtin == "normal_congruence")
        return f.has_domain ? normal_congruence(s.surfaces.at(f.surface), f.domain)
                            : normal_congruence(s.surfaces.at(f.surface));
    if (f.builtin == "skew") {
        RayFamily base = skew_family();
        if (!f.has_domain) return base;
        return RayFamily(base.name(), f.domain,
                         [base](double k1, double k2) { return base.eval(k1, k2); },
                         [base](double k1, double k2) { return base.analytic_partials(k1, k2); });
    }
    throw Error("scene family: unknown builtin '" + f.builtin + "'");
}

// ---------------------------------------------------------------------------
// Canonical save: fixed key order, 17-digit numbers, defaults
// materialized. load(save(scene)) == scene, and saving is idempotent.

namespace scene_detail {

inline std::string jvec(const Vec3& v) {
    return "[" + float17(v.x) + ", " + float17(v.y) + ", " + float17(v.z) + "]";
}

inline std::string jsurface(const ImplicitSurface& s) {
    struct V {
        std::string operator()(const Plane& p) const {
            return "{\"kind\": \"plane\", \"point\": " + jvec(p.point) +
                   ", \"normal\": " + jvec(p.normal.vec()) + "}";
        }
        std::string operator()(const Sphere& p) const {
            return "{\"kind\": \"sphere\", \"center\": " + jvec(p.center) +
                   ", \"radius\": " + float17(p.radius) + "}";
        }
        std::string operator()(const Paraboloid& p) const {
            return "{\"kind\": \"paraboloid\", \"vertex\": " + jvec(p.vertex) +
                   ", \"axis\": " + jvec(p.axis.vec()) + ", \"focal\": " + float17(p.focal) +
                   "}";
        }
        std::string operator()(const SinusoidBump& p) const {
            return "{\"kind\": \"sinusoid-bump\", \"amplitude\": " + float17(p.amplitude) +
                   ", \"omega_x\": " + float17(p.omega_x) +
                   ", \"omega_y\": " + float17(p.omega_y) + "}";
        }
        std::string operator()(const Torus& p) const {
            return "{\"kind\": \"torus\", \"center\": " + jvec(p.center) +
                   ", \"axis\": " + jvec(p.axis.vec()) +
                   ", \"major_radius\": " + float17(p.major_radius) +
                   ", \"minor_radius\": " + float17(p.minor_radius) + "}";
        }
    };
    return std::visit(V{}, s.shape());
}

} // namespace scene_detail

inline std::string save_scene(const Scene& s) {
    using namespace scene_detail;
    std::string out = "{\n";
    out += "  \"schema_version\": " + std::to_string(s.schema_version) + ",\n";
    out += "  \"seed\": " + std::to_string(s.seed) + ",\n";
    out += "  \"tolerance\": " + float17(s.tolerance) + ",\n";
    out += "  \"fd_eps\": " + float17(s.fd_eps) + ",\n";
    out += "  \"grid\": [" + std::to_string(s.grid_n1) + ", " + std::to_string(s.grid_n2) +
           "],\n";
    out += "  \"wavefront_grid\": [" + std::to_string(s.wgrid_n1) + ", " +
           std::to_string(s.wgrid_n2) + "],\n";

    out += "  \"surfaces\": {";
    bool first = true;
    for (const auto& [name, surf] : s.surfaces) {
        out += first ? "\n" : ",\n";
        out += "    \"" + json_escape(name) + "\": " + jsurface(surf);
        first = false;
    }
    out += s.surfaces.empty() ? "},\n" : "\n  },\n";

    out += "  \"system\": [";
    for (std::size_t i = 0; i < s.system.size(); ++i) {
        const InterfaceSpec& sp = s.system[i];
        out += i ? ",\n" : "\n";
        out += "    {\"surface\": \"" + json_escape(sp.surface) + "\", \"action\": \"";
        if (sp.action == SurfaceAction::kReflect) {
            out += "reflect\"}";
        } else {
            out += "refract\", \"n1\": " + float17(sp.n1) + ", \"n2\": " + float17(sp.n2) +
                   "}";
        }
    }
    out += s.system.empty() ? "],\n" : "\n  ],\n";

    if (s.family) {
        const FamilySpec& f = *s.family;
        out += "  \"family\": {";
        if (!f.grid_file.empty()) {
            out += "\"grid_file\": \"" + json_escape(f.grid_file) + "\"";
        } else {
            out += "\"builtin\": \"" + f.builtin + "\"";
            if (f.builtin == "point_source")
                out += ", \"point\": " + jvec(f.point) + ", \"direction\": " + jvec(f.direction);
            if (f.builtin == "normal_congruence")
                out += ", \"surface\": \"" + json_escape(f.surface) + "\"";
            if (f.has_domain)
                out += ", \"domain\": [" + float17(f.domain.k1_lo) + ", " +
                       float17(f.domain.k1_hi) + ", " + float17(f.domain.k2_lo) + ", " +
                       float17(f.domain.k2_hi) + "]";
        }
        out += "},\n";
    }

    out += "  \"rays\": [";
    for (std::size_t i = 0; i < s.rays.size(); ++i) {
        out += i ? ",\n" : "\n";
        out += "    {\"point\": " + jvec(s.rays[i].point) +
               ", \"direction\": " + jvec(s.rays[i].direction) + "}";
    }
    out += s.rays.empty() ? "],\n" : "\n  ],\n";

    out += "  \"sampler\": {\"box_lo\": " + jvec(s.sampler.sampler.box_lo) +
           ", \"box_hi\": " + jvec(s.sampler.sampler.box_hi) +
           ", \"cap_axis\": " + jvec(s.sampler.sampler.cap_axis) +
           ", \"cap_half_angle\": " + float17(s.sampler.sampler.cap_half_angle) +
           ", \"lines\": " + std::to_string(s.sampler.lines) +
           ", \"pairs\": " + std::to_string(s.sampler.pairs) + "},\n";

    out += "  \"wavefront\": {\"lambda0\": " + float17(s.wavefront.lambda0);
    if (s.wavefront.has_k0)
        out += ", \"k0\": [" + float17(s.wavefront.k0_1) + ", " + float17(s.wavefront.k0_2) +
               "]";
    out += std::string(", \"order\": \"") +
           (s.wavefront.order == PathOrder::kRowMajor ? "row-major" : "column-major") +
           "\"},\n";

    out += "  \"trace\": {\"t_span\": " + float17(s.trace.t_span) +
           ", \"steps\": " + std::to_string(s.trace.bracket_steps) +
           ", \"t_eps\": " + float17(s.trace.t_eps) + ", \"forward_only\": " +
           (s.trace.forward_only ? "true" : "false") + "}\n";
    out += "}\n";
    return out;
}

/// Scenes compare equal when their canonical serializations agree
/// (base_dir is a load artifact, not scene content).
inline bool operator==(const Scene& a, const Scene& b) {
    return save_scene(a) == save_scene(b);
}

} // namespace symopt
