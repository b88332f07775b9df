#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "symopt/chart.hpp"
#include "symopt/error.hpp"
#include "symopt/line.hpp"
#include "symopt/surfaces.hpp"
#include "symopt/vec3.hpp"

namespace symopt {

/// Mirror-reflect the unit direction u at a surface normal n (either
/// orientation): u - 2 (u.n) n. Preserves length and flips exactly the
/// normal component, so angle of incidence equals angle of reflection.
inline Vec3 reflect_direction(const Vec3& u, const Vec3& n) {
    return u - n * (2.0 * u.dot(n));
}

/// Snell refraction of a unit direction. The normal is re-oriented to
/// face against the incoming ray (c1 = -u.n > 0), making the explicit
/// solution single-valued:
///
///     mu = n1/n2,  s^2 = mu^2 (1 - c1^2),
///     u2 = mu u + (mu c1 - sqrt(1 - s^2)) n.
///
/// This is the unique unit vector continuing into the second medium
/// with tangential component scaled by mu (the classical tangential
/// relation n2 (u2)_tan = n1 (u)_tan). s^2 >= 1, including the exact
/// boundary, reports total internal reflection: the transmitted branch
/// degenerates to tangential there and the map stops being a
/// diffeomorphism.
inline Expected<Vec3> refract_direction(const Vec3& u, const Vec3& normal,
                                        double n1, double n2) {
    Vec3 n = normal;
    double c1 = -u.dot(n);
    if (c1 < 0.0) {
        n = -n;
        c1 = -c1;
    }
    double mu = n1 / n2;
    double s2 = mu * mu * (1.0 - c1 * c1);
    if (s2 >= 1.0) return RayError::kTotalInternalReflection;
    return u * mu + n * (mu * c1 - std::sqrt(1.0 - s2));
}

/// Reflection as a map on oriented lines: intersect, then send the line
/// onward from the incidence point with the mirrored direction.
/// Expected failures: miss, grazing incidence.
inline Expected<OrientedLine> reflect(const OrientedLine& line, const ImplicitSurface& mirror,
                                      const IntersectOpts& opts = {}) {
    Expected<Hit> hit = intersect(line, mirror, opts);
    if (!hit) return hit.error();
    if (hit->grazing) return RayError::kGrazing;
    Vec3 n = mirror.normal_at(hit->point).vec();
    return OrientedLine(hit->point, reflect_direction(line.direction().vec(), n));
}

/// Refraction as a map on oriented lines across a surface separating
/// media of indices n1 (incoming side) and n2.
/// Expected failures: miss, grazing, total internal reflection.
inline Expected<OrientedLine> refract(const OrientedLine& line, const ImplicitSurface& surface,
                                      double n1, double n2,
                                      const IntersectOpts& opts = {}) {
    Expected<Hit> hit = intersect(line, surface, opts);
    if (!hit) return hit.error();
    if (hit->grazing) return RayError::kGrazing;
    Vec3 n = surface.normal_at(hit->point).vec();
    Expected<Vec3> u2 = refract_direction(line.direction().vec(), n, n1, n2);
    if (!u2) return u2.error();
    return OrientedLine(hit->point, *u2);
}

enum class SurfaceAction { kReflect, kRefract };

/// One optical surface with its action. Refraction carries the indices
/// of the media before (n1) and after (n2) the surface; mirrors keep
/// the ray in its current medium and the indices are unused.
struct Interface {
    ImplicitSurface surface;
    SurfaceAction action = SurfaceAction::kReflect;
    double n1 = 1.0;
    double n2 = 1.0;
};

/// Ordered sequence of interfaces a ray passes through.
using OpticalSystem = std::vector<Interface>;

/// Options for trace(). The ray is advanced interface by interface; at
/// each step the intersection search runs in a window measured from a
/// reference point on the current line: the previous hit (or the start
/// reference for the first step). Later steps search strictly forward,
/// offset by t_eps to avoid re-finding the surface just left. The first
/// step searches a symmetric window by default, matching the
/// convention that a line is a whole line rather than a half-ray; pass
/// forward_only to model a source emitting from a known point.
struct TraceOpts {
    std::optional<Point3> from;  ///< start reference; defaults to the foot point
    bool forward_only = false;   ///< restrict the first search to t > 0
    double t_eps = 1e-9;
    double t_span = 16.0;
    int bracket_steps = 256;
};

/// Full record of a ray's passage through a system.
struct TraceResult {
    OrientedLine line;                  ///< outgoing line after the last interface
    std::vector<Point3> hits;           ///< one incidence point per interface
    std::vector<double> segment_lengths;///< Euclidean, between consecutive reference points
    double optical_path_length = 0.0;   ///< sum of n_i * length_i
};

/// Apply every interface of `sys` in order. Segment lengths are
/// measured from the start reference to the first hit, then hit to hit.
/// The optical path length weights each segment by the index of the
/// medium it runs in: the leg before the first interface uses that
/// interface's n1, refraction switches the current index to its n2, and
/// mirrors keep it.
inline Expected<TraceResult, TraceFailure> trace(const OrientedLine& ray,
                                                 const OpticalSystem& sys,
                                                 const TraceOpts& opts = {}) {
    if (sys.empty()) throw Error("trace: optical system has no interfaces");

    TraceResult out{ray, {}, {}, 0.0};
    OrientedLine current = ray;
    Point3 ref = opts.from ? *opts.from : ray.foot();
    if (opts.from) {
        double off = (reject(*opts.from - ray.foot(), ray.direction().vec())).norm();
        if (off > 1e-6 * (1.0 + ray.foot().norm()))
            throw Error("trace: start reference point does not lie on the ray");
    }
    double index = sys.front().n1;

    for (std::size_t i = 0; i < sys.size(); ++i) {
        const Interface& step = sys[i];
        double t_ref = current.parameter_of(ref);
        IntersectOpts window;
        window.bracket_steps = opts.bracket_steps;
        bool symmetric = (i == 0) && !opts.forward_only;
        window.t_min = t_ref + (symmetric ? -opts.t_span : opts.t_eps);
        window.t_max = t_ref + opts.t_span;

        Expected<Hit> hit = intersect(current, step.surface, window);
        if (!hit) return TraceFailure{hit.error(), i};
        if (hit->grazing) return TraceFailure{RayError::kGrazing, i};

        Vec3 n = step.surface.normal_at(hit->point).vec();
        Vec3 u2;
        if (step.action == SurfaceAction::kReflect) {
            u2 = reflect_direction(current.direction().vec(), n);
        } else {
            Expected<Vec3> r = refract_direction(current.direction().vec(), n, step.n1, step.n2);
            if (!r) return TraceFailure{r.error(), i};
            u2 = *r;
        }

        double len = distance(hit->point, ref);
        out.hits.push_back(hit->point);
        out.segment_lengths.push_back(len);
        out.optical_path_length += index * len;
        if (step.action == SurfaceAction::kRefract) index = step.n2;

        ref = hit->point;
        current = OrientedLine(hit->point, u2);
    }
    out.line = current;
    return out;
}

/// Any partial map on oriented lines whose differential can be probed.
using LineMap = std::function<Expected<OrientedLine>(const OrientedLine&)>;

inline LineMap reflect_map(ImplicitSurface mirror, IntersectOpts opts = {}) {
    return [mirror = std::move(mirror), opts](const OrientedLine& line) {
        return reflect(line, mirror, opts);
    };
}

inline LineMap refract_map(ImplicitSurface surface, double n1, double n2,
                           IntersectOpts opts = {}) {
    return [surface = std::move(surface), n1, n2, opts](const OrientedLine& line) {
        return refract(line, surface, n1, n2, opts);
    };
}

inline LineMap interface_map(const Interface& step, IntersectOpts opts = {}) {
    return step.action == SurfaceAction::kReflect
               ? reflect_map(step.surface, opts)
               : refract_map(step.surface, step.n1, step.n2, opts);
}

/// Whole-system trace as a line map (forward windows after the first
/// interface, symmetric first window as in trace()).
inline LineMap trace_map(OpticalSystem sys, TraceOpts opts = {}) {
    return [sys = std::move(sys), opts](const OrientedLine& line) -> Expected<OrientedLine> {
        Expected<TraceResult, TraceFailure> r = trace(line, sys, opts);
        if (!r) return r.error().code;
        return r->line;
    };
}

/// Central-difference differential of a line map at `line` applied to
/// tangent `t`, computed in chart coordinates at the image line:
///
///     Df(t) = [coords(f(retract(L, t, eps))) - coords(f(retract(L, t, -eps)))] / (2 eps)
///
/// mapped back to a LineTangent through the chart frame (exact at the
/// chart base). Default eps = 1e-5 * (1 + |q|). A probe that leaves the
/// map's domain (miss, grazing, TIR) or the image chart reports
/// differential-undefined.
inline Expected<LineTangent> differential(const LineMap& map, const OrientedLine& line,
                                          const LineTangent& t, double eps = 0.0) {
    validate_tangent(line, t);
    if (eps <= 0.0) eps = 1e-5 * (1.0 + line.foot().norm());

    Expected<OrientedLine> image = map(line);
    if (!image) return RayError::kDifferentialUndefined;
    Chart chart(*image);

    Expected<OrientedLine> plus = map(retract(line, t, eps));
    Expected<OrientedLine> minus = map(retract(line, t, -eps));
    if (!plus || !minus) return RayError::kDifferentialUndefined;
    if (!chart.contains(*plus) || !chart.contains(*minus))
        return RayError::kDifferentialUndefined;

    Coords4 cp = chart.coords(*plus);
    Coords4 cm = chart.coords(*minus);
    Coords4 rate;
    for (int k = 0; k < 4; ++k) rate[k] = (cp[k] - cm[k]) / (2.0 * eps);
    return chart.tangent_at_base(rate);
}

} // namespace symopt
