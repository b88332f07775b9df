#pragma once

#include <cmath>
#include <string_view>
#include <variant>

#include "symopt/error.hpp"
#include "symopt/line.hpp"
#include "symopt/vec3.hpp"

namespace symopt {

inline constexpr double kDegenerateGradientTol = 1e-10;
inline constexpr double kGrazingTol = 1e-6;

/// f(x) = (x - point) . normal; zero set is the plane.
struct Plane {
    Point3 point;
    UnitVec3 normal;

    Plane(const Point3& p, const Vec3& n) : point(p), normal(n) {}
};

/// f(x) = |x - center|^2 - radius^2.
struct Sphere {
    Point3 center;
    double radius;

    Sphere(const Point3& c, double r) : center(c), radius(r) {
        if (!(r > 0.0) || !std::isfinite(r))
            throw Error("Sphere: radius must be positive");
    }
};

/// Paraboloid of revolution with vertex, unit axis and focal parameter
/// F != 0: in a frame where the axis is +z and the vertex the origin,
/// the surface is z = (x^2 + y^2) / (4F). Stored frame-free:
///
///     f(x) = h - (|d|^2 - h^2) / (4F),   d = x - vertex, h = axis . d.
struct Paraboloid {
    Point3 vertex;
    UnitVec3 axis;
    double focal;

    Paraboloid(const Point3& v, const Vec3& a, double f) : vertex(v), axis(a), focal(f) {
        if (f == 0.0 || !std::isfinite(f))
            throw Error("Paraboloid: focal parameter must be nonzero");
    }
};

/// Sinusoidal bump over the xy-plane: f(x) = z - A sin(wx * x) sin(wy * y).
/// A = 0 degenerates to the plane z = 0.
struct SinusoidBump {
    double amplitude;
    double omega_x;
    double omega_y;

    SinusoidBump(double a, double wx, double wy)
        : amplitude(a), omega_x(wx), omega_y(wy) {
        if (!std::isfinite(a) || !std::isfinite(wx) || !std::isfinite(wy))
            throw Error("SinusoidBump: parameters must be finite");
    }
};

/// Torus around `axis` through `center`, major radius R, tube radius r,
/// R > r > 0:
///
///     f(x) = (sqrt(|d|^2 - h^2) - R)^2 + h^2 - r^2,
///
/// with d = x - center, h = axis . d.
struct Torus {
    Point3 center;
    UnitVec3 axis;
    double major_radius;
    double minor_radius;

    Torus(const Point3& c, const Vec3& a, double R, double r)
        : center(c), axis(a), major_radius(R), minor_radius(r) {
        if (!(R > r && r > 0.0) || !std::isfinite(R))
            throw Error("Torus: radii must satisfy R > r > 0");
    }
};

/// A smooth implicit surface f(x) = 0 of one of five kinds, with exact
/// analytic gradients. The zero set is what rays intersect; the sign of
/// f distinguishes the two sides.
class ImplicitSurface {
public:
    using Shape = std::variant<Plane, Sphere, Paraboloid, SinusoidBump, Torus>;

    ImplicitSurface(Plane s) : shape_(std::move(s)) {}
    ImplicitSurface(Sphere s) : shape_(std::move(s)) {}
    ImplicitSurface(Paraboloid s) : shape_(std::move(s)) {}
    ImplicitSurface(SinusoidBump s) : shape_(std::move(s)) {}
    ImplicitSurface(Torus s) : shape_(std::move(s)) {}

    const Shape& shape() const { return shape_; }

    std::string_view kind_name() const {
        struct V {
            std::string_view operator()(const Plane&) const { return "plane"; }
            std::string_view operator()(const Sphere&) const { return "sphere"; }
            std::string_view operator()(const Paraboloid&) const { return "paraboloid"; }
            std::string_view operator()(const SinusoidBump&) const { return "sinusoid-bump"; }
            std::string_view operator()(const Torus&) const { return "torus"; }
        };
        return std::visit(V{}, shape_);
    }

    double eval(const Point3& x) const {
        return std::visit([&x](const auto& s) { return eval_impl(s, x); }, shape_);
    }

    Vec3 gradient(const Point3& x) const {
        return std::visit([&x](const auto& s) { return gradient_impl(s, x); }, shape_);
    }

    /// Unit normal grad f / |grad f|; throws DegenerateGradientError
    /// where the gradient vanishes (e.g. the torus axis).
    UnitVec3 normal_at(const Point3& x) const {
        Vec3 g = gradient(x);
        if (g.norm() < kDegenerateGradientTol)
            throw DegenerateGradientError("ImplicitSurface: gradient vanishes at query point");
        return UnitVec3(g);
    }

private:
    static double eval_impl(const Plane& s, const Point3& x) {
        return (x - s.point).dot(s.normal.vec());
    }
    static Vec3 gradient_impl(const Plane& s, const Point3&) { return s.normal.vec(); }

    static double eval_impl(const Sphere& s, const Point3& x) {
        return (x - s.center).norm2() - s.radius * s.radius;
    }
    static Vec3 gradient_impl(const Sphere& s, const Point3& x) {
        return (x - s.center) * 2.0;
    }

    static double eval_impl(const Paraboloid& s, const Point3& x) {
        Vec3 d = x - s.vertex;
        double h = s.axis.dot(d);
        return h - (d.norm2() - h * h) / (4.0 * s.focal);
    }
    static Vec3 gradient_impl(const Paraboloid& s, const Point3& x) {
        Vec3 d = x - s.vertex;
        double h = s.axis.dot(d);
        // grad h = axis; grad(|d|^2 - h^2) = 2(d - h*axis).
        return s.axis.vec() - (d - s.axis.vec() * h) / (2.0 * s.focal);
    }

    static double eval_impl(const SinusoidBump& s, const Point3& x) {
        return x.z - s.amplitude * std::sin(s.omega_x * x.x) * std::sin(s.omega_y * x.y);
    }
    static Vec3 gradient_impl(const SinusoidBump& s, const Point3& x) {
        return {-s.amplitude * s.omega_x * std::cos(s.omega_x * x.x) * std::sin(s.omega_y * x.y),
                -s.amplitude * s.omega_y * std::sin(s.omega_x * x.x) * std::cos(s.omega_y * x.y),
                1.0};
    }

    static double eval_impl(const Torus& s, const Point3& x) {
        Vec3 d = x - s.center;
        double h = s.axis.dot(d);
        double rho = std::sqrt(std::max(0.0, d.norm2() - h * h));
        double ring = rho - s.major_radius;
        return ring * ring + h * h - s.minor_radius * s.minor_radius;
    }
    static Vec3 gradient_impl(const Torus& s, const Point3& x) {
        Vec3 d = x - s.center;
        double h = s.axis.dot(d);
        Vec3 radial = d - s.axis.vec() * h;
        double rho = radial.norm();
        // On the axis (rho = 0) the distance-to-ring term is not
        // differentiable; report a zero gradient and let callers raise
        // the degenerate-gradient error.
        if (rho < kDegenerateGradientTol) return {0, 0, 0};
        double ring = rho - s.major_radius;
        return radial * (2.0 * ring / rho) + s.axis.vec() * (2.0 * h);
    }

    Shape shape_;
};

/// Successful ray-surface intersection. `t` is measured from the query
/// start point along the unit direction; `grazing` flags near-tangential
/// incidence (|u . n| < 1e-6), which downstream maps reject.
struct Hit {
    double t;
    Point3 point;
    bool grazing;
};

/// Search window and resolution for intersection. The window is the
/// half-open parameter interval (t_min, t_max] measured from the start
/// point; bracketing samples the field at `bracket_steps` + 1 evenly
/// spaced parameters looking for a sign change.
struct IntersectOpts {
    double t_min = -16.0;
    double t_max = 16.0;
    int bracket_steps = 256;
};

/// First intersection of the ray start + t*dir with the surface in the
/// window (t_min, t_max]: uniform bracketing, bisection to width
/// 1e-12 * window, then Newton polish on g(t) = f(start + t*dir) run to
/// machine-level convergence (well past the contract |g| <= 1e-11 *
/// scale, scale = 1 + max |g| at the bracket ends) so that downstream
/// finite differences through the intersection stay clean.
inline Expected<Hit> intersect(const Point3& start, const UnitVec3& dir,
                               const ImplicitSurface& surface,
                               const IntersectOpts& opts = {}) {
    const Vec3& u = dir.vec();
    auto g = [&](double t) { return surface.eval(start + u * t); };
    auto dg = [&](double t) { return surface.gradient(start + u * t).dot(u); };

    const int n = opts.bracket_steps;
    const double span = opts.t_max - opts.t_min;
    if (!(span > 0.0) || n < 1)
        throw Error("intersect: require t_min < t_max and at least one bracket step");
    const double step = span / n;

    auto polish = [&](double lo, double hi, double scale) -> double {
        // Bisection: g(lo) and g(hi) straddle zero (or an endpoint is 0).
        double glo = g(lo);
        double t = 0.5 * (lo + hi);
        while (hi - lo > 1e-12 * span) {
            t = 0.5 * (lo + hi);
            double gm = g(t);
            if (gm == 0.0) break;
            if ((glo < 0.0) != (gm < 0.0)) {
                hi = t;
            } else {
                lo = t;
                glo = gm;
            }
        }
        // Newton from the bisection result; keep going while it still
        // improves |g|, bailing out to the bisection answer if the
        // derivative is unusable.
        double best_t = 0.5 * (lo + hi);
        double best_g = std::fabs(g(best_t));
        double cur = best_t;
        for (int it = 0; it < 60 && best_g != 0.0; ++it) {
            double d = dg(cur);
            if (d == 0.0 || !std::isfinite(d)) break;
            double next = cur - g(cur) / d;
            if (!(next > lo - step) || !(next < hi + step)) break;
            double gn = std::fabs(g(next));
            cur = next;
            if (gn < best_g) {
                best_g = gn;
                best_t = next;
            } else if (gn <= scale * 1e-14) {
                break;  // at rounding floor, stop oscillating
            } else if (it > 4 && gn >= best_g) {
                break;
            }
        }
        return best_t;
    };

    auto make_hit = [&](double root) -> Hit {
        Point3 p = start + u * root;
        Vec3 grad = surface.gradient(p);
        double gn = grad.norm();
        bool grazing = gn < kDegenerateGradientTol ||
                       std::fabs(u.dot(grad)) / gn < kGrazingTol;
        return Hit{root, p, grazing};
    };

    double t_prev = opts.t_min;
    double g_prev = g(t_prev);
    for (int i = 1; i <= n; ++i) {
        double t_i = (i == n) ? opts.t_max : opts.t_min + step * i;
        double g_i = g(t_i);
        if (g_prev == 0.0) {
            // Exact root at the previous sample. The window is open at
            // t_min, so a root pinned there belongs to the previous
            // window and scanning continues.
            if (t_prev > opts.t_min) return make_hit(t_prev);
        } else if (g_i == 0.0) {
            return make_hit(t_i);
        } else if ((g_prev < 0.0) != (g_i < 0.0)) {
            double scale = 1.0 + std::max(std::fabs(g_prev), std::fabs(g_i));
            double root = polish(t_prev, t_i, scale);
            if (root > opts.t_min) return make_hit(root);
        }
        t_prev = t_i;
        g_prev = g_i;
    }
    return RayError::kMiss;
}

/// Same search along an oriented line, t measured from the foot point.
inline Expected<Hit> intersect(const OrientedLine& line, const ImplicitSurface& surface,
                               const IntersectOpts& opts = {}) {
    return intersect(line.foot(), line.direction(), surface, opts);
}

} // namespace symopt
