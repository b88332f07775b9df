#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "symopt/error.hpp"
#include "symopt/line.hpp"
#include "symopt/optics.hpp"
#include "symopt/surfaces.hpp"
#include "symopt/vec3.hpp"

namespace symopt {

/// Rectangular parameter domain of a two-parameter family.
struct Domain {
    double k1_lo = -0.5, k1_hi = 0.5;
    double k2_lo = -0.5, k2_hi = 0.5;

    double span1() const { return k1_hi - k1_lo; }
    double span2() const { return k2_hi - k2_lo; }

    bool contains(double k1, double k2, double margin1 = 0.0, double margin2 = 0.0) const {
        return k1 >= k1_lo + margin1 && k1 <= k1_hi - margin1 &&
               k2 >= k2_lo + margin2 && k2 <= k2_hi - margin2;
    }
};

/// One ray of a family: anchor point and unit direction.
struct FamilyPoint {
    Point3 P;
    UnitVec3 u;
};

/// First derivatives of (P, u) with respect to the two parameters.
struct FamilyPartials {
    Vec3 dP_dk1, dP_dk2;
    Vec3 du_dk1, du_dk2;
};

inline constexpr double kFamilyFdScale = 1e-5;   ///< FD step as fraction of domain span
inline constexpr double kRankSigmaTol = 1e-8;    ///< second singular value threshold

/// A smooth two-parameter family of oriented lines over a rectangular
/// domain: k = (k1, k2) maps to a ray anchored at P(k) with unit
/// direction u(k). Analytic partial derivatives are optional; central
/// finite differences (step 1e-5 of the domain span per axis) stand in
/// when they are absent.
class RayFamily {
public:
    using EvalFn = std::function<FamilyPoint(double, double)>;
    using PartialsFn = std::function<FamilyPartials(double, double)>;

    RayFamily(std::string name, const Domain& domain, EvalFn eval,
              PartialsFn partials = nullptr)
        : name_(std::move(name)), domain_(domain), eval_(std::move(eval)),
          partials_(std::move(partials)) {
        if (!eval_) throw Error("RayFamily: evaluation function required");
        if (!(domain.span1() > 0.0) || !(domain.span2() > 0.0))
            throw Error("RayFamily: domain must have positive spans");
    }

    const std::string& name() const { return name_; }
    const Domain& domain() const { return domain_; }
    bool has_analytic_partials() const { return static_cast<bool>(partials_); }

    FamilyPoint eval(double k1, double k2) const { return eval_(k1, k2); }

    OrientedLine line(double k1, double k2) const {
        FamilyPoint p = eval_(k1, k2);
        return OrientedLine(p.P, p.u.vec());
    }

    FamilyPartials analytic_partials(double k1, double k2) const {
        if (!partials_) throw Error("RayFamily: no analytic partials supplied");
        return partials_(k1, k2);
    }

    double fd_step1() const { return kFamilyFdScale * domain_.span1(); }
    double fd_step2() const { return kFamilyFdScale * domain_.span2(); }

    /// Central-difference partials. The stencil must stay inside the
    /// domain; parameter points closer than one step to the boundary
    /// are rejected. The margin check carries an ulp-scale slack so
    /// points computed to sit exactly one step inside still qualify.
    FamilyPartials fd_partials(double k1, double k2) const {
        double h1 = fd_step1(), h2 = fd_step2();
        if (!domain_.contains(k1, k2, h1 * (1.0 - 1e-9), h2 * (1.0 - 1e-9)))
            throw BoundaryMarginError(
                "RayFamily: parameter too close to the domain boundary for FD partials");
        FamilyPoint a1 = eval_(k1 + h1, k2), b1 = eval_(k1 - h1, k2);
        FamilyPoint a2 = eval_(k1, k2 + h2), b2 = eval_(k1, k2 - h2);
        return {(a1.P - b1.P) / (2.0 * h1), (a2.P - b2.P) / (2.0 * h2),
                (a1.u.vec() - b1.u.vec()) / (2.0 * h1),
                (a2.u.vec() - b2.u.vec()) / (2.0 * h2)};
    }

private:
    std::string name_;
    Domain domain_;
    EvalFn eval_;
    PartialsFn partials_;
};

// ---------------------------------------------------------------------------
// Built-in families

/// All rays through the single point S0, directions parametrized by
/// cap angles (k1, k2) around `base_dir` (exactly unit for every k, no
/// polar singularity on the default domain):
///
///     u(k) = sin(k1) e1 + cos(k1) sin(k2) e2 + cos(k1) cos(k2) d.
inline RayFamily point_source(const Point3& s0, const Vec3& base_dir = {0, 0, 1},
                              const Domain& domain = {}) {
    UnitVec3 d(base_dir);
    Vec3 e1, e2;
    perp_basis(d.vec(), e1, e2);
    Vec3 dv = d.vec();
    auto dir = [=](double k1, double k2) {
        return e1 * std::sin(k1) + e2 * (std::cos(k1) * std::sin(k2)) +
               dv * (std::cos(k1) * std::cos(k2));
    };
    auto eval = [=](double k1, double k2) -> FamilyPoint {
        return {s0, UnitVec3(dir(k1, k2))};
    };
    auto partials = [=](double k1, double k2) -> FamilyPartials {
        double s1 = std::sin(k1), c1 = std::cos(k1);
        double s2 = std::sin(k2), c2 = std::cos(k2);
        Vec3 du1 = e1 * c1 - e2 * (s1 * s2) - dv * (s1 * c2);
        Vec3 du2 = e2 * (c1 * c2) - dv * (c1 * s2);
        return {{0, 0, 0}, {0, 0, 0}, du1, du2};
    };
    return RayFamily("point_source", domain, eval, partials);
}

/// Rays along the (gradient-oriented) normals of a surface, anchored on
/// the surface itself: a normal congruence. Each surface kind carries
/// its natural smooth patch parametrization; in every case u(k) is the
/// unit surface normal at P(k), so u . dP/dk_i vanishes identically and
/// the family is normal by construction.
inline RayFamily normal_congruence(const ImplicitSurface& surface,
                                   const Domain& domain = {}) {
    struct Builder {
        Domain domain;

        RayFamily operator()(const Plane& s) const {
            Vec3 e1, e2;
            perp_basis(s.normal.vec(), e1, e2);
            Point3 p0 = s.point;
            Vec3 n = s.normal.vec();
            auto eval = [=](double k1, double k2) -> FamilyPoint {
                return {p0 + e1 * k1 + e2 * k2, UnitVec3(n)};
            };
            auto partials = [=](double, double) -> FamilyPartials {
                return {e1, e2, {0, 0, 0}, {0, 0, 0}};
            };
            return RayFamily("normal_congruence(plane)", domain, eval, partials);
        }

        RayFamily operator()(const Sphere& s) const {
            // Cap angles around +z; P = center + r n(k), u = n(k).
            Point3 c = s.center;
            double r = s.radius;
            auto n_of = [](double k1, double k2) {
                return Vec3{std::sin(k1), std::cos(k1) * std::sin(k2),
                            std::cos(k1) * std::cos(k2)};
            };
            auto eval = [=](double k1, double k2) -> FamilyPoint {
                Vec3 n = n_of(k1, k2);
                return {c + n * r, UnitVec3(n)};
            };
            auto partials = [=](double k1, double k2) -> FamilyPartials {
                double s1 = std::sin(k1), c1 = std::cos(k1);
                double s2 = std::sin(k2), c2 = std::cos(k2);
                Vec3 dn1{c1, -s1 * s2, -s1 * c2};
                Vec3 dn2{0.0, c1 * c2, -c1 * s2};
                return {dn1 * r, dn2 * r, dn1, dn2};
            };
            return RayFamily("normal_congruence(sphere)", domain, eval, partials);
        }

        RayFamily operator()(const Paraboloid& s) const {
            Vec3 e1, e2;
            perp_basis(s.axis.vec(), e1, e2);
            Vec3 a = s.axis.vec();
            Point3 v = s.vertex;
            double f4 = 4.0 * s.focal, f2 = 2.0 * s.focal;
            auto eval = [=](double k1, double k2) -> FamilyPoint {
                Point3 p = v + e1 * k1 + e2 * k2 + a * ((k1 * k1 + k2 * k2) / f4);
                Vec3 g = a - (e1 * k1 + e2 * k2) / f2;
                return {p, UnitVec3(g)};
            };
            auto partials = [=](double k1, double k2) -> FamilyPartials {
                Vec3 dp1 = e1 + a * (k1 / f2);
                Vec3 dp2 = e2 + a * (k2 / f2);
                Vec3 g = a - (e1 * k1 + e2 * k2) / f2;
                double m = g.norm();
                Vec3 u = g / m;
                Vec3 dg1 = -e1 / f2, dg2 = -e2 / f2;
                Vec3 du1 = (dg1 - u * u.dot(dg1)) / m;
                Vec3 du2 = (dg2 - u * u.dot(dg2)) / m;
                return {dp1, dp2, du1, du2};
            };
            return RayFamily("normal_congruence(paraboloid)", domain, eval, partials);
        }

        RayFamily operator()(const SinusoidBump& s) const {
            double A = s.amplitude, wx = s.omega_x, wy = s.omega_y;
            auto eval = [=](double k1, double k2) -> FamilyPoint {
                Point3 p{k1, k2, A * std::sin(wx * k1) * std::sin(wy * k2)};
                Vec3 g{-A * wx * std::cos(wx * k1) * std::sin(wy * k2),
                       -A * wy * std::sin(wx * k1) * std::cos(wy * k2), 1.0};
                return {p, UnitVec3(g)};
            };
            auto partials = [=](double k1, double k2) -> FamilyPartials {
                double sx = std::sin(wx * k1), cx = std::cos(wx * k1);
                double sy = std::sin(wy * k2), cy = std::cos(wy * k2);
                Vec3 dp1{1.0, 0.0, A * wx * cx * sy};
                Vec3 dp2{0.0, 1.0, A * wy * sx * cy};
                Vec3 g{-A * wx * cx * sy, -A * wy * sx * cy, 1.0};
                double m = g.norm();
                Vec3 u = g / m;
                Vec3 dg1{A * wx * wx * sx * sy, -A * wx * wy * cx * cy, 0.0};
                Vec3 dg2{-A * wx * wy * cx * cy, A * wy * wy * sx * sy, 0.0};
                Vec3 du1 = (dg1 - u * u.dot(dg1)) / m;
                Vec3 du2 = (dg2 - u * u.dot(dg2)) / m;
                return {dp1, dp2, du1, du2};
            };
            return RayFamily("normal_congruence(sinusoid-bump)", domain, eval, partials);
        }

        RayFamily operator()(const Torus& s) const {
            // k1 = angle around the axis, k2 = angle around the tube.
            Vec3 e1, e2;
            perp_basis(s.axis.vec(), e1, e2);
            Vec3 a = s.axis.vec();
            Point3 c = s.center;
            double R = s.major_radius, r = s.minor_radius;
            auto eval = [=](double k1, double k2) -> FamilyPoint {
                Vec3 rho = e1 * std::cos(k1) + e2 * std::sin(k1);
                Vec3 n = rho * std::cos(k2) + a * std::sin(k2);
                return {c + rho * R + n * r, UnitVec3(n)};
            };
            auto partials = [=](double k1, double k2) -> FamilyPartials {
                double s1 = std::sin(k1), c1 = std::cos(k1);
                double s2 = std::sin(k2), c2 = std::cos(k2);
                Vec3 rho = e1 * c1 + e2 * s1;
                Vec3 drho = e2 * c1 - e1 * s1;
                Vec3 dn1 = drho * c2;
                Vec3 dn2 = a * c2 - rho * s2;
                return {drho * (R + r * c2), dn2 * r, dn1, dn2};
            };
            return RayFamily("normal_congruence(torus)", domain, eval, partials);
        }
    };
    return std::visit(Builder{domain}, surface.shape());
}

/// Negative-control family: rays anchored on the plane z = 0 whose
/// directions twist as u = normalize((-k2, k1, 1)). Not a normal family
/// anywhere except in the limit of infinite radius; the pullback
/// coefficient is -(1 + 1/m^2)/m with m^2 = 1 + k1^2 + k2^2, largest in
/// magnitude (exactly 2) at the origin. The default domain [0,1]^2
/// places that maximum at a corner of the parameter rectangle.
inline RayFamily skew_family() {
    Domain domain{0.0, 1.0, 0.0, 1.0};
    auto eval = [](double k1, double k2) -> FamilyPoint {
        return {{k1, k2, 0.0}, UnitVec3(Vec3{-k2, k1, 1.0})};
    };
    auto partials = [](double k1, double k2) -> FamilyPartials {
        Vec3 g{-k2, k1, 1.0};
        double m = g.norm();
        Vec3 u = g / m;
        Vec3 dg1{0.0, 1.0, 0.0}, dg2{-1.0, 0.0, 0.0};
        Vec3 du1 = (dg1 - u * u.dot(dg1)) / m;
        Vec3 du2 = (dg2 - u * u.dot(dg2)) / m;
        return {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, du1, du2};
    };
    return RayFamily("skew_family", domain, eval, partials);
}

// ---------------------------------------------------------------------------
// Pullback of the symplectic form onto parameter space

enum class PartialMode {
    kAuto,              ///< analytic when available, else finite differences
    kAnalytic,          ///< require analytic partials
    kFiniteDifference,  ///< force central differences
};

inline PartialMode resolve_mode(const RayFamily& family, PartialMode mode) {
    if (mode == PartialMode::kAuto)
        return family.has_analytic_partials() ? PartialMode::kAnalytic
                                              : PartialMode::kFiniteDifference;
    if (mode == PartialMode::kAnalytic && !family.has_analytic_partials())
        throw Error("pullback: analytic partials requested but not available");
    return mode;
}

inline FamilyPartials family_partials(const RayFamily& family, double k1, double k2,
                                      PartialMode mode) {
    return resolve_mode(family, mode) == PartialMode::kAnalytic
               ? family.analytic_partials(k1, k2)
               : family.fd_partials(k1, k2);
}

/// The scalar multiplying dk1 ^ dk2 in the pullback of the symplectic
/// form under the family map:
///
///     c(k) = dP/dk1 . du/dk2 - dP/dk2 . du/dk1.
///
/// The family is Lagrangian (normal) precisely where this vanishes.
inline double pullback_coefficient(const RayFamily& family, double k1, double k2,
                                   PartialMode mode = PartialMode::kAuto) {
    FamilyPartials p = family_partials(family, k1, k2, mode);
    return p.dP_dk1.dot(p.du_dk2) - p.dP_dk2.dot(p.du_dk1);
}

/// Smallest singular value of the 6x2 Jacobian of (P, u), via the 2x2
/// Gram matrix; a genuine two-parameter family keeps this above 1e-8.
inline double second_singular_value(const FamilyPartials& p) {
    double a11 = p.dP_dk1.norm2() + p.du_dk1.norm2();
    double a22 = p.dP_dk2.norm2() + p.du_dk2.norm2();
    double a12 = p.dP_dk1.dot(p.dP_dk2) + p.du_dk1.dot(p.du_dk2);
    double tr = a11 + a22;
    double det = a11 * a22 - a12 * a12;
    double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
    return std::sqrt(std::max(0.0, 0.5 * (tr - disc)));
}

/// Result of sweeping the pullback coefficient over a parameter grid.
struct NormalityReport {
    std::string family;
    int n1 = 0, n2 = 0;
    PartialMode mode = PartialMode::kAuto;   ///< mode actually used
    double tolerance = 0.0;
    double max_abs_coefficient = 0.0;
    int max_i = 0, max_j = 0;
    double max_k1 = 0.0, max_k2 = 0.0;
    bool rank_ok = true;                     ///< rank 2 everywhere sampled
    int rank_fail_i = -1, rank_fail_j = -1;
    double min_sigma2 = 0.0;                 ///< smallest second singular value seen
    bool pass = false;
    std::vector<double> node_k1, node_k2;    ///< grid node coordinates
    std::vector<double> coefficients;        ///< row-major [i * n2 + j]
};

/// Sweep the pullback coefficient over an n1 x n2 grid. With finite
/// differences the grid is inset by one FD step per axis so every
/// stencil stays inside the domain. Pass iff the family has rank 2 at
/// every node and max |coefficient| <= tol; ties in the argmax break
/// toward the lowest row-major index.
inline NormalityReport is_normal(const RayFamily& family, int n1, int n2, double tol,
                                 PartialMode mode = PartialMode::kAuto) {
    if (n1 < 3 || n2 < 3) throw Error("is_normal: grid must be at least 3x3");
    PartialMode used = resolve_mode(family, mode);
    const Domain& d = family.domain();

    double m1 = used == PartialMode::kFiniteDifference ? family.fd_step1() : 0.0;
    double m2 = used == PartialMode::kFiniteDifference ? family.fd_step2() : 0.0;
    NormalityReport rep;
    rep.family = family.name();
    rep.n1 = n1;
    rep.n2 = n2;
    rep.mode = used;
    rep.tolerance = tol;
    rep.node_k1.resize(n1);
    rep.node_k2.resize(n2);
    for (int i = 0; i < n1; ++i)
        rep.node_k1[i] = d.k1_lo + m1 + (d.span1() - 2 * m1) * i / (n1 - 1);
    for (int j = 0; j < n2; ++j)
        rep.node_k2[j] = d.k2_lo + m2 + (d.span2() - 2 * m2) * j / (n2 - 1);

    rep.coefficients.resize(static_cast<std::size_t>(n1) * n2);
    rep.min_sigma2 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n1; ++i) {
        for (int j = 0; j < n2; ++j) {
            FamilyPartials p = family_partials(family, rep.node_k1[i], rep.node_k2[j], used);
            double c = p.dP_dk1.dot(p.du_dk2) - p.dP_dk2.dot(p.du_dk1);
            rep.coefficients[static_cast<std::size_t>(i) * n2 + j] = c;
            if (std::fabs(c) > rep.max_abs_coefficient) {
                rep.max_abs_coefficient = std::fabs(c);
                rep.max_i = i;
                rep.max_j = j;
            }
            double s2 = second_singular_value(p);
            rep.min_sigma2 = std::min(rep.min_sigma2, s2);
            if (s2 <= kRankSigmaTol && rep.rank_ok) {
                rep.rank_ok = false;
                rep.rank_fail_i = i;
                rep.rank_fail_j = j;
            }
        }
    }
    rep.max_k1 = rep.node_k1[rep.max_i];
    rep.max_k2 = rep.node_k2[rep.max_j];
    rep.pass = rep.rank_ok && rep.max_abs_coefficient <= tol;
    return rep;
}

// ---------------------------------------------------------------------------
// Families through optical systems

/// Push a family through an optical system ray by ray: each parameter
/// value traces from its anchor point forward through every interface,
/// and the image family is anchored at the last incidence point with
/// the outgoing direction. Trace failures abort the evaluation with a
/// TraceError carrying the parameter location.
inline RayFamily transform(const RayFamily& family, const OpticalSystem& system,
                           const TraceOpts& base_opts = {}) {
    if (system.empty()) throw Error("transform: optical system has no interfaces");
    auto eval = [family, system, base_opts](double k1, double k2) -> FamilyPoint {
        FamilyPoint p = family.eval(k1, k2);
        TraceOpts opts = base_opts;
        opts.from = p.P;
        opts.forward_only = true;
        Expected<TraceResult, TraceFailure> r =
            trace(OrientedLine(p.P, p.u.vec()), system, opts);
        if (!r)
            throw TraceError(r.error(), k1, k2,
                             "transform: trace failed (" +
                                 std::string(to_string(r.error().code)) + " at interface " +
                                 std::to_string(r.error().interface_index) + ", k1=" +
                                 std::to_string(k1) + ", k2=" + std::to_string(k2) + ")");
        return {r->hits.back(), r->line.direction()};
    };
    return RayFamily(family.name() + " through " + std::to_string(system.size()) +
                         " interface(s)",
                     family.domain(), eval);
}

// ---------------------------------------------------------------------------
// Wavefronts

/// One point of a reconstructed wavefront: the ray parameter, the
/// signed distance along that ray, and the resulting space point
/// W = P + lambda u.
struct WavefrontSample {
    double k1, k2;
    double lambda;
    Point3 W;
};

enum class PathOrder {
    kRowMajor,     ///< walk the k1 leg first, then k2
    kColumnMajor,  ///< walk the k2 leg first, then k1
};

namespace detail {

/// The integrand of the ray 1-form along one parameter axis:
/// g = u . dP/dk_axis at (k1, k2).  Uses the family's analytic partials
/// when present; otherwise differences P along the axis (central in the
/// interior, one-sided second-order at the domain edge so full grids
/// that include boundary nodes stay evaluable).
inline double ray_form_component(const RayFamily& family, const FamilyPoint& node,
                                 double k1, double k2, int axis) {
    Vec3 u = node.u.vec();
    if (family.has_analytic_partials()) {
        FamilyPartials fp = family.analytic_partials(k1, k2);
        return u.dot(axis == 1 ? fp.dP_dk1 : fp.dP_dk2);
    }
    const Domain& d = family.domain();
    const double h = axis == 1 ? family.fd_step1() : family.fd_step2();
    const double lo = axis == 1 ? d.k1_lo : d.k2_lo;
    const double hi = axis == 1 ? d.k1_hi : d.k2_hi;
    const double k = axis == 1 ? k1 : k2;
    auto P_at = [&](double kk) {
        return axis == 1 ? family.eval(kk, k2).P : family.eval(k1, kk).P;
    };
    Vec3 dP;
    if (k - h >= lo && k + h <= hi) {
        dP = (P_at(k + h) - P_at(k - h)) / (2.0 * h);
    } else if (k + 2.0 * h <= hi) {
        dP = (node.P * -3.0 + P_at(k + h) * 4.0 - P_at(k + 2.0 * h)) / (2.0 * h);
    } else if (k - 2.0 * h >= lo) {
        dP = (node.P * 3.0 - P_at(k - h) * 4.0 + P_at(k - 2.0 * h)) / (2.0 * h);
    } else {
        throw Error("ray form quadrature: domain too small for finite differences");
    }
    return u.dot(dP);
}

} // namespace detail

/// Max over grid cells of |circulation of u . dP| / cell area, trapezoid
/// rule on the node-sampled integrand around each elementary cell. For a
/// normal family the integrand vanishes at every node, so the circulations
/// vanish; otherwise the normalized value approximates the pullback
/// coefficient at the cell center, so this and is_normal agree on
/// pass/fail.
inline double max_loop_coefficient(const RayFamily& family, int n1, int n2) {
    if (n1 < 2 || n2 < 2) throw Error("max_loop_coefficient: grid must be at least 2x2");
    const Domain& d = family.domain();
    std::vector<double> k1s(n1), k2s(n2);
    for (int i = 0; i < n1; ++i) k1s[i] = d.k1_lo + d.span1() * i / (n1 - 1);
    for (int j = 0; j < n2; ++j) k2s[j] = d.k2_lo + d.span2() * j / (n2 - 1);
    std::vector<double> g1(static_cast<std::size_t>(n1) * n2), g2(g1.size());
    for (int i = 0; i < n1; ++i) {
        for (int j = 0; j < n2; ++j) {
            FamilyPoint node = family.eval(k1s[i], k2s[j]);
            std::size_t idx = static_cast<std::size_t>(i) * n2 + j;
            g1[idx] = detail::ray_form_component(family, node, k1s[i], k2s[j], 1);
            g2[idx] = detail::ray_form_component(family, node, k1s[i], k2s[j], 2);
        }
    }
    auto G1 = [&](int i, int j) { return g1[static_cast<std::size_t>(i) * n2 + j]; };
    auto G2 = [&](int i, int j) { return g2[static_cast<std::size_t>(i) * n2 + j]; };
    double h1 = d.span1() / (n1 - 1), h2 = d.span2() / (n2 - 1);
    double max_c = 0.0;
    for (int i = 0; i + 1 < n1; ++i) {
        for (int j = 0; j + 1 < n2; ++j) {
            double circ = 0.5 * h1 * (G1(i, j) + G1(i + 1, j)) +
                          0.5 * h2 * (G2(i + 1, j) + G2(i + 1, j + 1)) -
                          0.5 * h1 * (G1(i, j + 1) + G1(i + 1, j + 1)) -
                          0.5 * h2 * (G2(i, j) + G2(i, j + 1));
            max_c = std::max(max_c, std::fabs(circ) / (h1 * h2));
        }
    }
    return max_c;
}

/// Reconstruct a wavefront of a normal family on an n1 x n2 grid:
/// integrate lambda(k) = lambda0 - int u . dP from the grid node
/// nearest (k1_0, k2_0) along axis-aligned staircase paths (trapezoid
/// rule per grid edge on the node-sampled integrand u . dP/dk), then
/// place W = P + lambda u. For a normal family the result is
/// path-independent up to quadrature error; the `order` argument selects
/// which leg the staircase walks first, which is exactly the knob the
/// path-independence checks turn.
///
/// The family must pass is_normal at `guard_tol` on the same grid;
/// otherwise NotNormalError is thrown.
inline std::vector<WavefrontSample> wavefront(const RayFamily& family, double k1_0,
                                              double k2_0, double lambda0, int n1, int n2,
                                              PathOrder order = PathOrder::kRowMajor,
                                              double guard_tol = 1e-6) {
    NormalityReport guard = is_normal(family, n1, n2, guard_tol);
    if (!guard.pass)
        throw NotNormalError(
            "wavefront: family is not normal at tolerance " + std::to_string(guard_tol) +
            " (max |coefficient| " + std::to_string(guard.max_abs_coefficient) + " at k1=" +
            std::to_string(guard.max_k1) + ", k2=" + std::to_string(guard.max_k2) +
            (guard.rank_ok ? ")" : "; rank deficiency)"));

    const Domain& d = family.domain();
    std::vector<FamilyPoint> p;
    p.reserve(static_cast<std::size_t>(n1) * n2);
    std::vector<double> k1s(n1), k2s(n2);
    for (int i = 0; i < n1; ++i) k1s[i] = d.k1_lo + d.span1() * i / (n1 - 1);
    for (int j = 0; j < n2; ++j) k2s[j] = d.k2_lo + d.span2() * j / (n2 - 1);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) p.push_back(family.eval(k1s[i], k2s[j]));

    auto at = [&](int i, int j) -> const FamilyPoint& {
        return p[static_cast<std::size_t>(i) * n2 + j];
    };
    std::vector<double> g1(p.size()), g2(p.size());
    for (int i = 0; i < n1; ++i) {
        for (int j = 0; j < n2; ++j) {
            std::size_t idx = static_cast<std::size_t>(i) * n2 + j;
            g1[idx] = detail::ray_form_component(family, p[idx], k1s[i], k2s[j], 1);
            g2[idx] = detail::ray_form_component(family, p[idx], k1s[i], k2s[j], 2);
        }
    }
    // lambda step over the grid edge (ia,ja) -> (ib,jb) along one axis.
    auto step = [&](int ia, int ja, int ib, int jb) {
        std::size_t a = static_cast<std::size_t>(ia) * n2 + ja;
        std::size_t b = static_cast<std::size_t>(ib) * n2 + jb;
        if (ja == jb) return -0.5 * (g1[a] + g1[b]) * (k1s[ib] - k1s[ia]);
        return -0.5 * (g2[a] + g2[b]) * (k2s[jb] - k2s[ja]);
    };

    int i0 = static_cast<int>(std::lround((k1_0 - d.k1_lo) / d.span1() * (n1 - 1)));
    int j0 = static_cast<int>(std::lround((k2_0 - d.k2_lo) / d.span2() * (n2 - 1)));
    i0 = std::clamp(i0, 0, n1 - 1);
    j0 = std::clamp(j0, 0, n2 - 1);

    std::vector<double> lam(static_cast<std::size_t>(n1) * n2, 0.0);
    auto L = [&](int i, int j) -> double& {
        return lam[static_cast<std::size_t>(i) * n2 + j];
    };
    L(i0, j0) = lambda0;

    auto fill_k1_leg = [&](int j) {
        for (int i = i0 + 1; i < n1; ++i) L(i, j) = L(i - 1, j) + step(i - 1, j, i, j);
        for (int i = i0 - 1; i >= 0; --i) L(i, j) = L(i + 1, j) + step(i + 1, j, i, j);
    };
    auto fill_k2_leg = [&](int i) {
        for (int j = j0 + 1; j < n2; ++j) L(i, j) = L(i, j - 1) + step(i, j - 1, i, j);
        for (int j = j0 - 1; j >= 0; --j) L(i, j) = L(i, j + 1) + step(i, j + 1, i, j);
    };
    if (order == PathOrder::kRowMajor) {
        fill_k1_leg(j0);
        for (int i = 0; i < n1; ++i) fill_k2_leg(i);
    } else {
        fill_k2_leg(i0);
        for (int j = 0; j < n2; ++j) fill_k1_leg(j);
    }

    std::vector<WavefrontSample> out;
    out.reserve(lam.size());
    for (int i = 0; i < n1; ++i) {
        for (int j = 0; j < n2; ++j) {
            const FamilyPoint& fp = at(i, j);
            double l = L(i, j);
            out.push_back({k1s[i], k2s[j], l, fp.P + fp.u.vec() * l});
        }
    }
    return out;
}

namespace detail {

/// Grid-node FD derivative of W along one axis at interior index m in [1, n-2].
/// node(k) must return the sample at index k along that axis; h is the uniform
/// node spacing.  Uses fourth-order stencils when the axis has >= 5 nodes
/// (biased near the edges), else plain second-order central differences.
template <typename NodeFn>
Vec3 wavefront_axis_derivative(NodeFn&& node, int m, int n, double h) {
    if (n < 5) return (node(m + 1) - node(m - 1)) / (2.0 * h);
    if (m >= 2 && m + 2 < n)
        return (node(m - 2) - node(m - 1) * 8.0 + node(m + 1) * 8.0 - node(m + 2)) / (12.0 * h);
    if (m == 1)
        return (node(0) * -3.0 - node(1) * 10.0 + node(2) * 18.0 - node(3) * 6.0 + node(4)) /
               (12.0 * h);
    return (node(n - 1) * 3.0 + node(n - 2) * 10.0 - node(n - 3) * 18.0 + node(n - 4) * 6.0 -
            node(n - 5)) /
           (12.0 * h);
}

} // namespace detail

/// Max over interior grid nodes of |u . dW/dk1| + |u . dW/dk2| with FD
/// tangents of the reconstructed wavefront: how far the surface is from
/// being orthogonal to the rays.  The FD stencils are fourth-order so the
/// measurement floor sits well below the residuals being certified.
inline double orthogonality_residual(const RayFamily& family,
                                     const std::vector<WavefrontSample>& samples,
                                     int n1, int n2) {
    if (n1 < 3 || n2 < 3) throw Error("orthogonality_residual: grid must be at least 3x3");
    if (samples.size() != static_cast<std::size_t>(n1) * n2)
        throw Error("orthogonality_residual: sample count does not match grid shape");
    auto at = [&](int i, int j) -> const WavefrontSample& {
        return samples[static_cast<std::size_t>(i) * n2 + j];
    };
    const double h1 = at(1, 0).k1 - at(0, 0).k1;
    const double h2 = at(0, 1).k2 - at(0, 0).k2;
    double worst = 0.0;
    for (int i = 1; i + 1 < n1; ++i) {
        for (int j = 1; j + 1 < n2; ++j) {
            const WavefrontSample& s = at(i, j);
            Vec3 u = family.eval(s.k1, s.k2).u.vec();
            Vec3 dw1 = detail::wavefront_axis_derivative(
                [&](int m) { return at(m, j).W; }, i, n1, h1);
            Vec3 dw2 = detail::wavefront_axis_derivative(
                [&](int m) { return at(i, m).W; }, j, n2, h2);
            worst = std::max(worst, std::fabs(u.dot(dw1)) + std::fabs(u.dot(dw2)));
        }
    }
    return worst;
}

} // namespace symopt
