#pragma once

#include <cstddef>
#include <vector>

#include "symopt/chart.hpp"
#include "symopt/line.hpp"
#include "symopt/vec3.hpp"

namespace symopt {

/// The symplectic form on the space of oriented lines, evaluated on two
/// tangents at the same line:
///
///     omega(t1, t2) = dP1 . du2 - dP2 . du1.
///
/// The value is independent of the point representatives chosen for dP
/// (adding s*u to either dP contributes s*(u . du) = 0) and changes
/// sign under swapping the arguments.
inline double omega(const OrientedLine& line, const LineTangent& t1,
                    const LineTangent& t2) {
    validate_tangent(line, t1);
    validate_tangent(line, t2);
    return t1.dP.dot(t2.du) - t2.dP.dot(t1.du);
}

/// The Liouville 1-form anchored at `origin`:
///
///     lambda_O(t) = (P - O) . du,
///
/// with P any point of the line (independent of the representative
/// because u . du = 0). Its exterior derivative is omega, and the
/// difference lambda_O' - lambda_O = (O - O') . du is exact, so closed
/// loop integrals do not depend on the anchor.
inline double liouville(const OrientedLine& line, const LineTangent& t,
                        const Point3& origin) {
    validate_tangent(line, t);
    return (line.foot() - origin).dot(t.du);
}

/// Chord-trapezoid approximation of the integral of lambda_O along the
/// straight interpolation from line `a` to line `b`:
///
///     1/2 [(qa - O) + (qb - O)] . (ub - ua).
///
/// Exactly antisymmetric under swapping a and b, and the dependence on
/// O telescopes exactly around closed chains: the anchor-shift part of
/// a closed-loop sum vanishes to machine precision regardless of how
/// coarse the chain is.
inline double segment_liouville(const OrientedLine& a, const OrientedLine& b,
                                const Point3& origin) {
    Vec3 mid = (a.foot() - origin) + (b.foot() - origin);
    Vec3 du = b.direction().vec() - a.direction().vec();
    return 0.5 * mid.dot(du);
}

/// Integral of lambda_O around the closed chain of lines (last joined
/// back to first), chord-trapezoid on every edge.
inline double loop_liouville(const std::vector<OrientedLine>& loop,
                             const Point3& origin) {
    double sum = 0.0;
    std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i)
        sum += segment_liouville(loop[i], loop[(i + 1) % n], origin);
    return sum;
}

/// Expand a closed polygon given by chart-coordinate vertices into a
/// chain of lines, splitting each edge into `subdiv` pieces (vertices
/// are not repeated; the chain closes implicitly).
inline std::vector<OrientedLine> make_chart_loop(const Chart& chart,
                                                 const std::vector<Coords4>& vertices,
                                                 int subdiv = 1) {
    std::vector<OrientedLine> out;
    std::size_t n = vertices.size();
    out.reserve(n * static_cast<std::size_t>(subdiv));
    for (std::size_t i = 0; i < n; ++i) {
        const Coords4& a = vertices[i];
        const Coords4& b = vertices[(i + 1) % n];
        for (int s = 0; s < subdiv; ++s) {
            double w = static_cast<double>(s) / subdiv;
            Coords4 c;
            for (int k = 0; k < 4; ++k) c[k] = a[k] + w * (b[k] - a[k]);
            out.push_back(chart.line(c));
        }
    }
    return out;
}

/// Total chart-space length of the closed polygon (used to scale loop
/// integral error bounds).
inline double chart_loop_length(const std::vector<Coords4>& vertices) {
    double len = 0.0;
    std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Coords4& a = vertices[i];
        const Coords4& b = vertices[(i + 1) % n];
        Coords4 d{b[0] - a[0], b[1] - a[1], b[2] - a[2], b[3] - a[3]};
        len += coords_norm(d);
    }
    return len;
}

/// Circulation of lambda_O around the coordinate parallelogram spanned
/// by eps*ra and eps*rb, centered on the base of `chart`. By Stokes this
/// equals eps^2 * omega(t_ra, t_rb) + O(eps^4) -- centering cancels the
/// odd-order error, so this is a second-order finite-difference
/// realization of d(lambda) = omega.
inline double parallelogram_circulation(const Chart& chart, const Coords4& ra,
                                        const Coords4& rb, double eps,
                                        int subdiv = 4,
                                        const Point3& origin = {}) {
    auto corner = [&](double s1, double s2) {
        Coords4 c;
        for (int k = 0; k < 4; ++k) c[k] = eps * (s1 * ra[k] + s2 * rb[k]);
        return c;
    };
    std::vector<Coords4> poly{corner(-0.5, -0.5), corner(0.5, -0.5),
                              corner(0.5, 0.5), corner(-0.5, 0.5)};
    return loop_liouville(make_chart_loop(chart, poly, subdiv), origin);
}

} // namespace symopt
