#pragma once

// Independent reference computations used to cross-check the library.
// Each is written directly from the defining formula, sharing nothing
// with the implementation under test beyond the plain vector type, so
// an agreement between the two is meaningful evidence.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>

#include "symopt/families.hpp"
#include "symopt/vec3.hpp"

namespace oracles {

/// Scalar Snell law: refraction angle for incidence angle `theta1`
/// (radians, measured from the normal), or nothing on total internal
/// reflection.
inline std::optional<double> snell_angle(double theta1, double n1, double n2) {
    double s = n1 / n2 * std::sin(theta1);
    if (std::fabs(s) >= 1.0) return std::nullopt;
    return std::asin(s);
}

inline double angle_between(const symopt::Vec3& a, const symopt::Vec3& b) {
    double c = a.dot(b) / (a.norm() * b.norm());
    return std::acos(std::clamp(c, -1.0, 1.0));
}

/// Brute-force pullback coefficient d1P.d2u - d2P.d1u by plain central
/// differences of the family evaluation (no shared stencil code).
inline double pullback_fd(const std::function<symopt::FamilyPoint(double, double)>& eval,
                          double k1, double k2, double h) {
    symopt::FamilyPoint a1 = eval(k1 + h, k2), b1 = eval(k1 - h, k2);
    symopt::FamilyPoint a2 = eval(k1, k2 + h), b2 = eval(k1, k2 - h);
    symopt::Vec3 d1P = (a1.P - b1.P) / (2.0 * h);
    symopt::Vec3 d2P = (a2.P - b2.P) / (2.0 * h);
    symopt::Vec3 d1u = (a1.u.vec() - b1.u.vec()) / (2.0 * h);
    symopt::Vec3 d2u = (a2.u.vec() - b2.u.vec()) / (2.0 * h);
    return d1P.dot(d2u) - d2P.dot(d1u);
}

/// Quadratic-formula sphere intersection: first root in (t_min, t_max].
inline std::optional<double> sphere_first_hit(const symopt::Point3& start,
                                              const symopt::Vec3& dir,
                                              const symopt::Point3& center, double radius,
                                              double t_min, double t_max) {
    symopt::Vec3 oc = start - center;
    double b = 2.0 * oc.dot(dir);
    double c = oc.norm2() - radius * radius;
    double disc = b * b - 4.0 * c;
    if (disc < 0.0) return std::nullopt;
    double s = std::sqrt(disc);
    for (double t : {(-b - s) / 2.0, (-b + s) / 2.0})
        if (t > t_min && t <= t_max) return t;
    return std::nullopt;
}

/// First plane crossing (point p, unit normal n) in (t_min, t_max].
inline std::optional<double> plane_first_hit(const symopt::Point3& start,
                                             const symopt::Vec3& dir,
                                             const symopt::Point3& p, const symopt::Vec3& n,
                                             double t_min, double t_max) {
    double denom = dir.dot(n);
    if (denom == 0.0) return std::nullopt;
    double t = (p - start).dot(n) / denom;
    if (t > t_min && t <= t_max) return t;
    return std::nullopt;
}

} // namespace oracles
