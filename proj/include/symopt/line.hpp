#pragma once

#include <algorithm>
#include <cmath>

#include "symopt/error.hpp"
#include "symopt/vec3.hpp"

namespace symopt {

inline constexpr double kZeroDirectionTol = 1e-12;
inline constexpr double kTangentOrthoTol = 1e-9;
inline constexpr double kLineEqualTol = 1e-9;

/// Unit-length 3-vector. Construction normalizes and rejects vectors of
/// length <= 1e-12, so a held value always satisfies ||v| - 1| <= 1e-12.
class UnitVec3 {
public:
    explicit UnitVec3(const Vec3& v) : v_(v) {
        double n = v.norm();
        if (!(n > kZeroDirectionTol) || !v.finite())
            throw ZeroDirectionError("UnitVec3: direction vector too short to normalize");
        v_ = v / n;
    }

    const Vec3& vec() const { return v_; }
    operator const Vec3&() const { return v_; }

    double x() const { return v_.x; }
    double y() const { return v_.y; }
    double z() const { return v_.z; }

    double dot(const Vec3& r) const { return v_.dot(r); }
    UnitVec3 reversed() const { return UnitVec3(-v_); }

private:
    Vec3 v_;
};

/// An oriented line in Euclidean 3-space, stored in the canonical form
/// (u, q): unit direction u and foot point q, the point of the line
/// closest to the origin (equivalently q.u = 0). Two (point, direction)
/// pairs describe the same oriented line exactly when they canonicalize
/// to the same (u, q).
class OrientedLine {
public:
    OrientedLine(const Point3& point, const Vec3& dir) : u_(dir), q_(point) {
        // Project the anchor point onto the plane through the origin
        // orthogonal to u; this is the closest point of the line.
        q_ = reject(point, u_.vec());
    }

    const UnitVec3& direction() const { return u_; }
    const Point3& foot() const { return q_; }

    /// Point at signed parameter t measured from the foot point.
    Point3 at(double t) const { return q_ + u_.vec() * t; }

    /// Signed parameter of the orthogonal projection of p onto the line.
    double parameter_of(const Point3& p) const { return (p - q_).dot(u_.vec()); }

    OrientedLine reversed() const { return OrientedLine(q_, -u_.vec()); }

private:
    UnitVec3 u_;
    Point3 q_;
};

inline OrientedLine line_from_point_dir(const Point3& point, const Vec3& dir) {
    return OrientedLine(point, dir);
}

inline OrientedLine reverse(const OrientedLine& line) { return line.reversed(); }

/// Same oriented line, i.e. both canonical components agree within tol.
inline bool lines_equal(const OrientedLine& a, const OrientedLine& b,
                        double tol = kLineEqualTol) {
    return distance(a.foot(), b.foot()) <= tol &&
           distance(a.direction().vec(), b.direction().vec()) <= tol;
}

/// Symmetric measure of how far apart two oriented lines are, combining
/// foot-point and direction discrepancy.
inline double line_distance(const OrientedLine& a, const OrientedLine& b) {
    return std::max(distance(a.foot(), b.foot()),
                    distance(a.direction().vec(), b.direction().vec()));
}

/// Tangent vector to the space of oriented lines at some line, written
/// as a first-order displacement of a point moving with the line (dP,
/// taken modulo slides along the line) and of its direction (du, with
/// u.du = 0 since directions stay unit).
struct LineTangent {
    Vec3 dP;
    Vec3 du;
};

/// Check du against the direction of `line`; throws InvalidTangentError
/// when the unit-length constraint is violated to first order.
inline void validate_tangent(const OrientedLine& line, const LineTangent& t,
                             double tol = kTangentOrthoTol) {
    if (std::fabs(line.direction().dot(t.du)) > tol)
        throw InvalidTangentError("LineTangent: du not orthogonal to line direction");
}

/// First-order move away from `line`: displace the foot point by eps*dP
/// and rotate the direction to u + eps*du (renormalized). For small eps
/// this realizes the tangent t up to O(eps^2).
inline OrientedLine retract(const OrientedLine& line, const LineTangent& t, double eps) {
    validate_tangent(line, t);
    return OrientedLine(line.foot() + t.dP * eps, line.direction().vec() + t.du * eps);
}

/// Deterministic right-handed orthonormal pair (e1, e2) completing the
/// unit vector u to a basis: e1, e2 span the plane orthogonal to u and
/// e1 x e2 = u. Seeded with the coordinate axis least aligned with u
/// (projected onto the orthogonal plane), so for u = +z the frame is
/// (+x, +y) and the frame varies continuously near any direction.
inline void perp_basis(const Vec3& u, Vec3& e1, Vec3& e2) {
    double ax = std::fabs(u.x), ay = std::fabs(u.y), az = std::fabs(u.z);
    Vec3 seed = (ax <= ay && ax <= az) ? Vec3{1, 0, 0}
              : (ay <= az)             ? Vec3{0, 1, 0}
                                       : Vec3{0, 0, 1};
    e1 = reject(seed, u);
    e1 = e1 / e1.norm();
    e2 = cross(u, e1);
}

} // namespace symopt
