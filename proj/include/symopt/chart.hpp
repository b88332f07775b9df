#pragma once

#include <array>
#include <cmath>

#include "symopt/error.hpp"
#include "symopt/line.hpp"
#include "symopt/vec3.hpp"

namespace symopt {

using Coords4 = std::array<double, 4>;

inline constexpr double kChartValidityCap = 0.1;

inline double coords_norm(const Coords4& c) {
    return std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + c[3] * c[3]);
}

/// Orthographic coordinate chart on the space of oriented lines,
/// centered at a base line (u0, q0) with an orthonormal frame (e1, e2)
/// spanning the plane orthogonal to u0.
///
/// A line (u, q) with u.u0 > 0.1 gets coordinates (alpha, beta, gamma,
/// delta): the direction is encoded by u = normalize(u0 + alpha e1 +
/// beta e2), and (gamma, delta) are the components of the foot point on
/// the frame (f1(u), f2(u)) obtained from (e1, e2) by projecting onto
/// the plane orthogonal to u and re-orthonormalizing, shifted so the
/// base line itself sits at the origin of the chart.
///
/// At the base line the chart is adapted to the tangent-space
/// description: a coordinate rate (da, db, dg, dd) corresponds exactly
/// to the tangent dP = dg e1 + dd e2, du = da e1 + db e2 (modulo slides
/// along the line), with no first-order cross terms. This makes chart
/// rates directly usable for Jacobians of line maps.
class Chart {
public:
    explicit Chart(const OrientedLine& base) : base_(base) {
        perp_basis(base.direction().vec(), e1_, e2_);
        c1_ = base.foot().dot(e1_);
        c2_ = base.foot().dot(e2_);
    }

    /// Explicit frame; (e1, e2) must be orthonormal and orthogonal to
    /// the base direction.
    Chart(const OrientedLine& base, const Vec3& e1, const Vec3& e2)
        : base_(base), e1_(e1), e2_(e2) {
        const Vec3& u0 = base.direction().vec();
        double worst = std::fabs(e1.norm() - 1.0);
        worst = std::max(worst, std::fabs(e2.norm() - 1.0));
        worst = std::max(worst, std::fabs(e1.dot(e2)));
        worst = std::max(worst, std::fabs(e1.dot(u0)));
        worst = std::max(worst, std::fabs(e2.dot(u0)));
        if (worst > 1e-9)
            throw Error("Chart: frame not orthonormal to the base direction");
        c1_ = base.foot().dot(e1_);
        c2_ = base.foot().dot(e2_);
    }

    const OrientedLine& base() const { return base_; }
    const Vec3& e1() const { return e1_; }
    const Vec3& e2() const { return e2_; }

    bool contains(const OrientedLine& line) const {
        return line.direction().dot(base_.direction().vec()) > kChartValidityCap;
    }

    Coords4 coords(const OrientedLine& line) const {
        const Vec3& u = line.direction().vec();
        double denom = u.dot(base_.direction().vec());
        if (!(denom > kChartValidityCap))
            throw OutOfChartError("Chart: line direction outside validity cap");
        Vec3 f1, f2;
        foot_frame(u, f1, f2);
        const Point3& q = line.foot();
        return {u.dot(e1_) / denom, u.dot(e2_) / denom,
                q.dot(f1) - c1_, q.dot(f2) - c2_};
    }

    OrientedLine line(const Coords4& c) const {
        Vec3 u = base_.direction().vec() + e1_ * c[0] + e2_ * c[1];
        u = u / u.norm();
        Vec3 f1, f2;
        foot_frame(u, f1, f2);
        Point3 q = f1 * (c[2] + c1_) + f2 * (c[3] + c2_);
        return OrientedLine(q, u);
    }

    /// Tangent at the base line realizing a coordinate rate; exact, not
    /// a finite difference (see class comment).
    LineTangent tangent_at_base(const Coords4& rate) const {
        return {e1_ * rate[2] + e2_ * rate[3], e1_ * rate[0] + e2_ * rate[1]};
    }

    /// Coordinate rate of a tangent at the base line; inverse of
    /// tangent_at_base modulo slides along the line.
    Coords4 rate_at_base(const LineTangent& t) const {
        validate_tangent(base_, t);
        return {t.du.dot(e1_), t.du.dot(e2_), t.dP.dot(e1_), t.dP.dot(e2_)};
    }

private:
    // Gram-Schmidt push of (e1, e2) onto the plane orthogonal to u.
    // Within the validity cap neither projection can degenerate.
    void foot_frame(const Vec3& u, Vec3& f1, Vec3& f2) const {
        f1 = reject(e1_, u);
        f1 = f1 / f1.norm();
        f2 = reject(e2_, u) - f1 * f1.dot(e2_);
        f2 = f2 / f2.norm();
    }

    OrientedLine base_;
    Vec3 e1_, e2_;
    double c1_, c2_;
};

} // namespace symopt
