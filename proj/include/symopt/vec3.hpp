#pragma once

#include <cmath>
#include <limits>

namespace symopt {

/// Plain 3-vector with double components. Used both for points of the
/// ambient Euclidean space and for free vectors; `Point3` is an alias.
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr Vec3 operator+(const Vec3& r) const { return {x + r.x, y + r.y, z + r.z}; }
    constexpr Vec3 operator-(const Vec3& r) const { return {x - r.x, y - r.y, z - r.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    friend constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

    Vec3& operator+=(const Vec3& r) { x += r.x; y += r.y; z += r.z; return *this; }
    Vec3& operator-=(const Vec3& r) { x -= r.x; y -= r.y; z -= r.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    constexpr double dot(const Vec3& r) const { return x * r.x + y * r.y + z * r.z; }

    constexpr Vec3 cross(const Vec3& r) const {
        return {y * r.z - z * r.y, z * r.x - x * r.z, x * r.y - y * r.x};
    }

    constexpr double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }

    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
};

using Point3 = Vec3;

inline constexpr double dot(const Vec3& a, const Vec3& b) { return a.dot(b); }
inline constexpr Vec3 cross(const Vec3& a, const Vec3& b) { return a.cross(b); }
inline double norm(const Vec3& v) { return v.norm(); }

inline double distance(const Point3& a, const Point3& b) { return (a - b).norm(); }

/// Component of `v` orthogonal to the unit vector `axis`.
inline constexpr Vec3 reject(const Vec3& v, const Vec3& axis) {
    return v - axis * v.dot(axis);
}

} // namespace symopt
