#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "symopt/vec3.hpp"

namespace symopt {

/// Deterministic pseudo-random generator (splitmix64 core). The entire
/// generator is spelled out here so that a seed produces bit-identical
/// streams on every platform and standard library; reproducible reports
/// depend on this.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 random mantissa bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; pairs are generated together and
    /// the second value cached, keeping the stream deterministic.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        // Guard against log(0); 2^-53 shifts the distribution negligibly.
        double r = std::sqrt(-2.0 * std::log(u1 + 0x1.0p-53));
        double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    Point3 point_in_box(const Point3& lo, const Point3& hi) {
        return {uniform(lo.x, hi.x), uniform(lo.y, hi.y), uniform(lo.z, hi.z)};
    }

    /// Direction uniform on the spherical cap of half-angle `half_angle`
    /// around the unit vector `axis` (area-uniform in cos(theta)).
    Vec3 direction_in_cap(const Vec3& axis, double half_angle) {
        double cos_min = std::cos(half_angle);
        double c = uniform(cos_min, 1.0);
        double s = std::sqrt(std::max(0.0, 1.0 - c * c));
        double phi = uniform(0.0, 2.0 * std::numbers::pi);
        // Orthonormal frame around the axis; axis is assumed unit.
        Vec3 ref = std::fabs(axis.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        Vec3 e1 = cross(axis, ref);
        e1 = e1 / e1.norm();
        Vec3 e2 = cross(axis, e1);
        return axis * c + (e1 * std::cos(phi) + e2 * std::sin(phi)) * s;
    }

    /// Uniform direction on the full unit sphere.
    Vec3 direction() {
        double c = uniform(-1.0, 1.0);
        double s = std::sqrt(std::max(0.0, 1.0 - c * c));
        double phi = uniform(0.0, 2.0 * std::numbers::pi);
        return {s * std::cos(phi), s * std::sin(phi), c};
    }

    /// Random unit 4-vector (Gaussian components, normalized); used for
    /// sampling chart-space tangent directions without axis bias.
    std::array<double, 4> unit4() {
        while (true) {
            std::array<double, 4> v{normal(), normal(), normal(), normal()};
            double n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3];
            if (n2 > 1e-12) {
                double inv = 1.0 / std::sqrt(n2);
                for (double& c : v) c *= inv;
                return v;
            }
        }
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace symopt
