#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "symopt/chart.hpp"
#include "symopt/error.hpp"
#include "symopt/families.hpp"
#include "symopt/fmt.hpp"
#include "symopt/line.hpp"
#include "symopt/optics.hpp"
#include "symopt/rng.hpp"
#include "symopt/symplectic.hpp"
#include "symopt/vec3.hpp"

namespace symopt {

/// Outcome of one verification check (or a bundle of sub-checks).
/// Residuals are relative, normalized by 1 + |reference|, because raw
/// values span orders of magnitude across random tangent pairs. For
/// composite reports the residual is the worst sub-residual divided by
/// its own tolerance, against tolerance 1. `elapsed_ms` is diagnostic
/// only and deliberately excluded from every serialized form so that
/// equal seeds yield byte-identical reports.
struct CheckReport {
    std::string check;
    std::uint64_t seed = 0;
    long samples = 0;
    double max_residual = 0.0;
    std::string location;  ///< where the max residual occurred
    double tolerance = 0.0;
    bool pass = false;
    double elapsed_ms = 0.0;
    std::vector<CheckReport> sub;
};

/// Bundle sub-checks: pass iff all pass, residual = worst ratio of
/// sub-residual to sub-tolerance.
inline CheckReport composite_report(std::string name, std::uint64_t seed,
                                    std::vector<CheckReport> subs) {
    CheckReport rep;
    rep.check = std::move(name);
    rep.seed = seed;
    rep.tolerance = 1.0;
    rep.pass = true;
    for (const CheckReport& s : subs) {
        rep.samples += s.samples;
        rep.elapsed_ms += s.elapsed_ms;
        rep.pass = rep.pass && s.pass;
        double ratio = s.tolerance > 0.0 ? s.max_residual / s.tolerance : s.max_residual;
        if (ratio > rep.max_residual) {
            rep.max_residual = ratio;
            rep.location = s.check;
        }
    }
    rep.sub = std::move(subs);
    return rep;
}

/// Random oriented lines: uniform direction in a spherical cap times a
/// uniform anchor point in a box. Checks resample (up to `max_retries`
/// per requested sample) when a candidate line leaves the domain of the
/// map under test.
struct LineSampler {
    Point3 box_lo{-2.0, -2.0, -2.0};
    Point3 box_hi{2.0, 2.0, 2.0};
    Vec3 cap_axis{0.0, 0.0, 1.0};
    double cap_half_angle = 0.6;
    int max_retries = 1000;

    OrientedLine sample(Rng& rng) const {
        Vec3 dir = rng.direction_in_cap(UnitVec3(cap_axis).vec(), cap_half_angle);
        return OrientedLine(rng.point_in_box(box_lo, box_hi), dir);
    }
};

namespace detail {

class StopWatch {
public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::string loc(std::string what, long index) {
    return what + " " + std::to_string(index);
}

} // namespace detail

/// Verify that a line map scales the symplectic form by exactly
/// n_in/n_out: for sampled lines L and random unit-chart-length tangent
/// pairs (t1, t2),
///
///     residual = |n_out w(Df t1, Df t2) - n_in w(t1, t2)| / (1 + |n_in w(t1, t2)|)
///
/// with Df the central-difference differential at step eps. Reflection
/// and whole-mirror systems use n_in = n_out. Lines on which the map or
/// a probe fails (miss, grazing, TIR) are resampled.
inline CheckReport check_symplectic(const LineMap& map, double n_in, double n_out,
                                    const LineSampler& sampler, int n_lines,
                                    int pairs_per_line, double eps, double tol,
                                    std::uint64_t seed, std::string name) {
    detail::StopWatch watch;
    Rng rng(seed);
    CheckReport rep;
    rep.check = std::move(name);
    rep.seed = seed;
    rep.tolerance = tol;

    for (int li = 0; li < n_lines; ++li) {
        int attempts = 0;
        bool done = false;
        while (!done) {
            if (++attempts > sampler.max_retries)
                throw Error("check_symplectic: sampling exhausted the retry budget at line " +
                            std::to_string(li));
            OrientedLine line = sampler.sample(rng);
            Expected<OrientedLine> image = map(line);
            if (!image) continue;

            Chart at_line(line);
            Chart at_image(*image);
            // Evaluate all pairs for this candidate; if any probe falls
            // off the map's domain, resample the whole line.
            struct PairResult {
                double residual;
                int pair;
            };
            std::vector<PairResult> results;
            bool ok = true;
            for (int pi = 0; pi < pairs_per_line && ok; ++pi) {
                LineTangent t1 = at_line.tangent_at_base(rng.unit4());
                LineTangent t2 = at_line.tangent_at_base(rng.unit4());
                Expected<LineTangent> d1 = differential(map, line, t1, eps);
                Expected<LineTangent> d2 = differential(map, line, t2, eps);
                if (!d1 || !d2) {
                    ok = false;
                    break;
                }
                double w_in = n_in * omega(line, t1, t2);
                double w_out = n_out * omega(*image, *d1, *d2);
                results.push_back({std::fabs(w_out - w_in) / (1.0 + std::fabs(w_in)), pi});
            }
            if (!ok) continue;
            for (const PairResult& r : results) {
                ++rep.samples;
                if (r.residual > rep.max_residual) {
                    rep.max_residual = r.residual;
                    rep.location = detail::loc("line", li) + " " + detail::loc("pair", r.pair);
                }
            }
            done = true;
        }
    }
    rep.pass = rep.max_residual <= tol;
    rep.elapsed_ms = watch.ms();
    return rep;
}

/// Convenience wrapper: symplecticity of a single interface, with the
/// index scaling implied by its action.
inline CheckReport check_symplectic(const Interface& step, const LineSampler& sampler,
                                    int n_lines, int pairs_per_line, double eps, double tol,
                                    std::uint64_t seed) {
    bool refract = step.action == SurfaceAction::kRefract;
    double n_in = refract ? step.n1 : 1.0;
    double n_out = refract ? step.n2 : 1.0;
    std::string name = std::string(refract ? "refract(" : "reflect(") +
                       std::string(step.surface.kind_name()) + ")";
    return check_symplectic(interface_map(step), n_in, n_out, sampler, n_lines,
                            pairs_per_line, eps, tol, seed, std::move(name));
}

/// Malus' theorem, end to end: the input family must be normal at tol
/// on the grid (precondition; NotNormalError otherwise), and the check
/// passes iff the family traced through the system still is. Trace
/// failures surface as TraceError with the parameter location.
inline CheckReport malus_check(const RayFamily& family, const OpticalSystem& system,
                               int n1, int n2, double tol,
                               const TraceOpts& trace_opts = {}) {
    detail::StopWatch watch;
    NormalityReport before = is_normal(family, n1, n2, tol);
    if (!before.pass)
        throw NotNormalError("malus_check: input family is not normal at tolerance " +
                             std::to_string(tol) + " (max |coefficient| " +
                             std::to_string(before.max_abs_coefficient) + ")");

    RayFamily traced = transform(family, system, trace_opts);
    NormalityReport after = is_normal(traced, n1, n2, tol);

    CheckReport rep;
    rep.check = "malus(" + family.name() + ")";
    rep.samples = static_cast<long>(n1) * n2;
    rep.max_residual = after.max_abs_coefficient;
    rep.location = "k1=" + float_short(after.max_k1) + " k2=" + float_short(after.max_k2);
    rep.tolerance = tol;
    rep.pass = after.pass;
    rep.elapsed_ms = watch.ms();
    return rep;
}

/// The structural identities of the symplectic space of lines, bundled:
/// algebraic properties of omega, chart round-trips, d(lambda) = omega
/// by parallelogram circulation, and exactness of the anchor shift of
/// lambda over closed loops. `budget` is the sample count per sub-check.
inline CheckReport structure_checks(std::uint64_t seed, int budget = 100) {
    Rng rng(seed);
    LineSampler sampler;
    sampler.cap_half_angle = 3.0;  // nearly the full sphere; charts follow each line

    auto random_scalar = [&](Rng& r) { return r.uniform(-2.0, 2.0); };

    std::vector<CheckReport> subs;

    {
        // Antisymmetry, bilinearity, and independence of the point
        // representative (dP defined modulo slides along the line).
        detail::StopWatch watch;
        CheckReport c;
        c.check = "omega_algebra";
        c.seed = seed;
        c.tolerance = 1e-12;
        for (int i = 0; i < budget; ++i) {
            OrientedLine line = sampler.sample(rng);
            Chart chart(line);
            LineTangent t1 = chart.tangent_at_base(rng.unit4());
            LineTangent t1b = chart.tangent_at_base(rng.unit4());
            LineTangent t2 = chart.tangent_at_base(rng.unit4());
            double a = random_scalar(rng), b = random_scalar(rng), s = random_scalar(rng);

            double w12 = omega(line, t1, t2);
            double r_anti = std::fabs(w12 + omega(line, t2, t1));
            double r_self = std::fabs(omega(line, t1, t1));
            LineTangent combo{t1.dP * a + t1b.dP * b, t1.du * a + t1b.du * b};
            double r_lin =
                std::fabs(omega(line, combo, t2) - a * w12 - b * omega(line, t1b, t2));
            LineTangent shifted{t1.dP + line.direction().vec() * s, t1.du};
            double r_rep = std::fabs(omega(line, shifted, t2) - w12);

            double worst = std::max(std::max(r_anti, r_self), std::max(r_lin, r_rep));
            ++c.samples;
            if (worst > c.max_residual) {
                c.max_residual = worst;
                c.location = detail::loc("sample", i);
            }
        }
        c.pass = c.max_residual <= c.tolerance;
        c.elapsed_ms = watch.ms();
        subs.push_back(std::move(c));
    }

    {
        // chart_line then chart_coords then chart_line reproduces the
        // same oriented line.
        detail::StopWatch watch;
        CheckReport c;
        c.check = "chart_round_trip";
        c.seed = seed;
        c.tolerance = 1e-10;
        for (int i = 0; i < budget; ++i) {
            Chart chart(sampler.sample(rng));
            Coords4 coords;
            for (double& v : coords) v = rng.uniform(-0.8, 0.8);
            OrientedLine line = chart.line(coords);
            OrientedLine back = chart.line(chart.coords(line));
            double r = line_distance(line, back);
            ++c.samples;
            if (r > c.max_residual) {
                c.max_residual = r;
                c.location = detail::loc("sample", i);
            }
        }
        c.pass = c.max_residual <= c.tolerance;
        c.elapsed_ms = watch.ms();
        subs.push_back(std::move(c));
    }

    {
        // d(lambda_O) = omega: the circulation of lambda around a small
        // coordinate parallelogram, divided by its area, converges to
        // omega of the spanning tangents.
        detail::StopWatch watch;
        CheckReport c;
        c.check = "dlambda_equals_omega";
        c.seed = seed;
        c.tolerance = 1e-6;
        const double eps = 3e-4;
        for (int i = 0; i < budget; ++i) {
            OrientedLine line = sampler.sample(rng);
            Chart chart(line);
            Coords4 ra = rng.unit4();
            Coords4 rb = rng.unit4();
            Point3 origin = rng.point_in_box({-1, -1, -1}, {1, 1, 1});
            double w = omega(line, chart.tangent_at_base(ra), chart.tangent_at_base(rb));
            double circ = parallelogram_circulation(chart, ra, rb, eps, 4, origin);
            double r = std::fabs(circ / (eps * eps) - w) / (1.0 + std::fabs(w));
            ++c.samples;
            if (r > c.max_residual) {
                c.max_residual = r;
                c.location = detail::loc("sample", i);
            }
        }
        c.pass = c.max_residual <= c.tolerance;
        c.elapsed_ms = watch.ms();
        subs.push_back(std::move(c));
    }

    {
        // lambda_O' - lambda_O is exact: its integral around closed
        // loops vanishes (bound scaled by loop length).
        detail::StopWatch watch;
        CheckReport c;
        c.check = "origin_shift_exactness";
        c.seed = seed;
        c.tolerance = 1e-8;
        for (int i = 0; i < budget; ++i) {
            Chart chart(sampler.sample(rng));
            std::vector<Coords4> poly(6);
            for (Coords4& v : poly)
                for (double& x : v) x = rng.uniform(-0.5, 0.5);
            Point3 o1 = rng.point_in_box({-3, -3, -3}, {3, 3, 3});
            Point3 o2 = rng.point_in_box({-3, -3, -3}, {3, 3, 3});
            std::vector<OrientedLine> loop = make_chart_loop(chart, poly, 4);
            double diff = loop_liouville(loop, o2) - loop_liouville(loop, o1);
            double r = std::fabs(diff) / std::max(1.0, chart_loop_length(poly));
            ++c.samples;
            if (r > c.max_residual) {
                c.max_residual = r;
                c.location = detail::loc("sample", i);
            }
        }
        c.pass = c.max_residual <= c.tolerance;
        c.elapsed_ms = watch.ms();
        subs.push_back(std::move(c));
    }

    {
        // Non-degeneracy: every chart-basis tangent pairs to magnitude
        // exactly 1 with some other basis tangent.
        detail::StopWatch watch;
        CheckReport c;
        c.check = "nondegeneracy";
        c.seed = seed;
        c.tolerance = 1e-9;
        for (int i = 0; i < budget; ++i) {
            OrientedLine line = sampler.sample(rng);
            Chart chart(line);
            LineTangent basis[4];
            for (int k = 0; k < 4; ++k) {
                Coords4 e{0, 0, 0, 0};
                e[k] = 1.0;
                basis[k] = chart.tangent_at_base(e);
            }
            double min_pair = std::numeric_limits<double>::infinity();
            for (int k = 0; k < 4; ++k) {
                double best = 0.0;
                for (int j = 0; j < 4; ++j)
                    best = std::max(best, std::fabs(omega(line, basis[k], basis[j])));
                min_pair = std::min(min_pair, best);
            }
            double r = std::fabs(min_pair - 1.0);
            ++c.samples;
            if (r > c.max_residual) {
                c.max_residual = r;
                c.location = detail::loc("sample", i);
            }
        }
        c.pass = c.max_residual <= c.tolerance;
        c.elapsed_ms = watch.ms();
        subs.push_back(std::move(c));
    }

    return composite_report("structure_checks", seed, std::move(subs));
}

} // namespace symopt
