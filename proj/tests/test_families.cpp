// Two-parameter ray families: the pullback criterion for normality,
// transforms through optical systems, and wavefront reconstruction.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "symopt/symopt.hpp"

using namespace symopt;

namespace {

RayFamily unit_sphere_congruence() {
    return normal_congruence(ImplicitSurface{Sphere({0, 0, 0}, 1.0)});
}

RayFamily paraboloid_congruence() {
    return normal_congruence(ImplicitSurface{Paraboloid({0, 0, 0}, {0, 0, 1}, 1.0)});
}

RayFamily plane_congruence() {
    return normal_congruence(ImplicitSurface{Plane({0, 0, 0}, {0, 0, 1})});
}

std::vector<RayFamily> all_builtins() {
    std::vector<RayFamily> fams;
    fams.push_back(point_source({0, 0, 1}));
    fams.push_back(plane_congruence());
    fams.push_back(unit_sphere_congruence());
    fams.push_back(paraboloid_congruence());
    fams.push_back(normal_congruence(ImplicitSurface{SinusoidBump{0.05, 2.0, 3.0}}));
    fams.push_back(normal_congruence(ImplicitSurface{Torus({0, 0, 0}, {0, 0, 1}, 2.0, 0.5)},
                                     Domain{-0.5, 0.5, -0.5, 0.5}));
    fams.push_back(skew_family());
    return fams;
}

double skew_closed_form(double k1, double k2) {
    double m2 = 1.0 + k1 * k1 + k2 * k2;
    double m = std::sqrt(m2);
    return -(1.0 + 1.0 / m2) / m;
}

} // namespace

TEST_CASE("point source rays emanate from the source point", "[family]") {
    Point3 s0{1.0, -2.0, 0.5};
    RayFamily fam = point_source(s0, {0, 0, -1});
    CHECK(fam.name() == "point_source");
    CHECK(fam.has_analytic_partials());

    FamilyPoint base = fam.eval(0.0, 0.0);
    CHECK((base.P - s0).norm() == 0.0);
    CHECK((base.u.vec() - Vec3{0, 0, -1}).norm() < 1e-15);

    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        double k1 = rng.uniform(-0.5, 0.5), k2 = rng.uniform(-0.5, 0.5);
        FamilyPoint p = fam.eval(k1, k2);
        CHECK((p.P - s0).norm() == 0.0);
        CHECK(std::fabs(p.u.vec().norm() - 1.0) < 1e-14);
        FamilyPartials d = fam.analytic_partials(k1, k2);
        CHECK(d.dP_dk1.norm() == 0.0);
        CHECK(d.dP_dk2.norm() == 0.0);
    }
}

TEST_CASE("normal congruences anchor on their surface along its normals", "[family]") {
    struct Case {
        ImplicitSurface surface;
        Domain domain;
    };
    std::vector<Case> cases = {
        {ImplicitSurface{Plane({0.5, 0, 1}, {0, 1, 1})}, {}},
        {ImplicitSurface{Sphere({1, 2, 3}, 2.0)}, {}},
        {ImplicitSurface{Paraboloid({0, 0, -1}, {0, 0, 1}, 2.0)}, {}},
        {ImplicitSurface{SinusoidBump{0.1, 1.5, 2.5}}, {}},
        {ImplicitSurface{Torus({0, 0, 0}, {0, 0, 1}, 2.0, 0.5)}, {-0.5, 0.5, -0.5, 0.5}},
    };
    Rng rng(11);
    for (const Case& c : cases) {
        RayFamily fam = normal_congruence(c.surface, c.domain);
        for (int trial = 0; trial < 40; ++trial) {
            double k1 = rng.uniform(c.domain.k1_lo, c.domain.k1_hi);
            double k2 = rng.uniform(c.domain.k2_lo, c.domain.k2_hi);
            FamilyPoint p = fam.eval(k1, k2);
            // Anchor lies on the surface and u is the gradient-oriented normal.
            CHECK(std::fabs(c.surface.eval(p.P)) < 1e-12);
            CHECK(p.u.vec().dot(c.surface.normal_at(p.P).vec()) ==
                  Catch::Approx(1.0).margin(1e-12));
            // The defining property: u is orthogonal to both anchor velocities.
            FamilyPartials d = fam.analytic_partials(k1, k2);
            CHECK(std::fabs(p.u.vec().dot(d.dP_dk1)) < 1e-13);
            CHECK(std::fabs(p.u.vec().dot(d.dP_dk2)) < 1e-13);
        }
    }
}

TEST_CASE("normal families have vanishing pullback coefficient", "[family]") {
    std::vector<RayFamily> fams;
    fams.push_back(point_source({0, 0, 1}));
    fams.push_back(plane_congruence());
    fams.push_back(unit_sphere_congruence());
    fams.push_back(paraboloid_congruence());

    for (const RayFamily& fam : fams) {
        INFO(fam.name());
        NormalityReport analytic = is_normal(fam, 21, 21, 1e-9, PartialMode::kAnalytic);
        CHECK(analytic.pass);
        CHECK(analytic.rank_ok);
        CHECK(analytic.max_abs_coefficient <= 1e-9);

        NormalityReport fd = is_normal(fam, 21, 21, 1e-6, PartialMode::kFiniteDifference);
        CHECK(fd.pass);
        CHECK(fd.mode == PartialMode::kFiniteDifference);
    }
}

TEST_CASE("skew family matches its closed form and an FD oracle", "[family]") {
    RayFamily fam = skew_family();
    CHECK(fam.domain().k1_lo == 0.0);
    CHECK(fam.domain().k1_hi == 1.0);

    CHECK(pullback_coefficient(fam, 0.0, 0.0) == Catch::Approx(-2.0).margin(1e-12));
    CHECK(pullback_coefficient(fam, 0.5, 0.5) ==
          Catch::Approx(-1.3608276348795434).margin(1e-12));
    CHECK(pullback_coefficient(fam, 1.0, 1.0) ==
          Catch::Approx(-0.7698003589195012).margin(1e-12));

    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        double k1 = rng.uniform(0.0, 1.0), k2 = rng.uniform(0.0, 1.0);
        CHECK(pullback_coefficient(fam, k1, k2) ==
              Catch::Approx(skew_closed_form(k1, k2)).margin(1e-12));
    }

    // Independent brute-force derivative of the defining map.
    auto eval = [&](double k1, double k2) { return fam.eval(k1, k2); };
    double oracle = oracles::pullback_fd(eval, 0.5, 0.5, 1e-5);
    CHECK(std::fabs(pullback_coefficient(fam, 0.5, 0.5) - oracle) < 1e-8);
    CHECK(std::fabs(oracle) > 0.1);
}

TEST_CASE("skew family fails normality with its maximum at the corner", "[family]") {
    RayFamily fam = skew_family();
    NormalityReport rep = is_normal(fam, 21, 21, 1e-6);
    CHECK_FALSE(rep.pass);
    CHECK(rep.rank_ok);   // genuinely rank 2, just not normal
    CHECK(rep.max_abs_coefficient == Catch::Approx(2.0).margin(1e-12));
    CHECK(rep.max_i == 0);
    CHECK(rep.max_j == 0);
    CHECK(rep.max_k1 == 0.0);
    CHECK(rep.max_k2 == 0.0);
    CHECK(rep.coefficients.size() == 21u * 21u);
}

TEST_CASE("analytic and FD partials agree on every built-in", "[family]") {
    for (const RayFamily& fam : all_builtins()) {
        INFO(fam.name());
        const Domain& d = fam.domain();
        Rng rng(23);
        for (int trial = 0; trial < 20; ++trial) {
            // Keep one FD step away from the boundary.
            double k1 = rng.uniform(d.k1_lo + 2 * fam.fd_step1(), d.k1_hi - 2 * fam.fd_step1());
            double k2 = rng.uniform(d.k2_lo + 2 * fam.fd_step2(), d.k2_hi - 2 * fam.fd_step2());
            double ca = pullback_coefficient(fam, k1, k2, PartialMode::kAnalytic);
            double cf = pullback_coefficient(fam, k1, k2, PartialMode::kFiniteDifference);
            CHECK(std::fabs(ca - cf) < 1e-6);

            FamilyPartials a = fam.analytic_partials(k1, k2);
            FamilyPartials f = fam.fd_partials(k1, k2);
            CHECK((a.dP_dk1 - f.dP_dk1).norm() < 1e-6);
            CHECK((a.dP_dk2 - f.dP_dk2).norm() < 1e-6);
            CHECK((a.du_dk1 - f.du_dk1).norm() < 1e-6);
            CHECK((a.du_dk2 - f.du_dk2).norm() < 1e-6);
        }
    }
}

TEST_CASE("mixed second derivatives of the anchor map commute", "[family]") {
    const double h = 1e-4;
    for (const RayFamily& fam : all_builtins()) {
        INFO(fam.name());
        const Domain& d = fam.domain();
        double k1 = d.k1_lo + 0.37 * d.span1();
        double k2 = d.k2_lo + 0.61 * d.span2();
        // d/dk2 of dP/dk1 vs d/dk1 of dP/dk2, each via central differences
        // of the analytic first partials.
        Vec3 d21 = (fam.analytic_partials(k1, k2 + h).dP_dk1 -
                    fam.analytic_partials(k1, k2 - h).dP_dk1) /
                   (2 * h);
        Vec3 d12 = (fam.analytic_partials(k1 + h, k2).dP_dk2 -
                    fam.analytic_partials(k1 - h, k2).dP_dk2) /
                   (2 * h);
        CHECK((d21 - d12).norm() < 1e-5);
    }
}

TEST_CASE("rank deficiency is detected and fails the check", "[family]") {
    // A degenerate "family" whose two parameters move the ray the same way.
    auto eval = [](double k1, double k2) -> FamilyPoint {
        return {{k1 + k2, 0.0, 0.0}, UnitVec3(Vec3{0, 0, 1})};
    };
    auto partials = [](double, double) -> FamilyPartials {
        return {{1, 0, 0}, {1, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    };
    RayFamily degenerate("collapsed", Domain{}, eval, partials);
    NormalityReport rep = is_normal(degenerate, 5, 5, 1e-6);
    CHECK_FALSE(rep.rank_ok);
    CHECK_FALSE(rep.pass);
    CHECK(rep.min_sigma2 < 1e-8);
    // The pullback coefficient itself vanishes; only the rank requirement fails.
    CHECK(rep.max_abs_coefficient < 1e-12);
}

TEST_CASE("degenerate grids, modes, and boundary points are rejected", "[family]") {
    RayFamily fam = skew_family();
    CHECK_THROWS_AS(is_normal(fam, 2, 5, 1e-6), Error);
    CHECK_THROWS_AS(is_normal(fam, 5, 2, 1e-6), Error);

    RayFamily eval_only("bare", Domain{},
                        [](double k1, double k2) -> FamilyPoint {
                            return {{k1, k2, 0.0}, UnitVec3(Vec3{0, 0, 1})};
                        });
    CHECK(resolve_mode(eval_only, PartialMode::kAuto) == PartialMode::kFiniteDifference);
    CHECK_THROWS_AS(family_partials(eval_only, 0.0, 0.0, PartialMode::kAnalytic), Error);

    // FD stencils must stay inside the parameter rectangle.
    CHECK_THROWS_AS(pullback_coefficient(fam, 0.0, 0.5, PartialMode::kFiniteDifference),
                    BoundaryMarginError);
    CHECK_THROWS_AS(pullback_coefficient(fam, 0.5, 1.0, PartialMode::kFiniteDifference),
                    BoundaryMarginError);
}

TEST_CASE("argmax ties break toward the lowest row-major node", "[family]") {
    // Coefficient depends only on k2 and peaks with equal magnitude at the
    // first and last k2 nodes, so every k1 row ties: the reported argmax
    // must be the first node in row-major order.
    auto eval = [](double k1, double k2) -> FamilyPoint {
        double s = k2 * (1.0 - k2);
        return {{k1, k2, 0.0}, UnitVec3(Vec3{s, 0.0, 1.0})};
    };
    auto partials = [](double, double k2) -> FamilyPartials {
        double s = k2 * (1.0 - k2), sp = 1.0 - 2.0 * k2;
        Vec3 g{s, 0.0, 1.0};
        double m = g.norm();
        Vec3 u = g / m;
        Vec3 dg2{sp, 0.0, 0.0};
        Vec3 du2 = (dg2 - u * u.dot(dg2)) / m;
        return {{1, 0, 0}, {0, 1, 0}, {0, 0, 0}, du2};
    };
    RayFamily fam("ridge", Domain{0.0, 1.0, 0.0, 1.0}, eval, partials);
    NormalityReport rep = is_normal(fam, 9, 9, 1e-6);
    CHECK_FALSE(rep.pass);
    CHECK(rep.max_abs_coefficient == 1.0);
    CHECK(rep.max_i == 0);
    CHECK(rep.max_j == 0);
    // The tied opposite corner holds the same magnitude.
    CHECK(std::fabs(rep.coefficients[8]) == 1.0);
}

TEST_CASE("transform maps a point source to its mirror image", "[family]") {
    OpticalSystem sys;
    sys.push_back({ImplicitSurface{Plane({0, 0, 0}, {0, 0, 1})}, SurfaceAction::kReflect});
    RayFamily src = point_source({0, 0, 1}, {0, 0, -1}, Domain{-0.3, 0.3, -0.3, 0.3});
    RayFamily out = transform(src, sys);

    CHECK(out.name() == "point_source through 1 interface(s)");
    CHECK_FALSE(out.has_analytic_partials());

    FamilyPoint axial = out.eval(0.0, 0.0);
    CHECK((axial.P - Point3{0, 0, 0}).norm() < 1e-12);
    CHECK((axial.u.vec() - Vec3{0, 0, 1}).norm() < 1e-12);

    // Every reflected ray passes through the mirror image point (0,0,-1).
    Point3 image{0, 0, -1};
    Rng rng(19);
    for (int trial = 0; trial < 60; ++trial) {
        double k1 = rng.uniform(-0.3, 0.3), k2 = rng.uniform(-0.3, 0.3);
        OrientedLine ray = out.line(k1, k2);
        Vec3 offset = image - ray.at(ray.parameter_of(image));
        CHECK(offset.norm() < 1e-9);
    }

    // Reflection preserves normality.
    NormalityReport rep = is_normal(out, 11, 11, 1e-6);
    CHECK(rep.pass);
}

TEST_CASE("transform keeps the axial ray fixed through a flat refraction", "[family]") {
    OpticalSystem sys;
    sys.push_back(
        {ImplicitSurface{Plane({0, 0, 0}, {0, 0, 1})}, SurfaceAction::kRefract, 1.0, 1.5});
    RayFamily src = point_source({0, 0, 1}, {0, 0, -1}, Domain{-0.2, 0.2, -0.2, 0.2});
    RayFamily out = transform(src, sys);
    FamilyPoint axial = out.eval(0.0, 0.0);
    CHECK((axial.P - Point3{0, 0, 0}).norm() < 1e-12);
    CHECK((axial.u.vec() - Vec3{0, 0, -1}).norm() < 1e-12);
}

TEST_CASE("transform surfaces trace failures with the parameter location", "[family]") {
    RayFamily src = point_source({0, 0, 1}, {0, 0, -1}, Domain{-0.3, 0.3, -0.3, 0.3});
    CHECK_THROWS_AS(transform(src, OpticalSystem{}), Error);

    // A target small enough that only near-axial rays hit it.
    OpticalSystem sys;
    sys.push_back({ImplicitSurface{Sphere({0, 0, -2}, 0.05)}, SurfaceAction::kReflect});
    RayFamily out = transform(src, sys);
    CHECK_NOTHROW(out.eval(0.0, 0.0)); // axial ray hits
    try {
        out.eval(0.3, 0.3); // corner ray misses
        FAIL("expected TraceError");
    } catch (const TraceError& e) {
        CHECK(e.failure().code == RayError::kMiss);
        CHECK(e.failure().interface_index == 0);
        CHECK(e.k1() == 0.3);
        CHECK(e.k2() == 0.3);
    }
}

TEST_CASE("loop circulations agree with the pointwise criterion", "[family]") {
    // For normal families the discrete circulation of u . dP around every
    // grid cell vanishes; for the skew family it reproduces the pullback
    // coefficient near the worst corner.
    CHECK(max_loop_coefficient(point_source({0, 0, 1}), 21, 21) < 1e-12);
    CHECK(max_loop_coefficient(plane_congruence(), 21, 21) < 1e-12);
    CHECK(max_loop_coefficient(unit_sphere_congruence(), 21, 21) < 1e-12);
    CHECK(max_loop_coefficient(paraboloid_congruence(), 21, 21) < 1e-12);

    double skew_loop = max_loop_coefficient(skew_family(), 21, 21);
    CHECK(skew_loop > 1.9);  // cell-center estimate of the corner value 2
    CHECK(skew_loop < 2.0);

    // Same verdict from both criteria.
    for (const RayFamily& fam :
         {point_source({0, 0, 1}), unit_sphere_congruence(), skew_family()}) {
        bool loop_small = max_loop_coefficient(fam, 21, 21) <= 1e-6;
        CHECK(loop_small == is_normal(fam, 21, 21, 1e-6).pass);
    }
}

TEST_CASE("wavefront of a point source is a sphere around it", "[family]") {
    Point3 s0{0, 0, 1};
    RayFamily fam = point_source(s0);
    auto samples = wavefront(fam, 0.0, 0.0, 1.0, 41, 41);
    REQUIRE(samples.size() == 41u * 41u);
    for (const WavefrontSample& s : samples) {
        CHECK(std::fabs(s.lambda - 1.0) < 1e-14);
        CHECK(std::fabs((s.W - s0).norm() - 1.0) < 1e-10);
    }
    CHECK(orthogonality_residual(fam, samples, 41, 41) < 1e-8);

    // Sample grid is the row-major parameter lattice.
    const Domain& d = fam.domain();
    CHECK(samples.front().k1 == d.k1_lo);
    CHECK(samples.front().k2 == d.k2_lo);
    CHECK(samples.back().k1 == d.k1_hi);
    CHECK(samples[40].k2 == d.k2_hi);
}

TEST_CASE("wavefront of a plane congruence is a parallel plane", "[family]") {
    RayFamily fam = plane_congruence();
    auto samples = wavefront(fam, 0.0, 0.0, 0.7, 21, 21);
    for (const WavefrontSample& s : samples) CHECK(std::fabs(s.W.z - 0.7) < 1e-12);
    CHECK(orthogonality_residual(fam, samples, 21, 21) < 1e-12);
}

TEST_CASE("wavefront is path independent for curved congruences", "[family]") {
    for (RayFamily fam : {unit_sphere_congruence(), paraboloid_congruence()}) {
        INFO(fam.name());
        auto row = wavefront(fam, 0.0, 0.0, 1.0, 41, 41, PathOrder::kRowMajor);
        auto col = wavefront(fam, 0.0, 0.0, 1.0, 41, 41, PathOrder::kColumnMajor);
        REQUIRE(row.size() == col.size());
        double disc = 0.0;
        for (std::size_t i = 0; i < row.size(); ++i)
            disc = std::max(disc, std::fabs(row[i].lambda - col[i].lambda));
        CHECK(disc <= 1e-8);
        CHECK(orthogonality_residual(fam, row, 41, 41) <= 1e-6);
    }
}

TEST_CASE("wavefront refuses families that are not normal", "[family]") {
    CHECK_THROWS_AS(wavefront(skew_family(), 0.5, 0.5, 1.0, 21, 21), NotNormalError);
}

TEST_CASE("orthogonality residual flags non-orthogonal sample sets", "[family]") {
    RayFamily fam = point_source({0, 0, 1});
    auto samples = wavefront(fam, 0.0, 0.0, 1.0, 21, 21);
    CHECK_THROWS_AS(orthogonality_residual(fam, samples, 21, 20), Error);

    // Push one interior sample along its own ray: a genuine wavefront
    // would never do that, and the residual must light up.
    std::size_t idx = 10u * 21u + 10u;
    FamilyPoint p = fam.eval(samples[idx].k1, samples[idx].k2);
    samples[idx].W = samples[idx].W + p.u.vec() * 1e-3;
    CHECK(orthogonality_residual(fam, samples, 21, 21) > 1e-3);
}

TEST_CASE("transformed families reconstruct wavefronts end to end", "[family]") {
    // One refracting plane in front of a point source; the transformed
    // family is still normal and its wavefront is orthogonal to the rays.
    OpticalSystem sys;
    sys.push_back(
        {ImplicitSurface{Plane({0, 0, 0}, {0, 0, 1})}, SurfaceAction::kRefract, 1.0, 1.5});
    RayFamily src = point_source({0, 0, 1}, {0, 0, -1}, Domain{-0.05, 0.05, -0.05, 0.05});
    RayFamily out = transform(src, sys);
    auto samples = wavefront(out, 0.0, 0.0, 0.5, 41, 41);
    CHECK(orthogonality_residual(out, samples, 41, 41) <= 1e-6);
}
