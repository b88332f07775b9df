#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "symopt/error.hpp"
#include "symopt/families.hpp"
#include "symopt/fmt.hpp"
#include "symopt/vec3.hpp"

namespace symopt {

/// A ray family tabulated on a regular parameter grid, as stored in the
/// grid CSV format: `#`-prefixed header lines carrying the grid shape
/// and domain, then n1*n2 rows (k1, k2, px, py, pz, ux, uy, uz) in
/// row-major k order (k1 outer, k2 inner).
struct FamilyGridFile {
    int n1 = 0, n2 = 0;
    Domain domain;
    std::vector<FamilyPoint> points;  ///< row-major [i * n2 + j]
};

/// Tabulate a family on an n1 x n2 grid over its own domain.
inline FamilyGridFile sample_family_grid(const RayFamily& family, int n1, int n2) {
    if (n1 < 2 || n2 < 2) throw Error("sample_family_grid: grid must be at least 2x2");
    FamilyGridFile g;
    g.n1 = n1;
    g.n2 = n2;
    g.domain = family.domain();
    g.points.reserve(static_cast<std::size_t>(n1) * n2);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j)
            g.points.push_back(
                family.eval(g.domain.k1_lo + g.domain.span1() * i / (n1 - 1),
                            g.domain.k2_lo + g.domain.span2() * j / (n2 - 1)));
    return g;
}

inline std::string write_family_grid(const FamilyGridFile& grid) {
    std::string out;
    out += "# family-grid v1\n";
    out += "# n1 " + std::to_string(grid.n1) + " n2 " + std::to_string(grid.n2) + "\n";
    out += "# domain " + float17(grid.domain.k1_lo) + " " + float17(grid.domain.k1_hi) + " " +
           float17(grid.domain.k2_lo) + " " + float17(grid.domain.k2_hi) + "\n";
    out += "# columns k1,k2,px,py,pz,ux,uy,uz\n";
    for (int i = 0; i < grid.n1; ++i) {
        for (int j = 0; j < grid.n2; ++j) {
            const FamilyPoint& p = grid.points[static_cast<std::size_t>(i) * grid.n2 + j];
            double k1 = grid.domain.k1_lo + grid.domain.span1() * i / (grid.n1 - 1);
            double k2 = grid.domain.k2_lo + grid.domain.span2() * j / (grid.n2 - 1);
            const Vec3& u = p.u.vec();
            out += float17(k1) + "," + float17(k2) + "," + float17(p.P.x) + "," +
                   float17(p.P.y) + "," + float17(p.P.z) + "," + float17(u.x) + "," +
                   float17(u.y) + "," + float17(u.z) + "\n";
        }
    }
    return out;
}

inline FamilyGridFile parse_family_grid(const std::string& text) {
    FamilyGridFile g;
    bool have_shape = false, have_domain = false;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream h(line.substr(1));
            std::string tag;
            h >> tag;
            if (tag == "n1") {
                std::string n2tag;
                if (!(h >> g.n1 >> n2tag >> g.n2) || n2tag != "n2" || g.n1 < 2 || g.n2 < 2)
                    throw Error("family grid line " + std::to_string(lineno) +
                                ": malformed shape header");
                have_shape = true;
            } else if (tag == "domain") {
                if (!(h >> g.domain.k1_lo >> g.domain.k1_hi >> g.domain.k2_lo >>
                      g.domain.k2_hi))
                    throw Error("family grid line " + std::to_string(lineno) +
                                ": malformed domain header");
                have_domain = true;
            }
            continue;
        }
        std::istringstream row(line);
        double v[8];
        char comma;
        for (int c = 0; c < 8; ++c) {
            if (!(row >> v[c]))
                throw Error("family grid line " + std::to_string(lineno) +
                            ": expected 8 numeric columns");
            if (c < 7 && !(row >> comma && comma == ','))
                throw Error("family grid line " + std::to_string(lineno) +
                            ": expected comma-separated columns");
        }
        Vec3 u{v[5], v[6], v[7]};
        if (std::fabs(u.norm() - 1.0) > 1e-9)
            throw Error("family grid line " + std::to_string(lineno) +
                        ": direction is not unit length");
        g.points.push_back({{v[2], v[3], v[4]}, UnitVec3(u)});
    }
    if (!have_shape || !have_domain)
        throw Error("family grid: missing '# n1 .. n2 ..' or '# domain ..' header");
    if (g.points.size() != static_cast<std::size_t>(g.n1) * g.n2)
        throw Error("family grid: row count " + std::to_string(g.points.size()) +
                    " does not match shape " + std::to_string(g.n1) + "x" +
                    std::to_string(g.n2));
    if (!(g.domain.span1() > 0.0) || !(g.domain.span2() > 0.0))
        throw Error("family grid: domain must have positive spans");
    return g;
}

inline FamilyGridFile read_family_grid(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("family grid: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_family_grid(buf.str());
}

/// Interpret a tabulated grid as a RayFamily by bilinear interpolation
/// (directions renormalized after blending). C0 across cell edges only,
/// so finite-difference sweeps are meaningful within cells; intended as
/// an interchange format, not a high-accuracy family.
inline RayFamily grid_family(FamilyGridFile grid) {
    Domain dom = grid.domain;
    auto eval = [g = std::move(grid)](double k1, double k2) -> FamilyPoint {
        const Domain& d = g.domain;
        if (!d.contains(k1, k2))
            throw Error("grid family: parameter outside tabulated domain");
        double x = (k1 - d.k1_lo) / d.span1() * (g.n1 - 1);
        double y = (k2 - d.k2_lo) / d.span2() * (g.n2 - 1);
        int i = std::clamp(static_cast<int>(x), 0, g.n1 - 2);
        int j = std::clamp(static_cast<int>(y), 0, g.n2 - 2);
        double fx = x - i, fy = y - j;
        auto at = [&](int a, int b) -> const FamilyPoint& {
            return g.points[static_cast<std::size_t>(a) * g.n2 + b];
        };
        auto blend = [&](auto&& get) {
            return get(at(i, j)) * ((1 - fx) * (1 - fy)) +
                   get(at(i + 1, j)) * (fx * (1 - fy)) +
                   get(at(i, j + 1)) * ((1 - fx) * fy) + get(at(i + 1, j + 1)) * (fx * fy);
        };
        Vec3 p = blend([](const FamilyPoint& f) { return f.P; });
        Vec3 u = blend([](const FamilyPoint& f) { return f.u.vec(); });
        return {p, UnitVec3(u)};
    };
    return RayFamily("grid_family", dom, eval);
}

} // namespace symopt
