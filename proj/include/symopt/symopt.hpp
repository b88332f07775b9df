#pragma once

// Umbrella header: the full oriented-line optics toolkit.
//
//   vec3       -- 3-vector arithmetic
//   line       -- oriented lines in canonical (direction, foot point) form
//   chart      -- 4-coordinate charts on the space of oriented lines
//   symplectic -- the 2-form on line space and discrete loop integrals
//   surfaces   -- implicit surfaces with analytic gradients + ray intersection
//   optics     -- reflection / refraction as maps on lines, tracing, differentials
//   families   -- two-parameter ray families, normality tests, wavefronts
//   verify     -- randomized invariant checks with reproducible reports
//   scene      -- JSON scene schema shared by the command-line tools
//   grid_file  -- tabulated family interchange format
//   report_io  -- text / CSV / structured report serialization

#include "symopt/vec3.hpp"
#include "symopt/error.hpp"
#include "symopt/rng.hpp"
#include "symopt/line.hpp"
#include "symopt/chart.hpp"
#include "symopt/symplectic.hpp"
#include "symopt/surfaces.hpp"
#include "symopt/optics.hpp"
#include "symopt/families.hpp"
#include "symopt/fmt.hpp"
#include "symopt/verify.hpp"
#include "symopt/report_io.hpp"
#include "symopt/grid_file.hpp"
#include "symopt/scene.hpp"
