#include "fisherq/grid.hpp"

namespace fisherq {

Grid make_grid(const GridSpec& spec) {
  if (spec.ndim < 1 || spec.ndim > 3)
    throw ConfigError("grid: ndim must be 1, 2 or 3");
  Grid g;
  g.ndim = spec.ndim;
  g.boundary = spec.boundary;
  if (spec.boundary == Boundary::absorbing) {
    g.absorb_width = spec.absorb_width;
    if (g.absorb_width < 0.0)
      throw ConfigError("grid: absorber width must be >= 0");
  }
  for (int a = 0; a < spec.ndim; ++a) {
    if (spec.npts[a] <= 0)
      throw ConfigError("grid: points per axis must be positive");
    if (!(spec.length[a] > 0.0))
      throw ConfigError("grid: axis length must be positive");
    g.npts[a] = spec.npts[a];
    g.length[a] = spec.length[a];
    g.origin[a] = spec.centered ? -0.5 * spec.length[a] : spec.origin[a];
  }
  return g;
}

}  // namespace fisherq
