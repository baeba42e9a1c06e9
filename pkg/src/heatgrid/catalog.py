"""Canonical world definitions.

All studies in this package run on a small set of named environments:

- ``grid2d_L``: 10x10 grid, start (0,0), goal (9,9), an L-shaped obstacle
  wall and a heated quadrant in the lower-right. The obstacle leaves exactly
  two classes of shortest (18-step) routes: one through the heated quadrant,
  one through cold cells only.
- ``interval41``: 41-cell interval, start at the centre, the right half
  heated; both ends absorbing, no terminal bonus.
- ``interval41_drift``: same, plus a leftward drift probability on the
  rightmost quarter.
- ``grid2d_two_regions``: the L-obstacle grid with both route quadrants
  heated at independent temperatures.
- ``grid2d_moved_region``: obstacle-free 10x10 grids with a 5x5 heated block
  at one of several placements.
"""

from __future__ import annotations

import numpy as np

from .env import FINAL_POSITION, FIRST_CROSSING, GridSpec

GRID_SIDE = 10
# Wall with the corner at (5,5) and arms reaching down to (5,1) and left to
# (1,5). Gaps at (5,0) and (0,5) leave exactly two shortest-route classes.
L_OBSTACLE = frozenset(
    {(5, y) for y in range(1, 6)} | {(x, 5) for x in range(1, 6)}
)
INTERVAL_CELLS = 41
INTERVAL_CENTRE = INTERVAL_CELLS // 2

MOVED_REGION_VARIANTS = ("corner", "center", "bottom", "left")


def _quadrant_temperature(side, temperature, xs, ys):
    temp = np.zeros((side, side), dtype=np.int64)
    temp[np.ix_(ys, xs)] = temperature
    return temp


def grid2d_L(temperature: int = 3, absorption: str = FIRST_CROSSING) -> GridSpec:
    """10x10 grid with the L-obstacle and a heated lower-right quadrant."""
    temp = _quadrant_temperature(GRID_SIDE, temperature, range(5, 10), range(0, 5))
    return GridSpec(
        dims=2,
        extent=(GRID_SIDE, GRID_SIDE),
        start=(0, 0),
        goal=(9, 9),
        obstacles=L_OBSTACLE,
        temperature=temp,
        r_tick=-1,
        r_target=100,
        absorption=absorption,
        name=f"grid2d_L(T={temperature})",
    )


def grid2d_two_regions(temperature_a: int = 1, temperature_b: int = 2,
                       absorption: str = FIRST_CROSSING) -> GridSpec:
    """L-obstacle grid with both route quadrants heated.

    Region A is the lower-right quadrant {5..9}x{0..4} (crossed by the
    bottom route), region B its diagonal mirror {0..4}x{5..9} (crossed by
    the left route).
    """
    temp = _quadrant_temperature(GRID_SIDE, temperature_a, range(5, 10), range(0, 5))
    temp += _quadrant_temperature(GRID_SIDE, temperature_b, range(0, 5), range(5, 10))
    return GridSpec(
        dims=2,
        extent=(GRID_SIDE, GRID_SIDE),
        start=(0, 0),
        goal=(9, 9),
        obstacles=L_OBSTACLE,
        temperature=temp,
        r_tick=-1,
        r_target=100,
        absorption=absorption,
        name=f"grid2d_two_regions(T={temperature_a},{temperature_b})",
    )


def grid2d_moved_region(variant: str = "center", temperature: int = 3,
                        absorption: str = FIRST_CROSSING) -> GridSpec:
    """Obstacle-free 10x10 grid with one 5x5 heated block.

    Placements: "corner" {5..9}x{0..4}, "center" {3..7}x{3..7},
    "bottom" {2..6}x{0..4}, "left" {0..4}x{3..7}.
    """
    blocks = {
        "corner": (range(5, 10), range(0, 5)),
        "center": (range(3, 8), range(3, 8)),
        "bottom": (range(2, 7), range(0, 5)),
        "left": (range(0, 5), range(3, 8)),
    }
    if variant not in blocks:
        raise ValueError(
            f"unknown moved-region variant {variant!r}; choose from {MOVED_REGION_VARIANTS}")
    xs, ys = blocks[variant]
    temp = _quadrant_temperature(GRID_SIDE, temperature, xs, ys)
    if (0, 0) in {(x, y) for x in xs for y in ys}:
        raise ValueError("heated block would cover the start cell")
    return GridSpec(
        dims=2,
        extent=(GRID_SIDE, GRID_SIDE),
        start=(0, 0),
        goal=(9, 9),
        obstacles=frozenset(),
        temperature=temp,
        r_tick=-1,
        r_target=100,
        absorption=absorption,
        name=f"grid2d_moved_region({variant},T={temperature})",
    )


def interval41(temperature: int = 3, absorption: str = FINAL_POSITION) -> GridSpec:
    """41-cell interval with absorbing ends, centre start, right half heated."""
    temp = np.zeros(INTERVAL_CELLS, dtype=np.int64)
    temp[INTERVAL_CENTRE + 1:] = temperature
    return GridSpec(
        dims=1,
        extent=(INTERVAL_CELLS,),
        start=INTERVAL_CENTRE,
        temperature=temp,
        r_tick=-1,
        r_target=0,
        absorption=absorption,
        name=f"interval41(T={temperature})",
    )


def interval41_drift(temperature: int = 3, drift: float = 0.3,
                     absorption: str = FINAL_POSITION) -> GridSpec:
    """interval41 plus leftward drift on the rightmost quarter (cells 31..40)."""
    spec = interval41(temperature, absorption)
    drift_map = np.zeros(INTERVAL_CELLS, dtype=np.float64)
    drift_map[31:] = drift
    return GridSpec(
        dims=1,
        extent=spec.extent,
        start=spec.start,
        temperature=spec.temperature,
        drift=drift_map,
        r_tick=spec.r_tick,
        r_target=spec.r_target,
        absorption=absorption,
        name=f"interval41_drift(T={temperature},p={drift})",
    )


def uniform_interval(half_width: int, temperature: int = 2,
                     absorption: str = FINAL_POSITION) -> GridSpec:
    """Interval of 2*half_width+1 cells heated everywhere; theory test-bed.

    half_width must be >= 1 so the start sits strictly between the
    absorbing end cells.
    """
    n = 2 * half_width + 1
    return GridSpec(
        dims=1,
        extent=(n,),
        start=half_width,
        temperature=np.full(n, temperature, dtype=np.int64),
        r_tick=-1,
        r_target=0,
        absorption=absorption,
        name=f"uniform_interval(hw={half_width},T={temperature})",
    )


CATALOG = {
    "grid2d_L": grid2d_L,
    "grid2d_two_regions": grid2d_two_regions,
    "grid2d_moved_region": grid2d_moved_region,
    "interval41": interval41,
    "interval41_drift": interval41_drift,
    "uniform_interval": uniform_interval,
}


def canonical_specs() -> dict:
    """Registry of named world constructors."""
    return dict(CATALOG)


def make_spec(name: str, **params) -> GridSpec:
    try:
        factory = CATALOG[name]
    except KeyError:
        raise KeyError(
            f"unknown environment {name!r}; known: {sorted(CATALOG)}") from None
    return factory(**params)
