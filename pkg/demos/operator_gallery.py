"""Gallery of the affine operator catalog: exact growth constants, orbit
behavior, and the Cesaro residual identity in action.

Run from the repository root:

    python3 demos/operator_gallery.py
"""
from __future__ import annotations

import numpy as np

from fptlab import (
    BumpShift,
    BumpSimplex,
    ConeHull,
    CyclicShift,
    DensitySimplex,
    DoublingShift,
    GridFunction,
    IdentityOperator,
    NormalizingRetraction,
    RetractionDoubling,
    UnitBall,
    cesaro_residual_series,
    measure_distance,
    mean_lipschitz,
    norm,
    orbit,
)


def catalog(level: int):
    simplex = DensitySimplex(level)
    sub = ConeHull(0.0, level)
    return [
        IdentityOperator(simplex),
        DoublingShift(simplex),
        CyclicShift(UnitBall(level)),
        NormalizingRetraction(sub),
        RetractionDoubling(sub),
        BumpShift(BumpSimplex(1.5, 64)),
    ]


def main() -> None:
    level = 10
    print("mean growth constants (exact iterate arithmetic, n <= 8):")
    for T in catalog(level):
        print(f"  {T.name:21s} S = {mean_lipschitz(T, 8):.12g}")

    # the doubling orbit: norms stay at 1 while supports halve, the classic
    # escape in measure
    print("\ndoubling orbit of the constant density:")
    T = DoublingShift(DensitySimplex(level))
    one = GridFunction.constant(1.0, level)
    zero = GridFunction.zero(level)
    for s, f in enumerate(orbit(T, one, 6)):
        print(f"  T^{s}: norm {norm(f):g}, height {f.values.max():6g}, "
              f"measure gap to 0 {measure_distance(f, zero):.6f}")

    # Cesaro means price their own residuals exactly: one orbit pass gives
    # the whole 1/s decay table
    print("\nresidual decay of cyclic-shift means (level 6):")
    ball = UnitBall(6)
    x0 = ball.sample(np.random.default_rng(3))
    means, residuals = cesaro_residual_series(CyclicShift(ball), x0, 64)
    for s in (1, 2, 4, 8, 16, 32, 63, 64):
        print(f"  s = {s:3d}: residual {residuals[s - 1]:12.6g}")
    print("  the full cycle averages to the constant function exactly")

    spread = float(np.ptp(means[-1].values))
    print(f"  value spread of the 64-term mean: {spread:.3g}")


if __name__ == "__main__":
    main()
