#!/usr/bin/env python3
"""Refinement study for the discrete certificates.

Measures the decay rate of the cross-term and duality residuals and the
manufactured-solution recovery order of the elliptic solve over a sequence
of grids, printing one table row per grid.
"""

import argparse

import numpy as np

from hypermodes.congruence import TypeIIMode
from hypermodes.modes import Side
from hypermodes.operators import (RectGrid, StateField, cross_term_residual,
                                  elliptic_steady_solve,
                                  integration_by_parts_residual)

DEFAULT_CONDS = {Side.W: (1.0, 0.0), Side.S: (1.0, 0.0),
                 Side.E: (0.0, 1.0), Side.N: (0.0, 1.0)}


def support_bump(t, a, b):
    s = (t - a) * (b - t)
    return np.where((t > a) & (t < b), s ** 3, 0.0)


def support_bump_prime(t, a, b):
    s = (t - a) * (b - t)
    return np.where((t > a) & (t < b), 3.0 * s ** 2 * (a + b - 2.0 * t), 0.0)


def manufactured(grid):
    """Compactly supported exact solution of the Cauchy-Riemann-type mode."""
    X, Y = grid.meshgrid()
    a, b = 0.15, 0.85
    scale = 1.0 / support_bump(0.5, a, b) ** 2
    ex, exp_ = support_bump(X, a, b), support_bump_prime(X, a, b)
    ey, eyp = support_bump(Y, a, b), support_bump_prime(Y, a, b)
    s1, c1 = np.sin(3 * X + Y), np.cos(3 * X + Y)
    s2, c2 = np.sin(X - 2 * Y), np.cos(X - 2 * Y)
    u1 = scale * ex * ey * s1
    u2 = scale * ex * ey * c2
    u1x = scale * (exp_ * ey * s1 + ex * ey * 3 * c1)
    u1y = scale * (ex * eyp * s1 + ex * ey * c1)
    u2x = scale * (exp_ * ey * c2 - ex * ey * s2)
    u2y = scale * (ex * eyp * c2 + ex * ey * 2 * s2)
    psi = np.stack([u2x + u1y, u1x - u2y])
    return np.stack([u1, u2]), psi


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[17, 33, 65, 129])
    args = ap.parse_args()

    mode = TypeIIMode(0.0, 1.0, 1.0, 0.0)
    mixed = {s: (1.0, -1.0) for s in Side}
    rows = []
    for n in args.sizes:
        g = RectGrid(1.0, 1.0, n, n)
        X, Y = g.meshgrid()

        shared = np.sin(2 * X + Y) + 0.3 * np.cos(X - 3 * Y)
        inner = X * (1 - X) * Y * (1 - Y)
        u = StateField(g, np.stack(
            [shared, shared + inner * np.exp(X) * np.sin(np.pi * Y + 0.5)]))
        cross = cross_term_residual(u, mixed)

        mu1, mu2 = X / 4.0, 1.0 + Y / 4.0
        T1 = np.zeros((g.nx, g.ny, 2, 2))
        T1[..., 0, 1] = T1[..., 1, 0] = 1.0
        T2 = np.stack([np.stack([mu2, mu1], -1),
                       np.stack([mu1, -mu2], -1)], -2)
        theta = StateField(g, np.stack([np.sin(2 * X + Y), np.cos(X - Y)]))
        gf = StateField(g, np.stack([np.cos(3 * X), np.sin(X + 2 * Y)]))
        ibp = integration_by_parts_residual(theta, gf, T1, T2)

        u_star, psi = manufactured(g)
        sol, _ = elliptic_steady_solve(mode, StateField(g, psi), g,
                                       DEFAULT_CONDS)
        mms = StateField(g, sol.values - u_star).norm()
        rows.append((n, cross, ibp, mms))

    print(f"{'grid':>6} {'cross-term':>12} {'duality':>12} {'mms-error':>12}"
          f" {'rates':>18}")
    for k, (n, cross, ibp, mms) in enumerate(rows):
        if k == 0:
            rates = ""
        else:
            rates = " ".join(f"{np.log2(prev / cur):5.2f}" for prev, cur in
                             zip(rows[k - 1][1:], (cross, ibp, mms)))
        print(f"{n:>4}^2 {cross:12.3e} {ibp:12.3e} {mms:12.3e} {rates:>18}")


if __name__ == "__main__":
    main()
