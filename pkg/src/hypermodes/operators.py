"""Discrete certification operators on the rectangle.

Second-order centered differences (one-sided at the boundary) and trapezoid
quadrature back every residual here, so smooth-field residuals shrink at
first or second order under refinement. The elliptic solve is a sparse
least-squares discretization of the first-order mode system.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .congruence import TypeIIMode
from .errors import BCViolated, EllipticityLost, RankDeficientBC
from .modes import SIDE_ORDER, Side, check_rank2, synthesize_bc_type1

BC_TRACE_RTOL = 1e-10


@dataclass(frozen=True)
class RectGrid:
    """Uniform node-centered grid on (0, L1) x (0, L2), boundaries included."""

    L1: float
    L2: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.L1 <= 0 or self.L2 <= 0:
            raise ValueError("domain lengths must be positive")
        if self.nx < 8 or self.ny < 8:
            raise ValueError("node counts must be at least 8")

    @property
    def hx(self) -> float:
        return self.L1 / (self.nx - 1)

    @property
    def hy(self) -> float:
        return self.L2 / (self.ny - 1)

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)

    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.L1, self.nx)

    def y(self) -> np.ndarray:
        return np.linspace(0.0, self.L2, self.ny)

    def meshgrid(self):
        return np.meshgrid(self.x(), self.y(), indexing="ij")

    def quad_weights(self) -> np.ndarray:
        """Trapezoid weights, shape (nx, ny)."""
        wx = np.full(self.nx, self.hx)
        wx[0] = wx[-1] = 0.5 * self.hx
        wy = np.full(self.ny, self.hy)
        wy[0] = wy[-1] = 0.5 * self.hy
        return wx[:, None] * wy[None, :]

    def label(self) -> str:
        return f"{self.nx}x{self.ny}"


@dataclass(frozen=True)
class StateField:
    """n-component grid function; values indexed (component, i, j)."""

    grid: RectGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 2:
            v = v[None]
        if v.shape[1:] != (self.grid.nx, self.grid.ny):
            raise ValueError(
                f"values shape {v.shape} does not match grid "
                f"({self.grid.nx}, {self.grid.ny})")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def components(self) -> int:
        return self.values.shape[0]

    def norm(self) -> float:
        w = self.grid.quad_weights()
        return float(np.sqrt(np.sum(w * np.sum(self.values ** 2, axis=0))))

    def side_trace(self, side: Side) -> np.ndarray:
        if side is Side.W:
            return self.values[:, 0, :]
        if side is Side.E:
            return self.values[:, -1, :]
        if side is Side.S:
            return self.values[:, :, 0]
        return self.values[:, :, -1]


def ddx(values: np.ndarray, grid: RectGrid) -> np.ndarray:
    return np.gradient(values, grid.hx, axis=-2, edge_order=2)

def ddy(values: np.ndarray, grid: RectGrid) -> np.ndarray:
    return np.gradient(values, grid.hy, axis=-1, edge_order=2)


def inner(grid: RectGrid, f: np.ndarray, g: np.ndarray) -> float:
    """Trapezoid L2 inner product of (n, nx, ny) arrays."""
    w = grid.quad_weights()
    return float(np.sum(w * np.sum(f * g, axis=0)))


def _check_trace_zero(u: StateField, side: Side, rows: np.ndarray, what: str):
    scale = max(np.abs(u.values).max(), 1e-300)
    worst = np.abs(rows).max()
    if worst > BC_TRACE_RTOL * scale:
        raise BCViolated(
            f"{what} on side {side}: max trace {worst:.3e} "
            f"(relative tolerance {BC_TRACE_RTOL:.1e})")


def _coeff_grid(value, grid: RectGrid) -> np.ndarray:
    """Promote a scalar coefficient to an (nx, ny) array."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full((grid.nx, grid.ny), float(arr))
    if arr.shape != (grid.nx, grid.ny):
        raise ValueError(f"coefficient shape {arr.shape} does not match grid")
    return arr


def positivity_residual_type1(c, d, u: StateField,
                              sides: frozenset[Side] | None = None) -> float:
    """Quadrature estimate of <c u_x + d u_y, u> for a scalar mode field
    vanishing on its two inflow sides.

    c, d may be constants or (nx, ny) samples with one-signed values; for
    smooth u the result is bounded below by -C*h (constant coefficients)
    or -(omega0 + C*h)*||u||^2 (variable).
    """
    grid = u.grid
    cg = _coeff_grid(c, grid)
    dg = _coeff_grid(d, grid)
    if sides is None:
        sides = synthesize_bc_type1(float(np.mean(cg)), float(np.mean(dg)))
    for side in sides:
        _check_trace_zero(u, side, u.side_trace(side), "scalar mode trace")
    v = u.values[0]
    flux = cg * ddx(v, grid) + dg * ddy(v, grid)
    return inner(grid, flux[None], v[None])


def _type2_coeff_grids(mode, grid: RectGrid):
    if isinstance(mode, TypeIIMode):
        vals = (mode.alpha1, mode.beta1, mode.alpha2, mode.beta2)
    else:
        vals = mode  # (alpha1, beta1, alpha2, beta2), scalars or arrays
    return tuple(_coeff_grid(v, grid) for v in vals)


def apply_type2(mode, u: StateField) -> np.ndarray:
    """T1 u_x + T2 u_y for the trace-free coefficient pair of the mode."""
    grid = u.grid
    a1, b1, a2, b2 = _type2_coeff_grids(mode, grid)
    u1, u2 = u.values[0], u.values[1]
    u1x, u2x = ddx(u1, grid), ddx(u2, grid)
    u1y, u2y = ddy(u1, grid), ddy(u2, grid)
    return np.stack([
        a1 * u1x + b1 * u2x + a2 * u1y + b2 * u2y,
        b1 * u1x - a1 * u2x + b2 * u1y - a2 * u2y,
    ])


def check_conditions(u: StateField,
                     conditions: Mapping[Side, tuple[float, float]],
                     what: str = "elliptic mode trace") -> None:
    for side in SIDE_ORDER:
        a, b = conditions[side]
        tr = u.side_trace(side)
        _check_trace_zero(u, side, a * tr[0] + b * tr[1], what)


def positivity_residual_type2(mode, u: StateField,
                              conditions: Mapping[Side, tuple[float, float]],
                              ) -> float:
    """Quadrature estimate of <T1 u_x + T2 u_y, u> for a two-component field
    satisfying the elliptic-mode side conditions."""
    if u.components != 2:
        raise ValueError("elliptic mode fields have two components")
    check_conditions(u, conditions)
    return inner(u.grid, apply_type2(mode, u), u.values)


def cross_term_residual(u: StateField,
                        conditions: Mapping[Side, tuple[float, float]]) -> float:
    """|integral(u2_x u1_y) - integral(u1_x u2_y)| for fields satisfying
    a_j u1 + b_j u2 = 0 on each side; vanishes in the continuum."""
    if u.components != 2:
        raise ValueError("cross-term fields have two components")
    check_conditions(u, conditions, "cross-term side condition")
    grid = u.grid
    u1, u2 = u.values[0], u.values[1]
    i1 = inner(grid, ddx(u2, grid)[None], ddy(u1, grid)[None])
    i2 = inner(grid, ddx(u1, grid)[None], ddy(u2, grid)[None])
    return abs(i1 - i2)


def _coeff_field_apply(T: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Apply an (m, m) or (nx, ny, m, m) coefficient to an (m, nx, ny) field."""
    if T.ndim == 2:
        return np.einsum("ab,bij->aij", T, v)
    return np.einsum("ijab,bij->aij", T, v)


def _line_integral(vals: np.ndarray, h: float) -> float:
    w = np.full(vals.shape[-1], h)
    w[0] = w[-1] = 0.5 * h
    return float(np.sum(w * vals))


def integration_by_parts_residual(theta: StateField, g: StateField,
                                  T1, T2) -> float:
    """Discrete defect of the duality identity

        <(T1 th)_x + (T2 th)_y, g> + <T1 g_x + T2 g_y, th> = <gamma_nu th, g>

    with the co-normal trace gamma_nu th equal to -T1 th, +T1 th, -T2 th,
    +T2 th on the W, E, S, N sides. Decays at least at O(h) for smooth data.
    """
    if theta.components != g.components:
        raise ValueError("theta and g must have the same component count")
    grid = theta.grid
    T1 = np.asarray(T1, dtype=float)
    T2 = np.asarray(T2, dtype=float)
    th, gv = theta.values, g.values
    T1th = _coeff_field_apply(T1, th)
    T2th = _coeff_field_apply(T2, th)
    vol1 = inner(grid, ddx(T1th, grid) + ddy(T2th, grid), gv)
    vol2 = inner(grid, _coeff_field_apply(T1, ddx(gv, grid))
                 + _coeff_field_apply(T2, ddy(gv, grid)), th)
    dot = lambda A, B: np.sum(A * B, axis=0)
    boundary = (
        _line_integral(dot(T1th[:, -1, :], gv[:, -1, :]), grid.hy)
        - _line_integral(dot(T1th[:, 0, :], gv[:, 0, :]), grid.hy)
        + _line_integral(dot(T2th[:, :, -1], gv[:, :, -1]), grid.hx)
        - _line_integral(dot(T2th[:, :, 0], gv[:, :, 0]), grid.hx)
    )
    return abs(vol1 + vol2 - boundary)


# --- first-order elliptic solve ------------------------------------------------


@dataclass(frozen=True)
class CertReport:
    """One certification verdict: pass iff residual <= tolerance."""

    name: str
    grid_label: str
    residual: float
    tolerance: float
    rate: float | None = None

    @property
    def verdict(self) -> bool:
        return self.residual <= self.tolerance

    def csv_row(self) -> str:
        rate = f"{self.rate:.17g}" if self.rate is not None else ""
        verdict = "pass" if self.verdict else "fail"
        return (f"{self.name},{self.grid_label},{self.residual:.17g},"
                f"{self.tolerance:.17g},{verdict},{rate}")


def _gradient_matrix(npts: int, h: float) -> sp.csr_matrix:
    """Matrix form of np.gradient: centered interior, one-sided 2nd order ends."""
    rows, cols, data = [], [], []
    for i in range(1, npts - 1):
        rows += [i, i]
        cols += [i - 1, i + 1]
        data += [-0.5 / h, 0.5 / h]
    rows += [0, 0, 0]
    cols += [0, 1, 2]
    data += [-1.5 / h, 2.0 / h, -0.5 / h]
    rows += [npts - 1, npts - 1, npts - 1]
    cols += [npts - 1, npts - 2, npts - 3]
    data += [1.5 / h, -2.0 / h, 0.5 / h]
    return sp.csr_matrix((data, (rows, cols)), shape=(npts, npts))


def compact_support_mask(grid: RectGrid, layers: int = 2) -> np.ndarray:
    mask = np.zeros((grid.nx, grid.ny))
    mask[layers:-layers, layers:-layers] = 1.0
    return mask


def elliptic_steady_solve(mode, psi: StateField, grid: RectGrid,
                          conditions: Mapping[Side, tuple[float, float]],
                          c0: float = 1e-10, tol: float = 1e-8):
    """Least-squares solution of T1 u_x + T2 u_y = psi with the side
    conditions imposed as weighted constraint rows.

    psi is treated as compactly supported: it is zeroed on the two node
    layers nearest each side. Returns (field, report) where the report
    records the discrete equation residual; with psi = 0 the solution norm
    certifies uniqueness of the discrete problem.
    """
    a1, b1, a2, b2 = _type2_coeff_grids(mode, grid)
    delta = a2 * b1 - a1 * b2
    if delta.min() < c0:
        ij = np.unravel_index(np.argmin(delta), delta.shape)
        raise EllipticityLost(
            f"determinant condition {delta.min():.3e} below c0 = {c0:.1e} "
            f"at node {tuple(int(t) for t in ij)}")
    if not check_rank2(conditions):
        raise RankDeficientBC("side-condition matrix has rank < 2")

    nx, ny = grid.nx, grid.ny
    N = nx * ny
    mask = compact_support_mask(grid)
    rhs_field = psi.values * mask[None]

    Dx = sp.kron(_gradient_matrix(nx, grid.hx), sp.identity(ny), format="csr")
    Dy = sp.kron(sp.identity(nx), _gradient_matrix(ny, grid.hy), format="csr")

    def dia(v):
        return sp.diags(v.ravel())

    # rows: [T1 u_x + T2 u_y]_1, [T1 u_x + T2 u_y]_2 at every node
    A = sp.bmat([
        [dia(a1) @ Dx + dia(a2) @ Dy, dia(b1) @ Dx + dia(b2) @ Dy],
        [dia(b1) @ Dx + dia(b2) @ Dy, -(dia(a1) @ Dx + dia(a2) @ Dy)],
    ], format="csr")
    b = np.concatenate([rhs_field[0].ravel(), rhs_field[1].ravel()])

    def node(i, j):
        return i * ny + j

    side_nodes = {
        Side.W: [node(0, j) for j in range(ny)],
        Side.E: [node(nx - 1, j) for j in range(ny)],
        Side.S: [node(i, 0) for i in range(nx)],
        Side.N: [node(i, ny - 1) for i in range(nx)],
    }
    weight = 10.0 / min(grid.hx, grid.hy)
    rows, cols, data = [], [], []
    r = 0
    for side in SIDE_ORDER:
        a, bb = conditions[side]
        nrm = float(np.hypot(a, bb))
        for nd in side_nodes[side]:
            rows += [r, r]
            cols += [nd, N + nd]
            data += [weight * a / nrm, weight * bb / nrm]
            r += 1
    C = sp.csr_matrix((data, (rows, cols)), shape=(r, 2 * N))

    full = sp.vstack([A, C], format="csr")
    rhs = np.concatenate([b, np.zeros(r)])
    normal = (full.T @ full).tocsc()
    atb = full.T @ rhs
    lu = spla.splu(normal)
    sol = lu.solve(atb)
    sol += lu.solve(atb - normal @ sol)  # one round of iterative refinement
    if not np.all(np.isfinite(sol)):
        raise RankDeficientBC("normal equations are numerically singular")

    u = np.stack([sol[:N].reshape(nx, ny), sol[N:].reshape(nx, ny)])
    field = StateField(grid, u)
    eq_residual = (A @ sol - b)
    w = grid.quad_weights().ravel()
    res_norm = float(np.sqrt(np.sum(w * eq_residual[:N] ** 2)
                             + np.sum(w * eq_residual[N:] ** 2)))
    psi_norm = float(np.sqrt(np.sum(w * b[:N] ** 2) + np.sum(w * b[N:] ** 2)))
    if psi_norm == 0.0:
        report = CertReport(name="elliptic_uniqueness", grid_label=grid.label(),
                            residual=field.norm(), tolerance=tol)
    else:
        # a healthy least-squares solve leaves only truncation residue,
        # far below this coarse degeneracy guard
        report = CertReport(name="elliptic_residual", grid_label=grid.label(),
                            residual=res_norm / psi_norm, tolerance=0.5)
    return field, report


# --- reproducible test fields ---------------------------------------------------


def smooth_random_field(grid: RectGrid, rng: np.random.Generator,
                        nmodes: int = 3) -> np.ndarray:
    """Low-frequency random trigonometric field with O(1) amplitude."""
    X, Y = grid.meshgrid()
    out = np.zeros((grid.nx, grid.ny))
    for _ in range(nmodes):
        ax, ay = rng.uniform(0.5, 2.5, 2)
        px, py = rng.uniform(0, 2 * np.pi, 2)
        amp = rng.uniform(0.3, 1.0)
        out += amp * np.sin(ax * np.pi * X / grid.L1 + px) * \
            np.sin(ay * np.pi * Y / grid.L2 + py)
    return out / nmodes


def side_vanishing_factor(grid: RectGrid, sides) -> np.ndarray:
    """Smooth factor equal to 0 on the given sides and ~1 well inside."""
    X, Y = grid.meshgrid()
    out = np.ones((grid.nx, grid.ny))
    for side in sides:
        if side is Side.W:
            out = out * np.sin(0.5 * np.pi * X / grid.L1)
        elif side is Side.E:
            out = out * np.sin(0.5 * np.pi * (grid.L1 - X) / grid.L1)
        elif side is Side.S:
            out = out * np.sin(0.5 * np.pi * Y / grid.L2)
        else:
            out = out * np.sin(0.5 * np.pi * (grid.L2 - Y) / grid.L2)
    return out


def random_scalar_bc_field(grid: RectGrid, sides, rng) -> StateField:
    vals = smooth_random_field(grid, rng) * side_vanishing_factor(grid, sides)
    vals = _exact_zero_on(vals, sides, grid)
    return StateField(grid, vals[None])


def random_elliptic_bc_field(grid: RectGrid,
                             conditions: Mapping[Side, tuple[float, float]],
                             rng) -> StateField:
    """Random smooth two-component field satisfying component-type
    conditions ((a, b) proportional to (1, 0) or (0, 1)) exactly."""
    u1_sides = []
    u2_sides = []
    for side in SIDE_ORDER:
        a, b = conditions[side]
        if b == 0:
            u1_sides.append(side)
        elif a == 0:
            u2_sides.append(side)
        else:
            raise ValueError(
                "random field generation handles component conditions only; "
                "rotate the field for mixed conditions")
    u1 = smooth_random_field(grid, rng) * side_vanishing_factor(grid, u1_sides)
    u2 = smooth_random_field(grid, rng) * side_vanishing_factor(grid, u2_sides)
    u1 = _exact_zero_on(u1, u1_sides, grid)
    u2 = _exact_zero_on(u2, u2_sides, grid)
    return StateField(grid, np.stack([u1, u2]))


def _exact_zero_on(vals: np.ndarray, sides, grid: RectGrid) -> np.ndarray:
    vals = vals.copy()
    for side in sides:
        if side is Side.W:
            vals[0, :] = 0.0
        elif side is Side.E:
            vals[-1, :] = 0.0
        elif side is Side.S:
            vals[:, 0] = 0.0
        else:
            vals[:, -1] = 0.0
    return vals
