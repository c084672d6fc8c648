"""Boundary-condition synthesis for decomposed modes.

Scalar (hyperbolic) modes get homogeneous data on their two inflow sides,
decided by the signs of the pair (c, d). Elliptic modes split the two
components over complementary pairs of contiguous sides, decided by the
signs of (alpha1, alpha2); a rotation of the mode variables generates the
infinitely many equivalent condition sets.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .congruence import ModeDecomposition, SymmetricPair, TypeIIMode, TypeIMode
from .errors import (AssumptionViolated, RankDeficientOverride,
                     ZeroCoefficient, ZeroKappa)

SIGN_TOL = 1e-12


class Side(enum.Enum):
    """The four sides of the rectangle (0, L1) x (0, L2)."""

    W = "W"  # x = 0
    E = "E"  # x = L1
    S = "S"  # y = 0
    N = "N"  # y = L2

    @property
    def axis(self) -> str:
        return "x" if self in (Side.W, Side.E) else "y"

    @property
    def is_lower(self) -> bool:
        return self in (Side.W, Side.S)

    def __str__(self):
        return self.value


SIDE_ORDER = (Side.W, Side.E, Side.S, Side.N)


@dataclass(frozen=True)
class ScalarModeBC:
    """Homogeneous condition for one scalar mode variable on two sides."""

    mode_index: int
    sides: frozenset[Side]

    def lines(self) -> list[str]:
        names = ",".join(s.value for s in SIDE_ORDER if s in self.sides)
        return [f"mode {self.mode_index}: TypeI inflow={names}"]


@dataclass(frozen=True)
class EllipticModeBC:
    """Per-side linear condition a*u1 + b*u2 = 0 for one elliptic mode."""

    mode_index: int
    conditions: Mapping[Side, tuple[float, float]]

    def __post_init__(self):
        conds = dict(self.conditions)
        if set(conds) != set(Side):
            raise ValueError("conditions must cover all four sides")
        for side, (a, b) in conds.items():
            if a == 0 and b == 0:
                raise ValueError(f"condition on {side} is identically zero")
        object.__setattr__(self, "conditions", conds)

    def condition_matrix(self) -> np.ndarray:
        return np.array([self.conditions[s] for s in SIDE_ORDER])

    def lines(self) -> list[str]:
        return [
            f"mode {self.mode_index}: TypeII side={s.value} "
            f"cond=({self.conditions[s][0]:.17g},{self.conditions[s][1]:.17g})"
            for s in SIDE_ORDER
        ]


BCAssignment = ScalarModeBC | EllipticModeBC


def format_assignments(assignments) -> str:
    lines = []
    for bc in assignments:
        lines.extend(bc.lines())
    return "\n".join(lines) + "\n"


def synthesize_bc_type1(c: float, d: float) -> frozenset[Side]:
    """Two contiguous inflow sides for the scalar mode with speeds (c, d)."""
    if c == 0 or d == 0:
        raise ZeroCoefficient(f"scalar mode speeds must be non-zero, got ({c}, {d})")
    x_side = Side.W if c > 0 else Side.E
    y_side = Side.S if d > 0 else Side.N
    return frozenset({x_side, y_side})


def synthesize_bc_type2(mode: TypeIIMode, tol: float = SIGN_TOL) -> EllipticModeBC:
    """Default component split for an elliptic mode by the signs of
    (alpha1, alpha2); alpha counts as >= 0 when above -tol*scale."""
    scale = max(abs(mode.alpha1), abs(mode.beta1),
                abs(mode.alpha2), abs(mode.beta2), 1e-300)
    a1_nonneg = mode.alpha1 > -tol * scale
    a2_nonneg = mode.alpha2 > -tol * scale
    u1 = (1.0, 0.0)
    u2 = (0.0, 1.0)
    conditions = {
        Side.W: u1 if a1_nonneg else u2,
        Side.E: u2 if a1_nonneg else u1,
        Side.S: u1 if a2_nonneg else u2,
        Side.N: u2 if a2_nonneg else u1,
    }
    return EllipticModeBC(mode_index=0, conditions=conditions)


def rotate_type2(mode: TypeIIMode, kappa: float) -> TypeIIMode:
    """Transform the mode coefficients under the orthogonal change of
    variables v = Q(kappa) u; preserves the determinant condition."""
    if kappa == 0:
        raise ZeroKappa("kappa must be non-zero")
    k2 = kappa * kappa
    den = 1.0 + k2
    a1 = ((k2 - 1.0) * mode.alpha1 - 2.0 * kappa * mode.beta1) / den
    a2 = ((k2 - 1.0) * mode.alpha2 - 2.0 * kappa * mode.beta2) / den
    b1 = ((k2 - 1.0) * mode.beta1 + 2.0 * kappa * mode.alpha1) / den
    b2 = ((k2 - 1.0) * mode.beta2 + 2.0 * kappa * mode.alpha2) / den
    return TypeIIMode(a1, b1, a2, b2)


def rotation_matrix(kappa: float) -> np.ndarray:
    """Q(kappa), the orthogonal map sending u to the rotated mode variables."""
    if kappa == 0:
        raise ZeroKappa("kappa must be non-zero")
    return np.array([[kappa, -1.0], [1.0, kappa]]) / np.sqrt(1.0 + kappa * kappa)


def check_rank2(conditions: Mapping[Side, tuple[float, float]]) -> bool:
    rows = np.array([conditions[s] for s in SIDE_ORDER], dtype=float)
    return np.linalg.matrix_rank(rows, tol=1e-10 * max(np.abs(rows).max(), 1e-300)) == 2


def assemble_system_bcs(decomp: ModeDecomposition,
                        overrides: Mapping[int, Mapping[Side, tuple[float, float]]]
                        | None = None) -> list[BCAssignment]:
    """One boundary assignment per mode: the sign-case defaults, with
    optional per-mode override condition sets for elliptic modes."""
    overrides = dict(overrides or {})
    out: list[BCAssignment] = []
    for k, mode in enumerate(decomp.modes):
        if isinstance(mode, TypeIMode):
            if k in overrides:
                raise RankDeficientOverride(
                    f"mode {k} is scalar; overrides apply to elliptic modes")
            out.append(ScalarModeBC(mode_index=k,
                                    sides=synthesize_bc_type1(mode.c, mode.d)))
        else:
            if k in overrides:
                conds = dict(overrides[k])
                if not check_rank2(conds):
                    raise RankDeficientOverride(
                        f"override for mode {k}: side-condition matrix has "
                        "rank < 2, uniqueness is lost")
                out.append(EllipticModeBC(mode_index=k, conditions=conds))
            else:
                bc = synthesize_bc_type2(mode)
                out.append(EllipticModeBC(mode_index=k, conditions=bc.conditions))
    return out


# --- variable-coefficient standing assumptions ------------------------------


@dataclass(frozen=True)
class VariableCoeffReport:
    """Grid-sampled verdicts for the variable-coefficient assumptions.

    Margins are minima over the sample nodes. The C1 norm is a
    finite-difference proxy; Holder regularity itself is taken on trust.
    """

    c1_norm_estimate: float
    coeff_eig_margin: float
    real_eig_margin: float
    imag_eig_margin: float
    multiplicity_constant: bool
    omega0: float


def _eig_signature(M, tol):
    """(sorted real eigenvalues, sorted (re, im>0) pairs) of a real matrix."""
    ev = np.linalg.eigvals(M)
    real = sorted(float(e.real) for e in ev if abs(e.imag) <= tol)
    cplx = sorted((float(e.real), float(e.imag)) for e in ev if e.imag > tol)
    return real, cplx


def check_variable_coeff_assumptions(sampler: Callable[[float, float], SymmetricPair],
                                     grid, tol: float = 1e-8) -> VariableCoeffReport:
    """Sample the coefficient pair on the grid and check that coefficient
    eigenvalues, real eigenvalues and imaginary parts of a1^-1 a2 stay
    one-signed away from zero, and that multiplicity patterns are constant.

    Raises AssumptionViolated naming the assumption and the node; returns
    the margin report otherwise.
    """
    xs, ys = grid.x(), grid.y()
    a1_samples = None
    a2_samples = None
    coeff_margin = np.inf
    real_margin = np.inf
    imag_margin = np.inf
    coeff_signs = {"a1": None, "a2": None}
    real_signs = None
    multiplicity_pattern = None
    multiplicity_ok = True

    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            pair = sampler(float(x), float(y))
            n = pair.order
            if a1_samples is None:
                a1_samples = np.zeros((grid.nx, grid.ny, n, n))
                a2_samples = np.zeros((grid.nx, grid.ny, n, n))
            a1_samples[i, j] = pair.a1
            a2_samples[i, j] = pair.a2

            for name, M in (("a1", pair.a1), ("a2", pair.a2)):
                ev = np.sort(np.linalg.eigvalsh(M))
                if np.any(ev == 0):
                    raise AssumptionViolated("b", (i, j),
                                             f"{name} eigenvalue hits zero")
                signs = tuple(np.sign(ev))
                if coeff_signs[name] is None:
                    coeff_signs[name] = signs
                elif signs != coeff_signs[name]:
                    raise AssumptionViolated("b", (i, j),
                                             f"{name} eigenvalue changed sign")
                coeff_margin = min(coeff_margin, float(np.abs(ev).min()))

            M = np.linalg.solve(pair.a1, pair.a2)
            scale = max(np.linalg.norm(M, 2), 1e-300)
            real, cplx = _eig_signature(M, tol * scale)
            if real:
                r = np.array(real)
                if np.any(r == 0):
                    raise AssumptionViolated("c", (i, j),
                                             "real eigenvalue of a1^-1 a2 hits zero")
                signs = tuple(np.sign(r))
                if real_signs is None:
                    real_signs = signs
                elif signs != real_signs:
                    raise AssumptionViolated("c", (i, j),
                                             "real eigenvalue of a1^-1 a2 changed sign")
                real_margin = min(real_margin, float(np.abs(r).min()))
            if cplx:
                # only the im > 0 representative is kept, so a pair collapsing
                # to real shows up as a multiplicity-pattern change below
                im = np.array([p[1] for p in cplx])
                imag_margin = min(imag_margin, float(im.min()))
            pattern = (len(real), len(cplx))
            if multiplicity_pattern is None:
                multiplicity_pattern = pattern
            elif pattern != multiplicity_pattern:
                raise AssumptionViolated(
                    "d", (i, j),
                    f"eigenvalue multiplicity pattern changed from "
                    f"{multiplicity_pattern} to {pattern}")

    # C1 proxy and the quasi-positivity budget from d/dx a1 + d/dy a2
    d_a1_dx = np.gradient(a1_samples, grid.hx, axis=0, edge_order=2)
    d_a2_dy = np.gradient(a2_samples, grid.hy, axis=1, edge_order=2)
    d_a1_dy = np.gradient(a1_samples, grid.hy, axis=1, edge_order=2)
    d_a2_dx = np.gradient(a2_samples, grid.hx, axis=0, edge_order=2)
    c1_norm = float(max(np.abs(d_a1_dx).max(), np.abs(d_a1_dy).max(),
                        np.abs(d_a2_dx).max(), np.abs(d_a2_dy).max(),
                        np.abs(a1_samples).max(), np.abs(a2_samples).max()))
    div = d_a1_dx + d_a2_dy
    lam_max = np.linalg.eigvalsh(0.5 * (div + np.swapaxes(div, -1, -2))).max()
    omega0 = 0.5 * max(0.0, float(lam_max))

    return VariableCoeffReport(
        c1_norm_estimate=c1_norm,
        coeff_eig_margin=float(coeff_margin),
        real_eig_margin=float(real_margin) if np.isfinite(real_margin) else np.inf,
        imag_eig_margin=float(imag_margin) if np.isfinite(imag_margin) else np.inf,
        multiplicity_constant=multiplicity_ok,
        omega0=omega0,
    )
