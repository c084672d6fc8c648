"""Simultaneous congruence diagonalization of a symmetric pair.

A single real congruence P takes two non-singular real symmetric matrices
(A1, A2) with A1^-1 A2 diagonalizable over C into matching block-diagonal
forms whose blocks pair up as scalar hyperbolic modes (both entries
non-zero reals) or 2x2 elliptic modes in trace-free normal form scaled so
that alpha2*beta1 - alpha1*beta2 = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import (AllPivotsFail, NotDiagonalizable, NotTypeII,
                     OffDiagonalResidual, SingularInput, SingularPivot)
from .linalg import EigenBlock, rotation_block

SYMMETRY_RTOL = 1e-12
SINGULARITY_RTOL = 1e-10
DET_CONDITION_TOL = 1e-10


def _check_symmetric(M, name):
    err = np.linalg.norm(M - M.T) / max(np.linalg.norm(M), 1e-300)
    if err > SYMMETRY_RTOL:
        raise ValueError(f"{name} is not symmetric (relative asymmetry {err:.3e})")


@dataclass(frozen=True)
class SymmetricPair:
    """System matrices (a1, a2), optional lower-order term b and the
    symmetrizer s0 that produced them (metadata; a1, a2 are already
    symmetric)."""

    a1: np.ndarray
    a2: np.ndarray
    b: np.ndarray | None = None
    s0: np.ndarray | None = None

    def __post_init__(self):
        a1 = np.asarray(self.a1, dtype=float)
        a2 = np.asarray(self.a2, dtype=float)
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", a2)
        if a1.shape != a2.shape or a1.ndim != 2 or a1.shape[0] != a1.shape[1]:
            raise ValueError(f"a1, a2 must be square of equal order, "
                             f"got {a1.shape} and {a2.shape}")
        _check_symmetric(a1, "a1")
        _check_symmetric(a2, "a2")
        for name, M in (("a1", a1), ("a2", a2)):
            s = np.linalg.svd(M, compute_uv=False)
            if s[-1] <= SINGULARITY_RTOL * s[0]:
                raise SingularInput(
                    f"{name} is numerically singular "
                    f"(smin/smax = {s[-1] / s[0]:.3e})")
        if self.b is not None:
            b = np.asarray(self.b, dtype=float)
            object.__setattr__(self, "b", b)
            if b.shape != a1.shape:
                raise ValueError("b must match the system order")
        if self.s0 is not None:
            s0 = np.asarray(self.s0, dtype=float)
            object.__setattr__(self, "s0", s0)
            _check_symmetric(s0, "s0")
            if np.linalg.eigvalsh(s0).min() <= 0:
                raise ValueError("s0 must be positive-definite")

    @property
    def order(self) -> int:
        return self.a1.shape[0]


@dataclass(frozen=True)
class TypeIMode:
    """Scalar hyperbolic mode: 1x1 pair (c, d), both non-zero."""

    c: float
    d: float

    @property
    def advection_ratio(self) -> float:
        return self.d / self.c

    def first(self) -> np.ndarray:
        return np.array([[self.c]])

    def second(self) -> np.ndarray:
        return np.array([[self.d]])


@dataclass(frozen=True)
class TypeIIMode:
    """Elliptic mode: 2x2 trace-free pair scaled so the determinant
    condition alpha2*beta1 - alpha1*beta2 equals 1."""

    alpha1: float
    beta1: float
    alpha2: float
    beta2: float

    @property
    def determinant_condition(self) -> float:
        return self.alpha2 * self.beta1 - self.alpha1 * self.beta2

    @property
    def mu1(self) -> float:
        return (self.alpha1 * self.alpha2 + self.beta1 * self.beta2) / \
            (self.alpha1 ** 2 + self.beta1 ** 2)

    @property
    def mu2(self) -> float:
        return self.determinant_condition / (self.alpha1 ** 2 + self.beta1 ** 2)

    def first(self) -> np.ndarray:
        return np.array([[self.alpha1, self.beta1], [self.beta1, -self.alpha1]])

    def second(self) -> np.ndarray:
        return np.array([[self.alpha2, self.beta2], [self.beta2, -self.alpha2]])


ModePair = TypeIMode | TypeIIMode


@dataclass(frozen=True)
class DecompositionResiduals:
    offdiag_1: float
    offdiag_2: float
    reconstruction: float


@dataclass(frozen=True)
class ModeDecomposition:
    p: np.ndarray
    modes: tuple[ModePair, ...]
    residuals: DecompositionResiduals
    eigenvalues: tuple[complex, ...] = field(default=())

    @property
    def order(self) -> int:
        return self.p.shape[0]

    def mode_slices(self) -> list[slice]:
        out, i = [], 0
        for m in self.modes:
            w = 1 if isinstance(m, TypeIMode) else 2
            out.append(slice(i, i + w))
            i += w
        return out

    def block_diagonals(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.order
        B1, B2 = np.zeros((n, n)), np.zeros((n, n))
        for sl, m in zip(self.mode_slices(), self.modes):
            B1[sl, sl] = m.first()
            B2[sl, sl] = m.second()
        return B1, B2

    def report(self) -> str:
        lines = ["congruence matrix P:",
                 linalg.format_matrix(self.p).rstrip("\n"), "modes:"]
        for k, m in enumerate(self.modes):
            if isinstance(m, TypeIMode):
                lines.append(f"mode {k}: TypeI c={m.c:.17g} d={m.d:.17g}")
            else:
                lines.append(
                    f"mode {k}: StandardTypeII alpha1={m.alpha1:.17g} "
                    f"beta1={m.beta1:.17g} alpha2={m.alpha2:.17g} "
                    f"beta2={m.beta2:.17g} "
                    f"det_condition={m.determinant_condition:.17g}")
        r = self.residuals
        lines.append(f"residuals: offdiag_1={r.offdiag_1:.17g} "
                     f"offdiag_2={r.offdiag_2:.17g} "
                     f"reconstruction={r.reconstruction:.17g}")
        return "\n".join(lines) + "\n"


def _tracefree_parts(M, tol, name="block"):
    """Read (alpha, beta) off a 2x2 matrix expected to be [[a, b], [b, -a]]."""
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2):
        raise ValueError(f"{name} must be 2x2, got {M.shape}")
    scale = max(np.abs(M).max(), 1e-300)
    if abs(M[0, 1] - M[1, 0]) > tol * scale or abs(M[0, 0] + M[1, 1]) > tol * scale:
        raise ValueError(f"{name} is not symmetric trace-free: {M!r}")
    return M[0, 0], 0.5 * (M[0, 1] + M[1, 0])


def standardize_type2(C, D, tol: float = 1e-9):
    """Scale a trace-free 2x2 pair so the determinant condition equals 1.

    Returns (V, mode) with V = kappa0 * I, kappa0 the inverse fourth root
    of alpha2*beta1 - alpha1*beta2 (equivalently mu2*(alpha1^2 + beta1^2)).
    """
    a1, b1 = _tracefree_parts(C, tol, "C")
    a2, b2 = _tracefree_parts(D, tol, "D")
    delta = a2 * b1 - a1 * b2
    scale = max(abs(a1), abs(b1), abs(a2), abs(b2), 1e-300)
    if delta <= tol * scale ** 2:
        raise NotTypeII(
            f"alpha2*beta1 - alpha1*beta2 = {delta:.3e} is not positive")
    kappa0 = delta ** -0.25
    k2 = kappa0 * kappa0
    mode = TypeIIMode(k2 * a1, k2 * b1, k2 * a2, k2 * b2)
    return np.diag([kappa0, kappa0]), mode


def _block(M, i, j):
    return M[2 * i:2 * i + 2, 2 * j:2 * j + 2]


def _block_det(M, i, j):
    B = _block(M, i, j)
    return B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]


def pivot_leading_block(blocks, tol: float = 1e-12):
    """Congruence W making the leading 2x2 block of W^t A W non-singular.

    `blocks` is the assembled 2k x 2k symmetric matrix whose 2x2 sub-blocks
    are trace-free. W is either the identity, a block swap, or the
    [[I, -I], [I, I]] combination; in every case W is orthogonal up to
    scaling and exactly representable.
    """
    A = np.asarray(blocks, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] % 2:
        raise ValueError(f"expected an assembled 2k x 2k matrix, got {A.shape}")
    k = A.shape[0] // 2
    scale = max(np.linalg.norm(A), 1e-300)
    # trace-free 2x2 blocks are singular iff zero, so |det| has scale^2 units
    def nonsingular(i, j):
        return abs(_block_det(A, i, j)) > tol * scale ** 2

    if nonsingular(0, 0):
        return np.eye(2 * k), A.copy()
    for j in range(1, k):
        if nonsingular(j, j):
            W = np.eye(2 * k)
            W[0:2, 0:2] = 0.0
            W[2 * j:2 * j + 2, 2 * j:2 * j + 2] = 0.0
            W[0:2, 2 * j:2 * j + 2] = np.eye(2)
            W[2 * j:2 * j + 2, 0:2] = np.eye(2)
            return W, W.T @ A @ W
    for j in range(1, k):
        if nonsingular(0, j):
            Wswap = np.eye(2 * k)
            if j != 1:
                Wswap[2:4, 2:4] = 0.0
                Wswap[2 * j:2 * j + 2, 2 * j:2 * j + 2] = 0.0
                Wswap[2:4, 2 * j:2 * j + 2] = np.eye(2)
                Wswap[2 * j:2 * j + 2, 2:4] = np.eye(2)
            Wmix = np.eye(2 * k)
            Wmix[0:2, 0:2] = np.eye(2)
            Wmix[0:2, 2:4] = -np.eye(2)
            Wmix[2:4, 0:2] = np.eye(2)
            Wmix[2:4, 2:4] = np.eye(2)
            W = Wswap @ Wmix
            return W, W.T @ A @ W
    raise AllPivotsFail(
        "no non-singular 2x2 pivot found; the assembled block must be "
        "singular, which contradicts the input hypotheses")


def schur_eliminate(A_ii, block: EigenBlock, tol: float = 1e-12):
    """Decouple the leading 2x2 block from the rest by a unit upper
    block-triangular congruence.

    Requires the leading block C11 non-singular (run pivot_leading_block
    first). Returns (V, (C11, D11), trailing) where D11 = C11 @ E0 and
    `trailing` is the (2k-2) x (2k-2) Schur complement, whose 2x2
    sub-blocks keep the trace-free form.
    """
    A = np.asarray(A_ii, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] % 2:
        raise ValueError(f"expected a 2k x 2k matrix, got {A.shape}")
    if not block.is_complex:
        raise ValueError("schur_eliminate applies to complex eigenvalue blocks")
    k = A.shape[0] // 2
    scale = max(np.linalg.norm(A), 1e-300)
    det11 = _block_det(A, 0, 0)
    if abs(det11) <= tol * scale ** 2:
        raise SingularPivot(
            f"leading 2x2 block is singular (|det| = {abs(det11):.3e})")
    C11 = _block(A, 0, 0)
    C11_inv = np.linalg.inv(C11)
    V = np.eye(2 * k)
    for j in range(1, k):
        V[0:2, 2 * j:2 * j + 2] = -C11_inv @ _block(A, 0, j)
    transformed = V.T @ A @ V
    transformed = 0.5 * (transformed + transformed.T)
    trailing = transformed[2:, 2:].copy()
    D11 = C11 @ rotation_block(block.re, block.im)
    return V, (C11.copy(), D11), trailing


def _decouple_complex_block(A_ii, block: EigenBlock, tol):
    """Pivot + Schur recursion: full congruence V with V^t A_ii V
    block-diagonal of trace-free 2x2 blocks."""
    size = A_ii.shape[0]
    V = np.eye(size)
    C = A_ii.copy()
    start = 0
    while size - start > 2:
        sub = C[start:, start:]
        kk = (size - start) // 2
        W, sub = pivot_leading_block(sub, tol=tol)
        Vs, _, _ = schur_eliminate(sub, EigenBlock(block.re, block.im, kk), tol=tol)
        sub = Vs.T @ sub @ Vs
        sub = 0.5 * (sub + sub.T)
        step = np.eye(size)
        step[start:, start:] = W @ Vs
        V = V @ step
        C[start:, start:] = sub
        start += 2
    return V, C


def simultaneous_diagonalize(pair: SymmetricPair, tol: float = 1e-9,
                             cluster_tol: float | None = None,
                             condition_cap: float = linalg.DEFAULT_CONDITION_CAP,
                             ) -> ModeDecomposition:
    """Diagonalize (a1, a2) simultaneously by one real congruence.

    Pipeline: real block eigenstructure of a1^-1 a2, verification that the
    congruence by that basis block-diagonalizes a1, then per-block handling
    (orthogonal diagonalization for real eigenvalue blocks; scaling, or
    pivot + Schur recursion followed by scaling, for complex blocks).
    Modes are ordered TypeI first (by d/c), then TypeII (by mu1, mu2).
    """
    A1, A2 = pair.a1, pair.a2
    M = np.linalg.solve(A1, A2)
    ok, diagnostic = linalg.is_diagonalizable(M)
    if not ok:
        raise NotDiagonalizable(diagnostic)
    form = linalg.real_block_eigen(M, cluster_tol=cluster_tol,
                                   condition_cap=condition_cap)
    P = form.basis.copy()
    B1 = P.T @ A1 @ P
    B1 = 0.5 * (B1 + B1.T)

    slices = form.block_slices()
    scale1 = max(np.linalg.norm(A1), 1e-300)
    offdiag = 0.0
    for i, si in enumerate(slices):
        for j, sj in enumerate(slices):
            if i != j:
                offdiag = max(offdiag, np.abs(B1[si, sj]).max())
    if offdiag > tol * scale1:
        raise OffDiagonalResidual(
            f"off-diagonal block residual {offdiag:.3e} exceeds "
            f"{tol * scale1:.3e}; eigenvalue clustering likely failed")

    modes: list[tuple] = []  # (sort_key, width, ModePair, columns)
    for blk, sl in zip(form.blocks, slices):
        A_ii = B1[sl, sl]
        cols = P[:, sl]
        if not blk.is_complex:
            lam = blk.re
            d, V = np.linalg.eigh(A_ii)
            cols = cols @ V
            for idx in range(blk.multiplicity):
                mode = TypeIMode(c=float(d[idx]), d=float(lam * d[idx]))
                key = (0, mode.advection_ratio, mode.c)
                modes.append((key, 1, mode, cols[:, idx:idx + 1]))
        else:
            V, C = _decouple_complex_block(A_ii, blk, tol=tol)
            cols = cols @ V
            for j in range(blk.multiplicity):
                Cj = C[2 * j:2 * j + 2, 2 * j:2 * j + 2]
                Dj = Cj @ rotation_block(blk.re, blk.im)
                Vs, mode = standardize_type2(Cj, Dj, tol=tol)
                key = (1, mode.mu1, mode.mu2)
                modes.append((key, 2, mode, cols[:, 2 * j:2 * j + 2] @ Vs))
    modes.sort(key=lambda t: t[0])

    P_final = np.hstack([t[3] for t in modes])
    mode_list = tuple(t[2] for t in modes)

    decomp = ModeDecomposition(p=P_final, modes=mode_list,
                               residuals=DecompositionResiduals(0, 0, 0),
                               eigenvalues=tuple(
                                   complex(b.re, b.im) for b in form.blocks))
    Bd1, Bd2 = decomp.block_diagonals()
    T1 = P_final.T @ A1 @ P_final
    T2 = P_final.T @ A2 @ P_final
    scale2 = max(np.linalg.norm(A2), 1e-300)
    off1 = np.linalg.norm(T1 - Bd1) / scale1
    off2 = np.linalg.norm(T2 - Bd2) / scale2
    P_inv = np.linalg.inv(P_final)
    rec1 = np.linalg.norm(A1 - P_inv.T @ Bd1 @ P_inv) / scale1
    rec2 = np.linalg.norm(A2 - P_inv.T @ Bd2 @ P_inv) / scale2
    residuals = DecompositionResiduals(offdiag_1=float(off1),
                                       offdiag_2=float(off2),
                                       reconstruction=float(max(rec1, rec2)))
    if max(off1, off2) > tol:
        raise OffDiagonalResidual(
            f"transformed pair deviates from mode blocks by "
            f"{max(off1, off2):.3e} (tolerance {tol:.1e})")
    return ModeDecomposition(p=P_final, modes=mode_list, residuals=residuals,
                             eigenvalues=decomp.eigenvalues)
