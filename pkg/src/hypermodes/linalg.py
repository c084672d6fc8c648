"""Dense real matrix kernel.

Eigenstructure of real matrices expressed in real block form (real
eigenvalues give scalar blocks, complex pairs give 2x2 rotation-scaling
blocks), congruence transforms, and a plain-text matrix format.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, IllConditionedBasis, NotDiagonalizable

DEFAULT_CONDITION_CAP = 1e8
RECONSTRUCTION_RTOL = 1e-9


def rotation_block(mu1: float, mu2: float) -> np.ndarray:
    """2x2 real block representing the eigenvalue pair mu1 +/- i*mu2."""
    return np.array([[mu1, -mu2], [mu2, mu1]])


@dataclass(frozen=True)
class EigenBlock:
    """One eigenvalue cluster: real when im == 0, a conjugate pair when im > 0.

    A complex block of multiplicity k spans 2k rows of the real form.
    """

    re: float
    im: float
    multiplicity: int

    def __post_init__(self):
        if self.im < 0:
            raise ValueError("complex blocks store the im > 0 representative")
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be >= 1")

    @property
    def is_complex(self) -> bool:
        return self.im > 0

    @property
    def size(self) -> int:
        return self.multiplicity * (2 if self.is_complex else 1)

    def canonical_form(self) -> np.ndarray:
        """lambda*I_k, or diag(E0, ..., E0) with E0 the rotation-scaling block."""
        if not self.is_complex:
            return self.re * np.eye(self.multiplicity)
        out = np.zeros((self.size, self.size))
        for j in range(self.multiplicity):
            out[2 * j:2 * j + 2, 2 * j:2 * j + 2] = rotation_block(self.re, self.im)
        return out

    def sort_key(self):
        return (self.is_complex, self.re, self.im)


@dataclass(frozen=True)
class RealBlockForm:
    """Real similarity basis and the eigenvalue blocks it exposes.

    basis^-1 @ M @ basis equals blockdiag of the blocks' canonical forms.
    """

    basis: np.ndarray
    blocks: tuple[EigenBlock, ...]
    condition_number: float
    residual: float

    def block_matrix(self) -> np.ndarray:
        n = self.basis.shape[0]
        J = np.zeros((n, n))
        i = 0
        for b in self.blocks:
            J[i:i + b.size, i:i + b.size] = b.canonical_form()
            i += b.size
        return J

    def block_slices(self) -> list[slice]:
        out, i = [], 0
        for b in self.blocks:
            out.append(slice(i, i + b.size))
            i += b.size
        return out


def _as_square(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix entries must be finite")
    return M


def _cluster_eigenvalues(evals: np.ndarray, cluster_tol: float):
    """Group eigenvalues within cluster_tol; one entry per conjugate pair.

    Returns a list of (mean re, mean im, algebraic multiplicity), im >= 0,
    deterministically ordered by (is_complex, re, im).
    """
    reps = []
    for ev in evals:
        if abs(ev.imag) <= cluster_tol:
            reps.append(complex(ev.real, 0.0))
        elif ev.imag > 0:
            reps.append(complex(ev.real, ev.imag))
    reps.sort(key=lambda z: (z.imag > 0, z.real, z.imag))
    clusters: list[list[complex]] = []
    for ev in reps:
        placed = False
        for c in clusters:
            mean = sum(c) / len(c)
            if (ev.imag > 0) == (mean.imag > 0) and abs(ev - mean) <= cluster_tol:
                c.append(ev)
                placed = True
                break
        if not placed:
            clusters.append([ev])
    out = []
    for c in clusters:
        mean = sum(c) / len(c)
        out.append((mean.real, max(mean.imag, 0.0), len(c)))
    out.sort(key=lambda t: (t[1] > 0, t[0], t[1]))
    return out


def _nullspace(A: np.ndarray, dim: int):
    """Orthonormal basis of the trailing `dim` right-singular directions."""
    _, s, Vh = np.linalg.svd(A)
    n = A.shape[0]
    basis = Vh[n - dim:].conj().T
    gap = s[n - dim - 1] if n > dim else np.inf
    worst = s[n - 1] if dim >= 1 else 0.0
    return basis, worst, gap


def _fix_column_phase(col: np.ndarray) -> np.ndarray:
    """Deterministic sign/phase: pivot entry made real and positive.

    The pivot is the lowest-index entry within a whisker of the maximal
    modulus, so near-ties cannot flip the convention between runs or
    parameter perturbations.
    """
    mags = np.abs(col)
    top = mags.max()
    if top == 0:
        return col
    idx = int(np.argmax(mags >= (1.0 - 1e-6) * top))
    pivot = col[idx]
    if np.iscomplexobj(col):
        return col * (np.conj(pivot) / abs(pivot))
    return col * np.sign(pivot)


def is_diagonalizable(M, tol: float = 1e-8):
    """Check geometric multiplicity == algebraic multiplicity per cluster.

    Returns (flag, diagnostic). The diagnostic names the offending
    eigenvalue when the flag is False.
    """
    M = _as_square(M)
    scale = max(np.linalg.norm(M, 2), 1e-300)
    cluster_tol = tol * scale
    evals = np.linalg.eigvals(M)
    for re, im, mult in _cluster_eigenvalues(evals, cluster_tol):
        lam = complex(re, im)
        shifted = (M.astype(complex) if im > 0 else M) - lam * np.eye(M.shape[0])
        s = np.linalg.svd(shifted, compute_uv=False)
        rank = int(np.sum(s > tol * max(s[0], 1e-300)))
        geometric = M.shape[0] - rank
        if geometric < mult:
            which = f"{re:.6g}" if im == 0 else f"{re:.6g}+{im:.6g}i"
            return False, (f"eigenvalue {which} is defective: geometric "
                           f"multiplicity {geometric} < algebraic {mult}")
    return True, "all eigenvalue clusters have full eigenspaces"


def real_block_eigen(M, cluster_tol: float | None = None,
                     condition_cap: float = DEFAULT_CONDITION_CAP) -> RealBlockForm:
    """Real basis P and blocks J with P^-1 M P = blockdiag(J).

    Real eigenvalue clusters give lambda*I_k blocks; complex pairs give
    stacked rotation-scaling blocks with im > 0. Eigenvalues within
    cluster_tol of each other are merged into one block. Blocks are sorted
    by (kind, re, im) so identical inputs give identical orderings.
    """
    M = _as_square(M)
    n = M.shape[0]
    scale = max(np.linalg.norm(M, 2), 1e-300)
    if cluster_tol is None:
        cluster_tol = 1e-8 * scale
    evals = np.linalg.eigvals(M)
    clusters = _cluster_eigenvalues(evals, cluster_tol)

    cols = []
    blocks = []
    rank_tol = max(cluster_tol, n * np.finfo(float).eps * scale)
    for re, im, mult in clusters:
        if im == 0:
            basis, worst, _ = _nullspace(M - re * np.eye(n), mult)
            if worst > rank_tol:
                raise NotDiagonalizable(
                    f"eigenvalue {re:.6g} has geometric multiplicity below its "
                    f"algebraic multiplicity {mult}")
            basis = np.real(basis)
            for j in range(mult):
                cols.append(_fix_column_phase(basis[:, j])[:, None])
            blocks.append(EigenBlock(re, 0.0, mult))
        else:
            lam = complex(re, im)
            basis, worst, _ = _nullspace(M.astype(complex) - lam * np.eye(n), mult)
            if worst > rank_tol:
                raise NotDiagonalizable(
                    f"eigenvalue {re:.6g}+{im:.6g}i has geometric multiplicity "
                    f"below its algebraic multiplicity {mult}")
            for j in range(mult):
                w = _fix_column_phase(basis[:, j])
                # columns (Re w, -Im w) realize the rotation-scaling block
                cols.append(np.column_stack([w.real, -w.imag]))
            blocks.append(EigenBlock(re, im, mult))

    if sum(b.size for b in blocks) != n:
        raise NotDiagonalizable(
            "eigenvalue clusters do not partition the dimension; "
            "try a larger cluster tolerance")

    P = np.hstack(cols)
    cond = float(np.linalg.cond(P))
    if not np.isfinite(cond) or cond > condition_cap:
        raise IllConditionedBasis(
            f"eigenvector basis condition number {cond:.3e} exceeds cap "
            f"{condition_cap:.1e}")
    form = RealBlockForm(basis=P, blocks=tuple(blocks),
                         condition_number=cond, residual=0.0)
    J = form.block_matrix()
    residual = np.linalg.norm(M @ P - P @ J) / max(np.linalg.norm(M), 1e-300)
    if residual > RECONSTRUCTION_RTOL:
        raise NotDiagonalizable(
            f"real block reconstruction residual {residual:.3e} exceeds "
            f"{RECONSTRUCTION_RTOL:.1e}; input is defective or clustered "
            "beyond tolerance")
    return RealBlockForm(basis=P, blocks=tuple(blocks),
                         condition_number=cond, residual=float(residual))


def congruence_transform(A, P) -> np.ndarray:
    """P^t A P, explicitly symmetrized by averaging with its transpose."""
    A = np.asarray(A, dtype=float)
    P = np.asarray(P, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"A must be square, got {A.shape}")
    if P.ndim != 2 or P.shape[0] != A.shape[0]:
        raise DimensionMismatch(
            f"P rows ({P.shape[0]}) must match A order ({A.shape[0]})")
    sym_err = np.linalg.norm(A - A.T) / max(np.linalg.norm(A), 1e-300)
    if sym_err > 1e-12:
        raise ValueError(f"A is not symmetric (relative asymmetry {sym_err:.3e})")
    out = P.T @ A @ P
    return 0.5 * (out + out.T)


# --- plain-text matrix format -------------------------------------------------

def format_matrix(M) -> str:
    """First line 'rows cols', then one line of entries per row (17 sig digits)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    lines = [f"{M.shape[0]} {M.shape[1]}"]
    for row in M:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix text")
    try:
        rows, cols = (int(t) for t in lines[0].split())
    except ValueError as exc:
        raise ValueError(f"bad matrix header {lines[0]!r}") from exc
    if len(lines) - 1 != rows:
        raise ValueError(f"expected {rows} data rows, got {len(lines) - 1}")
    M = np.array([[float(t) for t in ln.split()] for ln in lines[1:]])
    if M.shape != (rows, cols):
        raise ValueError(f"expected shape {(rows, cols)}, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix entries must be finite")
    return M


def save_matrix(path, M) -> None:
    with open(path, "w") as fh:
        fh.write(format_matrix(M))


def load_matrix(path) -> np.ndarray:
    with open(path) as fh:
        return parse_matrix(fh.read())
