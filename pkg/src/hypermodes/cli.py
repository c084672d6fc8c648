"""Command-line front end.

Grammar: ``hypermodes <command> key=value ...`` with commands
diagonalize | classify | bc | simulate | verify | preset-list. A
``config=FILE`` key loads flat "key = value" lines ('#' comments) first;
explicit flags override file values. All floating-point output is printed
with 17 significant digits so identical configurations reproduce
byte-identical artifacts.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import apps
from .congruence import (ModeDecomposition, SymmetricPair, TypeIIMode,
                         TypeIMode, simultaneous_diagonalize)
from .errors import (ConflictingSources, ConfigError, HypermodesError,
                     MissingInput, UnknownKey)
from .linalg import format_matrix, load_matrix
from .modes import (EllipticModeBC, ScalarModeBC, Side, assemble_system_bcs,
                    check_rank2, format_assignments)
from .operators import (CertReport, RectGrid, StateField,
                        cross_term_residual, elliptic_steady_solve,
                        integration_by_parts_residual,
                        positivity_residual_type1, positivity_residual_type2,
                        random_elliptic_bc_field, random_scalar_bc_field,
                        side_vanishing_factor, smooth_random_field)
from .solver import IVPConfig, run

COMMANDS = ("diagonalize", "classify", "bc", "simulate", "verify", "preset-list")

PRESET_DEFAULTS = {
    "swe": {"u0": 2.0, "v0": 3.0, "phi0": 1.0, "g": 1.0, "fcor": 0.5},
    "swmhd": {"u0": 2.0, "v0": 2.0, "b10": 0.5, "b20": 0.3, "phi0": 1.0, "g": 1.0},
    "euler": {"u0": 2.0, "v0": 3.0, "rho0": 1.0, "e0": 1.0, "p0": 0.4,
              "dp_drho": 0.4, "dp_de": 0.4},
    "wave": {"alpha": 0.6, "beta": 0.8},
}

_FLOAT_KEYS = {"u0", "v0", "phi0", "g", "fcor", "b10", "b20", "rho0", "e0",
               "p0", "dp_drho", "dp_de", "alpha", "beta", "L1", "L2", "t_end",
               "cfl", "output_interval", "cluster_tol", "cond_cap"}
_INT_KEYS = {"nx", "ny", "seed", "snapshots", "trials"}
_STR_KEYS = {"preset", "a1_file", "a2_file", "b_file", "s0_file", "outdir",
             "config"}
KNOWN_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS


@dataclass
class RunConfig:
    command: str
    preset: str | None = None
    preset_params: dict = dc_field(default_factory=dict)
    a1_file: str | None = None
    a2_file: str | None = None
    b_file: str | None = None
    s0_file: str | None = None
    nx: int = 65
    ny: int = 65
    L1: float = 1.0
    L2: float = 1.0
    t_end: float | None = None
    cfl: float = 0.4
    output_interval: float | None = None
    seed: int = 42
    outdir: str = "out"
    snapshots: int = 0
    trials: int = 25
    cluster_tol: float | None = None
    cond_cap: float = 1e8


def _parse_value(key: str, raw: str):
    if key in _INT_KEYS:
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"key {key!r} expects an integer, got {raw!r}") from exc
    if key in _FLOAT_KEYS:
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"key {key!r} expects a number, got {raw!r}") from exc
    return raw


def _read_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (t.strip() for t in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise UnknownKey(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _parse_value(key, raw)
    return out


def parse_config(argv) -> RunConfig:
    """Parse [command, key=value, ...]; flags override config-file values."""
    if not argv:
        raise ConfigError("usage: hypermodes <command> [key=value ...]; "
                          f"commands: {', '.join(COMMANDS)}")
    command = argv[0]
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; "
                          f"commands: {', '.join(COMMANDS)}")
    flags = {}
    for token in argv[1:]:
        if "=" not in token:
            raise ConfigError(f"expected key=value, got {token!r}")
        key, raw = token.split("=", 1)
        if key not in KNOWN_KEYS:
            raise UnknownKey(f"unknown key {key!r}")
        flags[key] = _parse_value(key, raw)

    merged = {}
    if "config" in flags:
        merged.update(_read_config_file(flags["config"]))
    merged.update(flags)
    merged.pop("config", None)

    cfg = RunConfig(command=command)
    preset_param_keys = set().union(*(set(d) for d in PRESET_DEFAULTS.values()))
    for key, value in merged.items():
        if key in preset_param_keys:
            cfg.preset_params[key] = value
        else:
            setattr(cfg, key, value)

    if cfg.preset is not None and cfg.preset not in PRESET_DEFAULTS:
        raise ConfigError(f"unknown preset {cfg.preset!r}; "
                          f"presets: {', '.join(sorted(PRESET_DEFAULTS))}")
    has_preset = cfg.preset is not None
    has_files = cfg.a1_file is not None or cfg.a2_file is not None
    if has_preset and has_files:
        raise ConflictingSources("give either preset=... or matrix files, not both")
    if command != "preset-list":
        if not has_preset and not has_files:
            raise MissingInput("no input source: give preset=... or "
                               "a1_file=.../a2_file=...")
        if has_files and (cfg.a1_file is None or cfg.a2_file is None):
            raise MissingInput("matrix input needs both a1_file and a2_file")
    return cfg


def build_pair(cfg: RunConfig) -> SymmetricPair:
    if cfg.preset is not None:
        params_cls, builder = apps.PRESETS[cfg.preset]
        values = dict(PRESET_DEFAULTS[cfg.preset])
        for key, val in cfg.preset_params.items():
            if key not in values:
                raise ConfigError(
                    f"key {key!r} does not apply to preset {cfg.preset!r}")
            values[key] = val
        kwargs = {("f_cor" if k == "fcor" else k): v for k, v in values.items()}
        return builder(params_cls(**kwargs))
    for path in (cfg.a1_file, cfg.a2_file):
        if not Path(path).exists():
            raise ConfigError(f"matrix file not found: {path}")
    a1 = load_matrix(cfg.a1_file)
    a2 = load_matrix(cfg.a2_file)
    b = load_matrix(cfg.b_file) if cfg.b_file else None
    if cfg.s0_file:
        s0 = load_matrix(cfg.s0_file)
        return apps.symmetrize(a1, a2, b=b, s0=s0)
    return SymmetricPair(a1=a1, a2=a2, b=b)


def _decompose(cfg: RunConfig, pair: SymmetricPair) -> ModeDecomposition:
    return simultaneous_diagonalize(pair, cluster_tol=cfg.cluster_tol,
                                    condition_cap=cfg.cond_cap)


def _mode_census(decomp: ModeDecomposition) -> str:
    n1 = sum(isinstance(m, TypeIMode) for m in decomp.modes)
    n2 = len(decomp.modes) - n1
    return f"hyperbolic modes: {n1}\nelliptic modes: {n2}"


def _initial_field(grid: RectGrid, decomp: ModeDecomposition, bcs,
                   seed: int) -> StateField:
    """Seeded random field compatible with the synthesized conditions,
    built mode by mode in the mode variables."""
    rng = np.random.default_rng(seed)
    ubar = np.zeros((decomp.order, grid.nx, grid.ny))
    for bc, sl in zip(bcs, decomp.mode_slices()):
        if isinstance(bc, ScalarModeBC):
            ubar[sl.start] = random_scalar_bc_field(grid, bc.sides, rng).values[0]
        else:
            ubar[sl] = random_elliptic_bc_field(grid, bc.conditions, rng).values
    u = np.einsum("ab,bij->aij", decomp.p, ubar)
    return StateField(grid, u)


def _default_t_end(cfg: RunConfig, pair: SymmetricPair) -> float:
    speed = max(np.abs(np.linalg.eigvalsh(pair.a1)).max(),
                np.abs(np.linalg.eigvalsh(pair.a2)).max())
    return 2.0 * cfg.L1 / speed


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _norms_csv(report) -> str:
    lines = ["t,norm"]
    for t, n in zip(report.times, report.norms):
        lines.append(f"{t:.17g},{n:.17g}")
    return "\n".join(lines) + "\n"


def execute(cfg: RunConfig) -> int:
    """Run the configured command; returns the process exit status."""
    outdir = Path(cfg.outdir)

    if cfg.command == "preset-list":
        for name in sorted(PRESET_DEFAULTS):
            params = " ".join(f"{k}={v:.17g}" for k, v in
                              sorted(PRESET_DEFAULTS[name].items()))
            print(f"{name}: {params}")
        return 0

    pair = build_pair(cfg)
    grid = RectGrid(L1=cfg.L1, L2=cfg.L2, nx=cfg.nx, ny=cfg.ny)
    decomp = _decompose(cfg, pair)

    if cfg.command == "diagonalize":
        _write(outdir / "decomposition.txt", decomp.report())
        print(_mode_census(decomp))
        print(f"reconstruction residual: "
              f"{decomp.residuals.reconstruction:.17g}")
        return 0

    if cfg.command == "classify":
        lines = [_mode_census(decomp)]
        for k, m in enumerate(decomp.modes):
            if isinstance(m, TypeIMode):
                lines.append(f"mode {k}: hyperbolic (TypeI) c={m.c:.17g} "
                             f"d={m.d:.17g} ratio={m.advection_ratio:.17g}")
            else:
                lines.append(f"mode {k}: elliptic (StandardTypeII) "
                             f"mu1={m.mu1:.17g} mu2={m.mu2:.17g} "
                             f"det_condition={m.determinant_condition:.17g}")
        text = "\n".join(lines) + "\n"
        _write(outdir / "modes.txt", text)
        print(text, end="")
        return 0

    bcs = assemble_system_bcs(decomp)

    if cfg.command == "bc":
        _write(outdir / "bc.txt", format_assignments(bcs))
        print(format_assignments(bcs), end="")
        return 0

    if cfg.command == "simulate":
        u0 = _initial_field(grid, decomp, bcs, cfg.seed)
        t_end = cfg.t_end or _default_t_end(cfg, pair)
        ivp = IVPConfig(grid=grid, u0=u0, t_end=t_end, pair=pair,
                        decomp=decomp, bcs=bcs, cfl=cfg.cfl,
                        output_interval=cfg.output_interval)
        trajectory, report = run(ivp)
        _write(outdir / "norms.csv", _norms_csv(report))
        _write(outdir / "energy.txt", report.summary() + "\n")
        if cfg.snapshots:
            for idx, (t, snap) in enumerate(trajectory):
                for comp in range(snap.components):
                    _write(outdir / f"u{comp}_{idx:04d}.txt",
                           f"# t = {t:.17g}\n"
                           + format_matrix(snap.values[comp]))
        print(report.summary())
        return 0 if report.verdict else 2

    if cfg.command == "verify":
        rows = certification_suite(cfg, pair, grid, decomp, bcs)
        text = "name,grid,residual,tol,verdict,rate\n" + \
            "\n".join(r.csv_row() for r in rows) + "\n"
        _write(outdir / "cert.csv", text)
        failed = [r for r in rows if not r.verdict]
        for r in rows:
            print(r.csv_row())
        return 2 if failed else 0

    raise ConfigError(f"unhandled command {cfg.command!r}")


def certification_suite(cfg: RunConfig, pair: SymmetricPair, grid: RectGrid,
                        decomp: ModeDecomposition, bcs) -> list[CertReport]:
    """The full battery of discrete certificates for one system."""
    rows: list[CertReport] = []
    label = grid.label()
    h = grid.h

    rows.append(CertReport("decomposition_reconstruction", label,
                           decomp.residuals.reconstruction, 1e-9))

    elliptic = [(k, m) for k, m in enumerate(decomp.modes)
                if isinstance(m, TypeIIMode)]
    if elliptic:
        worst = max(abs(m.determinant_condition - 1.0) for _, m in elliptic)
        rows.append(CertReport("determinant_condition", label, worst, 1e-10))

    rank_ok = all(check_rank2(bc.conditions) for bc in bcs
                  if isinstance(bc, EllipticModeBC))
    rows.append(CertReport("bc_rank", label, 0.0 if rank_ok else 1.0, 0.5))

    # positivity sweeps, one row per mode
    for (k, mode), bc in zip(enumerate(decomp.modes), bcs):
        rng = np.random.default_rng(cfg.seed + 1000 + k)
        worst = np.inf
        for _ in range(cfg.trials):
            if isinstance(mode, TypeIMode):
                u = random_scalar_bc_field(grid, bc.sides, rng)
                val = positivity_residual_type1(mode.c, mode.d, u,
                                                sides=bc.sides)
            else:
                u = random_elliptic_bc_field(grid, bc.conditions, rng)
                val = positivity_residual_type2(mode, u, bc.conditions)
            worst = min(worst, val / max(u.norm() ** 2, 1e-300))
        name = ("positivity_type1" if isinstance(mode, TypeIMode)
                else "positivity_type2") + f"_mode{k}"
        rows.append(CertReport(name, label, max(0.0, -worst), 5.0 * h))

    # duality residual refinement rates; the cross-term identity is tested
    # with u1 - u2 = 0 traces so boundary stencils contribute a genuine
    # O(h^2) defect (fields vanishing on all sides make it exactly zero)
    rate_grids = [RectGrid(grid.L1, grid.L2, n, n) for n in (17, 33, 65)]
    conds = {s: (1.0, -1.0) for s in Side}
    cross_res = []
    for g in rate_grids:
        rng = np.random.default_rng(cfg.seed + 2000)
        shared = smooth_random_field(g, rng)
        bump = side_vanishing_factor(g, list(Side))
        vals = np.stack([shared, shared + bump * smooth_random_field(g, rng)])
        cross_res.append(cross_term_residual(StateField(g, vals), conds))
    rate = _fit_rate(cross_res, rate_grids)
    rows.append(CertReport("crossterm_rate", rate_grids[-1].label(),
                           max(0.0, 1.0 - rate), 0.0, rate=rate))

    ibp_res = []
    for g in rate_grids:
        rng = np.random.default_rng(cfg.seed + 3000)
        n = pair.order
        theta = StateField(g, np.stack([smooth_random_field(g, rng)
                                        for _ in range(n)]))
        gf = StateField(g, np.stack([smooth_random_field(g, rng)
                                     for _ in range(n)]))
        ibp_res.append(integration_by_parts_residual(theta, gf,
                                                     pair.a1, pair.a2))
    rate = _fit_rate(ibp_res, rate_grids)
    rows.append(CertReport("ibp_rate", rate_grids[-1].label(),
                           max(0.0, 1.0 - rate), 0.0, rate=rate))

    if elliptic:
        _, mode = elliptic[0]
        bc_e = next(bc for bc in bcs if isinstance(bc, EllipticModeBC))
        zero = StateField(grid, np.zeros((2, grid.nx, grid.ny)))
        _, rep = elliptic_steady_solve(mode, zero, grid, bc_e.conditions)
        rows.append(CertReport("elliptic_uniqueness", label,
                               rep.residual, 1e-8))

    u0 = _initial_field(grid, decomp, bcs, cfg.seed)
    t_end = cfg.t_end or _default_t_end(cfg, pair)
    ivp = IVPConfig(grid=grid, u0=u0, t_end=t_end, pair=pair, decomp=decomp,
                    bcs=bcs, cfl=cfg.cfl)
    _, report = run(ivp)
    rows.append(CertReport("energy_monotonic", label,
                           report.max_step_increase
                           / max(report.norms[0], 1e-300), 1e-10))
    rows.append(CertReport("growth_rate", label, report.omega_hat, 0.0))
    return rows


def _fit_rate(residuals, grids) -> float:
    res = np.asarray(residuals, dtype=float)
    hs = np.array([g.h for g in grids])
    if np.any(res <= 0):
        return np.inf  # residual hit exact zero; treat as converged
    return float(np.polyfit(np.log(hs), np.log(res), 1)[0])


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
        return execute(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except HypermodesError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
