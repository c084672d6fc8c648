import numpy as np
import pytest

from hypermodes.apps import SWEParams, preset_swe
from hypermodes.congruence import SymmetricPair
from hypermodes.errors import (BlockMatchingFailure, CFLViolation,
                               UnstableCoefficients)
from hypermodes.modes import Side
from hypermodes.operators import (RectGrid, StateField,
                                  random_scalar_bc_field,
                                  side_vanishing_factor, smooth_random_field)
from hypermodes.solver import (IVPConfig, build_semidiscrete, run, step,
                               variable_coeff_setup)


def scalar_pair(c=1.0, d=1.0):
    return SymmetricPair(a1=np.array([[c]]), a2=np.array([[d]]))


def bump_field(grid, cx=0.5, cy=0.5, width=60.0):
    X, Y = grid.meshgrid()
    return np.exp(-width * ((X - cx) ** 2 + (Y - cy) ** 2))


class TestSemidiscrete:
    def test_zero_field_zero_rhs(self):
        g = RectGrid(1.0, 1.0, 17, 17)
        u0 = StateField(g, np.zeros((1, 17, 17)))
        op = build_semidiscrete(IVPConfig(grid=g, u0=u0, t_end=1.0,
                                          pair=scalar_pair()))
        assert np.all(op.apply(0.0, u0.values) == 0.0)

    def test_interior_upwind_stencil(self):
        # scalar c = d = 1: interior nodes must see backward differences
        g = RectGrid(1.0, 1.0, 17, 17)
        rng = np.random.default_rng(0)
        vals = smooth_random_field(g, rng) * side_vanishing_factor(
            g, [Side.W, Side.S])
        u0 = StateField(g, vals[None])
        op = build_semidiscrete(IVPConfig(grid=g, u0=u0, t_end=1.0,
                                          pair=scalar_pair()))
        out = op.apply(0.0, u0.values)
        i, j = 5, 7
        expect = -((vals[i, j] - vals[i - 1, j]) / g.hx
                   + (vals[i, j] - vals[i, j - 1]) / g.hy)
        assert out[0, i, j] == pytest.approx(expect, rel=1e-12)

    def test_constant_state_boundary_driven(self):
        # u = const with zero-inflow conditions decays only through the
        # inflow-side closure
        g = RectGrid(1.0, 1.0, 17, 17)
        u0 = StateField(g, np.ones((1, 17, 17)))
        op = build_semidiscrete(IVPConfig(grid=g, u0=u0, t_end=1.0,
                                          pair=scalar_pair()))
        out = op.apply(0.0, u0.values)
        interior = out[0, 1:, 1:]
        assert np.all(interior == 0.0)
        assert np.all(out[0, 0, :] < 0.0)  # ghost pulls toward zero

    def test_coriolis_pairing_is_skew(self):
        pair = preset_swe(SWEParams(u0=2.0, v0=3.0, phi0=1.0, g=1.0, f_cor=0.8))
        g = RectGrid(1.0, 1.0, 17, 17)
        rng = np.random.default_rng(5)
        u = np.stack([smooth_random_field(g, rng) for _ in range(3)])
        bu = np.einsum("ab,bij->aij", pair.b, u)
        w = g.quad_weights()
        assert abs(np.sum(w * np.sum(bu * u, axis=0))) < 1e-13 * np.sum(w * np.sum(u * u, axis=0))

    def test_vanishing_speed_rejected(self):
        pair = SymmetricPair(a1=np.diag([1.0, 1e-9]), a2=np.eye(2))
        g = RectGrid(1.0, 1.0, 17, 17)
        u0 = StateField(g, np.zeros((2, 17, 17)))
        with pytest.raises(UnstableCoefficients):
            build_semidiscrete(IVPConfig(grid=g, u0=u0, t_end=1.0, pair=pair))


class TestStep:
    def test_zero_stays_zero(self):
        g = RectGrid(1.0, 1.0, 17, 17)
        u0 = StateField(g, np.zeros((1, 17, 17)))
        op = build_semidiscrete(IVPConfig(grid=g, u0=u0, t_end=1.0,
                                          pair=scalar_pair()))
        u = step(op, u0.values, 0.0, op.dt_max)
        assert np.all(u == 0.0)

    def test_cfl_violation(self):
        g = RectGrid(1.0, 1.0, 17, 17)
        u0 = StateField(g, np.zeros((1, 17, 17)))
        op = build_semidiscrete(IVPConfig(grid=g, u0=u0, t_end=1.0,
                                          pair=scalar_pair()))
        with pytest.raises(CFLViolation):
            step(op, u0.values, 0.0, 2.0 * op.dt_max)

    def test_transport_oracle(self):
        # exact solution is the translated bump before boundary contact
        errs = []
        for n in (33, 65):
            g = RectGrid(1.0, 1.0, n, n)
            X, Y = g.meshgrid()
            sol = lambda cx, cy: np.exp(-120 * ((X - cx) ** 2 + (Y - cy) ** 2))
            u0 = StateField(g, sol(0.35, 0.35)[None])
            cfg = IVPConfig(grid=g, u0=u0, t_end=0.15, pair=scalar_pair())
            traj, _ = run(cfg)
            tf, uf = traj[-1]
            err = StateField(g, uf.values - sol(0.35 + tf, 0.35 + tf)[None]).norm()
            errs.append(err)
            assert err <= 5.0 * g.h
        assert errs[1] < errs[0] / 1.4


class TestRun:
    def test_energy_nonincreasing_every_step_swe(self):
        pair = preset_swe(SWEParams(u0=2.0, v0=3.0, phi0=1.0, g=1.0, f_cor=0.5))
        g = RectGrid(1.0, 1.0, 33, 33)
        u0 = StateField(g, np.stack([bump_field(g), 0.3 * bump_field(g),
                                     -0.2 * bump_field(g)]))
        cfg = IVPConfig(grid=g, u0=u0, t_end=0.5, pair=pair)
        _, report = run(cfg)
        assert report.contraction_expected
        assert report.max_step_increase <= 1e-10 * report.norms[0]
        assert np.all(np.diff(report.norms) <= 1e-10 * report.norms[0])
        assert report.omega_hat <= 0.0
        assert report.verdict

    def test_linearity(self):
        pair = scalar_pair(1.0, 2.0)
        g = RectGrid(1.0, 1.0, 17, 17)
        a = bump_field(g, 0.4, 0.5)[None]
        b = bump_field(g, 0.6, 0.4)[None]

        def final(vals):
            cfg = IVPConfig(grid=g, u0=StateField(g, vals), t_end=0.2,
                            pair=pair)
            traj, _ = run(cfg)
            return traj[-1][1].values

        combo = final(2.0 * a + 3.0 * b)
        parts = 2.0 * final(a) + 3.0 * final(b)
        scale = np.abs(combo).max()
        assert np.abs(combo - parts).max() <= 1e-12 * max(scale, 1.0)

    def test_zero_data_zero_forcing(self):
        g = RectGrid(1.0, 1.0, 17, 17)
        u0 = StateField(g, np.zeros((1, 17, 17)))
        cfg = IVPConfig(grid=g, u0=u0, t_end=0.3, pair=scalar_pair())
        traj, report = run(cfg)
        assert np.all(report.norms == 0.0)
        assert np.all(traj[-1][1].values == 0.0)

    def test_forcing_enters(self):
        g = RectGrid(1.0, 1.0, 17, 17)
        u0 = StateField(g, np.zeros((1, 17, 17)))
        f = bump_field(g)[None]
        cfg = IVPConfig(grid=g, u0=u0, t_end=0.2, pair=scalar_pair(),
                        forcing=lambda t: f)
        _, report = run(cfg)
        assert report.norms[-1] > 0.0
        assert not report.contraction_expected


class TestVariableCoefficients:
    @staticmethod
    def smooth_sampler(x, y):
        return SymmetricPair(a1=np.array([[2.0 + np.sin(x)]]),
                             a2=np.array([[3.0]]))

    def test_constant_sampler_setup(self):
        g = RectGrid(1.0, 1.0, 9, 9)
        setup = variable_coeff_setup(
            lambda x, y: SymmetricPair(a1=np.array([[2.0]]),
                                       a2=np.array([[3.0]])), g)
        assert np.allclose(setup.p, setup.p[0, 0], atol=1e-14)
        assert setup.b1_norm_estimate < 1e-12

    def test_commutator_estimate_stable(self):
        g1 = RectGrid(np.pi, 1.0, 17, 9)
        g2 = RectGrid(np.pi, 1.0, 33, 9)
        def sampler(x, y):
            a1 = np.array([[2.0 + 0.3 * np.sin(x), 0.1 * x],
                           [0.1 * x, 3.0 + 0.2 * np.cos(y)]])
            return SymmetricPair(a1=a1, a2=np.diag([1.0, 2.0]) + 0.05 * a1)
        e1 = variable_coeff_setup(sampler, g1).b1_norm_estimate
        e2 = variable_coeff_setup(sampler, g2).b1_norm_estimate
        assert abs(e1 - e2) <= 0.1 * max(e1, e2)

    def test_branch_merge_detected(self):
        # two advection ratios cross mid-domain
        def sampler(x, y):
            return SymmetricPair(a1=np.eye(2),
                                 a2=np.diag([1.0 + x, 2.0 - x]))
        g = RectGrid(1.0, 1.0, 9, 9)
        with pytest.raises(BlockMatchingFailure):
            variable_coeff_setup(sampler, g)

    def test_quasi_contraction_budget(self):
        g = RectGrid(np.pi, 1.0, 49, 25)
        rng = np.random.default_rng(12)
        u0 = random_scalar_bc_field(g, frozenset({Side.W, Side.S}), rng)
        setup = variable_coeff_setup(self.smooth_sampler, g)
        cfg = IVPConfig(grid=g, u0=u0, t_end=2.0 * np.pi / 3.0,
                        sampler=self.smooth_sampler, var_setup=setup,
                        omega0=0.5)
        _, report = run(cfg)
        assert not report.contraction_expected
        assert report.omega_hat <= 0.5 + 5.0 * g.h
        assert report.verdict
