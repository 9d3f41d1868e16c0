"""Tests for the closed-form first integrals and their root finders."""

from __future__ import annotations

import math

import numpy as np
import pytest

from gasflow.errors import BranchViolation, ConfigurationError, NoBracket
from gasflow.physics.integrals import (
    IdealCaseParams,
    IntegralCase,
    friction_residual,
    gravity_residual,
    residual_case,
    solve_flow,
    solve_outlet,
)
from gasflow.physics.pipe import integrate_pressure
from tests.conftest import TIGHT_INTEGRATOR


def params_for(setup) -> IdealCaseParams:
    g, m = setup.geom, setup.model
    return IdealCaseParams.from_pipe(
        g.length, g.R1, g.R2, g.beta, g.sin_theta, m.eos, m.include_inertia, m.include_gravity,
    )


class TestCaseSelection:
    def test_switches(self) -> None:
        base = dict(L=1.0, beta=10.0, R1_hat=0.01, R2_hat=1.0)
        cases = [
            (IdealCaseParams(**base, include_inertia=False), IntegralCase.FRICTION),
            (IdealCaseParams(**base), IntegralCase.INERTIA),
            (IdealCaseParams(**base, sin_theta=0.1), IntegralCase.FULL),
            (IdealCaseParams(**base, sin_theta=0.1, include_inertia=False), IntegralCase.GRAVITY),
        ]
        for params, expected in cases:
            assert params.case_for(1.0) is expected

    def test_zero_flow_with_gravity_uses_gravity_form(self) -> None:
        params = IdealCaseParams(1.0, 10.0, 0.01, 1.0, sin_theta=0.1)
        assert params.case_for(0.0) is IntegralCase.GRAVITY

    def test_tiny_gamma_uses_gravity_free_form(self) -> None:
        params = IdealCaseParams(1.0, 10.0, 0.01, 1.0, sin_theta=1e-10)
        assert params.case_for(1.0) is IntegralCase.INERTIA

    def test_gravity_switch_off(self) -> None:
        params = IdealCaseParams(1.0, 10.0, 0.01, 1.0, sin_theta=0.3, include_gravity=False)
        assert params.gamma == 0.0
        assert params.case_for(1.0) is IntegralCase.INERTIA

    def test_nonideal_gas_is_refused(self, pipe_setup, cnga_eos) -> None:
        with pytest.raises(ConfigurationError, match="ideal gas"):
            params_for(pipe_setup(cnga_eos))


class TestResiduals:
    def test_friction_root_by_hand(self) -> None:
        # p0 = 1 and 2 L R1h beta f|f| = 0.75 leave pL^2 = 0.25
        params = IdealCaseParams(1.0, 1.0, 0.375, 1.0, include_inertia=False, include_gravity=False)
        assert friction_residual(params, 1.0, 0.5, 1.0) == pytest.approx(0.0, abs=1e-15)
        assert solve_outlet(params, 1.0, 1.0) == pytest.approx(0.5, rel=1e-12)

    def test_gravity_reduces_to_friction(self) -> None:
        params = IdealCaseParams(1.0, 10.0, 0.01, 1.0, sin_theta=5e-11, include_inertia=False)
        assert params.gamma == pytest.approx(1e-10)
        assert gravity_residual(params, 1.0, 0.8, 1.0) == pytest.approx(
            friction_residual(params, 1.0, 0.8, 1.0), abs=1e-8,
        )

    def test_nonpositive_pressure_is_off_branch(self) -> None:
        params = IdealCaseParams(1.0, 10.0, 0.01, 1.0)
        with pytest.raises(BranchViolation):
            residual_case(params, 1.0, -0.5, 1.0)

    def test_full_form_off_branch(self) -> None:
        # delta = beta R1h f|f| / (R2h sin) = 1 sits between u0 = 1.44 and uL = 0.64
        params = IdealCaseParams(1.0, 10.0, 0.01, 1.0, sin_theta=0.1)
        with pytest.raises(BranchViolation):
            residual_case(params, 1.2, 0.8, 1.0)


class TestLimits:
    """Inertia-free and gravity-free limits, compared through their outlet roots."""

    @staticmethod
    def _converges(diffs: list[float]) -> None:
        assert all(b < a for a, b in zip(diffs, diffs[1:]))
        assert diffs[-1] < 1e-6

    @pytest.mark.parametrize("sin_theta", [0.3, -0.3])
    def test_full_tends_to_gravity(self, sin_theta: float) -> None:
        diffs = []
        for r1h in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7):
            # friction term and delta stay fixed while R1h f^2 shrinks
            common = dict(L=1.0, beta=0.1 / r1h, R1_hat=r1h, R2_hat=1.0, sin_theta=sin_theta)
            full = solve_outlet(IdealCaseParams(**common), 1.0, 1.0)
            grav = solve_outlet(IdealCaseParams(**common, include_inertia=False), 1.0, 1.0)
            diffs.append(abs(full - grav))
        self._converges(diffs)

    def test_inertia_tends_to_friction(self) -> None:
        diffs = []
        for r1h in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7):
            common = dict(L=1.0, beta=0.1 / r1h, R1_hat=r1h, R2_hat=1.0)
            inertia = solve_outlet(IdealCaseParams(**common), 1.0, 1.0)
            friction = solve_outlet(IdealCaseParams(**common, include_inertia=False), 1.0, 1.0)
            diffs.append(abs(inertia - friction))
        self._converges(diffs)

    def test_gravity_tends_to_friction(self) -> None:
        flat = IdealCaseParams(1.0, 10.0, 0.01, 1.0, include_inertia=False, include_gravity=False)
        friction = solve_outlet(flat, 1.0, 1.0)
        diffs = []
        for s in (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7):
            params = IdealCaseParams(1.0, 10.0, 0.01, 1.0, sin_theta=s, include_inertia=False)
            assert params.case_for(1.0) is IntegralCase.GRAVITY
            diffs.append(abs(solve_outlet(params, 1.0, 1.0) - friction))
        self._converges(diffs)


class TestRootFinding:
    @pytest.mark.parametrize("sin_theta", [0.0, 0.2, -0.2])
    @pytest.mark.parametrize("inertia", [True, False])
    @pytest.mark.parametrize("f", [1.0, -1.0, 0.3])
    def test_flow_inverts_outlet(self, sin_theta: float, inertia: bool, f: float) -> None:
        params = IdealCaseParams(1.0, 10.0, 0.01, 1.0, sin_theta=sin_theta, include_inertia=inertia)
        pL = solve_outlet(params, 1.0, f)
        assert solve_flow(params, 1.0, pL) == pytest.approx(f, rel=1e-6)

    def test_equal_pressures_mean_no_flow(self) -> None:
        params = IdealCaseParams(1.0, 10.0, 0.01, 1.0)
        assert solve_flow(params, 0.9, 0.9) == pytest.approx(0.0, abs=1e-10)

    def test_drained_pipe_has_no_outlet(self) -> None:
        params = IdealCaseParams(1.0, 1.0, 1.0, 1.0, include_inertia=False, include_gravity=False)
        with pytest.raises(NoBracket):
            solve_outlet(params, 1.0, 1.0)

    def test_no_flow_bracket(self) -> None:
        params = IdealCaseParams(1.0, 1.0, 0.375, 1.0, include_inertia=False, include_gravity=False)
        with pytest.raises(NoBracket):
            solve_flow(params, 1.0, 0.5, f_max=0.5)


class TestYamal:
    def test_horizontal_outlet(self, pipe_setup, ideal_eos) -> None:
        s = pipe_setup(ideal_eos, inertia=False, gravity=False)
        pL = solve_outlet(params_for(s), s.p_in, s.f) * s.scales.p0
        assert pL == pytest.approx(7.28e6, rel=5e-3)

    @pytest.mark.parametrize("angle, expected", [(4.0, 13.8e6), (-4.0, 3.27e6)])
    def test_inclined_outlet(self, pipe_setup, ideal_eos, angle: float, expected: float) -> None:
        s = pipe_setup(ideal_eos, angle, inertia=False)
        pL = solve_outlet(params_for(s), s.p_in, s.f) * s.scales.p0
        assert pL == pytest.approx(expected, rel=1e-2)

    def test_inertia_is_negligible(self, pipe_setup, ideal_eos) -> None:
        with_inertia = pipe_setup(ideal_eos)
        without = pipe_setup(ideal_eos, inertia=False)
        a = solve_outlet(params_for(with_inertia), 1.0, with_inertia.f)
        b = solve_outlet(params_for(without), 1.0, without.f)
        assert a < b
        assert (b - a) / b < 1e-3


class TestAgainstIntegration:
    @pytest.mark.parametrize("count", [8, pytest.param(50, marks=pytest.mark.slow)])
    @pytest.mark.parametrize("inertia", [True, False])
    @pytest.mark.parametrize("gravity", [True, False])
    def test_integrated_outlet_zeroes_closed_form(
        self, pipe_setup, ideal_eos, inertia: bool, gravity: bool, count: int,
    ) -> None:
        rng = np.random.default_rng(21)
        for _ in range(count):
            angle = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 4.0)
            s = pipe_setup(ideal_eos, angle, inertia=inertia, gravity=gravity)
            p0 = rng.uniform(1.0, 1.2)
            f = rng.uniform(0.3, 1.0) * s.f
            pL = integrate_pressure(p0, f, s.geom, s.model, TIGHT_INTEGRATOR).outlet
            assert abs(residual_case(params_for(s), p0, pL, f)) < 1e-6

    def test_outlet_root_matches_integration(self, pipe_setup, ideal_eos) -> None:
        s = pipe_setup(ideal_eos, inertia=False, gravity=False)
        rng = np.random.default_rng(4)
        for _ in range(10):
            p0, f = rng.uniform(0.8, 1.2), rng.uniform(0.2, 1.0) * s.f
            root = solve_outlet(params_for(s), p0, f)
            pL = integrate_pressure(p0, f, s.geom, s.model, TIGHT_INTEGRATOR).outlet
            assert root == pytest.approx(pL, rel=1e-6)
            assert math.isfinite(root)
