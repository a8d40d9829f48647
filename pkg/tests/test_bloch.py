import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from adiabloch import bloch, liouville, matcore, spectral
from adiabloch.bloch import (
    bracket,
    generator_series,
    kantorovich_report,
    omega_from_wave,
    omega_series,
    schrieffer_wolff_series,
    solve_block,
    solve_blocks,
    solve_equation,
    sum_correction_series,
    wave_from_omega,
    wave_residual,
)
from adiabloch.errors import PreconditionError
from adiabloch.liouville import Superoperator, build_superop, gkls_decompose
from adiabloch.models import lambda_model, qubit_nilpotent_model, unitary_part


@pytest.fixture(scope="module")
def qubit_dec():
    strong = build_superop(qubit_nilpotent_model(10.0), "strong")
    return spectral.decompose(strong.matrix, cluster_tol=1e-6)


@pytest.fixture(scope="module")
def qubit_weak():
    return build_superop(qubit_nilpotent_model(10.0), "weak").matrix


class TestBracket:
    def test_trivial_without_nilpotent(self, lambda_pipe, rng):
        blk = lambda_pipe.decomposition.blocks[0]
        a = rng.normal(size=(25, 25))
        assert np.array_equal(bracket(blk, a, "right"), a)
        assert np.array_equal(bracket(blk, a, "left"), a)

    def test_zero(self, qubit_dec):
        blk = max(qubit_dec.blocks, key=lambda b: b.index)
        assert np.abs(bracket(blk, np.zeros((4, 4)))).max() == 0.0

    def test_two_term_sum_with_nilpotent(self, qubit_dec, rng):
        blk = max(qubit_dec.blocks, key=lambda b: b.index)
        assert blk.index == 2
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        expected_r = a + blk.resolvent @ a @ blk.nilpotent
        expected_l = a + blk.nilpotent @ a @ blk.resolvent
        assert_allclose(bracket(blk, a, "right"), expected_r, atol=1e-14)
        assert_allclose(bracket(blk, a, "left"), expected_l, atol=1e-14)


class TestSolvers:
    def test_zero_weak_part(self, lambda_pipe):
        dec = lambda_pipe.decomposition
        zero = np.zeros((25, 25))
        sol = solve_block(dec, zero, 10.0, 0)
        assert np.abs(sol.omega).max() == 0.0
        assert np.abs(sol.omega_conj).max() == 0.0
        assert np.abs(sol.wave - dec.blocks[0].projection).max() < 1e-14

    def test_residuals_below_tolerance(self, lambda_pipe):
        for sol in lambda_pipe.solutions:
            for key in ("omega_eq", "omega_conj_eq", "wave_eq", "wave_conj_eq"):
                assert sol.residuals[key] < 1e-12, (sol.ell, key)
            for key in ("omega_support", "omega_conj_support"):
                assert sol.residuals[key] < 1e-12

    def test_wave_consistency(self, lambda_pipe):
        # U from the omega solution equals P - S omega / gamma by
        # construction; check it solves the wave equation independently
        dec = lambda_pipe.decomposition
        for sol in lambda_pipe.solutions:
            blk = dec.blocks[sol.ell]
            res = wave_residual(blk, lambda_pipe.weak.matrix, 10.0, sol.wave)
            assert matcore.op_norm(res, "spectral") < 1e-12

    def test_direct_wave_solver_agrees(self, lambda_pipe):
        dec = lambda_pipe.decomposition
        c = lambda_pipe.weak.matrix
        for ell in (0, 1, 7):
            u_direct, _ = bloch.solve_wave(dec, c, 10.0, ell)
            assert (
                matcore.op_norm(u_direct - lambda_pipe.solutions[ell].wave, "spectral")
                < 1e-10
            )
            ut_direct, _ = bloch.solve_wave_conjugate(dec, c, 10.0, ell)
            assert (
                matcore.op_norm(
                    ut_direct - lambda_pipe.solutions[ell].wave_conj, "spectral"
                )
                < 1e-10
            )

    def test_fixed_point_agrees_with_newton(self, lambda_pipe_certified):
        dec = lambda_pipe_certified.decomposition
        c = lambda_pipe_certified.weak.matrix
        gamma = lambda_pipe_certified.model.gamma
        fixed = solve_blocks(dec, c, gamma, method="fixed_point")
        for a, b in zip(lambda_pipe_certified.solutions, fixed):
            assert matcore.op_norm(a.omega - b.omega, "spectral") < 1e-9

    def test_unitary_conjugation_identities(self):
        model = unitary_part(lambda_model(10.0))
        strong = build_superop(model, "strong")
        weak = build_superop(model, "weak")
        dec = spectral.decompose(strong.matrix)
        sols = solve_blocks(dec, weak.matrix, 10.0)
        for sol in sols:
            assert np.abs(sol.omega_conj + sol.omega.conj().T).max() < 1e-10
            assert np.abs(sol.wave_conj - sol.wave.conj().T).max() < 1e-10

    def test_roundtrips(self, lambda_pipe, qubit_dec, qubit_weak):
        dec = lambda_pipe.decomposition
        c = lambda_pipe.weak.matrix
        for sol in lambda_pipe.solutions:
            blk = dec.blocks[sol.ell]
            omega2 = omega_from_wave(blk, sol.wave, c, 10.0)
            assert matcore.op_norm(omega2 - sol.omega, "spectral") < 1e-11
        # with a genuine nilpotent the gamma * N term enters the inversion
        sols = solve_blocks(qubit_dec, qubit_weak, 10.0)
        for sol in sols:
            blk = qubit_dec.blocks[sol.ell]
            omega2 = omega_from_wave(blk, sol.wave, qubit_weak, 10.0)
            assert matcore.op_norm(omega2 - sol.omega, "spectral") < 1e-11
            wave2 = wave_from_omega(blk, omega2, 10.0)
            assert matcore.op_norm(wave2 - sol.wave, "spectral") < 1e-11


class TestKantorovich:
    def test_unitary_threshold_formula(self):
        model = unitary_part(lambda_model(10.0))
        strong = build_superop(model, "strong")
        weak = build_superop(model, "weak")
        dec = spectral.decompose(strong.matrix)
        c_norm = matcore.op_norm(weak.matrix, "spectral")
        gaps = [
            abs(a.eigenvalue - b.eigenvalue)
            for i, a in enumerate(dec.blocks)
            for b in dec.blocks[i + 1 :]
        ]
        eta = min(gaps)
        for ell, blk in enumerate(dec.blocks):
            rep = kantorovich_report(dec, weak.matrix, 40.0, ell)
            assert rep.mu == 1.0  # no nilpotent
            s_norm = matcore.op_norm(blk.resolvent, "spectral")
            # projections are Hermitian here, so ||P|| = 1 and the
            # threshold is 4 ||S|| ||C|| <= 4 ||C|| / eta
            assert_allclose(rep.gamma_min, 4.0 * s_norm * c_norm, rtol=1e-12)
            assert rep.gamma_min <= 4.0 * c_norm / eta + 1e-12

    def test_certified_lambda(self, lambda_pipe_certified):
        for sol in lambda_pipe_certified.solutions:
            rep = sol.report
            assert rep.solvable and rep.quadratic
            assert rep.h < 0.5
            assert_allclose(rep.theta * rep.xi, 1.0, rtol=1e-12)
            assert sol.residuals["wave_deformation"] <= rep.theta + 1e-12
            assert sol.residuals["wave_conj_deformation"] <= rep.theta + 1e-12

    def test_uncertified_at_small_coupling(self, lambda_pipe):
        # at gamma = 10 the sufficient condition fails on every block even
        # though Newton converges; solvable must report False
        for sol in lambda_pipe.solutions:
            assert not sol.report.solvable

    def test_quadratic_contraction(self, lambda_pipe_certified):
        dec = lambda_pipe_certified.decomposition
        c = lambda_pipe_certified.weak.matrix
        gamma = lambda_pipe_certified.model.gamma
        _, info = solve_equation(dec, c, gamma, 0, "wave", tol=1e-14, max_iter=50)
        hist = [r for r in info["history"] if r > 1e-13]
        # each Newton step roughly squares the residual
        for r0, r1 in zip(hist, hist[1:]):
            assert r1 < 10.0 * r0**2 / hist[0]

    def test_division_guard(self, lambda_pipe):
        rep = kantorovich_report(lambda_pipe.decomposition, lambda_pipe.weak.matrix, 1.0, 0)
        assert not rep.solvable
        assert rep.h == math.inf

    def test_solvable_iff_above_threshold(self, lambda_pipe):
        dec = lambda_pipe.decomposition
        c = lambda_pipe.weak.matrix
        gamma_min = kantorovich_report(dec, c, 100.0, 0).gamma_min
        assert kantorovich_report(dec, c, gamma_min * 1.0001, 0).solvable
        assert not kantorovich_report(dec, c, gamma_min * 0.9999, 0).solvable


class TestSeries:
    def test_generator_series_leading_orders(self, lambda_pipe):
        dec = lambda_pipe.decomposition
        c = lambda_pipe.weak.matrix
        for ell in (0, 1, 4):
            blk = dec.blocks[ell]
            series = generator_series(dec, c, ell, 1)
            p = blk.projection
            assert_allclose(series.coeffs[0], p @ c @ p, atol=1e-13)
            expected_d1 = -p @ c @ blk.resolvent @ bracket(blk, c) @ p
            assert_allclose(series.coeffs[1], expected_d1, atol=1e-12)

    @pytest.mark.parametrize("ell", [0, 1, 2])
    def test_recursion_matches_closed_forms_qubit(self, qubit_dec, qubit_weak, ell):
        rec = generator_series(qubit_dec, qubit_weak, ell, 3, method="recursion")
        closed = generator_series(qubit_dec, qubit_weak, ell, 3, method="closed")
        for a, b in zip(rec.coeffs, closed.coeffs):
            assert np.abs(a - b).max() < 1e-11

    def test_sw_series_matches_closed_forms(self, lambda_pipe, qubit_dec, qubit_weak):
        for dec, c in (
            (lambda_pipe.decomposition, lambda_pipe.weak.matrix),
            (qubit_dec, qubit_weak),
        ):
            for ell in range(len(dec.blocks)):
                ser = schrieffer_wolff_series(dec, c, ell, 3, method="series")
                clo = schrieffer_wolff_series(dec, c, ell, 3, method="closed")
                for a, b in zip(ser.coeffs, clo.coeffs):
                    assert np.abs(a - b).max() < 1e-11

    def test_closed_form_order_limit(self, lambda_pipe):
        with pytest.raises(ValueError):
            schrieffer_wolff_series(
                lambda_pipe.decomposition, lambda_pipe.weak.matrix, 0, 4, method="closed"
            )

    def test_zeroth_sw_equals_zeno(self, lambda_pipe):
        dec = lambda_pipe.decomposition
        c = lambda_pipe.weak.matrix
        for ell in range(len(dec.blocks)):
            p = dec.blocks[ell].projection
            k = schrieffer_wolff_series(dec, c, ell, 0, method="closed")
            assert_allclose(k.coeffs[0], p @ c @ p, atol=1e-13)

    def test_unitary_sw_coefficients_skew_hermitian(self):
        model = unitary_part(lambda_model(10.0))
        strong = build_superop(model, "strong")
        weak = build_superop(model, "weak")
        dec = spectral.decompose(strong.matrix)
        for ell in range(len(dec.blocks)):
            ser = schrieffer_wolff_series(dec, weak.matrix, ell, 3, method="closed")
            for coeff in ser.coeffs:
                assert np.abs(coeff + coeff.conj().T).max() < 1e-11

    def test_lambda_first_order_gkls_data(self, lambda_pipe):
        # adiabatic-elimination order: rates +-|g1 g2|/4 with the
        # (|1> -+ i |2>)<4| jump pair
        dec = lambda_pipe.decomposition
        c = lambda_pipe.weak.matrix
        k1 = sum(
            schrieffer_wolff_series(dec, c, ell, 1, method="closed").coeffs[1]
            for ell in range(len(dec.blocks))
        )
        form = gkls_decompose(Superoperator(5, k1), tol=1e-9)
        rates = np.array(form.rates)
        big = rates[np.abs(rates) > 1e-10]
        assert_allclose(np.sort(big), [-0.25, 0.25], atol=1e-12)
        jump = form.jumps[int(np.argmax(rates))]
        expected = np.zeros((5, 5), dtype=complex)
        expected[1, 4] = 1 / math.sqrt(2)
        expected[2, 4] = -1j / math.sqrt(2)
        assert abs(abs(np.vdot(expected, jump)) - 1.0) < 1e-12

    def test_series_converges_to_nonperturbative(self, lambda_pipe_certified):
        pipe = lambda_pipe_certified
        gamma = pipe.model.gamma
        dec = pipe.decomposition
        ell = 1
        target = pipe.solutions[ell].omega
        series = omega_series(dec, pipe.weak.matrix, ell, 8)
        errors = [
            matcore.op_norm(series.truncated_sum(gamma, j) - target, "spectral")
            for j in range(9)
        ]
        rate = pipe.solutions[ell].report.gamma_min / gamma
        for e0, e1 in zip(errors, errors[1:]):
            if e0 < 1e-13:
                break
            assert e1 <= rate * e0 * 1.5

    def test_d_norm_bound(self, lambda_pipe_certified):
        pipe = lambda_pipe_certified
        c_norm = matcore.op_norm(pipe.weak.matrix, "spectral")
        for sol in pipe.solutions:
            blk = pipe.decomposition.blocks[sol.ell]
            p_norm = matcore.op_norm(blk.projection, "spectral")
            d_norm = matcore.op_norm(blk.projection @ sol.omega, "spectral")
            bound = 2 * c_norm * p_norm**2 / (
                1 + math.sqrt(1 - sol.report.gamma_min / pipe.model.gamma)
            )
            assert d_norm <= bound + 1e-12


class TestCorrectionSeries:
    def test_zero_case(self, lambda_pipe):
        dec = lambda_pipe.decomposition
        zero = np.zeros((25, 25))
        result = sum_correction_series(dec, zero, zero, 10.0, 0)
        assert np.abs(result.matrix).max() == 0.0

    def test_leakage_free_with_bloch_solution(self, lambda_pipe):
        dec = lambda_pipe.decomposition
        c = lambda_pipe.weak.matrix
        for sol in lambda_pipe.solutions[:4]:
            blk = dec.blocks[sol.ell]
            d_block = blk.projection @ sol.omega
            result = sum_correction_series(dec, c, d_block, 10.0, sol.ell)
            assert result.leakage_free_defect < 1e-9
            # off-block component reproduces the omega solution
            comp = np.eye(25) - blk.projection
            off = comp @ result.matrix @ blk.projection - comp @ sol.omega @ blk.projection
            assert matcore.op_norm(off, "spectral") < 1e-9

    def test_agrees_with_newton_solution_via_projection(self, rng):
        # independent summation oracle for the omega solver on a random model
        from adiabloch.models import random_model

        m = random_model(3, rng)
        strong = build_superop(m, "strong")
        weak = build_superop(m, "weak")
        dec = spectral.decompose(strong.matrix)
        gamma = 4.0 * max(
            bloch.block_gamma_min(blk, weak.matrix) for blk in dec.blocks
        )
        sols = solve_blocks(dec, weak.matrix, gamma)
        for sol in sols:
            assert sol.residuals["omega_eq"] < 1e-12
            blk = dec.blocks[sol.ell]
            d_block = blk.projection @ sol.omega
            result = sum_correction_series(dec, weak.matrix, d_block, gamma, sol.ell)
            assert result.leakage_free_defect < 1e-8

    def test_precondition_error(self, lambda_pipe):
        dec = lambda_pipe.decomposition
        c = lambda_pipe.weak.matrix
        blk = dec.blocks[0]
        d_block = blk.projection @ c @ blk.projection
        with pytest.raises(PreconditionError):
            sum_correction_series(dec, c, d_block, 0.5, 0)
