import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from distlqr.errors import DimensionMismatch, NotScalarSystem
from distlqr.model import certify_assumption, solve_lyapunov
from distlqr.qform import (
    block_gershgorin,
    build_qform,
    certify_pd,
    evaluate,
    in_union,
    scalar_minors,
    simulate_return,
    transformed_H,
)

from conftest import random_stable_spec, scalar_spec


def test_single_step_blocks(ex1):
    spec, cl = ex1
    qf = build_qform(cl, spec.x0, 1)
    g, P = cl.gamma, cl.P
    assert np.allclose(qf.H, g * P, rtol=1e-14)
    assert np.allclose(qf.L, g * P @ cl.A_K @ spec.x0, rtol=1e-14)
    assert qf.c == pytest.approx(spec.x0 @ P @ spec.x0, rel=1e-14)


def test_scalar_two_step_by_hand():
    spec = scalar_spec(0.5, p_target=1.0, gamma=0.5)
    cl = solve_lyapunov(spec)
    qf = build_qform(cl, spec.x0, 2)
    # gamma = 0.5, P = 1, a = 0.5: diag [0.5, 0.25], off-diagonal gamma^2 P a = 0.125
    assert np.allclose(qf.H, [[0.5, 0.125], [0.125, 0.25]], atol=1e-14)
    assert np.allclose(qf.L, [0.25, 0.0625], atol=1e-14)


def test_evaluate_hand_value():
    # N = 1, P = 1, a = 0.5, gamma = 0.5, x0 = 1, z = 1: 0.5 + 2 * 0.25 + 1
    spec = scalar_spec(0.5, p_target=1.0, gamma=0.5)
    cl = solve_lyapunov(spec)
    qf = build_qform(cl, spec.x0, 1)
    assert evaluate(qf, [1.0]) == pytest.approx(2.0, rel=1e-14)


def test_evaluate_zero_gives_c(ex1):
    spec, cl = ex1
    qf = build_qform(cl, spec.x0, 4)
    assert evaluate(qf, np.zeros(qf.dim)) == qf.c


def test_evaluate_rejects_wrong_length(ex1):
    spec, cl = ex1
    qf = build_qform(cl, spec.x0, 2)
    with pytest.raises(DimensionMismatch):
        evaluate(qf, np.zeros(5))


def test_H_symmetric_with_exact_blocks(ex1):
    spec, cl = ex1
    N = 6
    qf = build_qform(cl, spec.x0, N)
    assert np.array_equal(qf.H, qf.H.T)
    n = 3
    i, j = 5, 2
    block = qf.H[(i - 1) * n:i * n, (j - 1) * n:j * n]
    expected = cl.gamma ** i * cl.P @ np.linalg.matrix_power(cl.A_K, i - j)
    assert np.allclose(block, expected, rtol=1e-13, atol=1e-16)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), N=st.integers(1, 8))
def test_quadratic_form_equals_term_by_term_return(seed, N):
    rng = np.random.default_rng(seed)
    spec = random_stable_spec(rng)
    cl = solve_lyapunov(spec)
    qf = build_qform(cl, spec.x0, N)
    w = rng.standard_normal((50, N, cl.n))
    direct = simulate_return(spec, cl, w)
    via_form = evaluate(qf, w.reshape(50, -1))
    scale = np.abs(direct).max() + 1.0
    assert np.max(np.abs(direct - via_form)) <= 1e-10 * scale


def test_simulate_return_matches_explicit_rollout(ex1):
    # independent rollout: x_{k+1} = A_K x_k + w_k, return sum_k gamma^k x_k' Q_K x_k + gamma^N x_N' P x_N
    spec, cl = ex1
    rng = np.random.default_rng(0)
    N = 5
    w = rng.standard_normal((N, 3))
    x = np.array(spec.x0, dtype=float)
    total = 0.0
    for k in range(N):
        total += cl.gamma ** k * x @ cl.Q_K @ x
        x = cl.A_K @ x + w[k]
    total += cl.gamma ** N * x @ cl.P @ x
    assert simulate_return(spec, cl, w) == pytest.approx(total, rel=1e-12)
    assert evaluate(build_qform(cl, spec.x0, N), w.reshape(-1)) == pytest.approx(total, rel=1e-12)


@pytest.mark.parametrize("N", [2, 3, 5, 10, 15, 20, 25])
def test_eigenvalue_sandwich_example1(ex1, N):
    spec, cl = ex1
    cert = certify_assumption(cl, N)
    ec = certify_pd(build_qform(cl, spec.x0, N), cert, cl)
    assert cert.holds and ec.positive_definite
    assert ec.lb_norm_p <= ec.eig_min * (1 + 1e-10)
    assert ec.eig_max <= ec.ub_norm_p * (1 + 1e-10)
    assert ec.lb_pmin > 0


def test_assumption_failure_still_reports_pd(ex3):
    spec, cl = ex3
    cert = certify_assumption(cl, 20)
    ec = certify_pd(build_qform(cl, spec.x0, 20), cert, cl)
    assert not cert.holds
    assert ec.positive_definite
    assert not ec.assumption_holds


def test_scalar_minors_spec_values():
    cl = solve_lyapunov(scalar_spec(0.5, p_target=1.0, gamma=0.5))
    d = scalar_minors(cl, 3)
    assert d[0] == pytest.approx(0.5, rel=1e-14)
    assert d[1] == pytest.approx(0.125 * 0.875, rel=1e-14)


def test_scalar_minors_zero_closed_loop():
    cl = solve_lyapunov(scalar_spec(0.0, p_target=2.0, gamma=0.5))
    d = scalar_minors(cl, 4)
    i = np.arange(1, 5)
    assert np.allclose(d, 2.0 ** i * 0.5 ** (i * (i + 1) / 2), rtol=1e-14)


def test_scalar_minors_match_determinants():
    for a in (-0.9, -0.3, 0.0, 0.4, 0.95):
        for g in (0.3, 0.7, 0.99):
            if g * a * a >= 1:
                continue
            spec = scalar_spec(a, gamma=g, q=1.3)
            cl = solve_lyapunov(spec)
            qf = build_qform(cl, spec.x0, 6)
            dets = [np.linalg.det(qf.H[:i, :i]) for i in range(1, 7)]
            assert np.allclose(scalar_minors(cl, 6), dets, rtol=1e-10, atol=0)
            assert np.all(scalar_minors(cl, 6) > 0)


def test_scalar_minors_require_scalar(ex1):
    with pytest.raises(NotScalarSystem):
        scalar_minors(ex1[1], 3)


def test_transformed_blocks_and_similarity(ex1):
    spec, cl = ex1
    N, n = 5, 3
    qf = build_qform(cl, spec.x0, N)
    Hh = transformed_H(qf, cl)
    # independent assembly of the transformed matrix from A_hat
    ref = np.zeros_like(Hh)
    for i in range(1, N + 1):
        for j in range(1, N + 1):
            lo, hi = min(i, j), max(i, j)
            blk = cl.gamma ** hi * np.linalg.matrix_power(cl.A_hat, hi - lo)
            ref[(i - 1) * n:i * n, (j - 1) * n:j * n] = blk if i >= j else blk.T
    assert np.allclose(Hh, ref, atol=1e-12)
    assert np.allclose(Hh, Hh.T, atol=1e-12)
    Psi = np.kron(np.eye(N), cl.P_half)
    assert np.allclose(np.linalg.eigvalsh(qf.H), np.linalg.eigvalsh(Psi @ Hh @ Psi), rtol=1e-9, atol=1e-14)


@pytest.mark.parametrize("N", [2, 3, 5])
def test_gershgorin_contains_transformed_spectrum(ex1, N):
    spec, cl = ex1
    qf = build_qform(cl, spec.x0, N)
    eig = np.linalg.eigvalsh(transformed_H(qf, cl))
    assert in_union(eig, block_gershgorin(qf, cl)).all()


def test_gershgorin_collapses_when_closed_loop_vanishes():
    cl = solve_lyapunov(scalar_spec(0.0, p_target=1.0, gamma=0.6))
    qf = build_qform(cl, [1.0], 4)
    discs = block_gershgorin(qf, cl)
    assert all(r == 0.0 for _, r in discs)
    assert np.allclose(np.linalg.eigvalsh(qf.H), sorted(0.6 ** np.arange(1, 5)), rtol=1e-14)


def test_gershgorin_random_systems():
    rng = np.random.default_rng(5)
    for _ in range(30):
        spec = random_stable_spec(rng)
        cl = solve_lyapunov(spec)
        qf = build_qform(cl, spec.x0, int(rng.integers(1, 7)))
        eig = np.linalg.eigvalsh(transformed_H(qf, cl))
        assert in_union(eig, block_gershgorin(qf, cl), rtol=1e-9).all()


def test_minimizer_and_minimum(ex1):
    spec, cl = ex1
    qf = build_qform(cl, spec.x0, 3)
    z = qf.minimizer()
    assert evaluate(qf, z) == pytest.approx(qf.minimum(), rel=1e-12, abs=1e-12)
    rng = np.random.default_rng(1)
    assert np.all(evaluate(qf, z + 0.1 * rng.standard_normal((100, qf.dim))) >= qf.minimum())


def test_pmin_lower_bound_always_valid():
    rng = np.random.default_rng(0)
    checked = 0
    for _ in range(600):
        spec = random_stable_spec(rng)
        cl = solve_lyapunov(spec)
        N = int(rng.integers(1, 6))
        cert = certify_assumption(cl, N)
        if not cert.holds:
            continue
        ec = certify_pd(build_qform(cl, spec.x0, N), cert, cl)
        assert 0 < ec.lb_pmin <= ec.eig_min * (1 + 1e-12)
        assert ec.eig_max <= ec.ub_norm_p * (1 + 1e-12)
        checked += 1
    assert checked > 100
