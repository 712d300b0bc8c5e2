import math

import numpy as np
import pytest

from qipm import qlsa_sim
from qipm.diagnostics import condition_number
from qipm.solvers import (
    Backend, BackendId, FidelityError, SingularSystemError, solve_cg, solve_exact, solve_qlsa_sim,
)


def well_conditioned(rng, size):
    return rng.normal(size=(size, size)) + size * np.eye(size)


def test_exact_identity_and_diagonal():
    f = np.array([3.0, -1.0, 2.0])
    d, meta = solve_exact(np.eye(3), f)
    np.testing.assert_array_equal(d, f)
    d, _ = solve_exact(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
    np.testing.assert_allclose(d, [1, 1])
    assert meta.backend_id is BackendId.EXACT


def test_exact_residual_on_random_system():
    rng = np.random.default_rng(0)
    M, f = well_conditioned(rng, 20), rng.normal(size=20)
    d, meta = solve_exact(M, f)
    assert np.linalg.norm(M @ d - f) < 1e-10 * np.linalg.norm(f)


def test_exact_singular_raises():
    with pytest.raises(SingularSystemError):
        solve_exact(np.zeros((3, 3)), np.ones(3))


def test_exact_shape_checks():
    with pytest.raises(ValueError):
        solve_exact(np.ones((2, 3)), np.ones(2))
    with pytest.raises(ValueError):
        solve_exact(np.eye(2), np.ones(3))


def test_cg_identity_one_iteration():
    f = np.array([1.0, 2.0, 3.0])
    d, meta = solve_cg(np.eye(3), f)
    np.testing.assert_allclose(d, f)
    assert meta.iterations == 1 and meta.converged


def test_cg_matches_exact_on_spd():
    rng = np.random.default_rng(1)
    B = rng.normal(size=(10, 10))
    M, f = B @ B.T + 10 * np.eye(10), rng.normal(size=10)
    d_cg, meta = solve_cg(M, f, tol=1e-8)
    d_ex, _ = solve_exact(M, f)
    assert meta.converged
    np.testing.assert_allclose(d_cg, d_ex, rtol=1e-6)


def test_cg_starved_reports_non_convergence():
    M = np.diag(np.logspace(0, 8, 12))
    d, meta = solve_cg(M, np.ones(12), tol=1e-12, max_iters=1)
    assert not meta.converged and meta.iterations == 1


def test_cg_zero_rhs():
    d, meta = solve_cg(np.eye(2), np.zeros(2))
    assert meta.converged and not d.any()


@pytest.mark.parametrize("size", [5, 17, 60])
def test_exact_and_cg_agree(size):
    rng = np.random.default_rng(size)
    M, f = well_conditioned(rng, size), rng.normal(size=size)
    tol = 1e-10
    d_cg, meta = solve_cg(M, f, tol=tol)
    d_ex, _ = solve_exact(M, f)
    assert meta.converged
    assert np.linalg.norm(d_cg - d_ex) <= condition_number(M) * tol * np.linalg.norm(d_ex) * 10


def test_meta_residual_is_recomputed_for_every_backend():
    rng = np.random.default_rng(2)
    M, f = well_conditioned(rng, 12), rng.normal(size=12)
    for d, meta in (solve_exact(M, f), solve_cg(M, f), solve_qlsa_sim(M, f, 0.1, 3)):
        recomputed = np.linalg.norm(M @ d - f)
        assert meta.residual_norm == pytest.approx(recomputed, rel=1e-12, abs=1e-300)
        assert meta.residual_norm >= 0 and meta.retries >= 0


def test_qlsa_error_shrinks_with_epsilon():
    rng = np.random.default_rng(3)
    M, f = well_conditioned(rng, 10), rng.normal(size=10)
    exact, _ = solve_exact(M, f)
    errors = []
    for eps in (0.3, 0.1, 0.03):
        errs = [np.linalg.norm(solve_qlsa_sim(M, f, eps, seed)[0] - exact) for seed in range(10)]
        errors.append(np.mean(errs))
    assert errors[0] > errors[1] > errors[2]


def test_qlsa_tiny_epsilon_approaches_exact():
    rng = np.random.default_rng(4)
    M, f = well_conditioned(rng, 6), rng.normal(size=6)
    exact, _ = solve_exact(M, f)
    d, _ = solve_qlsa_sim(M, f, 1e-7, 0)
    assert np.linalg.norm(d - exact) <= 1e-6 * np.linalg.norm(exact)


@pytest.mark.parametrize("seed", range(6))
def test_qlsa_column_rhs_gives_positive_unit_vector(seed):
    rng = np.random.default_rng(10 + seed)
    M = well_conditioned(rng, 8)
    j = seed % 8
    d, _ = solve_qlsa_sim(M, M[:, j].copy(), 0.1, seed)
    assert np.argmax(np.abs(d)) == j
    assert d[j] > 0
    assert np.linalg.norm(d - np.eye(8)[j]) < 0.2


def test_qlsa_failure_rate_on_random_systems():
    rng = np.random.default_rng(5)
    trials, eps = 200, 0.1
    failures = 0
    for trial in range(trials):
        M, f = well_conditioned(rng, 16), rng.normal(size=16)
        exact, _ = solve_exact(M, f)
        d, _ = solve_qlsa_sim(M, f, eps, trial)
        failures += np.linalg.norm(d - exact) > math.sqrt(7) * eps * np.linalg.norm(exact)
    p = 16**-0.83
    assert failures / trials <= p + 3 * math.sqrt(p * (1 - p) / trials)


def test_qlsa_bit_reproducible():
    rng = np.random.default_rng(6)
    M, f = well_conditioned(rng, 9), rng.normal(size=9)
    a, meta_a = solve_qlsa_sim(M, f, 0.05, 77)
    b, meta_b = solve_qlsa_sim(M, f, 0.05, 77)
    np.testing.assert_array_equal(a, b)
    assert meta_a.cost_units == meta_b.cost_units


def test_qlsa_sign_fix_over_many_seeds():
    rng = np.random.default_rng(8)
    M, f = well_conditioned(rng, 7), rng.normal(size=7)
    for seed in range(40):
        d, _ = solve_qlsa_sim(M, f, 0.2, seed)
        assert (M @ d) @ f > 0


def test_qlsa_retries_then_gives_up(monkeypatch):
    rng = np.random.default_rng(9)
    M, f = well_conditioned(rng, 5), rng.normal(size=5)
    calls = {"n": 0}

    def flaky(candidate, exact, eps):
        calls["n"] += 1
        return calls["n"] > 2

    monkeypatch.setattr(qlsa_sim, "fidelity_check", flaky)
    _, meta = solve_qlsa_sim(M, f, 0.1, 0)
    assert meta.retries == 2

    monkeypatch.setattr(qlsa_sim, "fidelity_check", lambda *a: False)
    with pytest.raises(FidelityError):
        solve_qlsa_sim(M, f, 0.1, 0, retry_c=4)


def test_qlsa_meta_fields():
    rng = np.random.default_rng(11)
    M, f = well_conditioned(rng, 6), rng.normal(size=6)
    _, meta = solve_qlsa_sim(M, f, 0.1, 1)
    assert meta.backend_id is BackendId.QLSA
    assert meta.kappa_estimate == pytest.approx(condition_number(M))
    assert meta.cost_units > 0 and math.isfinite(meta.cost_units)
    assert meta.reference is not None


def test_qlsa_zero_rhs():
    d, meta = solve_qlsa_sim(np.eye(3), np.zeros(3), 0.1, 0)
    assert not d.any() and meta.residual_norm == 0


def test_backend_steps_use_distinct_streams():
    rng = np.random.default_rng(12)
    M, f = well_conditioned(rng, 6), rng.normal(size=6)
    backend = Backend(kind="qlsa", epsilon=0.1, seed=3)
    a, _ = backend.solve(M, f, step=0)
    b, _ = backend.solve(M, f, step=1)
    c, _ = backend.solve(M, f, step=0)
    assert not np.array_equal(a, b)
    np.testing.assert_array_equal(a, c)


def test_backend_cg_falls_back_to_lu():
    M = np.diag(np.logspace(0, 8, 12))
    f = np.ones(12)
    backend = Backend(kind="cg", cg_max_iters=1, cg_tol=1e-14)
    d, meta = backend.solve(M, f)
    assert not meta.converged
    assert np.linalg.norm(M @ d - f) < 1e-10
