import io

import numpy as np
import pytest

from ltavg.sdp import (SdpError, SdpProblem, SolverSettings, Status, random_feasible_problem, read_sparse,
                       register_backend, solve, verify_kkt, write_sparse)


def tiny(b=1.0):
    # min X11 + X22  s.t.  X12 = b  (2x2 PSD); optimum 2|b| at X = [[|b|, b], [b, |b|]]
    return SdpProblem(n_free=0, block_dims=[2], b=[b], block_entries=[[(0, 0, 1, 1.0)]],
                      c_block_entries=[[(0, 0, 1.0), (1, 1, 1.0)]])


def test_tiny_optimum():
    sol = solve(tiny(0.5))
    assert sol.status is Status.OPTIMAL
    assert np.isclose(sol.objective, 1.0, atol=1e-7)
    assert verify_kkt(tiny(0.5), sol).passed


def test_primal_infeasible():
    prob = SdpProblem(n_free=0, block_dims=[1], b=[-1.0], block_entries=[[(0, 0, 0, 1.0)]])
    assert solve(prob).status is Status.PRIMAL_INFEASIBLE


def test_free_variable_lp():
    # min u s.t. u - X = 0, X >= 1 is not expressible directly; use u = X + 1 with X PSD
    prob = SdpProblem(n_free=1, block_dims=[1], b=[1.0], free_entries=[(0, 0, 1.0)],
                      block_entries=[[(0, 0, 0, -1.0)]], c_free=[1.0])
    sol = solve(prob)
    assert sol.status is Status.OPTIMAL and np.isclose(sol.free[0], 1.0, atol=1e-7)


def test_random_battery():
    rng = np.random.default_rng(0)
    for _ in range(15):
        prob = random_feasible_problem(rng, max_dim=8, max_rows=15)
        sol = solve(prob)
        assert sol.status is Status.OPTIMAL
        rep = verify_kkt(prob, sol)
        assert rep.passed, rep.as_dict()
        assert all(np.linalg.eigvalsh(X)[0] > -1e-7 for X in sol.X)


def test_loose_settings_fail_kkt():
    prob = random_feasible_problem(np.random.default_rng(3), max_dim=6, max_rows=10)
    sol = solve(prob, SolverSettings(feas_tol=1e2, gap_tol=1e2, report_feas_tol=1e2, report_gap_tol=1e2))
    assert not verify_kkt(prob, sol).passed


def test_kkt_rejects_perturbed_solution():
    prob = tiny(0.5)
    sol = solve(prob)
    sol.y = sol.y + 0.1
    assert not verify_kkt(prob, sol).passed


def test_sparse_roundtrip():
    prob = random_feasible_problem(np.random.default_rng(5), max_dim=4, max_rows=5)
    text = write_sparse(prob)
    again = read_sparse(io.StringIO(text))
    assert write_sparse(again) == text
    assert np.isclose(solve(again).objective, solve(prob).objective, rtol=1e-8)


def test_custom_backend():
    calls = []

    def fake(problem, settings):
        calls.append(problem.n_rows)
        return solve(problem, settings)

    register_backend("fake-test", fake)
    solve(tiny(), backend="fake-test")
    assert calls == [1]
    with pytest.raises((SdpError, ValueError, KeyError)):
        solve(tiny(), backend="no-such-backend")
