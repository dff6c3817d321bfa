import numpy as np
import pytest

from ltavg.model import OscillatorParams, PolySystem, build_phi, build_system
from ltavg.poly import Polynomial
from ltavg.sdp import Status
from ltavg.sos import (SosProgram, assemble, assemble_program, certify_sos, global_upper_bound,
                       linear_periodic_form, pointwise_check, solve_bound, symmetry_reduce)

x = Polynomial.variable(0, 1)


def test_univariate_upper_bound():
    U, sol = global_upper_bound(x * x * 2 - x**4)
    assert sol.status is Status.OPTIMAL
    assert abs(U - 1.0) <= 1e-6


def test_certify_sos():
    cert = certify_sos(x**4 * 2 + x**3 * 2 - x * x + 5.0)
    assert cert is not None and cert.is_valid()
    assert cert.residual() < 1e-7 and cert.min_eigenvalue() > 0
    assert certify_sos(x * x - 1.0) is None


def decay_system():
    return PolySystem(nvars=1, field=(-x,), state_vars=(0,))


@pytest.mark.parametrize("reduce", [False, True])
def test_toy_decay_bound_is_zero(reduce):
    prog = SosProgram(decay_system(), x * x, 2)
    if reduce:
        prog = symmetry_reduce(prog)
        assert prog.parity_vars == (0,)
    res = assemble_program(prog).solve()
    assert res.feasible and abs(res.U) < 1e-6
    assert all(c.is_valid() for c in res.certificates)


def test_symmetry_warning_on_non_equivariant():
    sys_ = PolySystem(nvars=1, field=(-x + x * x,), state_vars=(0,))
    with pytest.warns(UserWarning):
        prog = symmetry_reduce(SosProgram(sys_, x * x, 2))
    assert prog.symmetry_warning and prog.parity_vars is None


def test_program_validation():
    with pytest.raises(ValueError):
        SosProgram(decay_system(), x * x, 3)
    with pytest.raises(ValueError):
        SosProgram(decay_system(), x * x, 2, multiplier="bogus")
    with pytest.raises(ValueError):
        assemble(OscillatorParams(), 5)
    with pytest.raises(ValueError):
        assemble(OscillatorParams(gamma=1.0, h=0.2), 4, multiplier="sos")


def test_structured_form_rejects_nonlinear():
    sys_ = PolySystem(nvars=1, field=(-x * x * x,), state_vars=(0,))
    with pytest.raises(ValueError):
        linear_periodic_form(sys_, x * x)


def test_stable_point_certificate():
    p = OscillatorParams(gamma=-1.13, h=0.65)
    res = solve_bound(p, 8)
    assert res.feasible and res.U < 1e-6
    assert all(c.is_valid() for c in res.certificates)
    s = build_system(p)
    assert pointwise_check(res, s, build_phi(s.nvars), n_points=2000) >= -1e-6


def test_unstable_point_has_no_certificate():
    res = solve_bound(OscillatorParams(gamma=2.0, h=0.3), 8)
    assert not res.feasible or res.U > 1e3


def test_undriven_reduced_system():
    res = solve_bound(OscillatorParams(gamma=0.7, h=0.0), 4)
    assert res.feasible and abs(res.U) < 1e-6


def test_larger_degree_never_worse():
    p = OscillatorParams(gamma=1.5, h=0.3)
    u = [solve_bound(p, d).U for d in (4, 6)]
    assert u[1] <= u[0] + 1e-6
