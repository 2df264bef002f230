from fractions import Fraction as F

import pytest

from oracles import pfau_rho
from priorinet import solver as solver_mod
from priorinet.petri import NetError, compile_net, pfau_net
from priorinet.solver import InconsistencyError, solve_halfline
from priorinet.sweep import parse_range, run_sweep, sweep_csv


def test_parse_range():
    assert parse_range("N_A=1/10:3/10:1/10") == ("N_A", [F(1, 10), F(2, 10), F(3, 10)])
    assert parse_range("N_P=1,2/3") == ("N_P", [F(1), F(2, 3)])
    with pytest.raises(ValueError):
        parse_range("N_A")
    with pytest.raises(ValueError):
        parse_range("N_A=1:2:0")


def test_single_cell_equals_solve():
    _, _, cells = run_sweep(pfau_net(), {"N_A": [F(13, 20)], "N_P": [F(3, 5)]})
    sol = solve_halfline(compile_net(pfau_net()).plds)
    (cell,) = cells
    assert (cell.rho, cell.u, cell.t1, cell.policy) == (sol.rho, sol.u, sol.t1, sol.policy_label)


def test_small_grid_matches_closed_forms():
    values = [F(k, 5) for k in range(1, 11)]
    _, _, cells = run_sweep(pfau_net(), {"N_A": values, "N_P": values})
    for c in cells:
        p = dict(c.params)
        (r1, r3, r3p), _, _ = pfau_rho(p["N_A"], p["N_P"])
        assert c.status == "ok"
        assert c.rho[1:] == (r1, r3, r3p)


def test_saturation_boundary_cell():
    N_A = F(1)
    pi_VU = F(3, 10)
    rp = pi_VU * 2 / (1 + pi_VU)
    N_P = rp * min(N_A, 1 + pi_VU)
    _, _, (cell,) = run_sweep(pfau_net(), {"N_A": [N_A], "N_P": [N_P]})
    assert cell.rho[2] == 0


def test_structural_parameter_rejected():
    with pytest.raises((NetError, KeyError)):
        run_sweep(pfau_net(), {"no_such_place": [F(1)]})


def test_failed_cell_is_recorded(monkeypatch):
    real = solver_mod.solve_halfline

    def flaky(sys, **kw):
        if sys.actions[1][1].offset == 2:  # N_A = 2
            raise InconsistencyError("boom", [])
        return real(sys, **kw)

    monkeypatch.setattr(solver_mod, "solve_halfline", flaky)
    rep, _, cells = run_sweep(pfau_net(), {"N_A": [F(1), F(2), F(3)]})
    assert [c.status for c in cells] == ["ok", "error", "ok"]
    text = sweep_csv(rep, cells)
    assert text.splitlines()[0] == "N_A,rho_1,rho_2,rho_3,rho_4,t1,policy,status"
    assert text.splitlines()[2].endswith(",,,error")


def test_parallel_matches_serial():
    grid = {"N_A": [F(1, 2), F(1)], "N_P": [F(1, 5), F(2, 5), F(1)]}
    _, _, a = run_sweep(pfau_net(), grid)
    _, _, b = run_sweep(pfau_net(), grid, workers=2)
    assert a == b


def test_fixed_parameters():
    _, _, (cell,) = run_sweep(pfau_net(), {"N_A": [F(1)]}, fixed={"z0": F(1, 2)})
    assert cell.rho[0] == F(1, 2)
