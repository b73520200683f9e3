import io
import math

import numpy as np
import pytest

from sppa import pwl
from sppa.lpformat import read_lp, write_lp
from sppa.mcmodel import encode_term
from sppa.milp import LpProblem, solve_lp, solve_milp


def roundtrip(problem: LpProblem) -> LpProblem:
    buf = io.StringIO()
    write_lp(problem, buf)
    return read_lp(io.StringIO(buf.getvalue()))


def test_roundtrip_small_milp():
    p = LpProblem("demo")
    x = p.add_var(0, 4, name="x")
    y = p.add_var(-2, 2, name="y")
    b = p.add_var(0, 1, integer=True, name="pick")
    n = p.add_var(0, 7, integer=True, name="count")
    p.add_row({x: 1, y: 2, b: -3}, "<=", 5, name="cap")
    p.add_row({x: 1, n: 1}, ">=", 2)
    p.add_row({y: 1, n: -1}, "=", 0)
    p.set_objective({x: 1.5, y: -1, b: 2, n: 0.25}, constant=3.0)
    q = roundtrip(p)
    assert q.n_vars == p.n_vars
    assert len(q.rows) == len(p.rows)
    assert q.sense == p.sense
    a, bsol = solve_milp(p), solve_milp(q)
    assert a.status == bsol.status == "optimal"
    assert a.objective == pytest.approx(bsol.objective, rel=1e-9)


def test_roundtrip_maximize_and_free():
    p = LpProblem()
    x = p.add_var(-math.inf, math.inf, name="x")
    y = p.add_var(-1, math.inf, name="y")
    p.add_row({x: 1, y: 1}, "<=", 4)
    p.add_row({x: -1, y: 1}, "<=", 2)
    p.set_objective({x: 1, y: 1}, sense="max")
    q = roundtrip(p)
    assert q.lb[0] == -math.inf and q.ub[0] == math.inf
    assert q.lb[1] == -1.0 and q.ub[1] == math.inf
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # big-bound capping fires on both
        a, b = solve_lp(p), solve_lp(q)
    assert a.objective == pytest.approx(b.objective, rel=1e-9)


def test_roundtrip_mc_encoding_model():
    g = pwl.build_grid([(0.0, 2.0), (1.0, 3.0)], [2, 2])
    p = LpProblem("enc")
    z = [p.add_var(0, 2, name="zx"), p.add_var(1, 3, name="zy")]
    enc = encode_term(p, g, z, lambda v: float(v[0] * v[1] + np.sin(v[0])))
    p.add_row({z[0]: 1.0}, "=", 0.7)
    p.add_row({z[1]: 1.0}, "=", 2.2)
    p.set_objective(enc.objective)
    q = roundtrip(p)
    a, b = solve_milp(p), solve_milp(q)
    assert a.objective == pytest.approx(b.objective, rel=1e-7)


def test_name_sanitization():
    p = LpProblem()
    # names that collide with LP-format syntax once sanitized
    p.add_var(0, 1, name="e")
    p.add_var(0, 1, name="2nd var")
    p.add_var(0, 1, name="free")
    p.add_row({0: 1, 1: 1, 2: 1}, "<=", 2)
    p.set_objective({0: -1, 1: -1, 2: -1})
    q = roundtrip(p)
    assert q.n_vars == 3
    assert solve_lp(q).objective == pytest.approx(solve_lp(p).objective)


def test_reader_defaults_and_bounds_forms():
    text = """\\ sample
Minimize
 obj: x + 2 y - 0.5 z + w + 1.5
Subject To
 c1: x + y >= 1
 c2: - x + z = 0.25
Bounds
 -1.5 <= x <= 1.5
 y <= 3
 z = 0.25
 w free
End
"""
    p = read_lp(io.StringIO(text))
    byname = {p.var_names[j]: j for j in range(p.n_vars)}
    assert p.lb[byname["x"]] == -1.5 and p.ub[byname["x"]] == 1.5
    assert p.lb[byname["y"]] == 0.0 and p.ub[byname["y"]] == 3.0  # default lower 0
    assert p.lb[byname["z"]] == p.ub[byname["z"]] == 0.25
    assert p.lb[byname["w"]] == -math.inf
    assert p.obj_constant == 1.5


def test_reader_binaries_generals():
    text = """Maximize
 obj: 3 a + 2 b + c
Subject To
 r: a + b + c <= 2
Bounds
 0 <= c <= 5
Binaries
 a b
Generals
 c
End
"""
    p = read_lp(io.StringIO(text))
    assert p.is_int == [True, True, True]
    assert p.lb[0] == 0.0 and p.ub[0] == 1.0
    res = solve_milp(p)
    assert res.status == "optimal"
    assert res.objective == pytest.approx(5.0)  # a=1, b=1, c=0


def test_reader_rejects_malformed():
    with pytest.raises(ValueError):
        read_lp(io.StringIO("Minimize obj: x Subject To x <= End"))
    with pytest.raises(ValueError):
        read_lp(io.StringIO("Minimize\n obj: x\nSubject To\n r1: x ? 1\nEnd\n"))
