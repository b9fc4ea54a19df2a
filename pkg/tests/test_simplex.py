import random

import numpy as np
import pytest

from pcnf import simplex
from pcnf.errors import SolverError


def test_simple_equality_lp():
    # min x0 + 2 x1  s.t. x0 + x1 = 1
    res = simplex.solve([1.0, 2.0], [[1.0, 1.0]], [1.0])
    assert res.status == "optimal"
    assert res.objective == pytest.approx(1.0)
    assert res.x.tolist() == pytest.approx([1.0, 0.0])


def test_normalization_only_lp():
    res = simplex.solve([0.0, 0.5], [[1.0, 1.0]], [1.0])
    assert res.status == "optimal"
    assert res.objective == pytest.approx(0.0)
    assert res.x.tolist() == pytest.approx([1.0, 0.0])


def test_infeasible_lp():
    # x0 = 1 and x0 = 2 cannot both hold
    res = simplex.solve([1.0], [[1.0], [1.0]], [1.0, 2.0])
    assert res.status == "infeasible"


def test_negative_rhs_handled():
    # x0 - x1 = -3, x0 + x1 = 5 -> x = (1, 4)
    res = simplex.solve([1.0, 1.0], [[1.0, -1.0], [1.0, 1.0]], [-3.0, 5.0])
    assert res.status == "optimal"
    assert res.x.tolist() == pytest.approx([1.0, 4.0])


def test_unbounded_lp():
    # min -x0 with x0 free upward: x0 - x1 = 0
    res = simplex.solve([-1.0, 0.0], [[1.0, -1.0]], [0.0])
    assert res.status == "unbounded"


def test_redundant_rows_are_harmless():
    A = [[1.0, 1.0], [2.0, 2.0], [1.0, 1.0]]
    res = simplex.solve([3.0, 1.0], A, [1.0, 2.0, 1.0])
    assert res.status == "optimal"
    assert res.objective == pytest.approx(1.0)


def test_determinism():
    rng = random.Random(5)
    m, n = 6, 12
    A = [[rng.uniform(-1, 1) for _ in range(n)] for _ in range(m)]
    x0 = [abs(rng.uniform(0, 1)) for _ in range(n)]
    b = [sum(A[i][j] * x0[j] for j in range(n)) for i in range(m)]
    c = [rng.uniform(-1, 1) for _ in range(n)]
    A.append([1.0] * n)
    b.append(sum(x0))
    r1 = simplex.solve(c, A, b)
    r2 = simplex.solve(c, A, b)
    assert r1.status == r2.status == "optimal"
    assert r1.objective == r2.objective
    assert r1.iterations == r2.iterations
    assert np.array_equal(r1.x, r2.x)


def test_iteration_cap_raises():
    rng = random.Random(6)
    n = 20
    A = [[rng.uniform(0, 1) for _ in range(n)] for _ in range(8)]
    x0 = [rng.uniform(0, 1) for _ in range(n)]
    b = [sum(A[i][j] * x0[j] for j in range(n)) for i in range(8)]
    c = [rng.uniform(-1, 1) for _ in range(n)]
    with pytest.raises(SolverError):
        simplex.solve(c, A, b, max_iter=1)


def _random_bounded_lp(rng, n_max=6, m_max=3):
    n = rng.randint(2, n_max)
    m = rng.randint(1, m_max)
    A = [[rng.choice([0.0, 1.0, -1.0, 2.0]) for _ in range(n)] for _ in range(m)]
    x0 = [rng.uniform(0, 1) for _ in range(n)]
    b = [sum(A[i][j] * x0[j] for j in range(n)) for i in range(m)]
    # a simplex-like row keeps the feasible set bounded
    A.append([1.0] * n)
    b.append(sum(x0))
    c = [rng.uniform(-2, 2) for _ in range(n)]
    return c, A, b


def test_matches_vertex_enumeration_on_random_lps():
    from pcnf.lpbp import BeliefLP, Column, Row
    from pcnf.oracle import lp_vertex_enumerate

    rng = random.Random(7)
    for _ in range(60):
        c, A, b = _random_bounded_lp(rng)
        res = simplex.solve(c, A, b)
        cols = [Column(f"x{j}", c[j], "parsed", f"x{j}", ()) for j in range(len(c))]
        rows = [
            Row(f"r{i}", tuple((j, A[i][j]) for j in range(len(c)) if A[i][j]), b[i])
            for i in range(len(A))
        ]
        lp = BeliefLP(columns=cols, rows=rows)
        ref = lp_vertex_enumerate(lp)
        assert res.status == "optimal" and ref.status == "optimal"
        assert res.objective == pytest.approx(ref.value, abs=1e-9)
