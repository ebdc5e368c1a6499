"""Brute-force vertex enumeration used as the independent LP reference.

Works for LPs whose feasible region is a polytope (finite box bounds or
enough rows to bound it).  Every choice of n constraints taken at
equality is solved; feasible solutions are candidate vertices.  Slow on
purpose: this code must stay obviously correct, it never shares logic
with the simplex implementation it checks.
"""

import itertools

import numpy as np

FEAS = 1e-7


def enumerate_vertices(lp):
    rows = []
    for i in range(lp.num_rows):
        rows.append((lp.A[i], lp.b[i]))
    for j in range(lp.num_vars):
        ej = np.zeros(lp.num_vars)
        ej[j] = 1.0
        if np.isfinite(lp.lo[j]):
            rows.append((ej, lp.lo[j]))
        if np.isfinite(lp.hi[j]):
            rows.append((ej.copy(), lp.hi[j]))
    n = lp.num_vars
    vertices = []
    for combo in itertools.combinations(range(len(rows)), n):
        M = np.array([rows[i][0] for i in combo])
        rhs = np.array([rows[i][1] for i in combo])
        try:
            x = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError:
            continue
        if is_feasible(lp, x):
            vertices.append(x)
    return vertices


def is_feasible(lp, x, tol=FEAS):
    if np.any(x < lp.lo - tol) or np.any(x > lp.hi + tol):
        return False
    res = lp.A @ x - lp.b if lp.num_rows else np.zeros(0)
    for i, s in enumerate(lp.senses):
        if s == "<=" and res[i] > tol:
            return False
        if s == ">=" and res[i] < -tol:
            return False
        if s == "=" and abs(res[i]) > tol:
            return False
    return True


def best_vertex_value(lp):
    """Optimal value over vertices, or None when no vertex is feasible.

    Only meaningful when the feasible region is bounded (then it is a
    polytope: nonempty iff it has a vertex, and linear optima sit on
    vertices).
    """
    vertices = enumerate_vertices(lp)
    if not vertices:
        return None
    values = [float(lp.c @ v) for v in vertices]
    return max(values) if lp.sense == "max" else min(values)
