"""Dense two-phase simplex with certified outcomes.

The solver classifies every well-formed LP as Optimal (primal point,
row duals, reduced costs), Infeasible (nonnegative row multipliers
whose aggregate is unsatisfiable over the variable box), or Unbounded
(an improving recession direction).  Certificates are re-checked
before being returned; a solve that cannot produce a certificate that
passes verification raises NumericalFailureError instead of guessing.

Pivoting uses Bland's rule with a hard pivot cap, trading speed for a
finite-termination guarantee; problems here are small and dense.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FEAS_TOL = 1e-7   # primal feasibility / certificate slack
OPT_TOL = 1e-9    # reduced-cost threshold for entering columns
PIV_TOL = 1e-9    # smallest admissible pivot element
INF = float("inf")


class NumericalFailureError(Exception):
    """The pivot cap was hit or a certificate failed self-verification."""


@dataclass
class LinearProgram:
    sense: str                 # "min" or "max"
    c: np.ndarray
    A: np.ndarray              # shape (m, n); may be empty (0, n)
    senses: list               # per-row "<=", ">=", "="
    b: np.ndarray
    lo: np.ndarray = None
    hi: np.ndarray = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float)
        self.senses = list(self.senses)
        if self.lo is None:
            self.lo = np.zeros(n)
        if self.hi is None:
            self.hi = np.full(n, INF)
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        if len(self.senses) != self.A.shape[0] or self.b.size != self.A.shape[0]:
            raise ValueError("row count mismatch")
        if self.lo.size != n or self.hi.size != n:
            raise ValueError("bound size mismatch")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.A))
                and np.all(np.isfinite(self.b))):
            raise ValueError("objective, matrix and rhs entries must be finite")
        if np.any(self.lo > self.hi):
            raise ValueError("lo > hi")

    @property
    def num_vars(self):
        return self.c.size

    @property
    def num_rows(self):
        return self.A.shape[0]


@dataclass
class LpOutcome:
    status: str                       # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray = None
    duals: np.ndarray = None          # per original row
    reduced_costs: np.ndarray = None
    objective: float = None
    farkas: np.ndarray = None         # >= 0 on inequality rows, see verify
    ray: np.ndarray = None            # improving recession direction


# -- public entry points -----------------------------------------------------------


def solve(lp):
    """Classify the LP with a certificate; never returns an unverified answer."""
    outcome = _solve_impl(lp)
    if not verify_certificate(lp, outcome):
        raise NumericalFailureError(
            f"{outcome.status} certificate failed self-verification")
    return outcome


def verify_certificate(lp, outcome):
    """Re-check the outcome against the LP data alone; returns False on doubt."""
    if outcome.status == "optimal":
        return _verify_optimal(lp, outcome)
    if outcome.status == "infeasible":
        return _verify_farkas(lp, outcome.farkas)
    if outcome.status == "unbounded":
        return _verify_ray(lp, outcome.ray)
    return False


def _verify_optimal(lp, out):
    x = out.x
    if x is None or x.size != lp.num_vars or not np.all(np.isfinite(x)):
        return False
    if np.any(x < lp.lo - FEAS_TOL) or np.any(x > lp.hi + FEAS_TOL):
        return False
    res = lp.A @ x - lp.b if lp.num_rows else np.zeros(0)
    for i, s in enumerate(lp.senses):
        if s == "<=" and res[i] > FEAS_TOL:
            return False
        if s == ">=" and res[i] < -FEAS_TOL:
            return False
        if s == "=" and abs(res[i]) > FEAS_TOL:
            return False
    y = out.duals
    if y is None or y.size != lp.num_rows:
        return False
    sign = 1.0 if lp.sense == "min" else -1.0
    scale = 1.0 + float(np.max(np.abs(lp.c))) if lp.c.size else 1.0
    for i, s in enumerate(lp.senses):
        if s == "<=" and sign * y[i] > FEAS_TOL * scale:
            return False
        if s == ">=" and sign * y[i] < -FEAS_TOL * scale:
            return False
        # complementary slackness: active dual implies (near-)tight row
        if s != "=" and abs(y[i]) > FEAS_TOL * scale and \
                abs(res[i]) > 1e-5 * (1.0 + abs(lp.b[i])):
            return False
    rc = lp.c - (lp.A.T @ y if lp.num_rows else 0.0)
    if out.reduced_costs is not None and np.max(np.abs(rc - out.reduced_costs)) > 1e-6 * scale:
        return False
    dual_obj = float(y @ lp.b) if lp.num_rows else 0.0
    for j in range(lp.num_vars):
        r = sign * rc[j]
        if r > FEAS_TOL * scale:          # variable must sit at its lower bound
            if not np.isfinite(lp.lo[j]) or x[j] > lp.lo[j] + 1e-6:
                return False
            dual_obj += rc[j] * lp.lo[j]
        elif r < -FEAS_TOL * scale:       # at its upper bound
            if not np.isfinite(lp.hi[j]) or x[j] < lp.hi[j] - 1e-6:
                return False
            dual_obj += rc[j] * lp.hi[j]
    obj = float(lp.c @ x)
    if abs(obj - out.objective) > 1e-6 * (1.0 + abs(obj)):
        return False
    return abs(obj - dual_obj) <= 1e-6 * (1.0 + abs(obj))


def _verify_farkas(lp, f):
    if f is None or f.size != lp.num_rows:
        return False
    orient = np.array([1.0 if s in (">=", "=") else -1.0 for s in lp.senses])
    peak = float(np.max(np.abs(f))) if f.size else 0.0
    if peak <= 0.0:
        return False
    for i, s in enumerate(lp.senses):
        if s != "=" and f[i] < -FEAS_TOL * (1.0 + peak):
            return False
    w = (orient * f) @ lp.A
    r = float((orient * f) @ lp.b)
    # Aggregation noise: entries of w that should be exactly zero come out
    # at rounding level; treat them as zero when deciding boundedness.
    wtol = 1e-9 * peak * (1.0 + float(np.max(np.abs(lp.A))) if lp.num_rows else 1.0)
    best = 0.0
    for j in range(lp.num_vars):
        if abs(w[j]) <= wtol:
            continue
        if w[j] > 0:
            if not np.isfinite(lp.hi[j]):
                return False
            best += w[j] * lp.hi[j]
        else:
            if not np.isfinite(lp.lo[j]):
                return False
            best += w[j] * lp.lo[j]
    return r - best > FEAS_TOL * (1.0 + abs(r))


def _verify_ray(lp, d):
    if d is None or d.size != lp.num_vars or not np.all(np.isfinite(d)):
        return False
    if np.max(np.abs(d)) <= FEAS_TOL:
        return False
    res = lp.A @ d if lp.num_rows else np.zeros(0)
    for i, s in enumerate(lp.senses):
        if s == "<=" and res[i] > FEAS_TOL:
            return False
        if s == ">=" and res[i] < -FEAS_TOL:
            return False
        if s == "=" and abs(res[i]) > FEAS_TOL:
            return False
    for j in range(lp.num_vars):
        if np.isfinite(lp.lo[j]) and d[j] < -FEAS_TOL:
            return False
        if np.isfinite(lp.hi[j]) and d[j] > FEAS_TOL:
            return False
    gain = float(lp.c @ d)
    return gain > FEAS_TOL if lp.sense == "max" else gain < -FEAS_TOL


# -- variable transformation --------------------------------------------------------


@dataclass
class _Transform:
    """Affine map x = shift + M u onto nonnegative kernel variables."""

    n_orig: int
    cols: list = field(default_factory=list)     # per original var: list of (u index, sign)
    shift: np.ndarray = None
    bound_rows: list = field(default_factory=list)  # (var j, width) rows appended

    def to_x(self, u):
        x = self.shift.copy()
        for j, parts in enumerate(self.cols):
            for k, sgn in parts:
                x[j] += sgn * u[k]
        return x


def _transform(lp):
    n = lp.num_vars
    t = _Transform(n_orig=n, shift=np.zeros(n))
    ncols = 0
    for j in range(n):
        lo, hi = lp.lo[j], lp.hi[j]
        if np.isfinite(lo):
            t.shift[j] = lo
            t.cols.append([(ncols, 1.0)])
            ncols += 1
            if np.isfinite(hi):
                t.bound_rows.append((j, hi - lo))
        elif np.isfinite(hi):
            t.shift[j] = hi
            t.cols.append([(ncols, -1.0)])
            ncols += 1
        else:
            t.cols.append([(ncols, 1.0), (ncols + 1, -1.0)])
            ncols += 2
    m = lp.num_rows
    mk = m + len(t.bound_rows)
    A = np.zeros((mk, ncols))
    for j, parts in enumerate(t.cols):
        for k, sgn in parts:
            if m:
                A[:m, k] += sgn * lp.A[:, j]
    b = np.concatenate([lp.b - (lp.A @ t.shift if m else np.zeros(0)),
                        np.zeros(len(t.bound_rows))])
    senses = list(lp.senses)
    for i, (j, width) in enumerate(t.bound_rows):
        k = t.cols[j][0][0]
        A[m + i, k] = 1.0
        b[m + i] = width
        senses.append("<=")
    c = np.zeros(ncols)
    cmin = lp.c if lp.sense == "min" else -lp.c
    for j, parts in enumerate(t.cols):
        for k, sgn in parts:
            c[k] = sgn * cmin[j]
    return t, c, A, senses, b


# -- kernel -------------------------------------------------------------------------


def _solve_impl(lp):
    t, c, A, senses, b = _transform(lp)
    status, u, y_kernel, ray_u = _kernel(c, A, senses, b)
    m = lp.num_rows
    if status == "infeasible":
        # violation-orientation multipliers for the original rows
        f = np.empty(m)
        for i in range(m):
            z = y_kernel[i]
            f[i] = -z if lp.senses[i] == "<=" else z
        peak = float(np.max(np.abs(f))) if m else 0.0
        if peak > 0:
            f = f / peak
        return LpOutcome(status="infeasible", farkas=f)
    if status == "unbounded":
        d = np.zeros(lp.num_vars)
        for j, parts in enumerate(t.cols):
            for k, sgn in parts:
                d[j] += sgn * ray_u[k]
        peak = np.max(np.abs(d))
        if peak > 0:
            d = d / peak
        return LpOutcome(status="unbounded", ray=d)
    x = t.to_x(u)
    y = y_kernel[:m].copy()
    if lp.sense == "max":
        y = -y
    rc = lp.c - (lp.A.T @ y if m else 0.0)
    return LpOutcome(status="optimal", x=x, duals=y, reduced_costs=rc,
                     objective=float(lp.c @ x))


def _kernel(c, A, senses, b):
    """min c.u  s.t.  A u (senses) b,  u >= 0.

    Returns (status, u, row duals, ray) where duals are stated for the
    rows as given (not the internally sign-flipped copies).
    """
    m, n = A.shape
    A = A.copy()
    b = b.copy()
    senses = list(senses)
    flip = np.ones(m)
    for i in range(m):
        if b[i] < 0:
            A[i] *= -1.0
            b[i] *= -1.0
            flip[i] = -1.0
            senses[i] = {"<=": ">=", ">=": "<=", "=": "="}[senses[i]]

    slack_of = {}
    art_of = {}
    ncols = n
    for i, s in enumerate(senses):
        if s == "<=":
            slack_of[i] = ncols
            ncols += 1
        elif s == ">=":
            slack_of[i] = ncols
            ncols += 1
    for i, s in enumerate(senses):
        if s in (">=", "="):
            art_of[i] = ncols
            ncols += 1

    T = np.zeros((m, ncols + 1))
    T[:, :n] = A
    T[:, -1] = b
    basis = np.empty(m, dtype=int)
    for i, s in enumerate(senses):
        if s == "<=":
            T[i, slack_of[i]] = 1.0
            basis[i] = slack_of[i]
        else:
            if s == ">=":
                T[i, slack_of[i]] = -1.0
            T[i, art_of[i]] = 1.0
            basis[i] = art_of[i]
    art_cols = set(art_of.values())
    reader = {i: (art_of[i] if i in art_of else slack_of[i]) for i in range(m)}
    cap = 10 * (m + ncols) ** 2

    def pivot(rowi, colj):
        T[rowi] = T[rowi] / T[rowi, colj]
        col = T[:, colj].copy()
        col[rowi] = 0.0
        T[:] -= np.outer(col, T[rowi])
        T[:, colj] = 0.0
        T[rowi, colj] = 1.0
        basis[rowi] = colj

    def run(cost, banned):
        """Bland iterations until optimal or unbounded; returns entering col or -1."""
        pivots = 0
        while True:
            cb = cost[basis]
            red = cost - cb @ T[:, :-1]
            entering = -1
            basic = set(basis.tolist())
            for j in range(ncols):
                if j in banned or j in basic:
                    continue
                if red[j] < -OPT_TOL:
                    entering = j
                    break
            if entering < 0:
                return -1
            col = T[:, entering]
            best_ratio, leave = None, -1
            for i in range(T.shape[0]):
                if col[i] > PIV_TOL:
                    ratio = T[i, -1] / col[i]
                    if best_ratio is None or ratio < best_ratio - 1e-12 or \
                            (abs(ratio - best_ratio) <= 1e-12 and basis[i] < basis[leave]):
                        best_ratio, leave = ratio, i
            if leave < 0:
                return entering  # unbounded along this column
            pivot(leave, entering)
            pivots += 1
            if pivots > cap:
                raise NumericalFailureError("pivot cap exceeded")

    # Phase 1: drive artificials to zero.
    if art_cols:
        cost1 = np.zeros(ncols)
        for j in art_cols:
            cost1[j] = 1.0
        if run(cost1, banned=frozenset()) != -1:
            raise NumericalFailureError("phase-1 unbounded; inconsistent tableau")
        cb1 = cost1[basis]
        phase1_obj = float(cb1 @ T[:, -1])
        if phase1_obj > FEAS_TOL:
            y = np.array([float(cb1 @ T[:, reader[i]]) for i in range(m)])
            return "infeasible", None, y * flip, None
        # drive remaining artificials out of the basis
        dead_rows = []
        for i in range(m):
            if basis[i] in art_cols:
                target = -1
                for j in range(ncols):
                    if j not in art_cols and abs(T[i, j]) > 1e-9:
                        target = j
                        break
                if target >= 0:
                    pivot(i, target)
                else:
                    dead_rows.append(i)
        if dead_rows:
            keep = [i for i in range(m) if i not in dead_rows]
            T = T[keep]
            basis = basis[keep]
            row_origin = keep
        else:
            row_origin = list(range(m))
    else:
        row_origin = list(range(m))

    # Phase 2 on the real objective.
    cost2 = np.zeros(ncols)
    cost2[:n] = c
    entering = run(cost2, banned=art_cols)
    if entering != -1:
        col = T[:, entering]
        ray = np.zeros(ncols)
        ray[entering] = 1.0
        for i in range(T.shape[0]):
            ray[basis[i]] = -col[i]
        return "unbounded", None, None, ray[:n]

    u = np.zeros(ncols)
    for i in range(T.shape[0]):
        u[basis[i]] = T[i, -1]
    cb = cost2[basis]
    y = np.zeros(m)
    for orig in row_origin:
        y[orig] = float(cb @ T[:, reader[orig]])
    return "optimal", u[:n], y * flip, None


# -- plain text fixture format -------------------------------------------------------


def parse_lp_text(text):
    """Read the line-oriented fixture format.

    Lines: `min`/`max`, `obj c1 .. cn`, `row a1 .. an <sense> rhs`, and
    optional `bounds lo hi` lines (one per variable, in order).
    `#` starts a comment.
    """
    sense = None
    c = None
    rows, senses, rhs, bounds = [], [], [], []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] in ("min", "max"):
            sense = parts[0]
        elif parts[0] == "obj":
            c = [float(v) for v in parts[1:]]
        elif parts[0] == "row":
            senses.append(parts[-2])
            rhs.append(float(parts[-1]))
            rows.append([float(v) for v in parts[1:-2]])
        elif parts[0] == "bounds":
            bounds.append((float(parts[1]), float(parts[2])))
        else:
            raise ValueError(f"unrecognised line: {raw!r}")
    if sense is None or c is None:
        raise ValueError("fixture must declare a sense and an objective")
    n = len(c)
    lo = np.array([bounds[j][0] if j < len(bounds) else 0.0 for j in range(n)])
    hi = np.array([bounds[j][1] if j < len(bounds) else INF for j in range(n)])
    return LinearProgram(sense=sense, c=np.array(c),
                         A=np.array(rows, dtype=float).reshape(len(rows), n),
                         senses=senses, b=np.array(rhs), lo=lo, hi=hi)


def format_lp_text(lp):
    lines = [lp.sense, "obj " + " ".join(f"{v:g}" for v in lp.c)]
    for i in range(lp.num_rows):
        coeffs = " ".join(f"{v:g}" for v in lp.A[i])
        lines.append(f"row {coeffs} {lp.senses[i]} {lp.b[i]:g}")
    for j in range(lp.num_vars):
        lines.append(f"bounds {lp.lo[j]:g} {lp.hi[j]:g}")
    return "\n".join(lines) + "\n"
