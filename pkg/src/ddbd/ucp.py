"""Two-stage stochastic unit commitment on decision diagrams.

First stage: per-period on/off schedules per generator, subject to
minimum up/down times, with fixed and start-up costs.  Second stage:
per-scenario economic dispatch under capacity, ramping, demand and
spinning-reserve constraints.  The master is compiled into a diagram
whose node states are (periods since last start-up, periods since last
shut-down), and the dispatch subproblems are solved in dual form so
that unbounded rays yield feasibility cuts and optimal points yield
expected-cost cuts, both expressed over the master variables only.

The on/off variables are laid out unit-major: all periods of the first
generator, then the second, and so on, followed by the value layer.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .diagram import (
    CutRow,
    DecisionDiagram,
    EmptyDiagramError,
    InfeasibleDiagramError,
    Interval,
    prune_dead_nodes,
)
from .engine import MasterOracle, SubproblemOracle, SubproblemResult, replay_cuts
from .simplex import LinearProgram, solve

INF = float("inf")
COEF_EPS = 1e-12


class InstanceError(Exception):
    """Malformed instance data."""


class InfeasibleInstanceError(Exception):
    """Some scenario cannot be dispatched even with every unit relaxed on."""


@dataclass(frozen=True)
class Generator:
    c_fixed: float            # $ per committed period
    c_prod: float             # $ per MW produced
    p_min: float
    p_max: float
    min_up: int
    min_down: int
    ramp_up: float
    ramp_down: float
    startup_ramp: float
    shutdown_ramp: float
    startup_costs: tuple      # cost after 1, 2, ... down periods (saturating)
    startup_cost_inf: float   # cost when the unit has never been up

    def validate(self):
        if not (0 <= self.p_min <= self.p_max):
            raise InstanceError("need 0 <= min output <= max output")
        if self.min_up < 1 or self.min_down < 1:
            raise InstanceError("minimum up/down times must be >= 1")
        if self.startup_ramp > self.ramp_up + 1e-9:
            raise InstanceError("start-up ramp above ramp-up rate is unsupported")
        if self.shutdown_ramp > self.ramp_down + 1e-9:
            raise InstanceError("shut-down ramp above ramp-down rate is unsupported")
        if not self.startup_costs:
            raise InstanceError("start-up cost table must be nonempty")
        ks = list(self.startup_costs)
        if any(b < a - 1e-9 for a, b in zip(ks, ks[1:])):
            raise InstanceError("start-up costs must be non-decreasing")
        if self.startup_cost_inf < ks[-1] - 1e-9:
            raise InstanceError("cold-start cost must top the table")

    def startup_cost(self, down_age):
        """Start-up cost after `down_age` consecutive down periods."""
        if down_age == INF:
            return self.startup_cost_inf
        k = int(down_age)
        if k < 1:
            raise ValueError("down age below one period")
        return self.startup_costs[min(k, len(self.startup_costs)) - 1]


@dataclass(frozen=True)
class Scenario:
    prob: float
    demand: tuple
    reserve: tuple


@dataclass
class UcpInstance:
    generators: list
    horizon: int
    scenarios: list

    def validate(self):
        if self.horizon < 1:
            raise InstanceError("horizon must be >= 1")
        if not self.generators or not self.scenarios:
            raise InstanceError("need at least one generator and one scenario")
        for gen in self.generators:
            gen.validate()
        total = 0.0
        for sc in self.scenarios:
            if len(sc.demand) != self.horizon or len(sc.reserve) != self.horizon:
                raise InstanceError("scenario series length must match the horizon")
            if any(d < 0 for d in sc.demand) or any(r < 0 for r in sc.reserve):
                raise InstanceError("demand and reserve must be nonnegative")
            total += sc.prob
        if abs(total - 1.0) > 1e-9:
            raise InstanceError("scenario probabilities must sum to one")
        return self

    @property
    def num_units(self):
        return len(self.generators)

    @property
    def num_vars(self):
        return self.num_units * self.horizon

    @property
    def total_capacity(self):
        return sum(g.p_max for g in self.generators)

    def var_index(self, unit, period):
        return unit * self.horizon + period

    # -- JSON schema: {generators:[{c_f,c_g,m,M,L,l,RU,RD,SU,SD,K,K_inf}],
    #                  T, scenarios:[{prob,D,R}]} --------------------------------

    def to_json(self):
        doc = {
            "version": 1,
            "T": self.horizon,
            "generators": [
                {
                    "c_f": g.c_fixed, "c_g": g.c_prod, "m": g.p_min, "M": g.p_max,
                    "L": g.min_up, "l": g.min_down,
                    "RU": g.ramp_up, "RD": g.ramp_down,
                    "SU": g.startup_ramp, "SD": g.shutdown_ramp,
                    "K": list(g.startup_costs), "K_inf": g.startup_cost_inf,
                }
                for g in self.generators
            ],
            "scenarios": [
                {"prob": s.prob, "D": list(s.demand), "R": list(s.reserve)}
                for s in self.scenarios
            ],
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    @staticmethod
    def from_json(text):
        doc = json.loads(text)
        if doc.get("version") != 1:
            raise InstanceError(f"unsupported instance version {doc.get('version')}")
        try:
            gens = [
                Generator(
                    c_fixed=float(g["c_f"]), c_prod=float(g["c_g"]),
                    p_min=float(g["m"]), p_max=float(g["M"]),
                    min_up=int(g["L"]), min_down=int(g["l"]),
                    ramp_up=float(g["RU"]), ramp_down=float(g["RD"]),
                    startup_ramp=float(g["SU"]), shutdown_ramp=float(g["SD"]),
                    startup_costs=tuple(float(v) for v in g["K"]),
                    startup_cost_inf=float(g["K_inf"]),
                )
                for g in doc["generators"]
            ]
            scens = [
                Scenario(prob=float(s["prob"]),
                         demand=tuple(float(v) for v in s["D"]),
                         reserve=tuple(float(v) for v in s["R"]))
                for s in doc["scenarios"]
            ]
            inst = UcpInstance(generators=gens, horizon=int(doc["T"]),
                               scenarios=scens)
        except (KeyError, TypeError, ValueError) as exc:
            raise InstanceError(f"bad instance document: {exc}") from exc
        return inst.validate()


@dataclass(frozen=True)
class GammaBounds:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("value bounds must be finite")
        if self.lo > self.hi:
            raise ValueError("lo > hi")


# -- master diagram compilation -------------------------------------------------------


def _transitions(gen, state, relaxed, min_up, min_down):
    """Outgoing (label, weight, next state) triples for one node state.

    States are (up_age, down_age) plus, for relaxed compilation, the
    merged down-age used for start-up pricing.  A unit is considered
    down when up_age >= down_age (both start at infinity).  min_up and
    min_down are the effective thresholds: a minimum time longer than
    the horizon never produces a binding scheduling window, so the
    caller caps it at one to match the constraint formulation.
    """
    up, down = state[0], state[1]
    eq = state[2] if relaxed else down
    out = []
    if up >= down:  # unit is down
        nxt = (up + 1, down + 1, eq + 1) if relaxed else (up + 1, down + 1)
        out.append((0.0, 0.0, nxt))
        if down >= min_down:
            started = (1, down + 1, eq + 1) if relaxed else (1, down + 1)
            out.append((1.0, gen.c_fixed + gen.startup_cost(eq), started))
    else:           # unit is up
        nxt = (up + 1, down + 1, eq + 1) if relaxed else (up + 1, down + 1)
        out.append((1.0, gen.c_fixed, nxt))
        if up >= min_up:
            stopped = (up + 1, 1, 1) if relaxed else (up + 1, 1)
            out.append((0.0, 0.0, stopped))
    return out


def effective_times(gen, horizon):
    """Binding minimum up/down thresholds over this horizon."""
    min_up = gen.min_up if gen.min_up <= horizon else 1
    min_down = gen.min_down if gen.min_down <= horizon else 1
    return min_up, min_down


def _fresh_state(relaxed):
    return (INF, INF, INF) if relaxed else (INF, INF)


def _group_of(state):
    return "down" if state[0] >= state[1] else "up"


def _merge_states(states):
    up = max(s[0] for s in states)
    down = max(s[1] for s in states)
    eq = min(s[2] for s in states)
    return (up, down, eq)


def _compile_master(instance, partial, gamma, width=None, mode="exact"):
    """Shared compiler for the exact / relaxed / restricted variants.

    Returns (diagram, is_exact).  Raises EmptyDiagramError when the
    partial assignment admits no completion.
    """
    relaxed = mode == "relaxed"
    n, T = instance.num_units, instance.horizon
    partial = tuple(partial)
    if len(partial) > n * T:
        raise ValueError("partial assignment longer than the variable count")
    dd = DecisionDiagram(n * T + 1, continuous_last=True)
    root = dd.new_node(0, state=_fresh_state(relaxed))
    cur = {_fresh_state(relaxed): root}
    dist = {root: 0.0}
    is_exact = True

    for g in range(n * T):
        unit = g // T
        gen = instance.generators[unit]
        min_up, min_down = effective_times(gen, T)
        boundary = (g + 1) % T == 0 and unit < n - 1
        moves = []  # (parent node, label, weight, child state)
        for state, node in cur.items():
            for label, weight, nxt in _transitions(gen, state, relaxed,
                                                   min_up, min_down):
                if g < len(partial) and abs(label - partial[g]) > 1e-9:
                    continue
                moves.append((node, label, weight, nxt))
        if not moves:
            raise EmptyDiagramError("partial assignment admits no completion")
        if boundary:
            # the next unit is scheduled independently: collapse the layer
            child = dd.new_node(g + 1, state=_fresh_state(relaxed))
            dist[child] = min(dist[p] + w for p, _, w, _ in moves)
            for parent, label, weight, _ in moves:
                dd.add_arc(g, parent, child, label, weight)
            cur = {_fresh_state(relaxed): child}
            continue

        children = {}
        for parent, label, weight, nxt in moves:
            if nxt not in children:
                children[nxt] = dd.new_node(g + 1, state=nxt)
                dist[children[nxt]] = INF
            child = children[nxt]
            dd.add_arc(g, parent, child, label, weight)
            dist[child] = min(dist[child], dist[parent] + weight)

        if width is not None and len(children) > width:
            is_exact = False
            if mode == "restricted":
                ranked = sorted(children, key=lambda s: (dist[children[s]], s))
                dropped = {children[s] for s in ranked[width:]}
                dd.layers[g + 1] = [nid for nid in dd.layers[g + 1]
                                    if nid not in dropped]
                dd.arcs[g] = [a for a in dd.arcs[g] if a.head not in dropped]
                for s in ranked[width:]:
                    dd.states.pop(children[s], None)
                    del children[s]
            else:
                children = _merge_layer(dd, g + 1, children, dist, width)
        cur = children

    term = dd.new_node(n * T + 1)
    for state, node in cur.items():
        dd.add_arc(n * T, node, term, Interval(gamma.lo, gamma.hi), 1.0)
    if mode == "restricted" and not is_exact:
        # dropping children can strand their parents off every full path
        try:
            dd = prune_dead_nodes(dd)
        except InfeasibleDiagramError as exc:
            raise EmptyDiagramError(str(exc)) from exc
    return dd, is_exact


def _merge_layer(dd, node_layer, children, dist, width):
    """Width enforcement for the relaxed compiler.

    Nodes are grouped by up/down status (states may only merge within a
    group), ranked by distance from the root, and the worst nodes of
    each group are merged into one tagged node with combined state
    (max up-age, max down-age, min merged down-age).
    """
    groups = {"down": [], "up": []}
    for state in children:
        groups[_group_of(state)].append(state)
    active = [g for g in ("down", "up") if groups[g]]
    target = max(width, len(active))
    quota = {g: 1 for g in active}
    spare = target - len(active)
    while spare > 0:
        # grant extra slots to the larger group first
        order = sorted(active, key=lambda g: (-(len(groups[g]) - quota[g]), g))
        granted = False
        for g in order:
            if quota[g] < len(groups[g]) and spare > 0:
                quota[g] += 1
                spare -= 1
                granted = True
                break
        if not granted:
            break

    out = {}
    for g in active:
        ranked = sorted(groups[g], key=lambda s: (dist[children[s]], s))
        keep = ranked[:quota[g] - 1] if len(ranked) > quota[g] else ranked
        rest = ranked[len(keep):]
        for s in keep:
            out[s] = children[s]
        if rest:
            merged_state = _merge_states(rest)
            if merged_state in out:
                # combined state already kept: fold into that node
                node = out[merged_state]
                dd.merged.add(node)
            else:
                node = dd.new_node(node_layer, state=merged_state, merged=True)
                dist[node] = INF
                out[merged_state] = node
            members = {children[s] for s in rest} - {node}
            dist[node] = min([dist[node]] + [dist[m] for m in members])
            dd.layers[node_layer] = [nid for nid in dd.layers[node_layer]
                                     if nid not in members]
            for arc in dd.arcs[node_layer - 1]:
                if arc.head in members:
                    arc.head = node
            for m in members:
                dd.states.pop(m, None)
                dd.merged.discard(m)
    return out


def build_master_dd(instance, partial=(), gamma=None):
    """Exact diagram over the commitment variables plus the value layer."""
    gamma = gamma or GammaBounds(0.0, 0.0)
    dd, _ = _compile_master(instance, partial, gamma, width=None, mode="exact")
    return dd


def build_relaxed_master_dd(instance, partial, gamma, width):
    if width < 1:
        raise ValueError("width must be >= 1")
    dd, _ = _compile_master(instance, partial, gamma, width=width, mode="relaxed")
    return dd


def build_restricted_master_dd(instance, partial, gamma, width):
    if width < 1:
        raise ValueError("width must be >= 1")
    return _compile_master(instance, partial, gamma, width=width, mode="restricted")


def master_cost(instance, x):
    """First-stage cost of a full assignment, summed like the arc weights."""
    total = 0.0
    for i, gen in enumerate(instance.generators):
        down_age = INF
        prev = 0.0
        for j in range(instance.horizon):
            v = x[instance.var_index(i, j)]
            if v >= 0.5:
                if prev < 0.5:
                    total += gen.c_fixed + gen.startup_cost(down_age)
                else:
                    total += gen.c_fixed
                down_age = 0
            else:
                down_age = down_age + 1 if down_age != INF else INF
            prev = v
    return total

# -- value-variable bounds --------------------------------------------------------------


def _relaxation_lp(instance, scenario, sense):
    """Dispatch-cost extremum over the LP relaxation of the full model."""
    n, T = instance.num_units, instance.horizon
    nT = n * T
    X, Y, YB, P, PB = 0, nT, 2 * nT, 3 * nT, 4 * nT
    nv = 5 * nT
    c = np.zeros(nv)
    rows, senses, rhs = [], [], []

    def idx(base, i, j):
        return base + i * T + j

    def new_row():
        rows.append(np.zeros(nv))
        return rows[-1]

    for i, gen in enumerate(instance.generators):
        for j in range(T):
            c[idx(P, i, j)] = gen.c_prod
            # start-up / shut-down bookkeeping
            r = new_row()
            r[idx(Y, i, j)] = 1.0
            r[idx(YB, i, j)] = -1.0
            r[idx(X, i, j)] = -1.0
            if j > 0:
                r[idx(X, i, j - 1)] = 1.0
            senses.append("=")
            rhs.append(0.0)
            # ramping with explicit start/stop indicators
            r = new_row()
            r[idx(P, i, j)] = 1.0
            if j > 0:
                r[idx(P, i, j - 1)] = -1.0
                r[idx(X, i, j - 1)] = -gen.ramp_up
            r[idx(Y, i, j)] = -gen.startup_ramp
            senses.append("<=")
            rhs.append(0.0)
            r = new_row()
            r[idx(P, i, j)] = -1.0
            if j > 0:
                r[idx(P, i, j - 1)] = 1.0
            r[idx(X, i, j)] = -gen.ramp_down
            r[idx(YB, i, j)] = -gen.shutdown_ramp
            senses.append("<=")
            rhs.append(0.0)
            # capacity chain
            r = new_row()
            r[idx(X, i, j)] = gen.p_min
            r[idx(P, i, j)] = -1.0
            senses.append("<=")
            rhs.append(0.0)
            r = new_row()
            r[idx(P, i, j)] = 1.0
            r[idx(PB, i, j)] = -1.0
            senses.append("<=")
            rhs.append(0.0)
            r = new_row()
            r[idx(PB, i, j)] = 1.0
            r[idx(X, i, j)] = -gen.p_max
            senses.append("<=")
            rhs.append(0.0)
        # minimum up/down windows
        for j in range(gen.min_up - 1, T):
            r = new_row()
            for jj in range(j - gen.min_up + 1, j + 1):
                r[idx(Y, i, jj)] = 1.0
            r[idx(X, i, j)] = -1.0
            senses.append("<=")
            rhs.append(0.0)
        for j in range(gen.min_down - 1, T):
            r = new_row()
            for jj in range(j - gen.min_down + 1, j + 1):
                r[idx(YB, i, jj)] = 1.0
            r[idx(X, i, j)] = 1.0
            senses.append("<=")
            rhs.append(1.0)
    for j in range(T):
        r = new_row()
        for i in range(n):
            r[idx(P, i, j)] = 1.0
        senses.append(">=")
        rhs.append(scenario.demand[j])
        r = new_row()
        for i in range(n):
            r[idx(PB, i, j)] = 1.0
        senses.append(">=")
        rhs.append(scenario.demand[j] + scenario.reserve[j])
    lo = np.zeros(nv)
    hi = np.full(nv, INF)
    hi[:3 * nT] = 1.0
    return LinearProgram(sense=sense, c=c, A=np.array(rows), senses=senses,
                         b=np.array(rhs), lo=lo, hi=hi)


def compute_gamma(instance):
    """Scenario-weighted extrema of the dispatch cost over the LP relaxation.

    Raises InfeasibleInstanceError when a scenario cannot be served
    even fractionally, which makes the whole instance infeasible.
    """
    lo = 0.0
    hi = 0.0
    for sc in instance.scenarios:
        low = solve(_relaxation_lp(instance, sc, "min"))
        if low.status != "optimal":
            raise InfeasibleInstanceError(
                "scenario is undispatchable even in the LP relaxation")
        high = solve(_relaxation_lp(instance, sc, "max"))
        if high.status != "optimal":
            raise InfeasibleInstanceError("relaxation is unbounded; bad instance data")
        lo += sc.prob * low.objective
        hi += sc.prob * high.objective
    return GammaBounds(lo, hi)


# -- dispatch subproblems ----------------------------------------------------------------


def _commitment_vector(instance, x):
    x = [float(v) for v in x]
    if len(x) != instance.num_vars:
        raise ValueError("assignment length must be units * horizon")
    return x


def build_subproblem(instance, x, scenario):
    """Dispatch LP over production and headroom, in the committed-only form.

    Ramp limits reference the commitment variables directly (start and
    stop indicators are implied by consecutive commitments), so the LP
    depends on x alone.
    """
    x = _commitment_vector(instance, x)
    n, T = instance.num_units, instance.horizon
    nT = n * T
    P, PB = 0, nT
    nv = 2 * nT
    c = np.zeros(nv)
    rows, senses, rhs = [], [], []

    def idx(base, i, j):
        return base + i * T + j

    def xv(i, j):
        return x[instance.var_index(i, j)] if j >= 0 else 0.0

    def new_row():
        rows.append(np.zeros(nv))
        return rows[-1]

    for i, gen in enumerate(instance.generators):
        for j in range(T):
            c[idx(P, i, j)] = gen.c_prod
            r = new_row()   # ramp up
            r[idx(P, i, j)] = 1.0
            if j > 0:
                r[idx(P, i, j - 1)] = -1.0
            senses.append("<=")
            rhs.append((gen.ramp_up - gen.startup_ramp) * xv(i, j - 1)
                       + gen.startup_ramp * xv(i, j))
            r = new_row()   # ramp down
            r[idx(P, i, j)] = -1.0
            if j > 0:
                r[idx(P, i, j - 1)] = 1.0
            senses.append("<=")
            rhs.append((gen.ramp_down - gen.shutdown_ramp) * xv(i, j)
                       + gen.shutdown_ramp * xv(i, j - 1))
            r = new_row()   # minimum output
            r[idx(P, i, j)] = 1.0
            senses.append(">=")
            rhs.append(gen.p_min * xv(i, j))
            r = new_row()   # headroom above production
            r[idx(PB, i, j)] = 1.0
            r[idx(P, i, j)] = -1.0
            senses.append(">=")
            rhs.append(0.0)
            r = new_row()   # capacity
            r[idx(PB, i, j)] = 1.0
            senses.append("<=")
            rhs.append(gen.p_max * xv(i, j))
    for j in range(T):
        r = new_row()
        for i in range(n):
            r[idx(P, i, j)] = 1.0
        senses.append(">=")
        rhs.append(scenario.demand[j])
        r = new_row()
        for i in range(n):
            r[idx(PB, i, j)] = 1.0
        senses.append(">=")
        rhs.append(scenario.demand[j] + scenario.reserve[j])
    return LinearProgram(sense="min", c=c, A=np.array(rows), senses=senses,
                         b=np.array(rhs))


def build_subproblem_original(instance, x, scenario):
    """Dispatch LP in the indicator form, with start/stop flags derived
    from consecutive commitments.  Used to cross-check the committed-only
    form above."""
    x = _commitment_vector(instance, x)
    n, T = instance.num_units, instance.horizon
    lp = build_subproblem(instance, x, scenario)
    rows = lp.A.copy()
    rhs = lp.b.copy()
    k = 0

    def xv(i, j):
        return x[instance.var_index(i, j)] if j >= 0 else 0.0

    for i, gen in enumerate(instance.generators):
        for j in range(T):
            start = max(xv(i, j) - xv(i, j - 1), 0.0)
            stop = max(xv(i, j - 1) - xv(i, j), 0.0)
            rhs[k] = gen.ramp_up * xv(i, j - 1) + gen.startup_ramp * start
            rhs[k + 1] = gen.ramp_down * xv(i, j) + gen.shutdown_ramp * stop
            k += 5
    return LinearProgram(sense="min", c=lp.c, A=rows, senses=lp.senses, b=rhs)


def build_dual_subproblem(instance, x, scenario):
    """Dual of the committed-only dispatch LP, built explicitly.

    Variables: demand price, reserve price, then per unit-period the
    min-output, capacity, ramp-up, ramp-down and headroom multipliers.
    Unbounded rays certify undispatchable commitments.
    """
    x = _commitment_vector(instance, x)
    n, T = instance.num_units, instance.horizon
    nT = n * T
    PSI, BETA = 0, T
    PHI, PI = 2 * T, 2 * T + nT
    GAM, DEL, ETA = 2 * T + 2 * nT, 2 * T + 3 * nT, 2 * T + 4 * nT
    nv = 2 * T + 5 * nT
    c = np.zeros(nv)

    def xv(i, j):
        return x[instance.var_index(i, j)] if j >= 0 else 0.0

    for j in range(T):
        c[PSI + j] = scenario.demand[j]
        c[BETA + j] = scenario.demand[j] + scenario.reserve[j]
    for i, gen in enumerate(instance.generators):
        for j in range(T):
            k = i * T + j
            c[PHI + k] = gen.p_min * xv(i, j)
            c[PI + k] = -gen.p_max * xv(i, j)
            c[GAM + k] = (gen.startup_ramp - gen.ramp_up) * xv(i, j - 1) \
                - gen.startup_ramp * xv(i, j)
            c[DEL + k] = (gen.shutdown_ramp - gen.ramp_down) * xv(i, j) \
                - gen.shutdown_ramp * xv(i, j - 1)
    rows, senses, rhs = [], [], []
    for i, gen in enumerate(instance.generators):
        for j in range(T):
            k = i * T + j
            r = np.zeros(nv)   # production column
            r[PSI + j] = 1.0
            r[GAM + k] = -1.0
            if j + 1 < T:
                r[GAM + k + 1] = 1.0
            r[DEL + k] = 1.0
            if j + 1 < T:
                r[DEL + k + 1] = -1.0
            r[PHI + k] = 1.0
            r[ETA + k] = -1.0
            rows.append(r)
            senses.append("<=")
            rhs.append(gen.c_prod)
            r = np.zeros(nv)   # headroom column
            r[BETA + j] = 1.0
            r[ETA + k] = 1.0
            r[PI + k] = -1.0
            rows.append(r)
            senses.append("<=")
            rhs.append(0.0)
    return LinearProgram(sense="max", c=c, A=np.array(rows), senses=senses,
                         b=np.array(rhs))


def _cut_pieces(instance, scenario, values):
    """Constant and x-coefficients of the dual objective at `values`."""
    n, T = instance.num_units, instance.horizon
    nT = n * T
    PSI, BETA = 0, T
    PHI, PI = 2 * T, 2 * T + nT
    GAM, DEL = 2 * T + 2 * nT, 2 * T + 3 * nT
    const = 0.0
    for j in range(T):
        const += scenario.demand[j] * values[PSI + j]
        const += (scenario.demand[j] + scenario.reserve[j]) * values[BETA + j]
    coef = {}

    def bump(i, j, v):
        if j < 0 or abs(v) <= COEF_EPS:
            return
        k = instance.var_index(i, j)
        coef[k] = coef.get(k, 0.0) + v

    for i, gen in enumerate(instance.generators):
        for j in range(T):
            k = i * T + j
            bump(i, j, gen.p_min * values[PHI + k] - gen.p_max * values[PI + k])
            bump(i, j - 1, (gen.startup_ramp - gen.ramp_up) * values[GAM + k])
            bump(i, j, -gen.startup_ramp * values[GAM + k])
            bump(i, j, (gen.shutdown_ramp - gen.ramp_down) * values[DEL + k])
            bump(i, j - 1, -gen.shutdown_ramp * values[DEL + k])
    return const, coef


def evaluate_subproblems(instance, x):
    """Solve every scenario's dual dispatch problem at the commitment x.

    Returns the feasibility variant (one normalised cut per
    undispatchable scenario) when any scenario is infeasible, and
    otherwise the probability-weighted expected cost with a single
    aggregated lower-bounding cut on the value variable.
    """
    x = _commitment_vector(instance, x)
    feas_cuts = []
    total = 0.0
    agg_const = 0.0
    agg_coef = {}
    lp_calls = 0
    for sc in instance.scenarios:
        out = solve(build_dual_subproblem(instance, x, sc))
        lp_calls += 1
        if out.status == "unbounded":
            const, coef = _cut_pieces(instance, sc, out.ray)
            scale = max([abs(v) for v in coef.values()] + [COEF_EPS])
            if scale <= COEF_EPS:
                scale = max(abs(const), 1.0)
            feas_cuts.append(CutRow(
                coeffs={k: v / scale for k, v in coef.items()},
                z_coeff=0.0, rhs=-const / scale, sense="<="))
            continue
        if out.status != "optimal":
            raise RuntimeError("dual dispatch problem reported "
                               f"{out.status}; the dual is always feasible")
        const, coef = _cut_pieces(instance, sc, out.x)
        total += sc.prob * out.objective
        agg_const += sc.prob * const
        for k, v in coef.items():
            agg_coef[k] = agg_coef.get(k, 0.0) + sc.prob * v
    if feas_cuts:
        return SubproblemResult(kind="infeasible", cuts=feas_cuts,
                                lp_calls=lp_calls)
    cut = CutRow(coeffs={k: -v for k, v in agg_coef.items() if abs(v) > COEF_EPS},
                 z_coeff=1.0, rhs=agg_const, sense=">=")
    return SubproblemResult(kind="optimal", cuts=[cut], value=total,
                            lp_calls=lp_calls)


# -- instance generation --------------------------------------------------------------


def gen_random_instance(num_units, horizon, num_scenarios, seed):
    """Deterministic random instance; see the README for the parameter ranges."""
    if num_units < 1 or horizon < 1 or num_scenarios < 1:
        raise ValueError("generator parameters must be positive")
    rng = np.random.default_rng(seed)
    gens = []
    for _ in range(num_units):
        p_max = float(rng.uniform(50.0, 300.0))
        p_min = float(rng.uniform(0.1, 0.3) * p_max)
        c_fixed = float(rng.uniform(400.0, 1000.0))
        c_prod = float(rng.uniform(5.0, 40.0))
        min_up = int(rng.integers(1, min(3, horizon) + 1))
        min_down = int(rng.integers(1, min(3, horizon) + 1))
        su = float(rng.uniform(0.9, 1.0) * p_max)
        sd = float(rng.uniform(0.9, 1.0) * p_max)
        cold = int(rng.integers(1, min(horizon, 4) + 1))
        k_max = float(rng.uniform(0.5, 2.0) * c_fixed)
        table = tuple(float(round(k_max * math.log(1.0 + k) / math.log(1.0 + cold)))
                      for k in range(1, cold + 1))
        gens.append(Generator(
            c_fixed=c_fixed, c_prod=c_prod, p_min=p_min, p_max=p_max,
            min_up=min_up, min_down=min_down,
            ramp_up=su, ramp_down=sd, startup_ramp=su, shutdown_ramp=sd,
            startup_costs=table, startup_cost_inf=float(round(k_max))))
    cap = sum(g.p_max for g in gens)
    weights = rng.uniform(1.0, 2.0, size=num_scenarios)
    probs = weights / weights.sum()
    scens = []
    for s in range(num_scenarios):
        demand = tuple(float(rng.uniform(0.75, 1.0) * cap) for _ in range(horizon))
        frac = float(rng.uniform(0.0, 0.05))
        reserve = tuple(min(frac * d, cap - d) for d in demand)
        scens.append(Scenario(prob=float(probs[s]), demand=demand, reserve=reserve))
    return UcpInstance(generators=gens, horizon=horizon, scenarios=scens).validate()


# -- engine adapters -------------------------------------------------------------------


class UcpMasterOracle(MasterOracle):
    sense = "min"

    def __init__(self, instance, gamma):
        self.instance = instance
        self.gamma = gamma

    def build_exact_dd(self, partial, cuts):
        try:
            dd = build_master_dd(self.instance, partial, self.gamma)
            return replay_cuts(dd, cuts)
        except (EmptyDiagramError, InfeasibleDiagramError):
            return None

    def build_restricted_dd(self, partial, cuts, width):
        try:
            dd, exact = build_restricted_master_dd(self.instance, partial,
                                                   self.gamma, width)
        except EmptyDiagramError:
            return None, True
        try:
            return replay_cuts(dd, cuts), exact
        except InfeasibleDiagramError:
            return None, exact

    def build_relaxed_dd(self, partial, cuts, width):
        try:
            dd = build_relaxed_master_dd(self.instance, partial, self.gamma, width)
            return replay_cuts(dd, cuts)
        except (EmptyDiagramError, InfeasibleDiagramError):
            return None


class UcpSubproblemOracle(SubproblemOracle):
    """Memoizes per-commitment results; repeat visits cost no LP solves."""

    def __init__(self, instance):
        self.instance = instance
        self._cache = {}

    def evaluate(self, x):
        key = tuple(round(float(v)) for v in x)
        if key in self._cache:
            hit = self._cache[key]
            return SubproblemResult(kind=hit.kind, cuts=hit.cuts,
                                    value=hit.value, lp_calls=0)
        res = evaluate_subproblems(self.instance, key)
        self._cache[key] = res
        return res


def ucp_solve(instance, config=None, instance_id="", known_optimum=None):
    """Convenience wrapper: bounds, oracles, and the decomposition loop."""
    from .engine import SolveReport, dd_bd_solve

    try:
        gamma = compute_gamma(instance)
    except InfeasibleInstanceError:
        return SolveReport(status="infeasible", instance=instance_id)
    master = UcpMasterOracle(instance, gamma)
    sub = UcpSubproblemOracle(instance)
    return dd_bd_solve(master, sub, config, instance_id=instance_id,
                       known_optimum=known_optimum)
