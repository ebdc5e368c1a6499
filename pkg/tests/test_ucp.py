import itertools

import numpy as np
import pytest

from ddbd.diagram import EmptyDiagramError, enumerate_solutions, optimal_path, path_weight
from ddbd.oracle import scipy_lp_min, unit_schedules
from ddbd.simplex import solve
from ddbd.ucp import (
    INF,
    GammaBounds,
    Generator,
    InstanceError,
    Scenario,
    UcpInstance,
    build_dual_subproblem,
    build_master_dd,
    build_relaxed_master_dd,
    build_restricted_master_dd,
    build_subproblem,
    build_subproblem_original,
    compute_gamma,
    evaluate_subproblems,
    gen_random_instance,
    master_cost,
)


def simple_generator(min_up=1, min_down=1, c_fixed=100.0, c_prod=5.0,
                     p_min=10.0, p_max=50.0, ramp=None, table=(30.0, 50.0),
                     cold=80.0):
    ramp = p_max if ramp is None else ramp
    return Generator(c_fixed=c_fixed, c_prod=c_prod, p_min=p_min, p_max=p_max,
                     min_up=min_up, min_down=min_down,
                     ramp_up=ramp, ramp_down=ramp,
                     startup_ramp=ramp, shutdown_ramp=ramp,
                     startup_costs=table, startup_cost_inf=cold)


def single_unit_instance(gen, horizon, demand=None, reserve=None):
    demand = demand or tuple(0.0 for _ in range(horizon))
    reserve = reserve or tuple(0.0 for _ in range(horizon))
    return UcpInstance(generators=[gen], horizon=horizon,
                       scenarios=[Scenario(1.0, tuple(demand), tuple(reserve))]
                       ).validate()


def x_paths(dd):
    return sorted({sol[:-1] for sol in enumerate_solutions(dd)})


# -- master diagram ----------------------------------------------------------------


def test_two_period_master_structure():
    inst = single_unit_instance(simple_generator(min_up=2, min_down=1), 2)
    dd = build_master_dd(inst, gamma=GammaBounds(-25.0, 25.0))
    assert x_paths(dd) == [(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
    assert dd.node_count() == 7
    gen = inst.generators[0]
    first_start = [a for a in dd.arcs[0] if a.label == 1.0]
    assert len(first_start) == 1
    assert first_start[0].weight == gen.c_fixed + gen.startup_cost_inf
    # every schedule appears with both value-interval endpoints
    values = {}
    for sol in enumerate_solutions(dd):
        values.setdefault(sol[:-1], set()).add(sol[-1])
    assert all(v == {-25.0, 25.0} for v in values.values())
    from ddbd.diagram import to_dot

    node_lines = [ln for ln in to_dot(dd).splitlines()
                  if "[label=" in ln and "->" not in ln]
    assert len(node_lines) == 7


def test_one_period_master():
    inst = single_unit_instance(simple_generator(), 1)
    dd = build_master_dd(inst)
    gen = inst.generators[0]
    weights = sorted(path_weight(dd, sol, "min")
                     for sol in enumerate_solutions(dd))
    assert weights == [0.0, gen.c_fixed + gen.startup_cost_inf]


@pytest.mark.parametrize("min_up,min_down", list(itertools.product([1, 2, 3], repeat=2)))
@pytest.mark.parametrize("horizon", [2, 3, 4])
def test_master_paths_match_schedule_rules(min_up, min_down, horizon):
    gen = simple_generator(min_up=min_up, min_down=min_down)
    inst = single_unit_instance(gen, horizon)
    dd = build_master_dd(inst)  # zero-width value interval: one path per x
    got = x_paths(dd)
    want = sorted(tuple(float(b) for b in bits)
                  for bits in unit_schedules(gen, horizon))
    assert got == want
    # path lengths equal the recomputed first-stage cost, exactly
    for sol in enumerate_solutions(dd):
        assert path_weight(dd, sol, "min") == master_cost(inst, sol[:-1])


def test_multi_unit_master_is_product_of_units():
    gens = [simple_generator(min_up=2), simple_generator(min_down=2, c_fixed=77.0)]
    inst = UcpInstance(generators=gens, horizon=2,
                       scenarios=[Scenario(1.0, (0.0, 0.0), (0.0, 0.0))]).validate()
    dd = build_master_dd(inst)
    got = x_paths(dd)
    want = sorted(tuple(map(float, a + b))
                  for a in unit_schedules(gens[0], 2)
                  for b in unit_schedules(gens[1], 2))
    assert got == want
    for sol in enumerate_solutions(dd):
        assert path_weight(dd, sol, "min") == master_cost(inst, sol[:-1])


def test_partial_assignment_restricts_and_can_empty():
    gen = simple_generator(min_up=3)
    inst = single_unit_instance(gen, 3)
    dd = build_master_dd(inst, partial=(1.0,))
    assert x_paths(dd) == [(1.0, 1.0, 1.0)]
    with pytest.raises(EmptyDiagramError):
        build_master_dd(inst, partial=(1.0, 0.0))


def test_memoryless_state_property():
    gen = simple_generator(min_up=2, min_down=2)
    horizon = 5

    def replay_state(bits):
        up, down = INF, INF
        for b in bits:
            if up >= down:  # down
                up, down = ((1, down + 1) if b else (up + 1, down + 1))
            else:
                up, down = ((up + 1, down + 1) if b else (up + 1, 1))
        return up, down

    schedules = unit_schedules(gen, horizon)
    for k in (2, 3):
        completions = {}
        for bits in schedules:
            state = replay_state(bits[:k])
            completions.setdefault(state, {}).setdefault(bits[:k], set()).add(bits[k:])
        for state, by_prefix in completions.items():
            suffix_sets = list(by_prefix.values())
            assert all(s == suffix_sets[0] for s in suffix_sets), state


# -- relaxed / restricted compilation ------------------------------------------------


def test_relaxed_without_width_pressure_equals_exact():
    gen = simple_generator(min_up=2, min_down=2)
    inst = single_unit_instance(gen, 4)
    gamma = GammaBounds(-5.0, 5.0)
    exact = build_master_dd(inst, gamma=gamma)
    relaxed = build_relaxed_master_dd(inst, (), gamma, width=10 ** 6)
    assert not relaxed.merged
    assert sorted(enumerate_solutions(relaxed)) == sorted(enumerate_solutions(exact))
    # merged-age mirrors the down-age when nothing merges
    for state in relaxed.states.values():
        if len(state) == 3:
            assert state[2] == state[1]


def test_relaxed_keeps_exact_paths_with_no_greater_weight():
    gen = simple_generator(min_up=2, min_down=2)
    inst = single_unit_instance(gen, 5)
    exact = build_master_dd(inst)
    relaxed = build_relaxed_master_dd(inst, (), GammaBounds(0.0, 0.0), width=2)
    exact_sols = enumerate_solutions(exact)
    relaxed_x = {sol[:-1] for sol in enumerate_solutions(relaxed)}
    for sol in exact_sols:
        assert sol[:-1] in relaxed_x
        assert path_weight(relaxed, sol, "min") <= path_weight(exact, sol, "min") + 1e-9


def test_relaxed_shortest_path_is_a_lower_bound():
    for seed in range(20):
        inst = gen_random_instance(1, 5, 1, seed=seed)
        gamma = GammaBounds(0.0, 0.0)
        exact = build_master_dd(inst, gamma=gamma)
        _, exact_val = optimal_path(exact, "min")
        for width in (1, 2, 3):
            relaxed = build_relaxed_master_dd(inst, (), gamma, width)
            assert relaxed.width <= max(width, 2) + 1
            _, relax_val = optimal_path(relaxed, "min")
            assert relax_val <= exact_val + 1e-9


def test_restricted_is_subset_and_respects_rules():
    gen = simple_generator(min_up=2, min_down=2)
    inst = single_unit_instance(gen, 3)
    gamma = GammaBounds(0.0, 0.0)
    exact = build_master_dd(inst, gamma=gamma)
    full, exact_flag = build_restricted_master_dd(inst, (), gamma, width=10 ** 6)
    assert exact_flag
    assert sorted(enumerate_solutions(full)) == sorted(enumerate_solutions(exact))

    narrow, exact_flag = build_restricted_master_dd(inst, (), gamma, width=1)
    assert not exact_flag
    sols = x_paths(narrow)
    assert len(sols) == 1
    assert sols[0] in x_paths(exact)
    feasible = {tuple(float(b) for b in bits) for bits in unit_schedules(gen, 3)}
    for x in x_paths(narrow):
        assert x in feasible


# -- value bounds ------------------------------------------------------------------


def test_gamma_tiny_example():
    gen = simple_generator(c_fixed=0.0, c_prod=1.0, p_min=0.0, p_max=10.0,
                           table=(0.0,), cold=0.0)
    inst = single_unit_instance(gen, 1)
    gamma = compute_gamma(inst)
    assert gamma.lo == pytest.approx(0.0, abs=1e-9)
    assert gamma.hi == pytest.approx(10.0, abs=1e-7)


def test_gamma_zero_production_cost():
    gen = simple_generator(c_prod=0.0)
    inst = single_unit_instance(gen, 2, demand=(20.0, 20.0))
    gamma = compute_gamma(inst)
    assert gamma.lo == pytest.approx(0.0, abs=1e-9)
    assert gamma.hi == pytest.approx(0.0, abs=1e-9)


def test_gamma_brackets_true_second_stage_cost():
    from ddbd.oracle import feasible_assignments, stage2_expected_cost

    for seed in (3, 4, 5):
        inst = gen_random_instance(2, 3, 2, seed=seed)
        try:
            gamma = compute_gamma(inst)
        except Exception:
            continue
        for x in feasible_assignments(inst):
            cost = stage2_expected_cost(inst, x)
            if cost is None:
                continue
            assert gamma.lo - 1e-6 <= cost <= gamma.hi + 1e-6


# -- dispatch subproblems ------------------------------------------------------------


def test_ramp_rhs_at_startup_is_the_startup_ramp():
    gen = simple_generator(ramp=30.0, p_min=5.0)
    inst = single_unit_instance(gen, 2, demand=(0.0, 0.0))
    lp = build_subproblem(inst, (0.0, 1.0), inst.scenarios[0])
    # first ramp-up row of period 2: rhs = startup ramp
    assert lp.b[5] == pytest.approx(gen.startup_ramp)


def test_all_off_commitment_is_infeasible_iff_demand_positive():
    gen = simple_generator()
    inst = single_unit_instance(gen, 2, demand=(10.0, 0.0))
    status, _ = scipy_lp_min(build_subproblem(inst, (0.0, 0.0), inst.scenarios[0]))
    assert status == "infeasible"
    inst0 = single_unit_instance(gen, 2)
    status, value = scipy_lp_min(build_subproblem(inst0, (0.0, 0.0), inst0.scenarios[0]))
    assert status == "optimal"
    assert value == pytest.approx(0.0)


def test_reformed_and_indicator_forms_agree():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 60:
        inst = gen_random_instance(int(rng.integers(1, 3)), int(rng.integers(2, 4)),
                                   1, seed=int(rng.integers(0, 10 ** 6)))
        x = tuple(float(rng.integers(0, 2)) for _ in range(inst.num_vars))
        sc = inst.scenarios[0]
        s1, v1 = scipy_lp_min(build_subproblem(inst, x, sc))
        s2, v2 = scipy_lp_min(build_subproblem_original(inst, x, sc))
        assert s1 == s2
        if s1 == "optimal":
            assert abs(v1 - v2) <= 1e-6 * (1.0 + abs(v1))
        checked += 1


def test_dual_matches_primal_value_and_unboundedness():
    rng = np.random.default_rng(23)
    seen_infeasible = 0
    seen_optimal = 0
    trials = 0
    while (seen_infeasible < 5 or seen_optimal < 5) and trials < 200:
        trials += 1
        inst = gen_random_instance(2, 2, 1, seed=int(rng.integers(0, 10 ** 6)))
        x = tuple(float(rng.integers(0, 2)) for _ in range(inst.num_vars))
        sc = inst.scenarios[0]
        primal_status, primal_value = scipy_lp_min(build_subproblem(inst, x, sc))
        dual = solve(build_dual_subproblem(inst, x, sc))
        if primal_status == "optimal":
            seen_optimal += 1
            assert dual.status == "optimal"
            assert dual.objective == pytest.approx(primal_value, rel=1e-6, abs=1e-6)
        else:
            seen_infeasible += 1
            assert dual.status == "unbounded"
    assert seen_infeasible >= 5 and seen_optimal >= 5


def test_zero_demand_gives_zero_value_cut():
    gen = simple_generator()
    inst = single_unit_instance(gen, 2)
    res = evaluate_subproblems(inst, (0.0, 0.0))
    assert res.kind == "optimal"
    assert res.value == pytest.approx(0.0)
    cut = res.cuts[0]
    assert cut.z_coeff == 1.0 and cut.sense == ">="
    assert all(abs(v) <= 1e-9 for v in cut.coeffs.values())
    assert cut.rhs == pytest.approx(0.0, abs=1e-9)


def test_cuts_are_valid_for_every_feasible_commitment():
    from ddbd.oracle import feasible_assignments, stage2_expected_cost

    inst = gen_random_instance(2, 2, 2, seed=8)
    truth = {}
    for x in feasible_assignments(inst):
        truth[x] = stage2_expected_cost(inst, x)
    probes = list(truth)[:6]
    for probe in probes:
        res = evaluate_subproblems(inst, probe)
        for cut in res.cuts:
            for x, z in truth.items():
                if z is None:
                    continue
                lhs = sum(c * x[k] for k, c in cut.coeffs.items()) + cut.z_coeff * z
                assert cut.satisfied(lhs, tol=1e-6), (probe, cut, x, z)


# -- instance generation and serialization --------------------------------------------


def test_generator_determinism_and_ranges():
    a = gen_random_instance(2, 3, 2, seed=99)
    b = gen_random_instance(2, 3, 2, seed=99)
    assert a.to_json() == b.to_json()
    # 500 instances x 2 units x 2 periods: 1000 fixed-cost and demand draws
    samples = [gen_random_instance(2, 2, 1, seed=s) for s in range(500)]
    cap_margin = 1e-9
    for inst in samples:
        cap = inst.total_capacity
        for gen in inst.generators:
            assert 400.0 <= gen.c_fixed <= 1000.0
            assert gen.startup_ramp == gen.ramp_up
            assert gen.shutdown_ramp == gen.ramp_down
            ks = list(gen.startup_costs)
            assert ks == sorted(ks)
            assert gen.startup_cost_inf >= ks[-1] - 1e-9
        for sc in inst.scenarios:
            for d in sc.demand:
                assert 0.75 * cap - cap_margin <= d <= cap + cap_margin


def test_json_round_trip_and_validation():
    inst = gen_random_instance(2, 3, 2, seed=5)
    again = UcpInstance.from_json(inst.to_json())
    assert again.to_json() == inst.to_json()

    bad = simple_generator()
    with pytest.raises(InstanceError):
        Generator(**{**bad.__dict__, "startup_ramp": bad.ramp_up + 1.0}).validate()
    doc = inst.to_json().replace('"version": 1', '"version": 9')
    with pytest.raises(InstanceError):
        UcpInstance.from_json(doc)
