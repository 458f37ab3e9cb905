import itertools

import numpy as np
import pytest

from msn_sched.core import Instance, weighted_completion
from msn_sched.greedy import lrf_schedule
from msn_sched.lp_relax import IntervalGrid, LpSolution, build_grid, lower_bounds, solve_instance
from msn_sched.rounding import (DisState, PlacementDistribution, RoundingError, _ordered_schedule,
                                candidate_scores, dis_round, dis_schedule, expected_wct,
                                mdis_schedule, ris_round, ris_sample_wct)

from .helpers import random_instance, four_task


def single():
    inst = Instance.from_arrays([1.0], [1.0], [2.0], contacts=[1.0])
    return inst, solve_instance(inst, 0.5)


def split_half():
    """Two unit tasks, each half on either worker in interval 0."""
    inst = Instance.from_arrays([1.0, 1.0], [1.0, 1.0], [1.0, 1.0])
    grid = IntervalGrid(1.0, 0)
    y = np.full((2, 2, 1), 0.5)
    return inst, LpSolution(y, lower_bounds(inst, grid, y), 0.0, grid)


def enumerate_expectation(inst, grid, pi):
    """Exact expectation by enumerating every joint placement."""
    K = grid.size
    choices = [[((j, l), pi[i, j, l]) for j in range(inst.m) for l in range(K) if pi[i, j, l] > 0]
               for i in range(inst.n)]
    total = 0.0
    for combo in itertools.product(*choices):
        prob = np.prod([p for _, p in combo])
        ws = [c[0] for c, _ in combo]
        ls = [c[1] for c, _ in combo]
        sched = _ordered_schedule(inst, grid, ws, ls, np.arange(inst.n))
        total += prob * weighted_completion(inst, sched)
    return total


def test_distribution_validation():
    with pytest.raises(RoundingError):
        PlacementDistribution(np.full((1, 1, 2), 0.3))
    with pytest.raises(RoundingError):
        PlacementDistribution(np.array([[[1.2, -0.2]]]))
    d = PlacementDistribution(np.array([[[0.5, 0.5 + 5e-8]]]))
    assert d.probs.sum() == pytest.approx(1.0, abs=1e-15)
    assert d.cells(0) == [((0, 0), pytest.approx(0.5)), ((0, 1), pytest.approx(0.5))]


def test_ris_single_task():
    inst, sol = single()
    sched = ris_round(inst, sol, 0)
    assert sched.assignment == ((0,),)
    assert sched.placement_key == {0: 0.0}
    assert weighted_completion(inst, sched) == pytest.approx(2.0)


def test_ris_frequencies():
    inst, sol = split_half()
    hits = sum(ris_round(inst, sol, s).worker_of()[0] == 0 for s in range(10_000))
    assert abs(hits / 10_000 - 0.5) <= 0.02


def test_ris_draws_above_lp():
    rng = np.random.default_rng(4)
    for _ in range(8):
        inst = random_instance(rng, int(rng.integers(1, 7)), int(rng.integers(1, 4)))
        sol = solve_instance(inst, 0.5)
        for s in range(20):
            sched = ris_round(inst, sol, s)
            sched.validate(inst)
            assert weighted_completion(inst, sched) >= sol.objective - 1e-6
        wcts = ris_sample_wct(inst, sol, 200, seed=1, tie="random")
        assert wcts.min() >= sol.objective - 1e-6


def test_ris_seeded_is_reproducible():
    rng = np.random.default_rng(2)
    inst = random_instance(rng, 6, 2)
    sol = solve_instance(inst)
    assert ris_round(inst, sol, 9) == ris_round(inst, sol, 9)
    with pytest.raises(ValueError):
        ris_round(inst, sol, 9, tie="bogus")


def test_vectorised_sampler_matches_single_draws():
    rng = np.random.default_rng(12)
    inst = random_instance(rng, 4, 2)
    sol = solve_instance(inst, 1.0)
    state = DisState(PlacementDistribution.from_lp(inst, sol))
    mean = ris_sample_wct(inst, sol, 40_000, seed=3).mean()
    assert mean == pytest.approx(expected_wct(state, inst), rel=0.01)


def test_expected_wct_basics():
    inst, sol = single()
    state = DisState(PlacementDistribution.from_lp(inst, sol))
    assert expected_wct(state, inst) == pytest.approx(2.0)
    rng = np.random.default_rng(6)
    inst = random_instance(rng, 5, 2)
    sol = solve_instance(inst, 1.0)
    state = DisState(PlacementDistribution.from_lp(inst, sol))
    cells = [(int(rng.integers(2)), int(rng.integers(sol.grid.size))) for _ in range(5)]
    for i, (j, l) in enumerate(cells):
        state.decide(i, j, l)
    sched = _ordered_schedule(inst, sol.grid, [c[0] for c in cells], [c[1] for c in cells], np.arange(5))
    assert expected_wct(state, inst) == pytest.approx(weighted_completion(inst, sched))
    with pytest.raises(RoundingError):
        state.decide(0, 0, 0)


def test_expected_wct_matches_enumeration():
    rng = np.random.default_rng(13)
    for _ in range(12):
        inst = random_instance(rng, int(rng.integers(1, 5)), int(rng.integers(1, 3)))
        sol = solve_instance(inst, 1.0)
        state = DisState(PlacementDistribution.from_lp(inst, sol))
        for i in range(inst.n):
            if rng.random() < 0.4:
                cells = state.dist.cells(i)
                (j, l), _ = cells[int(rng.integers(len(cells)))]
                state.decide(i, j, l)
        exact = enumerate_expectation(inst, sol.grid, state.pi)
        assert expected_wct(state, inst) == pytest.approx(exact, rel=1e-9)


def test_candidate_scores_predict_extension():
    rng = np.random.default_rng(14)
    inst = random_instance(rng, 5, 2)
    sol = solve_instance(inst, 1.0)
    state = DisState(PlacementDistribution.from_lp(inst, sol))
    state.decide(0, 1, 0)
    base = expected_wct(state, inst)
    g = candidate_scores(state, inst, 2)
    avg = (state.pi[2] * g).sum()
    for j in range(inst.m):
        for l in range(sol.grid.size):
            trial = DisState(state.dist, dict(state.decided))
            trial.pi = state.pi.copy()
            trial.decide(2, j, l)
            assert expected_wct(trial, inst) == pytest.approx(base + g[j, l] - avg, rel=1e-10)
    assert g.min() <= avg + 1e-9


def test_dis_single_and_determinism():
    inst, sol = single()
    sched = dis_schedule(inst, sol)
    assert sched.assignment == ((0,),)
    assert weighted_completion(inst, sched) == pytest.approx(2.0)
    rng = np.random.default_rng(15)
    inst = random_instance(rng, 7, 3)
    sol = solve_instance(inst, 0.5)
    assert dis_schedule(inst, sol) == dis_schedule(inst, sol)


def test_dis_steps_and_final_value():
    rng = np.random.default_rng(16)
    for _ in range(10):
        inst = random_instance(rng, int(rng.integers(1, 9)), int(rng.integers(1, 4)))
        sol = solve_instance(inst, 1.0)
        res = dis_round(inst, sol, check_full=True)
        for st in res.steps:
            assert st.after <= st.before + 1e-9
        wct = weighted_completion(inst, res.schedule)
        assert wct == pytest.approx(res.steps[-1].after, rel=1e-9)
        assert wct <= res.initial_expectation + 1e-6
        assert wct <= 2.5 * sol.objective
        # per worker the order is by interval start, then id
        for seq in res.schedule.assignment:
            keys = [(res.schedule.placement_key[i], i) for i in seq]
            assert keys == sorted(keys)


def test_mdis():
    inst, sol = single()
    assert weighted_completion(inst, mdis_schedule(inst, sol)) == pytest.approx(2.0)
    inst = four_task(10.0)
    sol = solve_instance(inst, 0.5)
    mdis = mdis_schedule(inst, sol)
    # equal ratios: the LP completion times decide the order, not the ids
    order = sorted(range(4), key=lambda i: (sol.cbar[i], i))
    assert order != [0, 1, 2, 3]
    assert mdis.assignment[0][0] == order[0]
    assert weighted_completion(inst, mdis) <= weighted_completion(inst, lrf_schedule(inst)) + 1e-9
