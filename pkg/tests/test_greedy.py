import pytest
from hypothesis import given, settings, strategies as st

from msn_sched.core import Instance, Schedule, completion_times, expected_workloads, weighted_completion
from msn_sched.greedy import EwTracker, TieRule, list_schedule, lrf_schedule

from .helpers import four_task


def test_hand_trace():
    inst = Instance.from_arrays([2, 1], [4, 1], [1.0, 1.0], contacts=[1.0, 2.0])
    sched = lrf_schedule(inst)
    assert sched.assignment == ((0,), (1,))
    assert weighted_completion(inst, sched) == pytest.approx(15.0)


def test_four_task_tie_rules():
    inst = four_task(10.0)
    by_contact = lrf_schedule(inst, TieRule.LARGEST_CONTACT)
    assert by_contact == Schedule.from_lists([[0, 1, 2], [3]])
    m_lambda = sum(inst.tasks[i].weight * inst.workers[j].contact
                   for j, seq in enumerate(by_contact.assignment) for i in seq)
    assert m_lambda == pytest.approx(6 * 10 + 8)
    # at EW=(6,6) the default rule keeps task 4 on worker 1
    assert lrf_schedule(inst).assignment == ((0, 1, 2, 3), ())
    assert lrf_schedule(inst, TieRule.LARGEST_INDEX).assignment == ((0, 1, 2), (3,))


def test_no_tasks():
    inst = Instance.from_arrays([], [], [1.0, 0.5])
    sched, ew = list_schedule(inst, [])
    assert sched.assignment == ((), ())
    assert ew == [2.0, 4.0]


def test_tracker_contact_tie_uses_contacts_not_seeds():
    tr = EwTracker([1.0, 1.0, 1.0], contacts=[0.5, 3.0, 3.0])
    assert tr.argmin(TieRule.LARGEST_CONTACT) == 1
    assert tr.argmin(TieRule.LARGEST_INDEX) == 2
    assert tr.argmin() == 0


positive = st.floats(0.1, 20.0, allow_nan=False)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(positive, positive), min_size=0, max_size=12),
       st.lists(st.floats(0.05, 10.0), min_size=1, max_size=4),
       st.sampled_from(list(TieRule)))
def test_lrf_invariants(tasks, rates, tie):
    rst = [t[0] for t in tasks]
    weight = [t[1] for t in tasks]
    inst = Instance.from_arrays(rst, weight, rates)
    sched = lrf_schedule(inst, tie)
    sched.validate(inst)
    ew = expected_workloads(inst, sched)
    # the last task on each worker went to a then-minimum worker
    for j, seq in enumerate(sched.assignment):
        if seq:
            before = ew[j] - inst.tasks[seq[-1]].rst
            assert all(before <= ew[k] + 1e-9 for k in range(inst.m))
    # ratio order within each worker
    for seq in sched.assignment:
        for a, b in zip(seq, seq[1:]):
            ra, rb = inst.tasks[a].ratio, inst.tasks[b].ratio
            assert ra > rb or (ra == rb and a < b)
    ct = completion_times(inst, sched)
    for j, seq in enumerate(sched.assignment):
        if seq:
            assert ct[seq[-1]] == pytest.approx(ew[j])
