"""Deletion control: parameter estimation, policy choice, controlled deletes."""

import pytest

from graphann.controller import (
    ControllerParams,
    DeletionController,
    Policy,
    controlled_delete,
    estimate_rebuild_period,
    estimate_recall_floor,
    select_policy,
)
from graphann.deletion import DeletionMethod
from graphann.harness import ProtocolConfig, run_protocol
from graphann.datasets import synth_dataset
from graphann.index import IndexParams, construct
from graphann.metrics import MemoryReport, RecallReport, ThroughputReport
from graphann.harness import StepMetrics

from conftest import random_records


def _step(step, recall, method="physical"):
    return StepMetrics(
        step=step,
        method=method,
        recall=RecallReport(k=10, hits=int(recall * 100), n_q=100, recall=recall),
        qps_search=ThroughputReport("search", 100, 1.0, 100.0),
        memory=MemoryReport(0, 0, 0, 0),
    )


# -- estimation ----------------------------------------------------------------


def test_floor_is_minimum_of_update_steps():
    run = [_step(0, 0.95)] + [
        _step(s, r) for s, r in enumerate([0.90, 0.85, 0.82, 0.83, 0.82], start=1)
    ]
    assert estimate_recall_floor(run) == 0.82


def test_floor_constant_run():
    run = [_step(1, 0.9), _step(2, 0.9)]
    assert estimate_recall_floor(run) == 0.9


def test_floor_rejects_wrong_method_or_short_run():
    with pytest.raises(ValueError):
        estimate_recall_floor([_step(1, 0.9, method="logical"), _step(2, 0.9, method="logical")])
    with pytest.raises(ValueError):
        estimate_recall_floor([_step(1, 0.9)])


def test_rebuild_period_formula_substitution():
    # slope (0.80-0.95)/5 = -0.03; (0.86-0.95)/-0.03 = 3 exactly
    assert estimate_rebuild_period(0.95, 0.80, 5, 0.86) == 3


def test_rebuild_period_boundary_target_equals_baseline():
    assert estimate_rebuild_period(0.95, 0.80, 5, 0.95) == 0


def test_rebuild_period_unattainable_target():
    assert estimate_rebuild_period(0.90, 0.85, 5, 0.97) == 0


def test_rebuild_period_no_decay_caps_at_horizon():
    assert estimate_rebuild_period(0.90, 0.90, 5, 0.85) == 5
    assert estimate_rebuild_period(0.90, 0.93, 4, 0.85) == 4


def test_rebuild_period_rejects_bad_inputs():
    with pytest.raises(ValueError):
        estimate_rebuild_period(0.9, 0.8, 0, 0.85)
    with pytest.raises(ValueError):
        estimate_rebuild_period(0.0, 0.8, 5, 0.85)


# -- policy ---------------------------------------------------------------------


def _params(target, floor, period=1):
    return ControllerParams(
        target_recall=target,
        recall_floor=floor,
        recall_slope=-0.01,
        rebuild_period=period,
        baseline_recall=0.95,
    )


def test_policy_low_target_is_physical():
    assert select_policy(_params(0.5, 0.816)) == Policy.physical_only()


def test_policy_paper_decision():
    # target 0.84 above the 0.816 floor with one tolerated logical step
    policy = select_policy(_params(0.84, 0.816, period=1))
    assert policy == Policy.logical_then_rebuild(1)


def test_policy_boundary_equal_is_physical():
    assert select_policy(_params(0.816, 0.816)) == Policy.physical_only()


def test_policy_pure_function():
    p = _params(0.7, 0.6)
    assert select_policy(p) == select_policy(p)


def test_params_validation():
    with pytest.raises(ValueError):
        ControllerParams(1.5, 0.9, -0.1, 1, 0.9)
    with pytest.raises(ValueError):
        ControllerParams(0.9, 0.9, -0.1, -1, 0.9)


# -- controlled deletion ---------------------------------------------------------


def build(n=60, d=4, seed=2):
    records, _ = random_records(n, d, seed=seed)
    return construct(records, IndexParams(dimension=d, m=8, seed=seed))


def test_physical_only_delegates():
    index = build()
    index2 = build()
    from graphann.deletion import delete_physical

    delete_physical(index2, {2})
    out, flags, s, event = controlled_delete(index, set(), {2}, Policy.physical_only(), 0)
    assert event == "physical"
    assert flags == set() and s == 0
    assert out.live_ids() == index2.live_ids()
    assert out.adjacency_snapshot() == index2.adjacency_snapshot()


def test_period_one_rebuilds_every_step():
    index = build()
    flags: set = set()
    s = 0
    policy = Policy.logical_then_rebuild(1)
    for step, batch in enumerate(({1, 2}, {3, 4}), start=1):
        index, flags, s, event = controlled_delete(index, flags, batch, policy, s)
        assert flags == set() and s == 0
        assert event.startswith("rebuild")
    assert set(index.live_ids()) == set(range(5, 61))


def test_period_zero_rebuilds_immediately():
    index = build()
    index, flags, s, event = controlled_delete(index, set(), {1}, Policy.logical_then_rebuild(0), 0)
    assert flags == set() and s == 0 and event.startswith("rebuild")
    assert 1 not in index.live_ids()


def test_period_two_trace_over_four_steps():
    # flag sizes per step: b, 2b, b, 2b with a rebuild after steps 2 and 4
    index = build(n=100, seed=4)
    policy = Policy.logical_then_rebuild(2)
    flags: set = set()
    s = 0
    b = 10
    sizes = []
    rebuilds = []
    for step in range(1, 5):
        batch = set(range(1 + (step - 1) * b, step * b + 1))
        before_rebuild = len(flags) + b
        index, flags, s, event = controlled_delete(index, flags, batch, policy, s)
        sizes.append(before_rebuild)
        rebuilds.append(event.startswith("rebuild"))
        assert len(flags) <= 2 * b  # never exceeds period*b
    assert sizes == [b, 2 * b, b, 2 * b]
    assert rebuilds == [False, True, False, True]
    assert len(flags) == 0 or rebuilds[-1] is False
    assert set(index.live_ids()) == set(range(41, 101))
    index.check_invariants()


def test_rebuild_event_clears_all_flags_including_older():
    index = build(n=40, seed=5)
    policy = Policy.logical_then_rebuild(2)
    index, flags, s, _ = controlled_delete(index, set(), {1, 2}, policy, 0)
    assert flags == {1, 2}
    index, flags, s, event = controlled_delete(index, flags, {3, 4}, policy, s)
    assert event == "rebuild(cleared=4)"
    assert flags == set()
    assert set(index.live_ids()) == set(range(5, 41))


# -- end to end -------------------------------------------------------------------


def test_from_training_and_protocol_integration():
    bundle = synth_dataset(n_o=800, d=8, n_clusters=4, seed=6, n_queries=60)
    cfg = ProtocolConfig(n=500, batch_size=100, steps=3, method=DeletionMethod.PHYSICAL,
                         k=5, ef_search=32, m=8, ef_construction=32, seed=6)
    phys = run_protocol(bundle.base, bundle.queries, cfg)
    logi = run_protocol(bundle.base, bundle.queries, cfg.with_method(DeletionMethod.LOGICAL))
    controller = DeletionController.from_training(phys, logi, target_recall=0.7)
    assert 0.0 <= controller.params.recall_floor <= 1.0
    assert controller.policy.kind in ("physical_only", "logical_then_rebuild")

    metrics = run_protocol(bundle.base, bundle.queries, cfg.with_method(controller))
    assert [m.step for m in metrics] == [0, 1, 2, 3]
    assert all(m.method == "controller" for m in metrics)
    assert metrics[0].controller_event.startswith("policy=")  # estimates in the CSV
    events = [m.controller_event for m in metrics[1:]]
    assert all(e for e in events)
    if controller.policy.kind == "physical_only":
        assert set(events) == {"physical"}


def test_physical_only_keeps_flags_empty_forever():
    index = build(n=80, seed=7)
    flags: set = set()
    s = 0
    for step in range(1, 5):
        batch = {step * 2 - 1, step * 2}
        index, flags, s, _ = controlled_delete(index, flags, batch, Policy.physical_only(), s)
        assert flags == set()
