"""Deletion control: keep search accuracy above a target while deleting.

Two parameters are estimated from training runs. The recall floor is the
lowest 1-Recall@k observed under repeated physical deletion; the rebuild
period is how many logical-deletion steps fit before recall decays below
the target, assuming a linear per-step recall drift. The policy is then
either physical-only deletion (floor already satisfies the target) or
cycles of logical deletion capped by one rebuild.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .deletion import delete_logical, delete_physical
from .index import GraphIndex, construct

PHYSICAL_ONLY = "physical_only"
LOGICAL_THEN_REBUILD = "logical_then_rebuild"

# Guard against float noise pushing an exact quotient like 3.0 down to
# 2.999...; the discretization stays a floor in every other respect.
_FLOOR_EPS = 1e-9


@dataclass(frozen=True)
class ControllerParams:
    """Inputs of the policy choice, all estimated except target_recall."""

    target_recall: float  # required accuracy, in (0, 1]
    recall_floor: float  # lowest recall seen under physical-only deletion
    recall_slope: float  # average recall change per logical step (<= 0 usually)
    rebuild_period: int  # logical steps tolerated before a rebuild
    baseline_recall: float  # recall before any deletion

    def __post_init__(self):
        if not 0.0 < self.target_recall <= 1.0:
            raise ValueError(f"target_recall must be in (0, 1], got {self.target_recall}")
        if not 0.0 <= self.recall_floor <= 1.0:
            raise ValueError(f"recall_floor must be in [0, 1], got {self.recall_floor}")
        if not 0.0 <= self.baseline_recall <= 1.0:
            raise ValueError(f"baseline_recall must be in [0, 1], got {self.baseline_recall}")
        if self.rebuild_period < 0:
            raise ValueError(f"rebuild_period must be >= 0, got {self.rebuild_period}")


@dataclass(frozen=True)
class Policy:
    """Either physical-only deletion, or logical deletion with periodic
    rebuilds (period 0 means rebuild on every step)."""

    kind: str
    rebuild_period: int | None = None

    @classmethod
    def physical_only(cls) -> "Policy":
        return cls(kind=PHYSICAL_ONLY)

    @classmethod
    def logical_then_rebuild(cls, period: int) -> "Policy":
        if period < 0:
            raise ValueError("rebuild period must be >= 0")
        return cls(kind=LOGICAL_THEN_REBUILD, rebuild_period=period)


def estimate_recall_floor(training_metrics) -> float:
    """Lowest recall over the update steps of a physical-only training run."""
    rows = [m for m in training_metrics if m.step >= 1]
    bad = [m.method for m in training_metrics if m.method != "physical"]
    if bad:
        raise ValueError(f"training run must use physical deletion, found method {bad[0]!r}")
    if len(rows) < 2:
        raise ValueError("need at least 2 update steps to estimate the recall floor")
    return min(m.recall.recall for m in rows)


def estimate_rebuild_period(
    baseline_recall: float, final_recall: float, steps: int, target_recall: float
) -> int:
    """Steps of logical deletion tolerated before recall decays below target.

    Models recall as linear in the step count with slope
    (final - baseline) / steps. A target above the baseline is unattainable
    even fresh (returns 0: rebuild every step); a non-negative slope means no
    measured decay, so the estimate is capped at the training horizon.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    for name, val in (("baseline", baseline_recall), ("final", final_recall), ("target", target_recall)):
        if not 0.0 < val <= 1.0:
            raise ValueError(f"{name} recall must be in (0, 1], got {val}")
    if target_recall > baseline_recall:
        return 0
    slope = (final_recall - baseline_recall) / steps
    if slope >= 0:
        return steps
    period = math.floor((target_recall - baseline_recall) / slope + _FLOOR_EPS)
    return max(period, 0)


def select_policy(params: ControllerParams) -> Policy:
    """Physical-only when the floor already meets the target (boundary
    included), otherwise logical deletion with periodic rebuilds."""
    if params.target_recall <= params.recall_floor:
        return Policy.physical_only()
    return Policy.logical_then_rebuild(params.rebuild_period)


def controlled_delete(
    index: GraphIndex,
    flags: set[int],
    batch,
    policy: Policy,
    steps_since_rebuild: int,
) -> tuple[GraphIndex, set[int], int, str]:
    """Apply one deletion batch under a policy.

    Returns (index, flags, steps_since_rebuild, event). Under the rebuild
    policy the batch is flagged first; once the period is reached the index
    is reconstructed from live-minus-flagged nodes, the flag set cleared,
    and the counter reset. Period 0 rebuilds in the same call as the flag.
    """
    if policy.kind == PHYSICAL_ONLY:
        delete_physical(index, batch, flags)
        return index, flags, steps_since_rebuild, "physical"
    flags = delete_logical(index, flags, batch)
    steps_since_rebuild += 1
    if policy.rebuild_period == 0 or steps_since_rebuild >= policy.rebuild_period:
        cleared = len(flags)
        index = _rebuild_visible(index, flags)
        return index, set(), 0, f"rebuild(cleared={cleared})"
    return index, flags, steps_since_rebuild, "logical"


def _rebuild_visible(index: GraphIndex, flags: set[int]) -> GraphIndex:
    survivors = sorted(ext for ext in index.external_slot if ext not in flags)
    records = [(ext, index.vectors[index.external_slot[ext]]) for ext in survivors]
    rebuilt = construct(records, index.params)
    rebuilt.used_ids |= index.used_ids
    return rebuilt


@dataclass
class DeletionController:
    """Stateful policy executor plugged into the protocol harness."""

    params: ControllerParams
    policy: Policy
    steps_since_rebuild: int = 0
    label: str = "controller"
    events: list[str] = field(default_factory=list)

    @classmethod
    def from_training(cls, physical_metrics, logical_metrics, target_recall: float) -> "DeletionController":
        """Estimate parameters from one physical and one logical training run."""
        floor = estimate_recall_floor(physical_metrics)
        logical_rows = sorted(logical_metrics, key=lambda m: m.step)
        if not logical_rows or logical_rows[0].step != 0 or len(logical_rows) < 2:
            raise ValueError("logical training run must include step 0 and at least one update step")
        baseline = logical_rows[0].recall.recall
        final = logical_rows[-1].recall.recall
        steps = logical_rows[-1].step
        period = estimate_rebuild_period(baseline, final, steps, target_recall)
        params = ControllerParams(
            target_recall=target_recall,
            recall_floor=floor,
            recall_slope=(final - baseline) / steps,
            rebuild_period=period,
            baseline_recall=baseline,
        )
        return cls(params=params, policy=select_policy(params))

    def apply(self, index: GraphIndex, flags: set[int], batch) -> tuple[GraphIndex, set[int], str]:
        index, flags, self.steps_since_rebuild, event = controlled_delete(
            index, flags, batch, self.policy, self.steps_since_rebuild
        )
        self.events.append(event)
        return index, flags, event

    def describe(self) -> str:
        p = self.params
        policy = (
            "physical_only"
            if self.policy.kind == PHYSICAL_ONLY
            else f"logical_then_rebuild(period={self.policy.rebuild_period})"
        )
        return (
            f"policy={policy} target={p.target_recall:.4f} floor={p.recall_floor:.4f} "
            f"slope={p.recall_slope:+.5f} baseline={p.baseline_recall:.4f}"
        )
