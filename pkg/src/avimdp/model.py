"""Finite MDP instances: representation, validation and random generation.

States and actions are 0-based in memory. The instance file format
(:mod:`avimdp.fileformat`) is 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Action:
    """One action: immediate cost and a sparse transition row ``((j, p), ...)``."""

    cost: float
    row: tuple[tuple[int, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "cost", float(self.cost))
        object.__setattr__(
            self, "row", tuple((int(j), float(p)) for j, p in self.row)
        )


@dataclass(frozen=True)
class MdpModel:
    """Cost-minimising finite MDP with a designated recurrent state.

    ``actions[i]`` is the tuple of :class:`Action` available in state ``i``.
    The constructor only normalises container types; probability and
    recurrence checks live in :func:`validate_mdp` so that invalid models
    can still be inspected and reported on.
    """

    n_states: int
    actions: tuple[tuple[Action, ...], ...]
    recurrent_state: int | None = None

    def __post_init__(self):
        if self.n_states < 1:
            raise InputError("n_states must be positive")
        acts = tuple(
            tuple(a if isinstance(a, Action) else Action(*a) for a in state)
            for state in self.actions
        )
        if len(acts) != self.n_states:
            raise InputError(
                f"expected {self.n_states} action lists, got {len(acts)}"
            )
        object.__setattr__(self, "actions", acts)
        if self.recurrent_state is None:
            object.__setattr__(self, "recurrent_state", self.n_states - 1)

    @property
    def n_actions(self) -> list[int]:
        return [len(a) for a in self.actions]

    @property
    def n_pairs(self) -> int:
        return sum(len(a) for a in self.actions)

    def costs(self) -> list[list[float]]:
        return [[a.cost for a in state] for state in self.actions]

    def cost_range(self) -> tuple[float, float]:
        costs = [a.cost for state in self.actions for a in state]
        return min(costs), max(costs)

    def dense_row(self, i: int, a: int) -> np.ndarray:
        out = np.zeros(self.n_states)
        for j, p in self.actions[i][a].row:
            out[j] += p
        return out

    @classmethod
    def from_dense(cls, costs, transitions, recurrent_state=None) -> "MdpModel":
        """Build from ``costs[i][a]`` and dense ``transitions[i][a][j]``."""
        actions = []
        for c_i, p_i in zip(costs, transitions):
            actions.append(
                tuple(
                    Action(c, tuple((j, p) for j, p in enumerate(row) if p != 0.0))
                    for c, row in zip(c_i, p_i)
                )
            )
        return cls(len(actions), tuple(actions), recurrent_state)


@dataclass(frozen=True)
class Violation:
    kind: str
    state: int | None = None
    action: int | None = None
    detail: str = ""
    witness: tuple[int, ...] | None = None

    def __str__(self):
        where = []
        if self.state is not None:
            where.append(f"state {self.state + 1}")
        if self.action is not None:
            where.append(f"action {self.action}")
        loc = " ".join(where)
        return f"{self.kind}" + (f" at {loc}" if loc else "") + (
            f": {self.detail}" if self.detail else ""
        )


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def of_kind(self, kind: str) -> list[Violation]:
        return [v for v in self.violations if v.kind == kind]


def validate_mdp(m: MdpModel, recurrent_state: int | None = None) -> ValidationReport:
    """Check row stochasticity, finiteness and the recurrent-state assumption.

    The recurrence check computes the greatest set ``U`` of non-recurrent
    states in which every state keeps an action whose support stays inside
    ``U``. A nonempty ``U`` is a witness: the policy picking those actions
    never reaches the recurrent state from ``U``.
    """
    n = m.n_states
    rec = m.recurrent_state if recurrent_state is None else recurrent_state
    report = ValidationReport()
    v = report.violations
    if not 0 <= rec < n:
        v.append(Violation("recurrent-state", detail=f"index {rec} out of range"))
        return report

    structural_ok = True
    for i, acts in enumerate(m.actions):
        if not acts:
            v.append(Violation("no-actions", i))
            structural_ok = False
        for a, act in enumerate(acts):
            if not math.isfinite(act.cost):
                v.append(Violation("non-finite-cost", i, a, repr(act.cost)))
            targets = [j for j, _ in act.row]
            if len(set(targets)) != len(targets):
                v.append(Violation("duplicate-target", i, a))
            if any(not 0 <= j < n for j in targets):
                v.append(Violation("target-out-of-range", i, a, str(targets)))
                structural_ok = False
            probs = [p for _, p in act.row]
            if any(not math.isfinite(p) or p < 0.0 or p > 1.0 for p in probs):
                v.append(Violation("probability-range", i, a, str(probs)))
            total = math.fsum(probs)
            if not abs(total - 1.0) <= ROW_SUM_TOL:
                v.append(Violation("row-sum", i, a, f"sums to {total!r}"))

    if structural_ok:
        avoid = _avoid_set(m, rec)
        if avoid:
            v.append(
                Violation(
                    "recurrence",
                    detail=f"states {sorted(s + 1 for s in avoid)} can avoid "
                    f"state {rec + 1} forever",
                    witness=tuple(sorted(avoid)),
                )
            )
    return report


def _avoid_set(m: MdpModel, rec: int) -> set[int]:
    supports = [
        [frozenset(j for j, p in act.row if p > 0.0) for act in acts]
        for acts in m.actions
    ]
    u = set(range(m.n_states)) - {rec}
    changed = True
    while changed:
        changed = False
        for i in list(u):
            if not any(sup <= u for sup in supports[i]):
                u.discard(i)
                changed = True
    return u


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of the random instance families used in the benchmarks."""

    n_states: int
    max_actions_per_state: int
    density: float
    cost_range: tuple[float, float] = (0.0, 10.0)
    rng_seed: int = 0

    @property
    def nonzeros_per_row(self) -> int:
        return int(math.floor(self.density * self.n_states + 0.5))

    def check(self):
        if self.n_states < 1:
            raise InputError("n_states must be positive")
        if self.max_actions_per_state < 1:
            raise InputError("max_actions_per_state must be positive")
        if not 0.0 < self.density <= 1.0:
            raise InputError(f"density must be in (0, 1], got {self.density}")
        if self.nonzeros_per_row < 1:
            raise InputError("density * n_states rounds to zero nonzeros per row")
        low, high = self.cost_range
        if not low <= high:
            raise InputError(f"cost range [{low}, {high}] is empty")


def generate_random_mdp(spec: GeneratorSpec) -> MdpModel:
    """Random instance whose rows all have ``round(density * n)`` nonzeros.

    The last state is the recurrent state and is forced into every row's
    support, so every generated model passes :func:`validate_mdp`.
    """
    spec.check()
    rng = np.random.default_rng(spec.rng_seed)
    n = spec.n_states
    k = spec.nonzeros_per_row
    rec = n - 1
    low, high = spec.cost_range
    others = np.arange(n - 1)
    states = []
    for _ in range(n):
        n_act = int(rng.integers(1, spec.max_actions_per_state + 1))
        acts = []
        for _ in range(n_act):
            cost = float(rng.uniform(low, high))
            picked = rng.choice(others, size=k - 1, replace=False)
            targets = np.sort(np.append(picked, rec))
            # 1 - U[0,1) lies in (0, 1]: no zero entries
            weights = 1.0 - rng.random(k)
            probs = weights / weights.sum()
            acts.append(Action(cost, tuple(zip(targets.tolist(), probs.tolist()))))
        states.append(tuple(acts))
    return MdpModel(n, tuple(states), rec)
