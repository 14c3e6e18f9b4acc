"""Discounted solves used to bracket the optimal average cost."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .accel import Accel
from .errors import InputError
from .inner import InnerConfig, solve_ssp
from .model import Action, MdpModel
from .ssp import Sweep, discounted_ssp, feasible_start


@dataclass(frozen=True)
class BoundsInterval:
    lower: float
    upper: float
    alpha: float
    iterations: int = 0

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= x <= self.upper + tol


def solve_discounted(m: MdpModel, alpha: float, accel: Accel = Accel.NONE,
                     eps: float = 1e-9, max_iter: int = 1_000_000,
                     sweep: Sweep = Sweep.JACOBI, v0=None, callback=None):
    """Value iteration for ``v = min_a {r + alpha P v}`` until ``||Tv - v|| <= eps``.

    With acceleration the start is moved into the feasible set
    ``{v : v <= Tv}`` first. Returns ``(v, iterations)``.
    """
    if not 0.0 <= alpha < 1.0:
        raise InputError(f"discount factor must be in [0, 1), got {alpha}")
    ds = discounted_ssp(m, alpha)
    accel = Accel(accel)
    if accel is not Accel.NONE:
        v0, _ = feasible_start(ds, 0.0, v0)
    cfg = InnerConfig(sweep=sweep, accel=accel, eps=eps, max_iter=max_iter)
    return solve_ssp(ds, 0.0, cfg, v0, callback=callback, check=False)


def lambda_bounds_from_discounted(v, alpha: float, iterations: int = 0) -> BoundsInterval:
    scaled = (1.0 - alpha) * np.asarray(v, dtype=float)
    return BoundsInterval(float(scaled.min()), float(scaled.max()), alpha, iterations)


def discounted_bounds(m: MdpModel, alpha: float, accel: Accel = Accel.PROJECTIVE,
                      eps: float = 1e-9) -> BoundsInterval:
    v, it = solve_discounted(m, alpha, accel, eps)
    return lambda_bounds_from_discounted(v, alpha, it)


def reduce_to_discounted(m: MdpModel, t: int, beta: float):
    """Rewrite an average-cost model with ``p_it(a) >= beta`` as a discounted one.

    Returns ``(model, alpha)`` with ``alpha = 1 - beta``. If ``v`` is the
    optimal cost of the returned model, ``beta * v[t]`` is the optimal
    average cost of ``m`` and ``v`` its differential cost.
    """
    if not 0.0 < beta < 1.0:
        raise InputError(f"beta must be in (0, 1), got {beta}")
    scale = 1.0 / (1.0 - beta)
    states = []
    for i, acts in enumerate(m.actions):
        new = []
        for a, act in enumerate(acts):
            p_t = sum(p for j, p in act.row if j == t)
            if p_t < beta:
                raise InputError(
                    f"state {i + 1}, action {a}: p_it = {p_t!r} < beta = {beta!r}"
                )
            row = []
            for j, p in act.row:
                q = scale * (p - beta) if j == t else scale * p
                if q != 0.0:
                    row.append((j, q))
            new.append(Action(act.cost, tuple(row)))
        states.append(tuple(new))
    return MdpModel(m.n_states, tuple(states), m.recurrent_state), 1.0 - beta
