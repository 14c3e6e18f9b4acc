"""Brute-force ground truth for small instances.

Every stationary deterministic policy is evaluated exactly with dense
linear solves. Nothing here touches the iterative solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .model import MdpModel

POLICY_CAP = 10**6
_BATCH = 4096


@dataclass(frozen=True)
class PolicyEval:
    policy: tuple[int, ...]
    stationary: np.ndarray
    average_cost: float
    hitting_times: np.ndarray

    def balance_residual(self, m: MdpModel) -> float:
        P = _policy_matrix(m, self.policy)
        return float(np.max(np.abs(self.stationary @ P - self.stationary)))


def n_policies(m: MdpModel) -> int:
    return math.prod(len(a) for a in m.actions)


def _dense_tables(m: MdpModel):
    n = m.n_states
    P = [np.array([m.dense_row(i, a) for a in range(len(m.actions[i]))])
         for i in range(n)]
    r = [np.array([act.cost for act in m.actions[i]]) for i in range(n)]
    return P, r


def _policy_matrix(m, policy):
    return np.array([m.dense_row(i, a) for i, a in enumerate(policy)])


def _decode(m: MdpModel, start: int, stop: int) -> np.ndarray:
    """Policies ``start..stop-1`` in lexicographic order (state 0 most significant)."""
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((stop - start, m.n_states), dtype=np.int64)
    for i in range(m.n_states - 1, -1, -1):
        k = len(m.actions[i])
        out[:, i] = idx % k
        idx //= k
    return out


def _batch(m, tables, pols):
    P_tab, r_tab = tables
    n = m.n_states
    P = np.stack([P_tab[i][pols[:, i]] for i in range(n)], axis=1)
    r = np.stack([r_tab[i][pols[:, i]] for i in range(n)], axis=1)
    return P, r


def _stationary(P):
    n = P.shape[-1]
    A = np.swapaxes(P, -1, -2) - np.eye(n)
    A[..., -1, :] = 1.0
    b = np.zeros(P.shape[:-1])
    b[..., -1] = 1.0
    return np.linalg.solve(A, b[..., None])[..., 0]


def _hitting(P, rec):
    n = P.shape[-1]
    Q = P.copy()
    Q[..., :, rec] = 0.0
    b = np.ones(P.shape[:-1])
    return np.linalg.solve(np.eye(n) - Q, b[..., None])[..., 0]


def _check_cap(m, cap):
    total = n_policies(m)
    if total > cap:
        raise InputError(f"{total} policies exceed the enumeration cap {cap}")
    return total


def evaluate_policy(m: MdpModel, policy) -> PolicyEval:
    policy = tuple(int(a) for a in policy)
    P = _policy_matrix(m, policy)
    r = np.array([m.actions[i][a].cost for i, a in enumerate(policy)])
    pi = _stationary(P)
    return PolicyEval(policy, pi, float(pi @ r), _hitting(P, m.recurrent_state))


def iter_policy_evals(m: MdpModel, cap: int = POLICY_CAP):
    """Yield ``(policies, stationary, average_cost, P)`` batches."""
    total = _check_cap(m, cap)
    tables = _dense_tables(m)
    for start in range(0, total, _BATCH):
        pols = _decode(m, start, min(total, start + _BATCH))
        P, r = _batch(m, tables, pols)
        try:
            pi = _stationary(P)
        except np.linalg.LinAlgError as exc:
            raise InputError("singular chain: model is not unichain") from exc
        yield pols, pi, np.einsum("bi,bi->b", pi, r), P


def brute_force_lambda_star(m: MdpModel, cap: int = POLICY_CAP, tie_tol: float = 1e-12):
    """Optimal average cost and the lexicographically first optimal policy."""
    best = np.inf
    vals, pols_all = [], []
    for pols, _, lam, _ in iter_policy_evals(m, cap):
        vals.append(lam)
        pols_all.append(pols)
        best = min(best, float(lam.min()))
    lam = np.concatenate(vals)
    k = int(np.flatnonzero(lam <= best + tie_tol)[0])
    return float(lam[k]), tuple(int(a) for a in np.concatenate(pols_all)[k])


def max_stationary_residual(m: MdpModel, cap: int = POLICY_CAP) -> float:
    worst = 0.0
    for _, pi, _, P in iter_policy_evals(m, cap):
        res = np.abs(np.einsum("bi,bij->bj", pi, P) - pi).max()
        worst = max(worst, float(res))
    return worst


def hitting_time_bound(m: MdpModel, recurrent_state: int | None = None,
                       cap: int = POLICY_CAP) -> float:
    """``max_pi N_pi(n)``: the longest expected return time to the recurrent state."""
    rec = m.recurrent_state if recurrent_state is None else recurrent_state
    total = _check_cap(m, cap)
    tables = _dense_tables(m)
    worst = 0.0
    for start in range(0, total, _BATCH):
        pols = _decode(m, start, min(total, start + _BATCH))
        P, _ = _batch(m, tables, pols)
        N = _hitting(P, rec)
        worst = max(worst, float(N[:, rec].max()))
    return worst


def oracle_step_size(m: MdpModel, cap: int = POLICY_CAP) -> float:
    return 1.0 / hitting_time_bound(m, cap=cap)
