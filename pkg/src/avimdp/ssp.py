"""The lambda-parameterised stochastic shortest path (SSP) transform.

Every transition into the recurrent state is rerouted to an absorbing,
zero-cost terminal. What remains is ``K`` state-action rows with a cost
``r(i,a)``, a terminal mass ``tau(i,a)`` and a substochastic row over the
non-recurrent states. Internally the recurrent state is moved to the last
position, so its column in ``P`` is empty and ``h[-1]`` is output-only.

All vectors passed to the operators here are in SSP order; use
:meth:`SspModel.to_original` / :meth:`SspModel.from_original` to convert.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np
from scipy import sparse

from .errors import MdpValidationError, NonConvergenceError
from .model import MdpModel, validate_mdp

FEAS_TOL = 1e-12
_DENSE_BLOCK_LIMIT = 2_000_000


class Sweep(str, Enum):
    JACOBI = "jacobi"
    GAUSS_SEIDEL = "gs"


@dataclass(frozen=True, eq=False)
class SspModel:
    """Row-compressed SSP (or discounted) system with ``K`` state-action rows.

    Rows ``state_ptr[i]:state_ptr[i+1]`` belong to state ``i``. ``P`` is a
    ``(K, n)`` CSR matrix; ``tau`` is the mass sent to the terminal.
    """

    n_states: int
    state_ptr: np.ndarray
    cost: np.ndarray
    tau: np.ndarray
    P: sparse.csr_matrix
    order: np.ndarray

    @property
    def n_rows(self) -> int:
        return len(self.cost)

    @cached_property
    def starts(self) -> np.ndarray:
        return self.state_ptr[:-1]

    @cached_property
    def state_of(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_states), np.diff(self.state_ptr))

    @cached_property
    def rowsum(self) -> np.ndarray:
        return np.asarray(self.P.sum(axis=1)).ravel()

    @cached_property
    def tail_factor(self) -> float:
        """``q / (1 - q)`` for the largest row mass ``q`` kept inside the state space.

        For any ``h`` and one sweep ``g`` of it, ``h_lam - g`` lies between
        ``tail_factor`` times the most negative and most positive entry of
        ``g - h``. Infinite when some row keeps all of its mass.
        """
        q = float(self.rowsum.max()) if self.n_rows else 0.0
        return q / (1.0 - q) if q < 1.0 else np.inf

    @cached_property
    def accel_rows(self) -> np.ndarray:
        """Rows with positive terminal mass, the only ones a shift can bind."""
        return np.flatnonzero(self.tau > 0.0)

    @cached_property
    def gs_blocks(self) -> list:
        dense = self.n_rows * self.n_states <= _DENSE_BLOCK_LIMIT
        blocks = []
        for i in range(self.n_states):
            lo, hi = self.state_ptr[i], self.state_ptr[i + 1]
            blk = self.P[lo:hi]
            blocks.append((self.cost[lo:hi], blk.toarray() if dense else blk))
        return blocks

    def to_original(self, h) -> np.ndarray:
        out = np.empty(self.n_states)
        out[self.order] = h
        return out

    def from_original(self, h) -> np.ndarray:
        return np.asarray(h, dtype=float)[self.order]

    def reduced_row(self, i: int, a: int) -> dict[int, float]:
        """Sparse reduced row of (SSP state ``i``, action ``a``)."""
        r = self.state_ptr[i] + a
        lo, hi = self.P.indptr[r], self.P.indptr[r + 1]
        return dict(zip(self.P.indices[lo:hi].tolist(), self.P.data[lo:hi].tolist()))

    def terminal_mass(self, i: int, a: int) -> float:
        return float(self.tau[self.state_ptr[i] + a])


def _assemble(n, rows, order) -> SspModel:
    """``rows``: per SSP state, list of (cost, tau, {col: p})."""
    ptr = np.zeros(n + 1, dtype=np.int64)
    cost, tau, indptr, indices, data = [], [], [0], [], []
    for i, acts in enumerate(rows):
        ptr[i + 1] = ptr[i] + len(acts)
        for c, t, entries in acts:
            cost.append(c)
            tau.append(t)
            for j in sorted(entries):
                indices.append(j)
                data.append(entries[j])
            indptr.append(len(indices))
    P = sparse.csr_matrix(
        (np.array(data, dtype=float), np.array(indices, dtype=np.int64),
         np.array(indptr, dtype=np.int64)),
        shape=(len(cost), n),
    )
    return SspModel(n, ptr, np.array(cost, dtype=float), np.array(tau, dtype=float),
                    P, np.asarray(order, dtype=np.int64))


def build_ssp(m: MdpModel, recurrent_state: int | None = None) -> SspModel:
    """Transform ``m`` into its lambda-independent SSP form.

    Raises :class:`MdpValidationError` if ``m`` fails validation for the
    given recurrent state.
    """
    rec = m.recurrent_state if recurrent_state is None else recurrent_state
    report = validate_mdp(m, rec)
    if not report.ok:
        raise MdpValidationError(report)
    n = m.n_states
    order = [i for i in range(n) if i != rec] + [rec]
    pos = {orig: k for k, orig in enumerate(order)}
    rows = []
    for orig in order:
        acts = []
        for act in m.actions[orig]:
            t = 0.0
            entries = {}
            for j, p in act.row:
                if j == rec:
                    t += p
                elif p != 0.0:
                    entries[pos[j]] = p
            acts.append((act.cost, t, entries))
        rows.append(acts)
    return _assemble(n, rows, order)


def discounted_ssp(m: MdpModel, alpha: float) -> SspModel:
    """The alpha-discounted operator written as an SSP with terminal mass ``1-alpha``.

    No state is removed and no reordering happens; use with ``lam=0``.
    """
    rows = []
    for acts in m.actions:
        rows.append(
            [(act.cost, 1.0 - alpha, {j: alpha * p for j, p in act.row if p != 0.0})
             for act in acts]
        )
    return _assemble(m.n_states, rows, np.arange(m.n_states))


def _segment_min(s: SspModel, q: np.ndarray) -> np.ndarray:
    return np.minimum.reduceat(q, s.starts)


def _segment_argmin(s: SspModel, q: np.ndarray, qmin: np.ndarray) -> np.ndarray:
    k = len(q)
    idx = np.where(q <= qmin[s.state_of], np.arange(k), k)
    return np.minimum.reduceat(idx, s.starts) - s.starts


def q_values(s: SspModel, lam: float, h) -> np.ndarray:
    return s.cost - lam + s.P @ np.asarray(h, dtype=float)


def apply_T(s: SspModel, lam: float, h, with_policy: bool = False):
    """Jacobi Bellman operator ``min_a {r - lam + sum_j p_ij h(j)}``.

    With ``with_policy`` also returns the per-state argmin (lowest action
    index on ties).
    """
    q = q_values(s, lam, h)
    out = _segment_min(s, q)
    if with_policy:
        return out, _segment_argmin(s, q, out)
    return out


def apply_T_gs(s: SspModel, lam: float, h, with_policy: bool = False):
    """Gauss-Seidel sweep in state order, reusing already-updated entries."""
    g = np.array(h, dtype=float)
    policy = np.empty(s.n_states, dtype=np.int64) if with_policy else None
    for i, (c, blk) in enumerate(s.gs_blocks):
        q = c - lam + blk @ g
        a = int(np.argmin(q))
        g[i] = q[a]
        if with_policy:
            policy[i] = a
    if with_policy:
        return g, policy
    return g


def apply_sweep(s: SspModel, lam: float, h, sweep: Sweep = Sweep.JACOBI):
    if Sweep(sweep) is Sweep.GAUSS_SEIDEL:
        return apply_T_gs(s, lam, h)
    return apply_T(s, lam, h)


def greedy_policy(s: SspModel, lam: float, h) -> np.ndarray:
    return apply_T(s, lam, h, with_policy=True)[1]


def slack(s: SspModel, lam: float, h, ph=None) -> np.ndarray:
    """Per-row slack ``r - lam - (h(i) - sum_j p_ij h(j))`` of the H_lambda constraints."""
    h = np.asarray(h, dtype=float)
    if ph is None:
        ph = s.P @ h
    return s.cost - lam - h[s.state_of] + ph


@dataclass(frozen=True)
class Feasibility:
    ok: bool
    violation: float

    def __bool__(self):
        return self.ok


def in_H(s: SspModel, lam: float, h, tol: float = FEAS_TOL) -> Feasibility:
    """Membership of ``h`` in ``{h : h <= T_lam h}`` and the worst violation."""
    worst = max(0.0, -float(slack(s, lam, h).min()))
    return Feasibility(bool(worst <= tol), worst)


def descent_vector(s: SspModel, max_iter: int = 1_000_000):
    """Vector ``u`` with ``u(i) - sum_j p_ij(a) u(j) <= -1/2`` on every row.

    Value iteration on the all-costs ``-1`` SSP, stopped at residual 1/2.
    Returns ``(u, sweeps)``.
    """
    u = np.zeros(s.n_states)
    for it in range(1, max_iter + 1):
        g = _segment_min(s, -1.0 + s.P @ u)
        if np.max(np.abs(g - u)) <= 0.5:
            return u, it
        u = g
    raise NonConvergenceError("descent vector did not converge", u, None, max_iter)


def termination_horizon(s: SspModel):
    """Vector ``W`` with ``W >= 1 + P_a W`` on every row, and the sweeps spent.

    ``W(i)`` bounds the expected number of steps to termination from ``i``
    under any policy.
    """
    u, sweeps = descent_vector(s)
    return -2.0 * u, sweeps


def feasible_start(s: SspModel, lam: float, h=None, horizon=None):
    """Move ``h`` (default zeros) into H_lam. Returns ``(h, extra_sweeps)``.

    A vector already in H_lam is returned unchanged. Otherwise it is
    pushed down to the boundary of H_lam either uniformly, ``h + beta*e``
    (possible when the violated rows all have positive terminal mass), or
    along a termination horizon, ``h - c*W``; the smaller displacement wins.
    ``horizon`` is a precomputed ``W``; without one it is computed (and its
    sweeps reported) only when the uniform shift is unavailable.
    """
    h = np.zeros(s.n_states) if h is None else np.array(h, dtype=float)
    sl = slack(s, lam, h)
    if sl.min() >= 0.0:
        return h, 0
    best, size = None, np.inf
    no_mass = s.tau <= 0.0
    if not no_mass.any() or sl[no_mass].min() >= 0.0:
        rows = s.accel_rows
        beta = float(np.min(sl[rows] / s.tau[rows]))
        shifted = h + beta
        if slack(s, lam, shifted).min() >= -FEAS_TOL * max(1.0, float(np.abs(shifted).max())):
            best, size = shifted, -beta
    sweeps = 0
    if horizon is None and best is None:
        horizon, sweeps = termination_horizon(s)
    if horizon is not None:
        W = np.asarray(horizon, dtype=float)
        # every row has W(i) - P_a W >= 1, so this c restores all of them
        gain = W[s.state_of] - s.P @ W
        c = float(np.max(-sl / gain)) * (1.0 + 1e-9) + 1e-12
        if c * float(W.max()) < size:
            best = h - c * W
    return best, sweeps
