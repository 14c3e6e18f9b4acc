"""Outer lambda iterations for the average-cost problem.

Sign convention: costs are minimised, so ``h_lam(n) < 0`` exactly when
``lam`` exceeds the optimal average cost.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .accel import ALPHA_MAX, Accel, accelerate
from .discounted import BoundsInterval, lambda_bounds_from_discounted, solve_discounted
from .errors import BracketError, InputError
from .inner import InnerConfig, solve_ssp
from .model import MdpModel
from .ssp import SspModel, Sweep, apply_sweep, apply_T, build_ssp, feasible_start, slack

log = logging.getLogger(__name__)

SECANT_MIN_DENOM = 1e-14


class Algorithm(str, Enum):
    GAVI1 = "gavi1"
    GAVI2 = "gavi2"
    GAVI3 = "gavi3"
    BERTSEKAS = "bertsekas"
    BERTSEKAS_BOUNDED = "bertsekas-bounded"


def parse_lambda0(spec):
    """``"rmax"`` | ``"disc:ALPHA"`` | number -> ``(kind, value)``."""
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return "explicit", float(spec)
    text = str(spec).strip()
    if text == "rmax":
        return "rmax", None
    if text.startswith("disc:"):
        alpha = float(text[5:])
        if not 0.0 <= alpha < 1.0:
            raise InputError(f"discount factor must be in [0, 1), got {alpha}")
        return "disc", alpha
    try:
        return "explicit", float(text)
    except ValueError:
        raise InputError(f"unknown lambda0 policy {spec!r}") from None


@dataclass(frozen=True)
class SolverConfig:
    algorithm: Algorithm = Algorithm.GAVI1
    sweep: Sweep = Sweep.JACOBI
    accel: Accel = Accel.NONE
    eps_outer: float = 1e-8
    eps_inner: float = 1e-9
    # None -> 0.5 / n_states
    gamma: float | None = None
    gamma_oracle: bool = False
    lambda0: str | float = "rmax"
    max_outer: int = 100_000
    max_inner: int = 100_000
    alpha_max: float = ALPHA_MAX
    phase1_accel: Accel = Accel.PROJECTIVE
    phase1_eps: float = 1e-9

    def __post_init__(self):
        for name, kind in (("algorithm", Algorithm), ("sweep", Sweep),
                           ("accel", Accel), ("phase1_accel", Accel)):
            object.__setattr__(self, name, kind(getattr(self, name)))
        if not (self.eps_outer > 0 and self.eps_inner > 0 and self.phase1_eps > 0):
            raise InputError("tolerances must be positive")
        if self.gamma is not None and not self.gamma > 0:
            raise InputError("fixed step size must be positive")
        parse_lambda0(self.lambda0)

    @property
    def inner(self) -> InnerConfig:
        return InnerConfig(self.sweep, self.accel, self.eps_inner, self.max_inner,
                           self.alpha_max)

    @property
    def label(self) -> str:
        """Short name in the XAYN scheme (``PAVI3``, ``LAGS2``, ``BertsekasGS``...)."""
        y = "GS" if self.sweep is Sweep.GAUSS_SEIDEL else "VI"
        if self.algorithm in (Algorithm.BERTSEKAS, Algorithm.BERTSEKAS_BOUNDED):
            suffix = "-bounded" if self.algorithm is Algorithm.BERTSEKAS_BOUNDED else ""
            return f"Bertsekas{y}{suffix}"
        x = {Accel.NONE: "", Accel.PROJECTIVE: "PA", Accel.LINEAR_EXTENSION: "LA"}[self.accel]
        return f"{x}{y}{self.algorithm.value[-1]}"


@dataclass
class Solution:
    """Result of an outer solve. ``h`` and ``policy`` use original state order."""

    lam: float
    h: np.ndarray
    policy: np.ndarray
    outer_iterations: int
    operator_applications: int
    trajectory: list[tuple[float, float]]
    status: str
    recurrent_state: int
    residual: float = float("nan")
    interval: tuple[float, float] | None = None
    bounds: BoundsInterval | None = None
    phase1_iterations: int = 0
    label: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def h_n(self) -> float:
        return float(self.h[self.recurrent_state])

    def to_dict(self) -> dict:
        return {
            "lambda": float(self.lam),
            "h": [float(x) for x in self.h],
            "policy": [int(a) for a in self.policy],
            "outer_iterations": int(self.outer_iterations),
            "operator_applications": int(self.operator_applications),
            "trajectory": [[float(a), float(b)] for a, b in self.trajectory],
            "status": self.status,
        }

    def to_json(self, indent=None) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _finish(s, cfg, lam, h, outer, ops, traj, status, **extra) -> Solution:
    g, policy = apply_T(s, lam, h, with_policy=True)
    residual = float(np.max(np.abs(g - h))) if np.all(np.isfinite(h)) else float("inf")
    return Solution(
        lam=float(lam), h=s.to_original(h), policy=s.to_original(policy).astype(np.int64),
        outer_iterations=outer, operator_applications=ops, trajectory=traj,
        status=status, recurrent_state=int(s.order[-1]), residual=residual,
        label=cfg.label, **extra,
    )


def default_gamma(s: SspModel, cfg: SolverConfig) -> float:
    return cfg.gamma if cfg.gamma is not None else 0.5 / s.n_states


def choose_lambda0(s: SspModel, cfg: SolverConfig, bounds: BoundsInterval | None = None):
    kind, value = parse_lambda0(cfg.lambda0)
    if kind == "rmax":
        return float(s.cost.max())
    if kind == "disc":
        if bounds is None:
            raise InputError("discounted-bound lambda0 needs a BoundsInterval")
        return float(bounds.upper)
    return value


def secant_root(l0, h0, l1, h1):
    """Root of the line through ``(l0, h0)`` and ``(l1, h1)``; ``None`` if flat."""
    dh = h1 - h0
    if abs(dh) < SECANT_MIN_DENOM:
        return None
    return l1 - h1 * (l1 - l0) / dh


def _start(s, lam, h, accel):
    if accel is Accel.NONE:
        return (np.zeros(s.n_states) if h is None else h), 0
    return feasible_start(s, lam, h)


def solve_gavi1(s: SspModel, cfg: SolverConfig, lambda0=None, gamma=None) -> Solution:
    """Fixed-lambda inner solves with a secant-capped step on ``lambda``."""
    lam = choose_lambda0(s, cfg) if lambda0 is None else float(lambda0)
    gamma = default_gamma(s, cfg) if gamma is None else gamma
    inner = cfg.inner
    h, ops = None, 0
    traj = []
    for k in range(1, cfg.max_outer + 1):
        h, extra = _start(s, lam, h, cfg.accel)
        h, it = solve_ssp(s, lam, inner, h, check=False)
        ops += extra + it
        hn = float(h[-1])
        traj.append((lam, hn))
        if abs(hn) <= cfg.eps_outer:
            return _finish(s, cfg, lam, h, k, ops, traj, "converged")
        nxt = lam + gamma * hn
        if len(traj) >= 2:
            root = secant_root(*traj[-2], *traj[-1])
            if root is not None:
                nxt = min(nxt, root)
        lam = nxt
    return _finish(s, cfg, lam, h, cfg.max_outer, ops, traj, "max-iter")


def solve_gavi3(s: SspModel, cfg: SolverConfig, bracket=None) -> Solution:
    """Bisection on ``lambda`` using the sign of ``h_lam(n)``."""
    if bracket is None:
        bracket = (float(s.cost.min()), float(s.cost.max()))
    lo, hi = map(float, bracket)
    if lo > hi:
        raise InputError(f"empty bracket [{lo}, {hi}]")
    inner = cfg.inner
    # h_hi stays feasible for every lambda below the current upper end
    h_hi, ops = _start(s, hi, None, cfg.accel)
    h_last = None
    saw_neg = saw_pos = False
    traj = []

    def probe(lam, warm):
        nonlocal ops
        h0 = warm
        if cfg.accel is not Accel.NONE:
            h0, extra = feasible_start(s, lam, warm)
            ops += extra
        # only the sign matters until the probe lands inside the tolerance band
        h, it = solve_ssp(s, lam, inner, h0, check=False, sign_band=cfg.eps_outer)
        ops += it
        traj.append((lam, float(h[-1])))
        return h

    for k in range(1, cfg.max_outer + 1):
        mid = 0.5 * (lo + hi)
        if h_last is None:
            warm = h_hi
        elif cfg.accel is Accel.NONE:
            warm = h_last
        else:
            warm = _shift_or(s, mid, h_last, h_hi)
        h = probe(mid, warm)
        hn = float(h[-1])
        if abs(hn) <= cfg.eps_outer:
            return _finish(s, cfg, mid, h, k, ops, traj, "converged", interval=(lo, hi))
        if hn < 0:
            hi, h_hi, saw_neg = mid, h, True
        else:
            lo, saw_pos = mid, True
        h_last = h
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(mid)):
            break
    else:
        return _finish(s, cfg, mid, h, cfg.max_outer, ops, traj, "max-iter", interval=(lo, hi))

    # the bracket collapsed without meeting the tolerance: check the endpoint it collapsed to
    if not saw_neg or not saw_pos:
        end = hi if not saw_neg else lo
        h = probe(end, h_hi if end == hi else h_last)
        hn = float(h[-1])
        if abs(hn) <= cfg.eps_outer:
            return _finish(s, cfg, end, h, k + 1, ops, traj, "converged", interval=(lo, hi))
        err = BracketError(
            f"h_lambda(n) has the same sign at both ends of [{bracket[0]}, {bracket[1]}]"
        )
        err.operator_applications = ops
        raise err
    return _finish(s, cfg, mid, h, k, ops, traj, "max-iter", interval=(lo, hi))


def _shift_or(s, lam, h, fallback):
    """``h`` moved into H_lam by a uniform shift, or ``fallback`` if no shift works."""
    no_mass = s.tau <= 0.0
    if no_mass.any() and slack(s, lam, h)[no_mass].min() < 0.0:
        return fallback
    return h


def solve_gavi2(s: SspModel, cfg: SolverConfig, lambda0=None, gamma=None) -> Solution:
    """One sweep per lambda update; accelerate only while ``h(n) < 0``."""
    return _single_loop(s, cfg, lambda0, gamma, accel=cfg.accel, bounded=False)


def solve_bertsekas(s: SspModel, cfg: SolverConfig, use_projection_bounds: bool = False,
                    lambda0=None, gamma=None) -> Solution:
    """Relative value iteration in SSP form, optionally projecting lambda onto running bounds."""
    return _single_loop(s, cfg, lambda0, gamma, accel=Accel.NONE,
                        bounded=use_projection_bounds)


def _single_loop(s, cfg, lambda0, gamma, accel, bounded):
    lam = choose_lambda0(s, cfg) if lambda0 is None else float(lambda0)
    gamma = default_gamma(s, cfg) if gamma is None else gamma
    h, ops = _start(s, lam, None, accel)
    lo, hi = -np.inf, np.inf
    traj = []
    for k in range(1, cfg.max_outer + 1):
        g = apply_sweep(s, lam, h, cfg.sweep)
        ops += 1
        if bounded:
            if cfg.sweep is Sweep.JACOBI:
                jg = g
            else:
                # the running bounds need the Jacobi image of h
                jg = apply_T(s, lam, h)
                ops += 1
            step = np.append(jg[:-1] - h[:-1], jg[-1])
            lo = max(lo, lam + float(step.min()))
            hi = min(hi, lam + float(step.max()))
        if (accel is not Accel.NONE and h[-1] < 0
                and np.all(g >= h - 1e-9 * max(1.0, float(np.abs(h).max())))):
            h_new = accelerate(s, lam, accel, h, g, cfg.alpha_max)
        else:
            h_new = g
        hn = float(h_new[-1])
        traj.append((lam, hn))
        if not np.all(np.isfinite(h_new)) or not np.isfinite(lam):
            return _finish(s, cfg, lam, h, k, ops, traj, "diverged",
                           interval=(lo, hi) if bounded else None)
        diff = float(np.max(np.abs(h_new - h)))
        h = h_new
        if diff <= cfg.eps_outer and abs(hn) <= cfg.eps_outer:
            return _finish(s, cfg, lam, h, k, ops, traj, "converged",
                           interval=(lo, hi) if bounded else None)
        lam = lam + gamma * hn
        if bounded:
            lam = min(max(lam, lo), hi) if lo <= hi else 0.5 * (lo + hi)
    return _finish(s, cfg, lam, h, cfg.max_outer, ops, traj, "max-iter",
                   interval=(lo, hi) if bounded else None)


def solve_model(s: SspModel, cfg: SolverConfig, bounds: BoundsInterval | None = None,
                gamma=None) -> Solution:
    """Dispatch on ``cfg.algorithm`` with ``lambda0``/bracket taken from ``bounds`` if given."""
    alg = cfg.algorithm
    if alg is Algorithm.GAVI3:
        kind, _ = parse_lambda0(cfg.lambda0)
        if kind == "disc" and bounds is not None:
            try:
                return solve_gavi3(s, cfg, (bounds.lower, bounds.upper))
            except BracketError as exc:
                log.info("discounted bracket missed the root; widening to the cost range")
                sol = solve_gavi3(s, cfg)
                sol.operator_applications += exc.operator_applications
                sol.meta["bracket_widened"] = True
                return sol
        return solve_gavi3(s, cfg)
    lam0 = choose_lambda0(s, cfg, bounds)
    if alg is Algorithm.GAVI1:
        return solve_gavi1(s, cfg, lam0, gamma)
    if alg is Algorithm.GAVI2:
        return solve_gavi2(s, cfg, lam0, gamma)
    return solve_bertsekas(s, cfg, alg is Algorithm.BERTSEKAS_BOUNDED, lam0, gamma)


def solve(m: MdpModel, cfg: SolverConfig) -> Solution:
    """Full pipeline: SSP transform, optional discounted phase 1, then the outer solver."""
    s = build_ssp(m)
    bounds = None
    kind, alpha = parse_lambda0(cfg.lambda0)
    if kind == "disc":
        v, it = solve_discounted(m, alpha, cfg.phase1_accel, cfg.phase1_eps)
        bounds = lambda_bounds_from_discounted(v, alpha, it)
    gamma = None
    if cfg.gamma_oracle:
        from .oracle import oracle_step_size
        gamma = oracle_step_size(m)
    sol = solve_model(s, cfg, bounds, gamma)
    sol.bounds = bounds
    sol.phase1_iterations = bounds.iterations if bounds else 0
    return sol
