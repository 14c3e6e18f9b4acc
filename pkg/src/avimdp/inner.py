"""Converged inner solves ``h_lam`` of a fixed-lambda SSP."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .accel import ALPHA_MAX, Accel, extension_ratio, projective_ratio
from .errors import NonConvergenceError, PreconditionError
from .ssp import SspModel, Sweep, _segment_min, apply_T_gs, in_H

# an iterate counts as still inside H when T h >= h up to this relative slack
_GUARD_TOL = 1e-9


@dataclass(frozen=True)
class InnerConfig:
    sweep: Sweep = Sweep.JACOBI
    accel: Accel = Accel.NONE
    eps: float = 1e-9
    max_iter: int = 100_000
    alpha_max: float = ALPHA_MAX

    def __post_init__(self):
        object.__setattr__(self, "sweep", Sweep(self.sweep))
        object.__setattr__(self, "accel", Accel(self.accel))
        if not self.eps > 0:
            raise ValueError("eps must be positive")


def _monotone(g, h):
    return bool(np.all(g >= h - _GUARD_TOL * max(1.0, float(np.abs(h).max()))))


def sign_settled(g, d, band: float, horizon: float) -> int:
    """Certified sign of ``h_lam(n)`` from a sweep ``g`` with increment ``d``, or 0.

    ``horizon`` bounds the expected steps to termination from ``n``, so
    ``h_lam(n) - g(n)`` lies within ``(horizon - 1)`` times the extreme
    entries of ``d``. Returns +1 (resp. -1) only when ``h_lam(n) > band``
    (resp. ``< -band``) is guaranteed.
    """
    lo, hi = float(d.min()), float(d.max())
    if g[-1] + (lo * (horizon - 1.0) if lo < 0 else 0.0) > band:
        return 1
    if g[-1] + (hi * (horizon - 1.0) if hi > 0 else 0.0) < -band:
        return -1
    return 0


def _done(g, d, res, eps, stop, certifiable=True):
    if stop is None:
        return res <= eps
    if certifiable and sign_settled(g, d, *stop):
        return True
    # a probe that only needs a sign keeps going until it either has one or
    # has landed inside the band; without a certificate it stops as usual
    return res <= eps and (not certifiable or abs(g[-1]) <= stop[0])


def solve_ssp(s: SspModel, lam: float, cfg: InnerConfig = InnerConfig(), h0=None,
              callback=None, check: bool = True, sign_band: float | None = None,
              horizon: float | None = None):
    """Iterate ``h <- Z(T h)`` until ``||T h - h||_inf <= cfg.eps``.

    ``Z`` is the configured acceleration (identity for ``Accel.NONE``) and
    ``T`` the Jacobi or Gauss-Seidel operator. With acceleration ``h0``
    must lie in H_lam. Returns ``(h, operator_applications)``; the
    returned ``h`` is the last sweep output. ``callback(k, h)`` sees every
    iterate. With ``sign_band`` set the solve stops as soon as the sign of
    ``h_lam(n)`` is certified outside ``[-sign_band, sign_band]``, and a
    solve at tolerance continues until its ``h(n)`` is in the band or the
    sign is certified;
    ``horizon`` is a bound on the expected steps to termination from ``n``
    (default ``1 + s.tail_factor``).
    """
    h = np.zeros(s.n_states) if h0 is None else np.array(h0, dtype=float)
    if check and cfg.accel is not Accel.NONE:
        feas = in_H(s, lam, h)
        if not feas:
            raise PreconditionError(
                f"accelerated solve needs h0 in H_lambda (violation {feas.violation:.3g})"
            )
    stop = None
    if sign_band is not None:
        reach = 1.0 + s.tail_factor if horizon is None else float(horizon)
        stop = (sign_band, reach)
    if cfg.sweep is Sweep.JACOBI:
        return _solve_jacobi(s, lam, cfg, h, callback, stop)
    return _solve_gs(s, lam, cfg, h, callback, stop,
                     in_h=cfg.accel is not Accel.NONE)


def _solve_jacobi(s, lam, cfg, h, callback, stop=None):
    # P @ h is carried between iterations so each iteration costs one matvec
    ph = s.P @ h
    base = s.cost - lam
    res = np.inf
    for it in range(1, cfg.max_iter + 1):
        g = _segment_min(s, base + ph)
        d = g - h
        res = float(np.max(np.abs(d)))
        if _done(g, d, res, cfg.eps, stop):
            if callback:
                callback(it, g)
            return g, it
        pg = s.P @ g
        if cfg.accel is not Accel.NONE and _monotone(g, h):
            sl = base - g[s.state_of] + pg
            if cfg.accel is Accel.PROJECTIVE:
                alpha, _ = projective_ratio(s, sl)
                h = g + alpha
                ph = pg + alpha * s.rowsum
            else:
                d = g - h
                pd = pg - ph
                alpha, _ = extension_ratio(s, sl, d[s.state_of] - pd, cfg.alpha_max)
                h = g + alpha * d
                ph = pg + alpha * pd
        else:
            h, ph = g, pg
        if callback:
            callback(it, h)
    raise NonConvergenceError(
        f"inner solve did not reach eps={cfg.eps} in {cfg.max_iter} sweeps "
        f"(residual {res:.3g})", h, res, cfg.max_iter)


def _solve_gs(s, lam, cfg, h, callback, stop=None, in_h=False):
    # |T g - g| <= 2 |T_gs h - h| for g = T_gs h
    # the sign bounds hold for a Gauss-Seidel sweep only from a point of H
    eps = 0.5 * cfg.eps
    base = s.cost - lam
    res = np.inf
    ph = s.P @ h if cfg.accel is Accel.LINEAR_EXTENSION else None
    for it in range(1, cfg.max_iter + 1):
        g = apply_T_gs(s, lam, h)
        d = g - h
        res = float(np.max(np.abs(d)))
        if _done(g, d, res, eps, stop, in_h):
            if callback:
                callback(it, g)
            return g, it
        if cfg.accel is not Accel.NONE and _monotone(g, h):
            pg = s.P @ g
            sl = base - g[s.state_of] + pg
            if cfg.accel is Accel.PROJECTIVE:
                alpha, _ = projective_ratio(s, sl)
                h = g + alpha
            else:
                pd = pg - ph
                alpha, _ = extension_ratio(s, sl, d[s.state_of] - pd, cfg.alpha_max)
                h = g + alpha * d
                ph = pg + alpha * pd
            in_h = True
        else:
            # a sweep that did not decrease anything lands in H
            in_h = bool(np.all(d >= 0.0))
            h = g
            if ph is not None:
                ph = s.P @ h
        if callback:
            callback(it, h)
    raise NonConvergenceError(
        f"inner solve did not reach eps={cfg.eps} in {cfg.max_iter} sweeps "
        f"(residual {res:.3g})", h, res, cfg.max_iter)
