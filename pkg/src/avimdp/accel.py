"""Projective and linear-extension acceleration steps.

Both move a point of H_lam along an improving direction to the boundary of
H_lam. Maximising the step reduces to a ratio test over the rows whose
constraint tightens along the direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import PreconditionError, StructuralError
from .ssp import FEAS_TOL, SspModel, in_H, slack

SLACK_ZERO = 1e-14
ALPHA_MAX = 1e6


class Accel(str, Enum):
    NONE = "none"
    PROJECTIVE = "proj"
    LINEAR_EXTENSION = "linext"


@dataclass(frozen=True)
class AccelStep:
    """Outcome of one acceleration step.

    ``binding`` is the (SSP state, action) of the row that stopped the
    step, or ``None`` when the step hit the ``alpha_max`` cap or the
    direction was zero. ``scanned`` counts the rows the ratio test read.
    """

    alpha: float
    binding: tuple[int, int] | None
    vector: np.ndarray
    scanned: int
    capped: bool = False


def _row_to_pair(s: SspModel, row: int) -> tuple[int, int]:
    i = int(s.state_of[row])
    return i, int(row - s.starts[i])


def _clip(sl):
    return np.where(sl < SLACK_ZERO, 0.0, sl)


def projective_ratio(s: SspModel, sl: np.ndarray):
    """Largest uniform shift keeping every row feasible: ``(alpha, row)``."""
    rows = s.accel_rows
    if len(rows) == 0:
        raise StructuralError("no row has positive terminal mass; shift is unbounded")
    ratios = _clip(sl[rows]) / s.tau[rows]
    k = int(np.argmin(ratios))
    return float(ratios[k]), int(rows[k])


def extension_ratio(s: SspModel, sl: np.ndarray, coeff: np.ndarray,
                    alpha_max: float = ALPHA_MAX):
    """Largest ``alpha`` along a direction with per-row coefficients ``coeff``.

    Returns ``(alpha, row)``; ``row`` is ``None`` when the cap binds.
    """
    pos = np.flatnonzero(coeff > 0.0)
    if len(pos) == 0:
        return alpha_max, None
    ratios = _clip(sl[pos]) / coeff[pos]
    k = int(np.argmin(ratios))
    if ratios[k] >= alpha_max:
        return alpha_max, None
    return float(ratios[k]), int(pos[k])


def projective_step(s: SspModel, lam: float, h, check: bool = True) -> AccelStep:
    """Shift ``h`` by ``alpha * e`` up to the boundary of H_lam."""
    h = np.asarray(h, dtype=float)
    if check:
        feas = in_H(s, lam, h)
        if not feas:
            raise PreconditionError(
                f"projective step needs h in H_lambda (violation {feas.violation:.3g})"
            )
    sl = slack(s, lam, h)
    alpha, row = projective_ratio(s, sl)
    return AccelStep(alpha, _row_to_pair(s, row), h + alpha, len(s.accel_rows))


def linear_extension_step(s: SspModel, lam: float, h_prev, h_cur,
                          alpha_max: float = ALPHA_MAX, check: bool = True) -> AccelStep:
    """Extend ``h_cur`` along ``h_cur - h_prev`` to the boundary of H_lam.

    ``h_cur`` is normally ``T h_prev`` (a Gauss-Seidel sweep also works);
    the direction must be nonnegative.
    """
    h_prev = np.asarray(h_prev, dtype=float)
    h_cur = np.asarray(h_cur, dtype=float)
    d = h_cur - h_prev
    if check:
        feas = in_H(s, lam, h_prev)
        if not feas:
            raise PreconditionError(
                f"linear extension needs h_prev in H_lambda (violation {feas.violation:.3g})"
            )
        if d.min() < -FEAS_TOL * max(1.0, np.abs(h_cur).max()):
            raise PreconditionError("extension direction h_cur - h_prev is not nonnegative")
    if not d.any():
        return AccelStep(0.0, None, h_cur.copy(), 0)
    ph = s.P @ h_cur
    pd = s.P @ d
    sl = slack(s, lam, h_cur, ph)
    coeff = d[s.state_of] - pd
    alpha, row = extension_ratio(s, sl, coeff, alpha_max)
    binding = None if row is None else _row_to_pair(s, row)
    return AccelStep(alpha, binding, h_cur + alpha * d, int((coeff > 0).sum()),
                     capped=row is None)


def accelerate(s: SspModel, lam: float, accel: Accel, h_prev, h_cur,
               alpha_max: float = ALPHA_MAX) -> np.ndarray:
    """Apply the configured acceleration to the fresh iterate ``h_cur``."""
    accel = Accel(accel)
    if accel is Accel.PROJECTIVE:
        return projective_step(s, lam, h_cur, check=False).vector
    if accel is Accel.LINEAR_EXTENSION:
        return linear_extension_step(s, lam, h_prev, h_cur, alpha_max, check=False).vector
    return np.asarray(h_cur, dtype=float)
