"""Derivative of a transform at the origin, shared by the mean-value ops.

Restricted means come out of transforms as ``-d/dw f(w)`` at ``w -> 0+``.
The transforms cannot be evaluated at exactly zero (the pencil is singular
there), so the slope is estimated from the evaluation floor upward with
Richardson-extrapolated forward differences at two base steps; the pair of
estimates doubles as a consistency check.
"""

from __future__ import annotations

import warnings
from typing import Callable

import numpy as np

from .spectral import OMEGA_FLOOR


def derivative_at_zero(f: Callable, scale: float):
    """Return ``(-df/dw, check)`` at ``w -> 0+`` for a real-limit transform.

    ``f`` maps a complex frequency array ``(K,)`` to values ``(K, ...)``;
    ``scale`` sets the base step ``eps = 1e-6 * max(1, scale)``.  Central
    slopes centered at ``eps/2``, ``eps/4`` and ``eps/8`` are Richardson
    extrapolated to the origin; the primary estimate uses the finer pair and
    the check value the coarser pair (they agree to ~1e-4 relative for
    smooth transforms).  All nodes stay above the evaluation floor.
    """
    eps = 1e-6 * max(1.0, float(scale))
    if eps / 8 <= OMEGA_FLOOR:
        eps = 16.0 * OMEGA_FLOOR
    nodes = eps * np.array([0.125, 0.25, 0.375, 0.5, 0.75, 1.5], dtype=complex)
    vals = np.asarray(f(nodes)).real
    slope_full = (vals[5] - vals[3]) / eps            # centered at eps
    slope_half = (vals[4] - vals[1]) / (eps / 2)      # centered at eps/2
    slope_quarter = (vals[2] - vals[0]) / (eps / 4)   # centered at eps/4
    richardson_fine = 2.0 * slope_quarter - slope_half
    richardson_coarse = 2.0 * slope_half - slope_full
    return -richardson_fine, -richardson_coarse


def warn_if_inconsistent(value, check, what: str) -> None:
    """Warn when the two step-size estimates disagree beyond 1e-3 relative."""
    spread = np.max(np.abs(np.asarray(value) - np.asarray(check)))
    scale = max(float(np.max(np.abs(np.asarray(value)))), 1e-12)
    if spread > 1e-3 * scale:
        warnings.warn(
            f"{what}: step-size estimates differ by {spread / scale:.2e} relative",
            stacklevel=3,
        )
