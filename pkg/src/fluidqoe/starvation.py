"""Starvation analysis: first-passage transform, CDF, and severity measures.

``H[i, j](x, t)`` is the probability that a buffer holding ``x`` frames at
playback start runs empty by playback time ``t`` with the source in state
``j`` at that moment, given initial state ``i``.  Its transform over the
playback pencil is assembled from the negative-root modes; inversion gives
the CDF, the value at the file-exhaustion horizon ``Z/mu`` gives the overall
starvation probability, and the slope of the transform at the origin gives
the restricted mean time to starve.

Columns for non-draining states are identically zero: the buffer cannot hit
empty while it is growing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._fdiff import derivative_at_zero, warn_if_inconsistent
from .errors import DomainError, NumericError, Unstable
from .inversion import (DEFAULT_PARAMS, InversionParams, atom_steps,
                        invert_cdf, subtract_atoms)
from .model import FluidModel, SessionParams, mean_drift, stationary_distribution
from .spectral import TwoStateParams, transform_matrix, two_state_transform
from .startup import prefetch_end_distribution


def starvation_evaluator(model: FluidModel, x: float, method: str = "auto"):
    """Frequency-array evaluator for the starvation transform matrix.

    Two-state models use the closed form unless ``method='generic'``.
    """
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    if method not in ("auto", "closed", "generic"):
        raise ValueError(f"method must be auto/closed/generic, got {method!r}")
    if method == "closed" or (method == "auto" and model.n_states == 2):
        p = TwoStateParams.from_model(model)
        return lambda omegas: two_state_transform(p, x, omegas, kind="starvation")

    def evaluate(omegas):
        omegas = np.atleast_1d(np.asarray(omegas, dtype=complex))
        return np.stack([transform_matrix(model, x, w, "playback") for w in omegas])

    return evaluate


def starvation_transform(model: FluidModel, x: float, omega, method: str = "auto") -> np.ndarray:
    """Starvation transform matrix ``H~[i, j](x, w)`` at one frequency."""
    ev = starvation_evaluator(model, x, method)
    return ev(np.atleast_1d(np.asarray(omega, dtype=complex)))[0]


def starvation_atoms(model: FluidModel, x: float):
    """Deterministic-path atoms of the starvation-time law.

    Starting in a draining state, the no-transition path empties the buffer
    at exactly ``x / (mu - lam_i)`` with probability ``exp(q_ii t_i)``; these
    are the only point masses.  Returns ``(times, masses)`` per state, with
    infinite time and zero mass for non-draining states.  Extracting them
    before numerical inversion removes the jump the inverter cannot
    represent (it converges to jump midpoints and rings nearby).
    """
    rates = model.mu - model.lam
    exit_rates = -np.diag(model.Q)
    times = np.where(rates > 0, x / np.where(rates > 0, rates, 1.0), np.inf)
    masses = np.where(rates > 0, np.exp(-exit_rates * times), 0.0)
    return times, masses


def earliest_starvation_time(model: FluidModel, x: float) -> float:
    """Hard lower support bound of the starvation time: fastest possible drain."""
    fastest = float(model.mu - np.min(model.lam))
    if fastest <= 0:
        return np.inf
    return x / fastest


def starvation_cdf(model: FluidModel, x: float, t: float,
                   params: InversionParams = DEFAULT_PARAMS,
                   method: str = "auto") -> np.ndarray:
    """CDF matrix ``H[i, j](x, t)``, clamped to [0, 1].

    Exactly zero below the drain-speed support bound; elsewhere obtained by
    numerical inversion of the transform.
    """
    if not (t > 0):
        raise DomainError(f"t must be > 0, got {t}")
    L = model.n_states
    if x > 0 and t < earliest_starvation_time(model, x):
        return np.zeros((L, L))
    ev = starvation_evaluator(model, x, method)
    times, masses = starvation_atoms(model, x)
    cont = invert_cdf(subtract_atoms(ev, times, masses), t, params)
    return np.clip(cont + atom_steps(times, masses, t), 0.0, 1.0)


def starvation_probability(model: FluidModel, session: SessionParams,
                           params: InversionParams = DEFAULT_PARAMS,
                           method: str = "auto") -> float:
    """Overall probability of at least one starvation during the session.

    Entry states follow the stationary distribution; the state at playback
    start is propagated through the fill-completion matrix; starvation must
    occur before the playback clock exhausts the file at ``Z/mu``.  A session
    whose threshold covers the whole file cannot starve.
    """
    if session.x >= session.Z:
        return 0.0
    if np.all(model.lam >= model.mu):
        return 0.0
    pi = stationary_distribution(model)
    fill = prefetch_end_distribution(model, 0.0, session.x)
    horizon = session.Z / model.mu
    cdf = starvation_cdf(model, session.x, horizon, params, method)
    value = float(pi @ fill @ cdf.sum(axis=1))
    return float(np.clip(value, 0.0, 1.0))


@dataclass(frozen=True)
class SeverityMatrix:
    """Restricted mean starvation times ``D[i, j]`` in seconds.

    ``D[i, j]`` weights the starvation time by the event "starve in state j
    from initial state i"; small entries mean starvations come early and
    often.  Entries for non-draining terminal states are zero.
    """

    D: np.ndarray


def mean_playback_time(model: FluidModel, x: float,
                       method: str = "auto") -> SeverityMatrix:
    """Restricted mean time to starvation from the transform slope at zero.

    Requires strictly negative mean drift so the mean exists; raises
    :class:`Unstable` otherwise.  Entries are clamped at zero after
    verifying they are no more negative than -1e-8 (anything worse signals a
    broken transform).
    """
    if not (x > 0):
        raise DomainError(f"x must be > 0, got {x}")
    report = mean_drift(model)
    if report.drift >= 0:
        raise Unstable(
            f"mean drift {report.drift:g} >= 0: restricted mean may diverge"
        )
    ev = starvation_evaluator(model, x, method)
    scale = float(np.max(np.abs(np.diag(model.Q))))
    D, check = derivative_at_zero(ev, scale)
    warn_if_inconsistent(D, check, "mean playback time")
    if np.any(D < -1e-8):
        raise NumericError(
            f"mean playback time produced entry {float(np.min(D)):g} < -1e-8"
        )
    return SeverityMatrix(D=np.clip(D, 0.0, None))
