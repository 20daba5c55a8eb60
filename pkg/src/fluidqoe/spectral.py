"""Characteristic analysis of the fluid buffer at a complex frequency.

At frequency ``w`` the buffer transforms are built from the pencil

    (Q + s R - w I) phi = 0,     R = diag(effective rates)

whose finite eigenvalues ``s_k(w)`` and eigenvectors ``phi^k(w)`` drive the
exponential solution modes ``exp(s_k x) phi^k``.  ``playback`` mode uses
``R = diag(lam - mu)`` (first passage of the draining buffer), ``prefetch``
mode ``R = diag(-lam)`` (fill-to-threshold recast as depletion).

The polynomial degree in ``s`` equals the number of states with a nonzero
rate; zero-rate states are eliminated by a Schur complement and their
eigenvector components reconstructed afterwards.  For two-state models a
closed-form path (:func:`two_state_transform`) evaluates the same quantities
from the explicit quadratic, vectorized over frequency arrays; the generic
eigenvalue path is retained for every state count and cross-checks it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    BoundaryRootWarning,
    DefectivePencil,
    DegenerateRank,
    DimensionMismatch,
    DomainError,
    IllConditionedWarning,
    NonConvergence,
    ZeroArrivalState,
)
from .model import FluidModel, effective_rates

# Classification band: Re(s) < -SIGN_TOL is "negative"; |Re(s)| <= SIGN_TOL warns.
SIGN_TOL = 1e-12
# Real frequencies below this floor are lifted onto it; the pencil is singular
# in the limit w -> 0 (s = 0 is always a root there).
OMEGA_FLOOR = 1e-8
RESIDUAL_TOL = 1e-10
CONDITION_LIMIT = 1e12


def clip_omega(omega):
    """Lift real frequencies below the evaluation floor onto it."""
    om = complex(omega)
    if om.imag == 0.0 and 0.0 <= om.real < OMEGA_FLOOR:
        return complex(OMEGA_FLOOR)
    return om


@dataclass(frozen=True)
class SpectralSolution:
    """Roots and eigenvectors of the rate pencil at one frequency.

    ``roots`` is sorted by (real, imaginary) part; ``eigvecs[:, k]`` is the
    eigenvector of ``roots[k]``, scaled so its largest-magnitude entry is
    exactly 1 (deterministic normalization).
    """

    omega: complex
    mode: str
    rates: np.ndarray
    roots: np.ndarray
    eigvecs: np.ndarray
    negative_set: np.ndarray

    @property
    def n_roots(self) -> int:
        return self.roots.shape[0]


@dataclass(frozen=True)
class BoundaryCoefficients:
    """Solution ``a[k, j]`` of the boundary system for every target state j.

    ``root_indices`` names the roots (columns of the solution's eigvecs) the
    rows of ``a`` refer to; ``rows`` the model states the conditions were
    imposed on.  Columns of targets outside the feasible set are zero.
    """

    a: np.ndarray
    root_indices: np.ndarray
    rows: np.ndarray
    condition: float
    ill_conditioned: bool


def characteristic_roots(model: FluidModel, omega, mode: str = "playback") -> SpectralSolution:
    """All finite roots ``s_k`` of ``det(Q + s R - w I) = 0`` with eigenvectors.

    Zero-rate states reduce the degree; the reduced problem is solved on the
    nonzero-rate block and eigenvectors are lifted back to full length.
    Raises :class:`DegenerateRank` for a structurally singular pencil,
    :class:`NonConvergence` if the eigensolver fails or residuals are poor,
    and :class:`DefectivePencil` when a repeated root lacks an independent
    eigenvector.  Roots inside the sign band ``|Re s| <= 1e-12`` trigger a
    :class:`BoundaryRootWarning`.
    """
    om = clip_omega(omega)
    rates = effective_rates(model, mode)
    L = model.n_states
    M = model.Q - om * np.eye(L)

    nz = np.nonzero(rates != 0.0)[0]
    zero = np.nonzero(rates == 0.0)[0]
    if nz.size == 0:
        return SpectralSolution(
            omega=om, mode=mode, rates=rates,
            roots=np.zeros(0, dtype=complex),
            eigvecs=np.zeros((L, 0), dtype=complex),
            negative_set=np.zeros(0, dtype=int),
        )

    reduced = M[np.ix_(nz, nz)]
    if zero.size:
        Mzz = M[np.ix_(zero, zero)]
        try:
            lifted = np.linalg.solve(Mzz, M[np.ix_(zero, nz)])
        except np.linalg.LinAlgError as exc:
            raise DegenerateRank(
                f"zero-rate block is singular at omega={om}: {exc}"
            ) from exc
        reduced = reduced - M[np.ix_(nz, zero)] @ lifted

    # (reduced + s diag(r_nz)) phi = 0  =>  standard eigenproblem for s.
    try:
        s_vals, vecs = scipy.linalg.eig(reduced / -rates[nz, None].astype(complex))
    except scipy.linalg.LinAlgError as exc:
        raise NonConvergence(f"eigensolver failed at omega={om}: {exc}") from exc
    if not np.all(np.isfinite(s_vals)):
        raise NonConvergence(f"eigensolver returned non-finite roots at omega={om}")

    order = np.lexsort((s_vals.imag, s_vals.real))
    s_vals = s_vals[order]
    vecs = vecs[:, order]

    full = np.zeros((L, nz.size), dtype=complex)
    full[nz, :] = vecs
    if zero.size:
        full[zero, :] = -lifted @ vecs

    peak = np.argmax(np.abs(full), axis=0)
    full = full / full[peak, np.arange(full.shape[1])]

    scale = max(np.max(np.abs(model.Q)), 1.0)
    pencil_residual = (model.Q @ full + (full * rates[:, None]) * s_vals[None, :]
                       - om * full)
    worst = float(np.max(np.abs(pencil_residual)))
    if worst > RESIDUAL_TOL * scale * 100:
        raise NonConvergence(
            f"pencil residual {worst:g} at omega={om} exceeds tolerance"
        )

    _check_defective(s_vals, full, om)

    negative = np.nonzero(s_vals.real < -SIGN_TOL)[0]
    boundary = np.nonzero(np.abs(s_vals.real) <= SIGN_TOL)[0]
    if boundary.size:
        warnings.warn(
            f"{boundary.size} characteristic root(s) on the sign boundary at "
            f"omega={om}; classification is unreliable",
            BoundaryRootWarning,
            stacklevel=2,
        )
    return SpectralSolution(omega=om, mode=mode, rates=rates, roots=s_vals,
                            eigvecs=full, negative_set=negative)


def _check_defective(s_vals: np.ndarray, vecs: np.ndarray, om: complex) -> None:
    n = s_vals.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            gap = abs(s_vals[i] - s_vals[j])
            if gap <= 1e-8 * max(1.0, abs(s_vals[i])):
                pair = vecs[:, [i, j]]
                smallest = np.linalg.svd(pair, compute_uv=False)[-1]
                if smallest < 1e-8:
                    raise DefectivePencil(
                        f"repeated root {s_vals[i]} at omega={om} has a "
                        "deficient eigenspace"
                    )


def boundary_coefficients(sol: SpectralSolution, model: FluidModel,
                          mode: str | None = None) -> BoundaryCoefficients:
    """Coefficients ``a[k, j]`` matching boundary conditions at level zero.

    ``playback``: conditions ``sum_k a_kj phi_i^k = delta_ij`` are imposed on
    the strictly draining states ``i`` and only negative-real-part roots
    enter; target columns outside the draining set come out identically zero.
    ``prefetch``: all states and all roots (requires every arrival rate
    positive, which makes every root negative).

    A condition number above 1e12 flags the result (and warns) but the
    coefficients are still returned.
    """
    mode = mode or sol.mode
    L = model.n_states
    if mode == "playback":
        rows = np.nonzero(sol.rates < 0.0)[0]
        sel = sol.negative_set
    elif mode == "prefetch":
        if np.any(model.lam <= 0.0):
            raise ZeroArrivalState(
                "prefetch boundary system requires every arrival rate > 0"
            )
        rows = np.arange(L)
        sel = np.arange(sol.n_roots)
    else:
        raise ValueError(f"mode must be 'playback' or 'prefetch', got {mode!r}")

    if rows.size != sel.size:
        raise NonConvergence(
            f"boundary system is not square at omega={sol.omega}: "
            f"{sel.size} applicable roots vs {rows.size} conditions"
        )
    if rows.size == 0:
        return BoundaryCoefficients(
            a=np.zeros((0, L), dtype=complex), root_indices=sel, rows=rows,
            condition=1.0, ill_conditioned=False,
        )

    system = sol.eigvecs[np.ix_(rows, sel)]
    rhs = np.eye(L, dtype=complex)[rows, :]
    condition = float(np.linalg.cond(system))
    ill = condition > CONDITION_LIMIT
    if ill:
        warnings.warn(
            f"boundary system condition number {condition:.3g} exceeds "
            f"{CONDITION_LIMIT:g} at omega={sol.omega}",
            IllConditionedWarning,
            stacklevel=2,
        )
    try:
        a = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise DefectivePencil(
            f"boundary system is singular at omega={sol.omega}: {exc}"
        ) from exc
    return BoundaryCoefficients(a=a, root_indices=sel, rows=rows,
                                condition=condition, ill_conditioned=ill)


def transform_matrix(model: FluidModel, x: float, omega, mode: str = "playback") -> np.ndarray:
    """Generic-path transform matrix at one frequency.

    Entry ``[i, j]`` is ``sum_k a_kj exp(s_k x) phi_i^k`` over the applicable
    root set: the playback first-passage transform, or the prefetch-duality
    transform, depending on ``mode``.
    """
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    sol = characteristic_roots(model, omega, mode)
    coeffs = boundary_coefficients(sol, model, mode)
    sel = coeffs.root_indices
    if sel.size == 0:
        return np.zeros((model.n_states, model.n_states), dtype=complex)
    growth = np.exp(sol.roots[sel] * x)
    return sol.eigvecs[:, sel] @ (growth[:, None] * coeffs.a)


# --- closed-form two-state path ---------------------------------------------

@dataclass(frozen=True)
class TwoStateParams:
    """Two-state source: state 1 (rate ``lambda1``, exit ``beta``) and
    state 2 (rate ``lambda2``, exit ``alpha``)."""

    alpha: float
    beta: float
    lambda1: float
    lambda2: float
    mu: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError("transition rates alpha, beta must be > 0")
        if not (self.mu > 0):
            raise DomainError("playout rate mu must be > 0")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise DomainError("arrival rates must be >= 0")

    def to_model(self) -> FluidModel:
        return FluidModel(
            Q=np.array([[-self.beta, self.beta], [self.alpha, -self.alpha]]),
            lam=np.array([self.lambda1, self.lambda2]),
            mu=self.mu,
        )

    @classmethod
    def from_model(cls, model: FluidModel) -> "TwoStateParams":
        if model.n_states != 2:
            raise DimensionMismatch(
                f"two-state parameters need a 2-state model, got {model.n_states}"
            )
        return cls(alpha=float(model.Q[1, 0]), beta=float(model.Q[0, 1]),
                   lambda1=float(model.lam[0]), lambda2=float(model.lam[1]),
                   mu=model.mu)


def _stable_quadratic(a, b, c):
    """Both roots of ``a s^2 - b s + c = 0`` for array coefficients.

    Uses the Vieta pairing to avoid cancellation; ``a`` may be zero (the
    linear case yields one root and a second NaN placeholder).
    """
    b = np.asarray(b, dtype=complex)
    c = np.asarray(c, dtype=complex)
    if a == 0.0:
        return c / b, np.full_like(b, np.nan)
    sq = np.sqrt(b * b - 4.0 * a * c)
    sq = np.where((np.conj(b) * sq).real < 0.0, -sq, sq)
    r1 = (b + sq) / (2.0 * a)
    r2 = c / (a * r1)
    return r1, r2


def two_state_transform(p: TwoStateParams, x: float, omega, kind: str = "starvation") -> np.ndarray:
    """Closed-form 2x2 transform matrix; vectorized over frequencies.

    ``kind='starvation'`` evaluates the playback first-passage transform,
    ``kind='startup'`` the prefetch-duality transform (both arrival rates
    must then be positive).  ``omega`` may be a scalar or an array of shape
    ``(K,)``; the result has shape ``(2, 2)`` or ``(K, 2, 2)`` and matches
    the generic pencil path to near machine precision.
    """
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    om = np.asarray(omega, dtype=complex)
    scalar = om.ndim == 0
    om = np.atleast_1d(om)
    om = np.where((om.imag == 0.0) & (om.real >= 0.0) & (om.real < OMEGA_FLOOR),
                  OMEGA_FLOOR + 0j, om)

    al, be, mu = p.alpha, p.beta, p.mu
    if kind == "starvation":
        r1, r2 = p.lambda1 - mu, p.lambda2 - mu
        H = _two_state_starvation(al, be, r1, r2, x, om)
    elif kind == "startup":
        if p.lambda1 <= 0 or p.lambda2 <= 0:
            raise ZeroArrivalState(
                "start-up transform requires both arrival rates > 0"
            )
        H = _two_state_startup(al, be, p.lambda1, p.lambda2, x, om)
    else:
        raise ValueError(f"kind must be 'starvation' or 'startup', got {kind!r}")
    return H[0] if scalar else H


def _phi(beta, omega, rate, s):
    """Eigenvector second component for first-component normalization 1."""
    return (beta + omega - rate * s) / beta


def _two_state_starvation(al, be, r1, r2, x, om):
    K = om.shape[0]
    H = np.zeros((K, 2, 2), dtype=complex)
    draining = [j for j, r in enumerate((r1, r2)) if r < 0.0]
    if not draining:
        return H

    a_coef = r1 * r2
    b_coef = r1 * (om + al) + r2 * (om + be)
    c_coef = om * (om + al + be)
    s_a, s_b = _stable_quadratic(a_coef, b_coef, c_coef)

    if len(draining) == 1:
        j = draining[0]
        if a_coef == 0.0:
            s_neg = s_a
        else:
            s_neg = np.where(s_a.real < s_b.real, s_a, s_b)
        g = _phi(be, om, r1, s_neg)
        phi = np.stack([np.ones_like(g), g], axis=-1)
        weight = np.exp(s_neg * x) / phi[:, j]
        H[:, :, j] = phi * weight[:, None]
        return H

    # both states drain: two negative roots, full 2x2 boundary system
    g_a = _phi(be, om, r1, s_a)
    g_b = _phi(be, om, r1, s_b)
    gap = g_b - g_a
    ea = np.exp(s_a * x)
    eb = np.exp(s_b * x)
    # column 0: coefficients sum to 1 and annihilate the second component
    H[:, 0, 0] = (ea * g_b - eb * g_a) / gap
    H[:, 1, 0] = g_a * g_b * (ea - eb) / gap
    # column 1: coefficients sum to 0 and give 1 on the second component
    H[:, 0, 1] = (eb - ea) / gap
    H[:, 1, 1] = (eb * g_b - ea * g_a) / gap
    return H


def _two_state_startup(al, be, lam1, lam2, x, om):
    a_coef = lam1 * lam2
    b_coef = -(lam1 * (om + al) + lam2 * (om + be))
    c_coef = om * (om + al + be)
    s_a, s_b = _stable_quadratic(a_coef, b_coef, c_coef)

    g_a = (be + om + lam1 * s_a) / be
    g_b = (be + om + lam1 * s_b) / be
    gap = g_b - g_a
    ea = np.exp(s_a * x)
    eb = np.exp(s_b * x)
    K = om.shape[0]
    U = np.zeros((K, 2, 2), dtype=complex)
    U[:, 0, 0] = (ea * g_b - eb * g_a) / gap
    U[:, 1, 0] = g_a * g_b * (ea - eb) / gap
    U[:, 0, 1] = (eb - ea) / gap
    U[:, 1, 1] = (eb * g_b - ea * g_a) / gap
    return U
