"""Event-driven Monte Carlo simulation of the fluid playout buffer.

Sessions are simulated exactly: within a sojourn of the modulating chain the
buffer trajectory is linear, so threshold crossings (reaching the prefetch
target, running empty, exhausting the file) are solved in closed form and no
time-step discretization bias enters.  A session alternates prefetch phases
(playback paused, buffer filling to the target) and playback phases (net
rate ``lam_i - mu``); a starvation ends a playback phase and triggers a
re-prefetch of ``min(x, remaining frames)``; the session ends when the
cumulative playback time reaches ``Z / mu``.

Randomness comes from a counter-based generator (splitmix64 finalizer over
``(seed, replication, draw index)``), so every replication owns an
independent stream addressed by pure arithmetic: results are bit-identical
no matter how replications are batched or parallelized.

Replications are simulated in lockstep as numpy arrays, one event per
iteration per active session.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace as dc_replace

import numpy as np

from .errors import DomainError, NonConvergence
from .model import FluidModel, SessionParams, stationary_distribution

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_STREAM_SALT = np.uint64(0xD1B54A32D192ED03)
_SHIFT30 = np.uint64(30)
_SHIFT27 = np.uint64(27)
_SHIFT31 = np.uint64(31)
_SHIFT11 = np.uint64(11)
_INV53 = float(2.0**-53)


def _mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer: bijective avalanche mix of 64-bit words."""
    z = (z ^ (z >> _SHIFT30)) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _SHIFT27)) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> _SHIFT31)


def counter_uniform(seed: int, stream, counter) -> np.ndarray:
    """Uniform(0, 1) values addressed by ``(seed, stream, counter)``.

    ``stream`` and ``counter`` broadcast together; identical addresses give
    identical values on every platform and in any execution order.
    """
    s = np.asarray(stream, dtype=np.uint64)
    c = np.asarray(counter, dtype=np.uint64)
    sd = np.asarray(seed & 0xFFFFFFFFFFFFFFFF, dtype=np.uint64)
    key = _mix64(sd * _GOLDEN ^ _mix64(s * _STREAM_SALT + _GOLDEN))
    word = _mix64(key + c * _GOLDEN)
    return ((word >> _SHIFT11).astype(np.float64)) * _INV53


@dataclass(frozen=True)
class SimConfig:
    """Replication plan: count, seed, arrival capping, initial-state rule.

    ``arrival_cap_mode='unbounded'`` matches the analytical model (the source
    keeps sending past the file size); ``'capped_at_Z'`` stops arrivals once
    ``Z`` frames have been delivered.  ``initial_state_mode`` is either
    ``'stationary'`` or a fixed state index.
    """

    replications: int = 1
    seed: int = 0
    arrival_cap_mode: str = "unbounded"
    initial_state_mode: "str | int" = "stationary"

    def __post_init__(self):
        if self.replications < 1:
            raise DomainError(f"replications must be >= 1, got {self.replications}")
        if self.arrival_cap_mode not in ("unbounded", "capped_at_Z"):
            raise DomainError(
                f"arrival_cap_mode must be 'unbounded' or 'capped_at_Z', "
                f"got {self.arrival_cap_mode!r}"
            )
        if not (self.initial_state_mode == "stationary"
                or isinstance(self.initial_state_mode, (int, np.integer))):
            raise DomainError(
                "initial_state_mode must be 'stationary' or a state index"
            )


@dataclass(frozen=True)
class SessionOutcome:
    """One simulated session: start-up delay, starvation instants, completion."""

    startup_delay: float
    starvation_times: tuple
    starvation_count: int
    completed: bool


@dataclass(frozen=True)
class MetricStats:
    """Sample mean, variance, and 95% confidence half-width of one metric."""

    mean: float
    var: float
    ci_half: float


@dataclass(frozen=True)
class SimStats:
    """Aggregates over independent replications of a full session."""

    replications: int
    starvation_probability: MetricStats
    starvation_count: MetricStats
    startup_delay: MetricStats
    count_histogram: np.ndarray
    startup_grid: np.ndarray | None = None
    startup_cdf: np.ndarray | None = None
    first_starvation_grid: np.ndarray | None = None
    first_starvation_cdf: np.ndarray | None = None

    def to_dict(self) -> dict:
        out = {
            "replications": self.replications,
            "starvation_probability": vars(self.starvation_probability),
            "starvation_count": vars(self.starvation_count),
            "startup_delay": vars(self.startup_delay),
            "count_histogram": self.count_histogram.tolist(),
        }
        if self.startup_grid is not None:
            out["startup_grid"] = self.startup_grid.tolist()
            out["startup_cdf"] = self.startup_cdf.tolist()
        if self.first_starvation_grid is not None:
            out["first_starvation_grid"] = self.first_starvation_grid.tolist()
            out["first_starvation_cdf"] = self.first_starvation_cdf.tolist()
        return out


# Event priority within one lockstep iteration; ties resolve to the earlier
# column, so exhausting the file beats an exactly simultaneous starvation.
_EV_END, _EV_CROSS, _EV_STARVE, _EV_CAP, _EV_JUMP = range(5)

_MAX_EVENTS = 20_000_000


def _jump_tables(model: FluidModel):
    exit_rates = -np.diag(model.Q).copy()
    L = model.n_states
    cum = np.zeros((L, L))
    for i in range(L):
        if exit_rates[i] > 0:
            probs = model.Q[i] / exit_rates[i]
            probs = probs.copy()
            probs[i] = 0.0
            cum[i] = np.cumsum(probs)
        cum[i, -1] = max(cum[i, -1], 1.0)
    return exit_rates, cum


class _Streams:
    """Per-replication draw bookkeeping against the counter generator."""

    def __init__(self, seed: int, rep_lo: int, rep_hi: int):
        self.seed = seed
        self.reps = np.arange(rep_lo, rep_hi, dtype=np.uint64)
        self.counters = np.zeros(rep_hi - rep_lo, dtype=np.uint64)

    def draw(self, idx) -> np.ndarray:
        """One uniform per selected replication; advances their counters."""
        u = counter_uniform(self.seed, self.reps[idx], self.counters[idx])
        self.counters[idx] += 1
        return u


def _initial_states(model: FluidModel, cfg: SimConfig, streams: _Streams) -> np.ndarray:
    n = streams.reps.size
    everyone = np.arange(n)
    if cfg.initial_state_mode == "stationary":
        cum_pi = np.cumsum(stationary_distribution(model))
        cum_pi[-1] = max(cum_pi[-1], 1.0)
        u = streams.draw(everyone)
        return np.searchsorted(cum_pi, u, side="right").astype(np.int64)
    state0 = int(cfg.initial_state_mode)
    if not (0 <= state0 < model.n_states):
        raise DomainError(f"initial state {state0} outside 0..{model.n_states - 1}")
    return np.full(n, state0, dtype=np.int64)


def _sojourns(streams: _Streams, idx, exit_rates, states) -> np.ndarray:
    u = streams.draw(idx)
    rates = exit_rates[states]
    with np.errstate(divide="ignore"):
        return np.where(rates > 0, -np.log1p(-u) / np.where(rates > 0, rates, 1.0), np.inf)


def _jump_targets(streams: _Streams, idx, cum_jump, states) -> np.ndarray:
    u = streams.draw(idx)
    rows = cum_jump[states]
    return (rows > u[:, None]).argmax(axis=1).astype(np.int64)


def _run_sessions(model: FluidModel, params: SessionParams, cfg: SimConfig,
                  rep_lo: int, rep_hi: int, record_times: bool = False):
    """Simulate replications ``rep_lo .. rep_hi - 1`` in lockstep.

    Returns per-replication arrays (start-up delay, starvation count, first
    starvation instant on the playback clock with NaN for none, total
    playback seconds) plus optional per-replication starvation-instant lists.
    """
    n = rep_hi - rep_lo
    lam = model.lam
    mu = model.mu
    x, Z = params.x, params.Z
    capped = cfg.arrival_cap_mode == "capped_at_Z"
    exit_rates, cum_jump = _jump_tables(model)

    streams = _Streams(cfg.seed, rep_lo, rep_hi)
    state = _initial_states(model, cfg, streams)
    tau = _sojourns(streams, np.arange(n), exit_rates, state)

    buf = np.zeros(n)
    played = np.zeros(n)
    arrived = np.zeros(n)
    wall = np.zeros(n)
    play_time = np.zeros(n)
    playing = np.zeros(n, dtype=bool)
    target = np.full(n, float(min(x, Z)))
    startup = np.full(n, np.nan)
    nstarv = np.zeros(n, dtype=np.int64)
    first_starv = np.full(n, np.nan)
    done = np.zeros(n, dtype=bool)
    times = [[] for _ in range(n)] if record_times else None

    grace = 1e-9 * max(1.0, x)
    end_grace = 1e-9 * max(1.0, Z / mu)
    for _ in range(_MAX_EVENTS):
        act = np.nonzero(~done)[0]
        if act.size == 0:
            break
        st = state[act]
        rate = lam[st].astype(float)
        if capped:
            rate = np.where(arrived[act] >= Z, 0.0, rate)
        play = playing[act]

        cand = np.full((act.size, 5), np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            cand[:, _EV_END] = np.where(play, (Z - played[act]) / mu, np.inf)
            need = target[act] - buf[act]
            fillable = (~play) & (rate > 0)
            cand[:, _EV_CROSS] = np.where(
                fillable, need / np.where(rate > 0, rate, 1.0), np.inf)
            cand[(~play) & (need <= grace), _EV_CROSS] = 0.0
            net = rate - mu
            draining = play & (net < 0)
            cand[:, _EV_STARVE] = np.where(
                draining, buf[act] / np.where(net < 0, -net, 1.0), np.inf)
            # an empty buffer at the very moment the file ends is not a
            # starvation: absorb float-level ties into the end event
            tie = cand[:, _EV_STARVE] >= cand[:, _EV_END] - end_grace
            cand[tie, _EV_STARVE] = np.inf
            if capped:
                open_cap = rate > 0
                cand[:, _EV_CAP] = np.where(
                    open_cap, (Z - arrived[act]) / np.where(open_cap, rate, 1.0), np.inf)
            cand[:, _EV_JUMP] = tau[act]

        event = np.argmin(cand, axis=1)
        dt = cand[np.arange(act.size), event]
        if not np.all(np.isfinite(dt)):
            raise NonConvergence(
                "simulation deadlocked: no finite next event (does any state "
                "deliver content?)"
            )

        wall[act] += dt
        arrived[act] += rate * dt
        tau[act] -= dt
        buf[act] += np.where(play, rate - mu, rate) * dt
        played[act] += np.where(play, mu * dt, 0.0)
        play_time[act] += np.where(play, dt, 0.0)

        hit = act[event == _EV_END]
        if hit.size:
            done[hit] = True
            played[hit] = Z

        hit = act[event == _EV_CROSS]
        if hit.size:
            buf[hit] = target[hit]
            playing[hit] = True
            fresh = hit[np.isnan(startup[hit])]
            startup[fresh] = wall[fresh]

        hit = act[event == _EV_STARVE]
        if hit.size:
            buf[hit] = 0.0
            playing[hit] = False
            nstarv[hit] += 1
            t_play = played[hit] / mu
            fresh = np.isnan(first_starv[hit])
            first_starv[hit[fresh]] = t_play[fresh]
            target[hit] = np.minimum(x, Z - played[hit])
            if record_times:
                for idx, tval in zip(hit, t_play):
                    times[idx].append(float(tval))

        if capped:
            hit = act[event == _EV_CAP]
            if hit.size:
                # from here on the buffer is exactly the unplayed remainder;
                # re-sync it so the final drain ties with the end event
                arrived[hit] = Z
                buf[hit] = Z - played[hit]

        hit = act[event == _EV_JUMP]
        if hit.size:
            state[hit] = _jump_targets(streams, hit, cum_jump, state[hit])
            tau[hit] = _sojourns(streams, hit, exit_rates, state[hit])
    else:
        raise NonConvergence(f"simulation exceeded {_MAX_EVENTS} events")

    return {
        "startup": startup,
        "count": nstarv,
        "first_starvation": first_starv,
        "play_time": play_time,
        "times": times,
    }


def simulate_session(model: FluidModel, params: SessionParams, cfg: SimConfig,
                     replication: int = 0) -> SessionOutcome:
    """Simulate one session (the replication index selects the random stream).

    Bit-identical to the same replication inside a :func:`monte_carlo` batch.
    """
    out = _run_sessions(model, params, cfg, replication, replication + 1,
                        record_times=True)
    return SessionOutcome(
        startup_delay=float(out["startup"][0]),
        starvation_times=tuple(out["times"][0]),
        starvation_count=int(out["count"][0]),
        completed=True,
    )


def _metric(values: np.ndarray) -> MetricStats:
    n = values.size
    mean = float(np.mean(values))
    var = float(np.var(values, ddof=1)) if n >= 2 else 0.0
    half = 1.96 * np.sqrt(var / n) if n >= 2 else 0.0
    return MetricStats(mean=mean, var=var, ci_half=float(half))


def resolve_workers(workers: int | None = None) -> int:
    """Worker count: explicit argument, else FLUIDQOE_THREADS (0 = auto), else 1."""
    if workers is None:
        env = os.environ.get("FLUIDQOE_THREADS", "")
        workers = int(env) if env else 1
    if workers == 0:
        workers = os.cpu_count() or 1
    return max(1, workers)


def monte_carlo(model: FluidModel, params: SessionParams, cfg: SimConfig,
                startup_grid=None, first_starvation_grid=None,
                workers: int | None = None) -> SimStats:
    """Replicated sessions with confidence intervals and empirical CDFs.

    Replications split into contiguous chunks across ``workers`` threads;
    because every replication owns a counter-addressed random stream the
    result is bit-identical for any worker count.
    """
    n = cfg.replications
    w = min(resolve_workers(workers), n)
    bounds = np.linspace(0, n, w + 1, dtype=int)
    if w == 1:
        chunks = [_run_sessions(model, params, cfg, 0, n)]
    else:
        with ThreadPoolExecutor(max_workers=w) as pool:
            chunks = list(pool.map(
                lambda se: _run_sessions(model, params, cfg, se[0], se[1]),
                zip(bounds[:-1], bounds[1:]),
            ))
    startup = np.concatenate([c["startup"] for c in chunks])
    counts = np.concatenate([c["count"] for c in chunks])
    first = np.concatenate([c["first_starvation"] for c in chunks])

    stats = SimStats(
        replications=n,
        starvation_probability=_metric((counts >= 1).astype(float)),
        starvation_count=_metric(counts.astype(float)),
        startup_delay=_metric(startup),
        count_histogram=np.bincount(counts) / n,
    )
    if startup_grid is not None:
        grid = np.asarray(startup_grid, dtype=float)
        stats = dc_replace(stats, startup_grid=grid,
                           startup_cdf=(startup[None, :] <= grid[:, None]).mean(axis=1))
    if first_starvation_grid is not None:
        grid = np.asarray(first_starvation_grid, dtype=float)
        stats = dc_replace(stats, first_starvation_grid=grid,
                           first_starvation_cdf=(first[None, :] <= grid[:, None]).mean(axis=1))
    return stats


def prefetch_times(model: FluidModel, x: float, cfg: SimConfig):
    """Oracle for the fill process: per-replication ``(delay, end state)``.

    Simulates only the prefetch phase, from an empty buffer to level ``x``.
    """
    if not (x > 0):
        raise DomainError(f"x must be > 0, got {x}")
    if np.all(model.lam == 0):
        raise DomainError("no state delivers content")
    n = cfg.replications
    exit_rates, cum_jump = _jump_tables(model)
    streams = _Streams(cfg.seed, 0, n)
    state = _initial_states(model, cfg, streams)
    tau = _sojourns(streams, np.arange(n), exit_rates, state)
    buf = np.zeros(n)
    wall = np.zeros(n)
    done = np.zeros(n, dtype=bool)
    delay = np.zeros(n)
    end_state = np.zeros(n, dtype=np.int64)

    for _ in range(_MAX_EVENTS):
        act = np.nonzero(~done)[0]
        if act.size == 0:
            break
        rate = model.lam[state[act]]
        with np.errstate(divide="ignore"):
            cross = np.where(rate > 0, (x - buf[act]) / np.where(rate > 0, rate, 1.0), np.inf)
        crossed = cross <= tau[act]
        dt = np.where(crossed, cross, tau[act])
        wall[act] += dt
        buf[act] += rate * dt
        tau[act] -= dt

        hit = act[crossed]
        done[hit] = True
        delay[hit] = wall[hit]
        end_state[hit] = state[hit]
        jump = act[~crossed]
        if jump.size:
            state[jump] = _jump_targets(streams, jump, cum_jump, state[jump])
            tau[jump] = _sojourns(streams, jump, exit_rates, state[jump])
    else:
        raise NonConvergence(f"prefetch simulation exceeded {_MAX_EVENTS} events")
    return delay, end_state


def first_passage_times(model: FluidModel, x: float, horizon: float, cfg: SimConfig):
    """Oracle for the draining process: time for the buffer to empty from ``x``.

    Playback-only runs; returns ``(tau, end_state)`` with ``tau = inf`` (and
    ``end_state = -1``) when the buffer survives past ``horizon``.
    """
    if not (x > 0) or not (horizon > 0):
        raise DomainError("x and horizon must be > 0")
    n = cfg.replications
    exit_rates, cum_jump = _jump_tables(model)
    streams = _Streams(cfg.seed, 0, n)
    state = _initial_states(model, cfg, streams)
    tau = _sojourns(streams, np.arange(n), exit_rates, state)
    buf = np.full(n, float(x))
    clock = np.zeros(n)
    done = np.zeros(n, dtype=bool)
    out_t = np.full(n, np.inf)
    out_state = np.full(n, -1, dtype=np.int64)

    for _ in range(_MAX_EVENTS):
        act = np.nonzero(~done)[0]
        if act.size == 0:
            break
        net = model.lam[state[act]] - model.mu
        with np.errstate(divide="ignore"):
            starve = np.where(net < 0, buf[act] / np.where(net < 0, -net, 1.0), np.inf)
        stop = horizon - clock[act]
        timed_out = stop <= np.minimum(starve, tau[act])
        starved = (~timed_out) & (starve <= tau[act])
        dt = np.where(timed_out, stop, np.where(starved, starve, tau[act]))
        clock[act] += dt
        buf[act] += net * dt
        tau[act] -= dt

        hit = act[starved]
        if hit.size:
            out_t[hit] = clock[hit]
            out_state[hit] = state[hit]
            done[hit] = True
        done[act[timed_out]] = True
        jump = act[(~starved) & (~timed_out)]
        if jump.size:
            state[jump] = _jump_targets(streams, jump, cum_jump, state[jump])
            tau[jump] = _sojourns(streams, jump, exit_rates, state[jump])
    else:
        raise NonConvergence(f"first-passage simulation exceeded {_MAX_EVENTS} events")
    return out_t, out_state
