"""Monte Carlo estimates of expected visit counts.

Trial ``t`` draws its uniforms from its own SplitMix64 stream (see
:mod:`greenchain.rng`), so the result does not depend on how trials are
chunked or spread over threads.  Walks run in a compiled per-trial loop when
numba is importable and otherwise in lockstep with numpy; both consume the
same draws and give identical counts.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .chain import BirthDeathChain, check_interior, ensure_valid
from .errors import ConfigurationError, DomainError
from .exact import GreenResult, Route
from .rng import GAMMA, trial_keys, uniforms

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
from .tree import TreeChain

TRUNCATION_FLAG = 0.05
CHUNK = 1 << 16


@dataclass(frozen=True)
class SimConfig:
    trials: int = 100_000
    seed: int = 0
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.trials < 1 or self.max_steps < 1:
            raise ConfigurationError("trials and max_steps must be >= 1")
        if not 0 <= self.seed < 1 << 64:
            raise ConfigurationError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class VisitEstimate:
    """Sample mean of per-trial visit counts.

    ``stderr`` is the sample standard deviation over ``sqrt(trials)``
    (infinite for a single trial).  Trials cut off at ``max_steps`` keep
    their partial counts, which biases ``mean`` downwards; they are counted
    in ``truncated_trials``.
    """

    mean: float
    stderr: float
    truncated_trials: int
    trials: int

    @property
    def flagged(self) -> bool:
        return self.truncated_trials > TRUNCATION_FLAG * self.trials

    def as_result(self) -> GreenResult:
        return GreenResult(self.mean, Route.MONTE_CARLO, stderr=self.stderr)


def _run_chunk_numpy(first, count, start, target, dest, cum, absorbing, cfg):
    keys = trial_keys(cfg.seed, np.arange(first, first + count, dtype=np.uint64))
    state = np.full(count, start, dtype=np.int64)
    visits = np.full(count, 1 if start == target else 0, dtype=np.int64)
    active = np.arange(count)
    step = 0
    while active.size and step < cfg.max_steps:
        u = uniforms(keys[active], step)
        here = state[active]
        choice = np.zeros(here.size, dtype=np.int64)
        for col in range(cum.shape[1] - 1):
            choice += u >= cum[here, col]
        there = dest[here, choice]
        state[active] = there
        visits[active] += there == target
        active = active[~absorbing[there]]
        step += 1
    return visits, int(active.size)


LANES = 8


def _walk_kernel(seed, first, count, start, target, dest, cum, absorbing, max_steps, visits):
    """Run trials ``first .. first + count - 1`` and store their visit counts.

    ``LANES`` walks are advanced side by side so that their independent
    dependency chains overlap; a lane that finishes picks up the next trial.
    Returns the number of trials cut off at ``max_steps``.
    """
    gamma = np.uint64(GAMMA)
    m1 = np.uint64(0xBF58476D1CE4E5B9)
    m2 = np.uint64(0x94D049BB133111EB)
    scale = 1.0 / 9007199254740992.0
    last = cum.shape[1] - 1
    key = np.zeros(LANES, dtype=np.uint64)
    here = np.zeros(LANES, dtype=np.int64)
    n = np.zeros(LANES, dtype=np.int64)
    step = np.zeros(LANES, dtype=np.int64)
    tid = np.full(LANES, -1, dtype=np.int64)
    truncated = 0
    next_trial = 0
    busy = 0
    for i in range(LANES):
        if next_trial < count:
            tid[i] = next_trial
            next_trial += 1
            busy += 1
    for i in range(LANES):
        if tid[i] >= 0:
            z = seed + np.uint64(first + tid[i] + 1) * gamma
            z = (z ^ (z >> np.uint64(30))) * m1
            z = (z ^ (z >> np.uint64(27))) * m2
            key[i] = z ^ (z >> np.uint64(31))
            here[i] = start
            n[i] = 1 if start == target else 0
            step[i] = 0
    while busy > 0:
        for i in range(LANES):
            if tid[i] < 0:
                continue
            h = here[i]
            if absorbing[h] or step[i] >= max_steps:
                visits[tid[i]] = n[i]
                if not absorbing[h]:
                    truncated += 1
                if next_trial < count:
                    tid[i] = next_trial
                    next_trial += 1
                    z = seed + np.uint64(first + tid[i] + 1) * gamma
                    z = (z ^ (z >> np.uint64(30))) * m1
                    z = (z ^ (z >> np.uint64(27))) * m2
                    key[i] = z ^ (z >> np.uint64(31))
                    here[i] = start
                    n[i] = 1 if start == target else 0
                    step[i] = 0
                else:
                    tid[i] = -1
                    busy -= 1
                continue
            z = key[i] + np.uint64(step[i] + 1) * gamma
            z = (z ^ (z >> np.uint64(30))) * m1
            z = (z ^ (z >> np.uint64(27))) * m2
            z = z ^ (z >> np.uint64(31))
            u = np.float64(z >> np.uint64(11)) * scale
            # branch-free column count, as in the numpy path
            c = 0
            for col in range(last):
                c += u >= cum[h, col]
            h = dest[h, c]
            here[i] = h
            n[i] += h == target
            step[i] += 1
    return truncated


if numba is not None:
    _walk_kernel = numba.njit(cache=True, nogil=True)(_walk_kernel)


def _run_chunk_compiled(first, count, start, target, dest, cum, absorbing, cfg):
    visits = np.empty(count, dtype=np.int64)
    truncated = _walk_kernel(np.uint64(cfg.seed), first, count, start, target, dest, cum, absorbing,
                             cfg.max_steps, visits)
    return visits, int(truncated)


_run_chunk = _run_chunk_compiled if numba is not None else _run_chunk_numpy


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("GREENCHAIN_THREADS", "1")))
    except ValueError:
        return 1


def _simulate(start, target, dest, cum, absorbing, cfg, workers=None):
    workers = _threads() if workers is None else max(1, workers)
    chunks = [(f, min(CHUNK, cfg.trials - f)) for f in range(0, cfg.trials, CHUNK)]
    args = [(f, c, start, target, dest, cum, absorbing, cfg) for f, c in chunks]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda a: _run_chunk(*a), args))
    else:
        parts = [_run_chunk(*a) for a in args]
    visits = np.concatenate([p[0] for p in parts])
    truncated = sum(p[1] for p in parts)
    mean = float(visits.mean())
    stderr = float(visits.std(ddof=1) / math.sqrt(cfg.trials)) if cfg.trials > 1 else math.inf
    return VisitEstimate(mean, stderr, truncated, cfg.trials)


def simulate_line(chain: BirthDeathChain, start: int, target: int,
                  cfg: SimConfig = SimConfig(), workers=None) -> VisitEstimate:
    """Count visits to ``target`` before absorption, the visit at time 0
    included, over ``cfg.trials`` independent runs from ``start``."""
    ensure_valid(chain)
    if not chain.doubly_absorbed:
        raise DomainError("simulation needs both window endpoints absorbing")
    check_interior(chain, start, target)
    size = chain.size
    idx = np.arange(size)
    dest = np.stack([np.clip(idx - 1, 0, size - 1), idx, np.clip(idx + 1, 0, size - 1)], axis=1)
    cum = np.stack([chain.l, chain.l + chain.a, np.full(size, np.inf)], axis=1)
    absorbing = np.zeros(size, dtype=bool)
    absorbing[[0, size - 1]] = True
    return _simulate(start - chain.lo, target - chain.lo, dest, cum, absorbing, cfg, workers)


def simulate_tree(tc: TreeChain, start, target, cfg: SimConfig = SimConfig(),
                  workers=None) -> VisitEstimate:
    """As :func:`simulate_line`, absorbing at the leaves of ``tc``."""
    for v in (start, target):
        if v not in tc.adj:
            raise DomainError(f"unknown vertex {v}")
        if v in tc.leaves:
            raise DomainError(f"vertex {v} is a leaf")
    index = {v: i for i, v in enumerate(tc.vertices)}
    width = max(len(nb) for nb in tc.adj.values()) + 1
    n = len(tc.vertices)
    dest = np.tile(np.arange(n)[:, None], (1, width))
    cum = np.full((n, width), np.inf)
    absorbing = np.array([v in tc.leaves for v in tc.vertices])
    for v in tc.interior:
        i = index[v]
        options = list(tc.adj[v]) + [v]
        probs = np.array([tc.p(v, w) for w in options])
        dest[i, :len(options)] = [index[w] for w in options]
        cum[i, :len(options) - 1] = np.cumsum(probs)[:-1]
    return _simulate(index[start], index[target], dest, cum, absorbing, cfg, workers)


def ratio_estimate(forward: VisitEstimate, backward: VisitEstimate):
    """``forward.mean / backward.mean`` with a first-order stderr."""
    ratio = forward.mean / backward.mean
    rel = math.hypot(forward.stderr / forward.mean, backward.stderr / backward.mean)
    return ratio, ratio * rel
