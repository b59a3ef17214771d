"""Brownian embedding of a birth-death chain.

A non-lazy chain is realised as Brownian motion watched only at the points
``x_n``: whenever the motion sits at ``x_n`` it next reaches ``x_{n+1}``
before ``x_{n-1}`` with probability ``r_n``.  The spacing between ``x_n``
and ``x_{n+1}`` is ``|t_n|``, where ``t_n / t_{n-1} = l_n / r_n``, anchored
by ``t_0 = l_0`` and ``t_{-1} = -r_0``.  Expected visit counts then follow
from closed-form expected Brownian local times; no paths are simulated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .chain import BirthDeathChain, check_interior, ensure_valid, remove_laziness
from .errors import DomainError, PreconditionError
from .exact import GreenResult, Route

LOG2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class EmbeddingData:
    """Spacings and embedding points of a chain window.

    Spacings are kept as ``log|t_n|`` plus a sign so that windows with
    strong drift neither overflow nor underflow; ``t`` and ``x`` are
    exponentiated views.  Entry ``i`` of ``log_abs_t`` belongs to state
    ``lo + i`` and there are ``hi - lo`` of them.  ``anchor`` is the state
    playing the role of 0 (0 itself when it is a non-absorbing state of
    the window).  For absorbing endpoints ``x_minus_inf``/``x_plus_inf``
    hold their images, which stand in for the limits of ``x_n``.
    """

    lo: int
    hi: int
    anchor: int
    log_abs_t: np.ndarray
    sign: np.ndarray
    x_minus_inf: Optional[float] = None
    x_plus_inf: Optional[float] = None

    @property
    def t(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return self.sign * np.exp(self.log_abs_t)

    @property
    def x(self) -> np.ndarray:
        """Embedding points ``x_lo .. x_hi`` with ``x_anchor = 0``.

        Points beyond the double range come out as ``inf``; the Green's
        function routes work from ``log_abs_t`` and are unaffected.
        """
        with np.errstate(over="ignore"):
            spacing = np.exp(self.log_abs_t)
        c = self.anchor - self.lo
        x = np.zeros(self.hi - self.lo + 1)
        x[c + 1:] = np.cumsum(spacing[c:])
        x[:c] = -np.cumsum(spacing[:c][::-1])[::-1]
        return x

    def t_at(self, n: int) -> float:
        if not self.lo <= n < self.hi:
            raise DomainError(f"no spacing t_{n} in window [{self.lo}, {self.hi}]")
        return float(self.sign[n - self.lo] * math.exp(self.log_abs_t[n - self.lo]))

    def x_at(self, n: int) -> float:
        return float(self.x[n - self.lo])

    def log_gap(self, p: int, q: int) -> float:
        """``log(x_q - x_p)`` for window states ``p < q``."""
        return float(logsumexp(self.log_abs_t[p - self.lo:q - self.lo]))

    def scaled(self, factor: float) -> "EmbeddingData":
        """Every spacing multiplied by ``factor > 0``."""
        shift = math.log(factor)
        return EmbeddingData(
            self.lo, self.hi, self.anchor, self.log_abs_t + shift, self.sign,
            None if self.x_minus_inf is None else self.x_minus_inf * factor,
            None if self.x_plus_inf is None else self.x_plus_inf * factor,
        )


def _anchor(chain: BirthDeathChain) -> int:
    interior = chain.interior
    if not interior:
        raise DomainError("chain has no non-absorbing state")
    return min(interior, key=lambda n: (abs(n), n))


def build_embedding(chain: BirthDeathChain) -> EmbeddingData:
    """Spacings ``t_n`` and points ``x_n`` for a chain with no holding.

    Raises :class:`PreconditionError` if any non-absorbing state has
    ``a_n != 0``; compose with :func:`remove_laziness` first.
    """
    ensure_valid(chain)
    if chain.is_lazy:
        raise PreconditionError("chain has holding probabilities; apply remove_laziness first")
    lo, hi = chain.lo, chain.hi
    c = _anchor(chain)
    with np.errstate(divide="ignore"):
        logl, logr = np.log(chain.l), np.log(chain.r)
    size = hi - lo
    log_t = np.empty(size)
    ci = c - lo
    if ci < size:
        # t_c = l_c, then t_n = t_{n-1} l_n / r_n
        steps = logl[ci + 1:size] - logr[ci + 1:size]
        log_t[ci] = logl[ci]
        log_t[ci + 1:] = logl[ci] + np.cumsum(steps)
    if ci > 0:
        # |t_{c-1}| = r_c, then |t_n| = |t_{n+1}| r_{n+1} / l_{n+1}
        steps = (logr[1:ci] - logl[1:ci])[::-1]
        log_t[ci - 1] = logr[ci]
        log_t[:ci - 1] = (logr[ci] + np.cumsum(steps))[::-1]
    sign = np.where(np.arange(lo, hi) >= c, 1.0, -1.0)
    log_t.setflags(write=False)
    sign.setflags(write=False)
    emb = EmbeddingData(lo, hi, c, log_t, sign)
    x = emb.x
    return EmbeddingData(
        lo, hi, c, log_t, sign,
        float(x[0]) if lo in chain.absorbing else None,
        float(x[-1]) if hi in chain.absorbing else None,
    )


def expected_local_time(a: float, b: float, z: float, y: float) -> float:
    """Expected local time at ``y`` of Brownian motion from ``z`` killed on
    leaving ``(a, b)``.

    Equals ``((b - z)(y - a) + (z - a)(b - y)) / (b - a) - |z - y|``, the
    classical Green's function of the interval, which is symmetric in
    ``y`` and ``z``.
    """
    if not (a < y < b and a < z < b):
        raise DomainError(f"need a < y, z < b; got a={a}, b={b}, z={z}, y={y}")
    value = ((b - z) * (y - a) + (z - a) * (b - y)) / (b - a) - abs(z - y)
    return max(value, 0.0)


def log_local_time(emb: EmbeddingData, lower: int, upper: int, z: int, y: int) -> float:
    """``log E_{x_z}[L^{x_y}]`` for motion killed on leaving ``(x_lower, x_upper)``.

    Uses the factored form ``2 (x_min - x_lower)(x_upper - x_max) /
    (x_upper - x_lower)`` with every gap summed directly from spacings.
    """
    if not lower < min(y, z) <= max(y, z) < upper:
        raise DomainError(f"need {lower} < y, z < {upper}; got z={z}, y={y}")
    near, far = min(y, z), max(y, z)
    return (LOG2 + emb.log_gap(lower, near) + emb.log_gap(far, upper)
            - emb.log_gap(lower, upper))


def log_visit_local_time(emb: EmbeddingData, k: int) -> float:
    """``log`` of local time gathered at ``x_k`` per visit to ``k``:
    ``2 t_{k-1} t_k / (t_{k-1} + t_k)`` in magnitude."""
    i = k - emb.lo
    if not 0 < i < emb.hi - emb.lo:
        raise DomainError(f"state {k} has no neighbours on both sides in the window")
    a, b = emb.log_abs_t[i - 1], emb.log_abs_t[i]
    return float(LOG2 + a + b - np.logaddexp(a, b))


def green_from_embedding(emb: EmbeddingData, j: int, k: int, lower: int, upper: int) -> float:
    """Local time at ``x_k`` from ``x_j`` until exit, over local time per visit."""
    return math.exp(log_local_time(emb, lower, upper, j, k) - log_visit_local_time(emb, k))


def green_via_local_time(chain: BirthDeathChain, j: int, k: int) -> GreenResult:
    """Expected visits to ``k`` from ``j`` through the Brownian embedding.

    Lazy chains are handled by embedding the laziness-removed chain and
    stretching each visit to ``k`` by ``1 / (1 - a_k)``.
    """
    ensure_valid(chain)
    if not chain.doubly_absorbed:
        raise DomainError("the local-time route needs both window endpoints absorbing")
    check_interior(chain, j, k)
    base = remove_laziness(chain) if chain.is_lazy else chain
    emb = build_embedding(base)
    value = green_from_embedding(emb, j, k, chain.lo, chain.hi)
    value /= 1.0 - float(chain.a[k - chain.lo])
    return GreenResult(value, Route.LOCAL_TIME)
