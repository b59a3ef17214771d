"""Exact Green's functions of absorbed birth-death chains.

With both window endpoints absorbing, the expected number of visits
``G(x, y)`` (the visit at time 0 included) is the ``(x, y)`` entry of the
fundamental matrix ``N = (I - Q)^-1``, where ``Q`` is the transition block
between non-absorbing states.  ``I - Q`` is tridiagonal.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .chain import BirthDeathChain, check_interior, ensure_valid, symmetry_ratio
from .errors import DomainError, GreenChainError, SolverError
from .tridiag import TridiagonalFactorization, transpose_bands, tridiag_matvec

RESIDUAL_FLAG = 1e-8


class Route(enum.Enum):
    EXACT = "Exact"
    LOCAL_TIME = "LocalTime"
    VOLTAGE = "Voltage"
    MONTE_CARLO = "MonteCarlo"


@dataclass(frozen=True)
class GreenResult:
    """An expected visit count and how it was obtained."""

    value: float
    route: Route
    stderr: Optional[float] = None
    residual: Optional[float] = None

    def __post_init__(self):
        if not self.value >= 0:
            raise GreenChainError(f"Green's function value must be >= 0, got {self.value}")
        if (self.stderr is not None) != (self.route is Route.MONTE_CARLO):
            raise GreenChainError("stderr is carried by Monte Carlo results only")

    @property
    def flagged(self) -> bool:
        return self.residual is not None and self.residual > RESIDUAL_FLAG

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True, eq=False)
class GreenMatrix:
    """Expected visit counts for every pair of non-absorbing states.

    ``values[i, j]`` is ``G(states[i], states[j])``.
    """

    states: tuple
    values: np.ndarray
    residual: float = field(default=0.0)

    def __post_init__(self):
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.states)})

    @property
    def flagged(self) -> bool:
        return self.residual > RESIDUAL_FLAG

    def __getitem__(self, pair) -> float:
        x, y = pair
        return float(self.values[self._index[x], self._index[y]])

    def absorption_times(self) -> np.ndarray:
        """Expected number of steps before absorption from each start."""
        return self.values.sum(axis=1)


def transient_bands(chain: BirthDeathChain):
    """Bands of ``I - Q`` over the non-absorbing states of a doubly absorbed chain."""
    ensure_valid(chain)
    if not chain.doubly_absorbed:
        raise DomainError("exact Green's functions need both window endpoints absorbing")
    sl = slice(1, chain.size - 1)
    l, a, r = chain.l[sl], chain.a[sl], chain.r[sl]
    return -l, 1.0 - a, -r


def factorize(chain: BirthDeathChain) -> TridiagonalFactorization:
    return TridiagonalFactorization(*transient_bands(chain))


def green(chain: BirthDeathChain, x: int, y: int) -> GreenResult:
    """Expected visits to ``y`` before absorption for the chain started at ``x``."""
    fact = factorize(chain)
    check_interior(chain, x, y)
    e = np.zeros(fact.n)
    e[y - chain.lo - 1] = 1.0
    column = fact.solve(e)
    value = float(column[x - chain.lo - 1])
    if not np.isfinite(value) or value <= 0:
        raise SolverError(f"non-positive Green's function {value} at ({x}, {y}); "
                          f"worst pivot {fact.worst_pivot}")
    return GreenResult(value, Route.EXACT, residual=fact.residual(column, e))


def green_matrix(chain: BirthDeathChain) -> GreenMatrix:
    """All of ``G`` from one factorization of ``I - Q``."""
    fact = factorize(chain)
    eye = np.eye(fact.n)
    n_mat = fact.solve(eye)
    if not np.all(np.isfinite(n_mat)):
        raise SolverError(f"non-finite fundamental matrix; worst pivot {fact.worst_pivot}")
    # left residual N (I - Q) - I, computed through the transpose
    left = tridiag_matvec(*transpose_bands(fact.lower, fact.diag, fact.upper), n_mat.T).T - eye
    right = tridiag_matvec(fact.lower, fact.diag, fact.upper, n_mat) - eye
    residual = float(max(np.max(np.abs(left)), np.max(np.abs(right))))
    n_mat.setflags(write=False)
    return GreenMatrix(tuple(chain.interior), n_mat, residual)


@dataclass(frozen=True)
class RatioCheck:
    """Worst relative gap between measured and closed-form ``G(j,k)/G(k,j)``."""

    max_deviation: float
    worst_pair: Optional[tuple]
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance


def verify_theorem1(chain: BirthDeathChain, tolerance: float = 1e-9) -> RatioCheck:
    """Compare ``G(j,k)/G(k,j)`` against the transition-probability product
    for every pair ``j < k`` of non-absorbing states."""
    gm = green_matrix(chain)
    worst, worst_pair = 0.0, None
    states = gm.states
    for i, j in enumerate(states):
        for k in states[i + 1:]:
            closed = symmetry_ratio(chain, j, k)
            dev = abs(gm[j, k] / gm[k, j] - closed) / closed
            if dev > worst or worst_pair is None:
                worst, worst_pair = dev, (j, k)
    return RatioCheck(worst, worst_pair, tolerance)
