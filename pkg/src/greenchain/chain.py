"""Birth-death chains on an integer window.

A chain sits on the states ``lo, lo+1, ..., hi``.  From a non-absorbing state
``n`` it steps left with probability ``l[n]``, stays with probability ``a[n]``
and steps right with probability ``r[n]``.  Either window endpoint may be
absorbing; absorbing rows are stored as ``(0, 1, 0)`` and never consulted.
"""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from simpleeval import SimpleEval

from .errors import ConfigurationError, DomainError, SpecParseError, ValidationError

ROW_TOL = 1e-12

# direct products are used below this many factors when all lie in a safe band
_DIRECT_MAX_FACTORS = 32
_DIRECT_BAND = (1e-3, 1e3)


@dataclass(frozen=True)
class ProbabilityTriple:
    """Left, stay and right probabilities of a single non-absorbing state."""

    l: float
    a: float
    r: float

    def __post_init__(self):
        problems = _row_problems(self.l, self.a, self.r)
        if problems:
            raise ValidationError(problems)

    def __iter__(self):
        return iter((self.l, self.a, self.r))


def _row_problems(l, a, r, where=""):
    out = []
    if not all(math.isfinite(v) for v in (l, a, r)):
        return [f"non-finite probability{where}"]
    if l <= 0:
        out.append(f"l_n must be > 0{where}")
    if r <= 0:
        out.append(f"r_n must be > 0{where}")
    if a < 0:
        out.append(f"a_n must be >= 0{where}")
    total = l + a + r
    if abs(total - 1.0) > ROW_TOL:
        out.append(f"row sum {total:.15g} != 1{where}")
    return out


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BirthDeathChain:
    """Birth-death chain on ``[lo, hi]`` with optional absorbing endpoints.

    ``l``, ``a`` and ``r`` are read-only arrays indexed by ``n - lo``.
    Construction does not validate; call :func:`validate` or
    :func:`ensure_valid`.
    """

    lo: int
    hi: int
    l: np.ndarray
    a: np.ndarray
    r: np.ndarray
    absorbing: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "lo", int(self.lo))
        object.__setattr__(self, "hi", int(self.hi))
        object.__setattr__(self, "absorbing", tuple(sorted(set(int(s) for s in self.absorbing))))
        l, a, r = (np.array(v, dtype=float) for v in (self.l, self.a, self.r))
        for s in self.absorbing:
            if self.lo <= s <= self.hi and len(l) == self.size:
                i = s - self.lo
                l[i], a[i], r[i] = 0.0, 1.0, 0.0
        object.__setattr__(self, "l", _frozen(l))
        object.__setattr__(self, "a", _frozen(a))
        object.__setattr__(self, "r", _frozen(r))

    @classmethod
    def uniform(cls, lo, hi, l, a, r, absorbing=None):
        """Same row at every state; both endpoints absorb unless told otherwise."""
        if absorbing is None:
            absorbing = (lo, hi)
        n = hi - lo + 1
        return cls(lo, hi, [l] * n, [a] * n, [r] * n, absorbing)

    @classmethod
    def from_rows(cls, lo, hi, rows: Mapping[int, Sequence[float]], absorbing=()):
        """Build from ``{n: (l, a, r)}``; rows at absorbing states are ignored."""
        absorbing = tuple(absorbing)
        missing = [n for n in range(lo, hi + 1) if n not in rows and n not in absorbing]
        if missing:
            raise ValidationError([f"missing row for state {n}" for n in missing])
        l, a, r = [], [], []
        for n in range(lo, hi + 1):
            row = (0.0, 1.0, 0.0) if n in absorbing else tuple(rows[n])
            l.append(row[0])
            a.append(row[1])
            r.append(row[2])
        return cls(lo, hi, l, a, r, absorbing)

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    @property
    def states(self) -> range:
        return range(self.lo, self.hi + 1)

    @property
    def interior(self) -> list:
        """Non-absorbing states in increasing order."""
        return [n for n in self.states if n not in self.absorbing]

    @property
    def doubly_absorbed(self) -> bool:
        return self.absorbing == (self.lo, self.hi) and self.lo < self.hi

    @property
    def is_lazy(self) -> bool:
        return any(self.a[n - self.lo] != 0.0 for n in self.interior)

    def is_absorbing(self, n) -> bool:
        return n in self.absorbing

    def row(self, n) -> ProbabilityTriple:
        if not self.lo <= n <= self.hi:
            raise DomainError(f"state {n} outside window [{self.lo}, {self.hi}]")
        if n in self.absorbing:
            raise DomainError(f"state {n} is absorbing and has no transition row")
        i = n - self.lo
        return ProbabilityTriple(float(self.l[i]), float(self.a[i]), float(self.r[i]))

    def normalized(self) -> "BirthDeathChain":
        """Rescale every non-absorbing row to sum to one."""
        total = self.l + self.a + self.r
        return BirthDeathChain(self.lo, self.hi, self.l / total, self.a / total,
                               self.r / total, self.absorbing)

    def same_rows(self, other: "BirthDeathChain") -> bool:
        return (self.lo, self.hi, self.absorbing) == (other.lo, other.hi, other.absorbing) and all(
            np.array_equal(x, y) for x, y in ((self.l, other.l), (self.a, other.a), (self.r, other.r))
        )


def validate(chain: BirthDeathChain) -> list:
    """Return every invariant violation of ``chain``; empty when valid."""
    found = []
    if chain.hi < chain.lo:
        return [f"empty window [{chain.lo}, {chain.hi}]"]
    for name in ("l", "a", "r"):
        if len(getattr(chain, name)) != chain.size:
            found.append(f"{name} has {len(getattr(chain, name))} entries for {chain.size} states")
    if found:
        return found
    for s in chain.absorbing:
        if s not in (chain.lo, chain.hi):
            found.append(f"absorbing state {s} is not a window endpoint")
    for n in chain.interior:
        i = n - chain.lo
        found.extend(_row_problems(float(chain.l[i]), float(chain.a[i]), float(chain.r[i]),
                                   f" at state {n}"))
    return found


def ensure_valid(chain: BirthDeathChain) -> BirthDeathChain:
    problems = validate(chain)
    if problems:
        raise ValidationError(problems)
    return chain


def check_interior(chain: BirthDeathChain, *states) -> None:
    for n in states:
        if not chain.lo <= n <= chain.hi:
            raise DomainError(f"state {n} outside window [{chain.lo}, {chain.hi}]")
        if n in chain.absorbing:
            raise DomainError(f"state {n} is absorbing")


def remove_laziness(chain: BirthDeathChain) -> BirthDeathChain:
    """Drop the holding probabilities, keeping each state's left/right odds.

    The resulting chain visits the same states in the same order as the
    original with every repeated stay collapsed into one visit.  Rows that
    are already non-lazy are copied untouched, which makes the transform
    idempotent bit for bit.
    """
    ensure_valid(chain)
    l = np.array(chain.l)
    a = np.array(chain.a)
    r = np.array(chain.r)
    for n in chain.interior:
        i = n - chain.lo
        if a[i] == 0.0:
            continue
        moving = l[i] + r[i]
        l[i], a[i], r[i] = l[i] / moving, 0.0, r[i] / moving
    return BirthDeathChain(chain.lo, chain.hi, l, a, r, chain.absorbing)


def _ratio_factors(chain, j, k):
    ensure_valid(chain)
    if j == k:
        raise DomainError(f"degenerate pair: j = k = {j}")
    check_interior(chain, j, k)
    lo = chain.lo
    return chain.r[j - lo:k - lo], chain.l[j + 1 - lo:k + 1 - lo]


def log_symmetry_ratio(chain: BirthDeathChain, j: int, k: int) -> float:
    """Natural log of ``G(j, k) / G(k, j)``, i.e. of
    ``r_j ... r_{k-1} / (l_{j+1} ... l_k)``.  Antisymmetric in ``(j, k)``."""
    if j > k:
        return -log_symmetry_ratio(chain, k, j)
    up, down = _ratio_factors(chain, j, k)
    return math.fsum(np.log(up)) - math.fsum(np.log(down))


def symmetry_ratio(chain: BirthDeathChain, j: int, k: int) -> float:
    """Closed-form ``G(j, k) / G(k, j)`` from the transition probabilities.

    Parameters
    ----------
    chain : BirthDeathChain
        A valid chain; ``j`` and ``k`` must be distinct non-absorbing states.
    j, k : int
        States of the pair.  For ``j > k`` the reciprocal of the ``(k, j)``
        ratio is returned.

    Returns
    -------
    float
        ``prod(r[j:k]) / prod(l[j+1:k+1])``.  Short, tame products are
        multiplied directly; everything else goes through log space.
    """
    if j > k:
        return 1.0 / symmetry_ratio(chain, k, j)
    up, down = _ratio_factors(chain, j, k)
    lo_band, hi_band = _DIRECT_BAND
    if (k - j <= _DIRECT_MAX_FACTORS
            and np.all((up >= lo_band) & (up <= hi_band))
            and np.all((down >= lo_band) & (down <= hi_band))):
        return math.prod(up.tolist()) / math.prod(down.tolist())
    return math.exp(math.fsum(np.log(up)) - math.fsum(np.log(down)))


# --- recurrence / transience ---------------------------------------------

class Verdict(enum.Enum):
    RECURRENT = "Recurrent"
    TRANSIENT = "Transient"
    INCONCLUSIVE = "Inconclusive"


class SeriesStatus(enum.Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class RecurrenceVerdict:
    """Outcome of :func:`classify`.

    ``left_sum`` and ``right_sum`` are the partial sums of the embedding
    spacings reached when each side was decided (or at the horizon).
    """

    kind: Verdict
    left_sum: float
    right_sum: float
    left_status: SeriesStatus
    right_status: SeriesStatus
    horizon: int

    @property
    def left_infinite(self) -> bool:
        return self.left_status is SeriesStatus.DIVERGED

    @property
    def right_infinite(self) -> bool:
        return self.right_status is SeriesStatus.DIVERGED

    def as_dict(self) -> dict:
        return {
            "verdict": self.kind.value,
            "left_sum": self.left_sum,
            "right_sum": self.right_sum,
            "left_status": self.left_status.value,
            "right_status": self.right_status.value,
            "horizon": self.horizon,
        }


Coefficients = Callable[[int], Iterable[float]]


def _coeff_row(coefficients, n):
    l, a, r = (float(v) for v in coefficients(n))
    problems = _row_problems(l, a, r, f" at state {n}")
    if problems:
        raise ValidationError(problems)
    return l, a, r


def _series(first, ratios, horizon, threshold, tol, window):
    # terms after the first are first * ratio_1 * ratio_2 * ...
    total = first
    term = first
    small = deque(maxlen=window)
    for _ in range(horizon):
        if total > threshold:
            return total, SeriesStatus.DIVERGED
        q = next(ratios)
        small.append(q)
        term *= q
        total += term
    if total > threshold:
        return total, SeriesStatus.DIVERGED
    if len(small) == window and max(small) <= 1.0 - tol:
        return total, SeriesStatus.CONVERGED
    if len(small) == window and min(small) >= 1.0:
        # terms never shrink, so the series cannot converge
        return total, SeriesStatus.DIVERGED
    return total, SeriesStatus.UNDETERMINED


def classify(coefficients: Coefficients, horizon: int = 10_000,
             divergence_threshold: float = 1e12,
             convergence_tolerance: float = 1e-3) -> RecurrenceVerdict:
    """Decide recurrence of a chain on all of the integers.

    ``coefficients(n)`` returns ``(l_n, a_n, r_n)``.  The spacings of the
    Brownian embedding are summed out to ``horizon`` states on each side;
    the chain is transient exactly when one of those sums is finite.
    """
    if horizon < 16:
        raise ConfigurationError(f"horizon must be >= 16, got {horizon}")
    if divergence_threshold <= 0 or not 0 < convergence_tolerance < 1:
        raise ConfigurationError("divergence_threshold must be > 0 and convergence_tolerance in (0, 1)")
    window = max(16, horizon // 64)

    def right_ratios():
        n = 1
        while True:
            l, _, r = _coeff_row(coefficients, n)
            yield l / r
            n += 1

    def left_ratios():
        n = -1
        while True:
            l, _, r = _coeff_row(coefficients, n)
            yield r / l
            n -= 1

    l0, _, r0 = _coeff_row(coefficients, 0)
    right_sum, right = _series(l0, right_ratios(), horizon, divergence_threshold,
                               convergence_tolerance, window)
    left_sum, left = _series(r0, left_ratios(), horizon, divergence_threshold,
                             convergence_tolerance, window)
    if SeriesStatus.CONVERGED in (left, right):
        kind = Verdict.TRANSIENT
    elif left is right is SeriesStatus.DIVERGED:
        kind = Verdict.RECURRENT
    else:
        kind = Verdict.INCONCLUSIVE
    return RecurrenceVerdict(kind, left_sum, right_sum, left, right, horizon)


def uniform_coefficients(l, a, r) -> Coefficients:
    row = (l, a, r)
    return lambda n: row


def lazy_free_coefficients(coefficients: Coefficients) -> Coefficients:
    """Coefficient function of the laziness-removed chain."""
    def wrapped(n):
        l, a, r = coefficients(n)
        return l / (l + r), 0.0, r / (l + r)
    return wrapped


# --- JSON spec ------------------------------------------------------------

def chain_from_dict(data: Mapping, normalize: bool = False) -> BirthDeathChain:
    """Build a chain from the line spec mapping.

    ``rows`` is either a list of ``{"n", "l", "a", "r"}`` records or
    ``{"uniform": {"l", "a", "r"}}``.  ``absorbing`` lists zero, one or two
    window endpoints.
    """
    try:
        lo, hi = int(data["lo"]), int(data["hi"])
        absorbing = tuple(int(s) for s in (data.get("absorbing") or ()))
        rows = data["rows"]
        if isinstance(rows, Mapping):
            u = rows["uniform"]
            chain = BirthDeathChain.uniform(lo, hi, float(u["l"]), float(u.get("a", 0.0)),
                                            float(u["r"]), absorbing)
        else:
            table = {}
            for rec in rows:
                n = int(rec["n"])
                if n in table:
                    raise SpecParseError(f"duplicate row for state {n}")
                table[n] = (float(rec["l"]), float(rec.get("a", 0.0)), float(rec["r"]))
            extra = sorted(n for n in table if not lo <= n <= hi)
            if extra:
                raise SpecParseError(f"rows outside window [{lo}, {hi}]: {extra}")
            chain = BirthDeathChain.from_rows(lo, hi, table, absorbing)
    except (KeyError, TypeError) as exc:
        raise SpecParseError(f"malformed line spec: {exc!r}") from None
    if normalize:
        chain = chain.normalized()
    return chain


def chain_to_dict(chain: BirthDeathChain) -> dict:
    return {
        "kind": "line",
        "lo": chain.lo,
        "hi": chain.hi,
        "rows": [
            {"n": n, "l": float(chain.l[n - chain.lo]), "a": float(chain.a[n - chain.lo]),
             "r": float(chain.r[n - chain.lo])}
            for n in chain.interior
        ],
        "absorbing": list(chain.absorbing),
    }


_MATH_FUNCS = {
    "exp": math.exp, "log": math.log, "sqrt": math.sqrt, "abs": abs,
    "min": min, "max": max, "sin": math.sin, "cos": math.cos,
}


def coefficients_from_dict(data: Mapping) -> Coefficients:
    """Coefficient function from ``{"l": .., "a": .., "r": ..}``.

    Each entry is a number or an expression in ``n`` (e.g.
    ``"0.5 + 1/(4*n) if n != 0 else 0.5"``).  ``a`` defaults to 0; when one
    of ``l``/``r`` is omitted it is the complement of the other two.
    ``{"uniform": {...}}`` is accepted as well.
    """
    if "uniform" in data:
        data = data["uniform"]
    exprs = {k: data[k] for k in ("l", "a", "r") if k in data}
    exprs.setdefault("a", 0)
    if "l" not in exprs and "r" not in exprs:
        raise SpecParseError("coefficients need at least one of 'l' and 'r'")

    def compile_one(expr):
        if isinstance(expr, (int, float)):
            value = float(expr)
            return lambda n: value
        if not isinstance(expr, str):
            raise SpecParseError(f"coefficient must be number or expression, got {expr!r}")
        evaluator = SimpleEval(functions=_MATH_FUNCS, names={"pi": math.pi})

        def f(n):
            evaluator.names = {"n": n, "pi": math.pi}
            try:
                return float(evaluator.eval(expr))
            except Exception as exc:  # simpleeval raises a zoo of types
                raise SpecParseError(f"cannot evaluate {expr!r} at n={n}: {exc}") from None
        return f

    funcs = {k: compile_one(v) for k, v in exprs.items()}

    def coefficients(n):
        a = funcs["a"](n)
        if "l" not in funcs:
            r = funcs["r"](n)
            return 1.0 - a - r, a, r
        l = funcs["l"](n)
        r = funcs["r"](n) if "r" in funcs else 1.0 - a - l
        return l, a, r

    return coefficients
