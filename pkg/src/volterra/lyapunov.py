"""Linear (quasi-)Lyapunov functionals ``phi_b(x) = sum_k b_k x_k``.

A coefficient sequence is a finite prefix followed by an analytic tail
rule, which keeps monotonicity and membership in c0 exactly decidable.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .matrix import DescriptorError, MatrixClass, SkewMatrix, classify
from .operator import Trajectory
from .simplex import SimplexPoint

SLACK = 1e-12
EPS_LIMIT = 1e-9


class Tail(str, enum.Enum):
    CONSTANT = "constant"
    GEOMETRIC = "geometric"
    ZERO = "zero"


@dataclass(frozen=True)
class LinearFunctional:
    """Coefficients ``prefix[0], prefix[1], ...`` then the tail rule.

    Tail rules for ``k > len(prefix)``: ``constant`` gives ``b_k = c``,
    ``geometric`` gives ``b_k = 2**-k``, ``zero`` gives ``b_k = 0``.
    """

    prefix: tuple[float, ...]
    tail: Tail = Tail.ZERO
    c: float = 0.0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(float(v) for v in self.prefix))
        object.__setattr__(self, "tail", Tail(self.tail))

    def coefficients(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=np.int64)
        p = len(self.prefix)
        out = np.empty(k.shape)
        head = k <= p
        if head.any():
            out[head] = np.asarray(self.prefix)[k[head] - 1]
        rest = ~head
        if self.tail is Tail.CONSTANT:
            out[rest] = self.c
        elif self.tail is Tail.GEOMETRIC:
            out[rest] = np.ldexp(1.0, -k[rest])
        else:
            out[rest] = 0.0
        return out

    def __getitem__(self, k: int) -> float:
        return float(self.coefficients(np.array([k]))[0])

    def _tail_first(self) -> float:
        return self[len(self.prefix) + 1]

    @property
    def sup_norm(self) -> float:
        head = max((abs(v) for v in self.prefix), default=0.0)
        return max(head, abs(self._tail_first()))

    @property
    def is_increasing(self) -> bool:
        if self.tail is Tail.GEOMETRIC:
            return False
        seq = self.prefix + (self._tail_first(),)
        return all(a <= b for a, b in zip(seq, seq[1:]))

    @property
    def is_decreasing(self) -> bool:
        seq = self.prefix + (self._tail_first(),)
        return all(a >= b for a, b in zip(seq, seq[1:]))

    @property
    def is_c0(self) -> bool:
        return self.tail is not Tail.CONSTANT or self.c == 0.0

    @property
    def is_nonneg(self) -> bool:
        return all(v >= 0 for v in self.prefix) and self._tail_first() >= 0

    def c0_rank(self, eps: float) -> int | None:
        """Smallest ``n`` with ``|b_k| < eps`` for every ``k >= n``; None if no such n."""
        if self.tail is Tail.CONSTANT and abs(self.c) >= eps:
            return None
        p = len(self.prefix)
        big = [k for k in range(1, p + 1) if abs(self.prefix[k - 1]) >= eps]
        n = big[-1] + 1 if big else 1
        if self.tail is Tail.GEOMETRIC:
            g = 1
            while math.ldexp(1.0, -g) >= eps:
                g += 1
            if g > p + 1:
                n = max(n, g)
        return n

    def descriptor(self) -> dict:
        d: dict[str, Any] = {"kind": "prefix", "values": list(self.prefix), "tail": {"rule": self.tail.value}}
        if self.tail is Tail.CONSTANT:
            d["tail"]["c"] = self.c
        return d


def phi(f: LinearFunctional, x: SimplexPoint) -> float:
    if not len(x):
        return 0.0
    return math.fsum((f.coefficients(x.indices) * x.values).tolist())


def make_bm(m: int) -> LinearFunctional:
    """Ones up to index ``m``, then ``2**-k``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return LinearFunctional((1.0,) * m, Tail.GEOMETRIC, name=f"bm{m}")


def make_bn_harmonic(n: int) -> LinearFunctional:
    """``1/k`` up to index ``n``, then zero."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return LinearFunctional(tuple(1.0 / k for k in range(1, n + 1)), Tail.ZERO, name=f"harmonic{n}")


def make_increasing(i0: int) -> LinearFunctional:
    """``2 - 1/k`` up to ``i0``, constant ``2 - 1/i0`` afterwards."""
    if i0 < 1:
        raise ValueError("i0 must be >= 1")
    vals = tuple(2.0 - 1.0 / k for k in range(1, i0 + 1))
    return LinearFunctional(vals, Tail.CONSTANT, vals[-1], name=f"increasing{i0}")


def make_constant_tail(c: float, prefix: Sequence[float] = ()) -> LinearFunctional:
    return LinearFunctional(tuple(prefix), Tail.CONSTANT, float(c), name=f"const{c}")


def functional_from_descriptor(desc: Any, path: str = "functional") -> LinearFunctional:
    if not isinstance(desc, Mapping):
        raise DescriptorError(path, "descriptor must be an object")
    kind = desc.get("kind")
    try:
        if kind == "bm":
            return make_bm(int(desc["m"]))
        if kind == "harmonic":
            return make_bn_harmonic(int(desc["n"]))
        if kind == "increasing":
            return make_increasing(int(desc["i0"]))
        if kind == "prefix":
            tail = desc.get("tail", {"rule": "zero"})
            rule = Tail(tail.get("rule", "zero"))
            values = desc.get("values", [])
            if not isinstance(values, list):
                raise DescriptorError(f"{path}.values", "expected a list")
            return LinearFunctional(tuple(float(v) for v in values), rule, float(tail.get("c", 0.0)),
                                    name=desc.get("name", ""))
    except DescriptorError:
        raise
    except KeyError as exc:
        raise DescriptorError(f"{path}.{exc.args[0]}", "missing") from exc
    except (TypeError, ValueError) as exc:
        raise DescriptorError(path, str(exc)) from exc
    raise DescriptorError(f"{path}.kind", f"unknown functional kind {kind!r}")


@dataclass(frozen=True)
class Admissibility:
    """Which sufficient conditions for monotone ``phi_b`` hold on the window.

    Attributes:
        h1: ``b_k a_ki <= 0`` for all pairs; phi is nonincreasing.
        h1_reversed: ``b_k a_ki >= 0`` for all pairs; phi is nondecreasing.
        h2: V+ with increasing b; nonincreasing.
        h3: V- with decreasing b; nonincreasing.
        h4: V+ or V- with decreasing b in c0; quasi-Lyapunov,
            nondecreasing on V+ and nonincreasing on V-.
    """

    h1: bool
    h1_reversed: bool
    h2: bool
    h3: bool
    h4: bool
    matrix_class: MatrixClass

    @property
    def expected_sign(self) -> int | None:
        """-1 for nonincreasing, +1 for nondecreasing, 0 for both, None if unknown."""
        down = self.h1 or self.h2 or self.h3 or (self.h4 and self.matrix_class.is_minus)
        up = self.h1_reversed or (self.h4 and self.matrix_class.is_plus)
        if down and up:
            return 0
        if down:
            return -1
        if up:
            return 1
        return None


def admissibility(f: LinearFunctional, m: SkewMatrix, scan_dim: int) -> Admissibility:
    cls = classify(m, scan_dim)
    k = np.arange(1, scan_dim + 1)
    a = m.block(k)
    prod = f.coefficients(k)[:, None] * a
    return Admissibility(
        h1=bool(np.all(prod <= 0.0)),
        h1_reversed=bool(np.all(prod >= 0.0)),
        h2=cls.is_plus and f.is_increasing,
        h3=cls.is_minus and f.is_decreasing,
        h4=(cls.is_plus or cls.is_minus) and f.is_decreasing and f.is_c0,
        matrix_class=cls,
    )


@dataclass(frozen=True)
class MonotonicityReport:
    values: tuple[float, ...]
    deltas: tuple[float, ...]
    nonincreasing: bool
    nondecreasing: bool
    limit: float
    tail_width: float
    converged: bool

    @property
    def verdict(self) -> str:
        if self.nonincreasing and self.nondecreasing:
            return "constant"
        if self.nonincreasing:
            return "nonincreasing"
        if self.nondecreasing:
            return "nondecreasing"
        return "nonmonotone"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "values": list(self.values),
            "deltas": list(self.deltas),
            "limit": self.limit,
            "tail_width": self.tail_width,
            "converged": self.converged,
        }


def monotonicity_report(f: LinearFunctional, t: Trajectory | Sequence[SimplexPoint],
                        slack: float = SLACK, eps_limit: float = EPS_LIMIT) -> MonotonicityReport:
    """Per-step changes of ``phi_b`` along a trajectory.

    The limit estimate is the last value; ``tail_width`` is the spread of
    the values over the final 10% of steps.
    """
    points = t.points if isinstance(t, Trajectory) else list(t)
    if not points:
        raise ValueError("empty trajectory")
    vals = [phi(f, p) for p in points]
    deltas = [b - a for a, b in zip(vals, vals[1:])]
    w = max(2, math.ceil(0.1 * len(vals)))
    tail = vals[-w:]
    width = max(tail) - min(tail)
    return MonotonicityReport(
        values=tuple(vals),
        deltas=tuple(deltas),
        nonincreasing=all(d <= slack for d in deltas),
        nondecreasing=all(d >= -slack for d in deltas),
        limit=vals[-1],
        tail_width=width,
        converged=width < eps_limit,
    )
