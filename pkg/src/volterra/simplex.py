"""Sparse points of the infinite dimensional simplex and its spheres.

A point is a nonnegative sequence in l1 with finitely many nonzero
coordinates. Only the nonzero coordinates are stored, indexed from 1.
Two distances are provided: the l1 norm distance and the metric ``rho``
that generates pointwise convergence,

    rho(a, b) = sum_k 2**-k * |a_k - b_k| / (1 + |a_k - b_k|).
"""
from __future__ import annotations

import json
import math
from typing import Any, Iterable, Mapping

import numpy as np

TOL_MASS = 1e-12


class SimplexError(ValueError):
    """Base class for invalid point operations."""


class EmptySupport(SimplexError):
    pass


class ZeroMass(SimplexError):
    pass


class InvalidPoint(SimplexError):
    pass


class SimplexPoint:
    """Immutable finite-support nonnegative sequence.

    Args:
        indices: strictly increasing positive integers.
        values: positive reals, one per index.

    Use the ``from_*`` constructors to build points from loose input;
    they drop zeros and sort. The raw constructor validates but does not
    repair.
    """

    __slots__ = ("_idx", "_val", "_mass")

    def __init__(self, indices: Iterable[int], values: Iterable[float]):
        idx = np.array(indices, dtype=np.int64).reshape(-1)
        val = np.array(values, dtype=np.float64).reshape(-1)
        if idx.shape != val.shape:
            raise InvalidPoint("indices and values differ in length")
        if idx.size and idx[0] < 1:
            raise InvalidPoint("indices start at 1")
        if np.any(np.diff(idx) <= 0):
            raise InvalidPoint("indices must be strictly increasing")
        if not np.all(np.isfinite(val)) or np.any(val <= 0.0):
            raise InvalidPoint("stored values must be finite and > 0")
        mass = math.fsum(val.tolist())
        if mass > 1.0 + TOL_MASS:
            raise InvalidPoint(f"mass {mass!r} exceeds 1")
        self._set(idx, val, mass)

    def _set(self, idx, val, mass):
        idx.setflags(write=False)
        val.setflags(write=False)
        self._idx = idx
        self._val = val
        self._mass = mass

    @classmethod
    def _trusted(cls, idx: np.ndarray, val: np.ndarray, mass: float | None = None) -> "SimplexPoint":
        # Caller guarantees canonical form; used on hot paths.
        obj = cls.__new__(cls)
        if mass is None:
            mass = math.fsum(val.tolist())
        obj._set(idx, val, mass)
        return obj

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls) -> "SimplexPoint":
        return cls._trusted(np.zeros(0, np.int64), np.zeros(0), 0.0)

    @classmethod
    def vertex(cls, k: int) -> "SimplexPoint":
        """The extremal point e_k."""
        return cls([k], [1.0])

    @classmethod
    def from_sparse(cls, coords: Mapping[Any, float]) -> "SimplexPoint":
        items = sorted((int(k), float(v)) for k, v in coords.items())
        for k, v in items:
            if v < 0:
                raise InvalidPoint(f"negative coordinate {v!r} at index {k}")
        keys = [k for k, _ in items]
        if len(set(keys)) != len(keys):
            raise InvalidPoint("duplicate index")
        items = [(k, v) for k, v in items if v != 0.0]
        return cls([k for k, _ in items], [v for _, v in items])

    @classmethod
    def from_dense(cls, values: Iterable[float]) -> "SimplexPoint":
        return cls.from_sparse({k: v for k, v in enumerate(values, start=1)})

    @classmethod
    def uniform(cls, first: int, last: int) -> "SimplexPoint":
        n = last - first + 1
        if n < 1:
            raise InvalidPoint("empty index range")
        return cls(range(first, last + 1), np.full(n, 1.0 / n))

    @classmethod
    def geometric(cls, n: int) -> "SimplexPoint":
        """Truncation of (2**-k) to k <= n, renormalized onto S."""
        k = np.arange(1, n + 1)
        return renormalize(cls(k, np.ldexp(1.0, -k)), 1.0)

    # -- accessors --------------------------------------------------------
    @property
    def indices(self) -> np.ndarray:
        return self._idx

    @property
    def values(self) -> np.ndarray:
        return self._val

    @property
    def mass(self) -> float:
        return self._mass

    @property
    def dim(self) -> int:
        """Largest stored index, 0 for the zero point."""
        return int(self._idx[-1]) if self._idx.size else 0

    def __len__(self) -> int:
        return int(self._idx.size)

    def __getitem__(self, k: int) -> float:
        pos = np.searchsorted(self._idx, k)
        if pos < self._idx.size and self._idx[pos] == k:
            return float(self._val[pos])
        return 0.0

    def dense(self, dim: int | None = None) -> np.ndarray:
        """Coordinates 1..dim as a dense array (dim defaults to ``self.dim``)."""
        dim = self.dim if dim is None else dim
        out = np.zeros(dim)
        keep = self._idx <= dim
        out[self._idx[keep] - 1] = self._val[keep]
        return out

    def restrict(self, first: int = 1, last: int | None = None) -> "SimplexPoint":
        """Coordinates with first <= k <= last, others set to 0."""
        keep = self._idx >= first
        if last is not None:
            keep &= self._idx <= last
        return SimplexPoint._trusted(self._idx[keep].copy(), self._val[keep].copy())

    def shift(self, offset: int) -> "SimplexPoint":
        """Re-index every coordinate k to k + offset."""
        idx = self._idx + offset
        if idx.size and idx[0] < 1:
            raise InvalidPoint("shift moves an index below 1")
        return SimplexPoint._trusted(idx, self._val.copy(), self._mass)

    def on_sphere(self, r: float = 1.0, tol: float = TOL_MASS) -> bool:
        return abs(self._mass - r) <= tol

    def is_interior(self, dim: int) -> bool:
        """True when every coordinate 1..dim is strictly positive.

        Interiority is taken relative to the finite face spanned by the
        first ``dim`` vertices; every finite-support point is on the
        boundary of the infinite simplex.
        """
        return self._idx.size == dim and (dim == 0 or self._idx[-1] == dim)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SimplexPoint):
            return NotImplemented
        return np.array_equal(self._idx, other._idx) and np.array_equal(self._val, other._val)

    def __hash__(self) -> int:
        return hash((self._idx.tobytes(), self._val.tobytes()))

    def __repr__(self) -> str:
        body = ", ".join(f"{k}: {v!r}" for k, v in zip(self._idx.tolist(), self._val.tolist()))
        return f"SimplexPoint({{{body}}})"

    # -- serialization ----------------------------------------------------
    def to_literal(self) -> dict[str, float]:
        """Sparse JSON-ready mapping ``{"k": value}``."""
        return {str(k): v for k, v in zip(self._idx.tolist(), self._val.tolist())}


def parse_point(literal: Any) -> SimplexPoint:
    """Build a point from a dense list, a sparse ``{index: value}`` map or a JSON string."""
    if isinstance(literal, SimplexPoint):
        return literal
    if isinstance(literal, (str, bytes)):
        literal = json.loads(literal)
    if isinstance(literal, Mapping):
        return SimplexPoint.from_sparse(literal)
    if isinstance(literal, (list, tuple, np.ndarray)):
        return SimplexPoint.from_dense(literal)
    raise InvalidPoint(f"cannot read a point from {type(literal).__name__}")


def _aligned(a: SimplexPoint, b: SimplexPoint):
    idx = np.union1d(a.indices, b.indices)
    va = np.zeros(idx.size)
    vb = np.zeros(idx.size)
    va[np.searchsorted(idx, a.indices)] = a.values
    vb[np.searchsorted(idx, b.indices)] = b.values
    return idx, va, vb


def l1_distance(a: SimplexPoint, b: SimplexPoint) -> float:
    _, va, vb = _aligned(a, b)
    return math.fsum(np.abs(va - vb).tolist())


def rho_distance(a: SimplexPoint, b: SimplexPoint) -> float:
    """Pointwise-convergence metric; terms outside both supports vanish."""
    idx, va, vb = _aligned(a, b)
    d = np.abs(va - vb)
    return math.fsum((np.ldexp(1.0, -idx) * (d / (1.0 + d))).tolist())


def support(x: SimplexPoint) -> tuple[int, ...]:
    return tuple(x.indices.tolist())


def min_support(x: SimplexPoint) -> int:
    if not len(x):
        raise EmptySupport("zero point has empty support")
    return int(x.indices[0])


def max_support(x: SimplexPoint) -> int:
    if not len(x):
        raise EmptySupport("zero point has empty support")
    return int(x.indices[-1])


def renormalize(x: SimplexPoint, target_mass: float = 1.0) -> SimplexPoint:
    """Scale ``x`` onto the sphere of radius ``target_mass``."""
    if x.mass == 0.0:
        raise ZeroMass("cannot renormalize the zero point")
    if target_mass <= 0:
        raise SimplexError("target mass must be positive")
    val = x.values / x.mass * target_mass
    return SimplexPoint(x.indices.copy(), val)
