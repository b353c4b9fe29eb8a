"""Skew-symmetric coefficient sources for Volterra operators.

An infinite matrix is represented by a pure, vectorized function giving
the upper-triangular entries ``a[k, i]`` for ``k < i``. The lower
triangle follows by negation and the diagonal is zero, so antisymmetry
holds by construction. Every finite block can be materialized on demand.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

UpperFn = Callable[[np.ndarray, np.ndarray], np.ndarray]

SKEW_TOL = 1e-15


class MatrixError(ValueError):
    pass


class InvalidRange(MatrixError):
    pass


class NotSkew(MatrixError):
    pass


class DescriptorError(MatrixError):
    """Malformed descriptor; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True, eq=False)
class SkewMatrix:
    """Infinite skew-symmetric matrix with entries bounded by 1.

    Attributes:
        upper: vectorized ``(k, i) -> a_ki`` for integer arrays with ``k < i``.
        provenance: JSON-ready descriptor of how the matrix was built.
        declared_dim: ambient dimension for finite families, else None.
    """

    upper: UpperFn
    provenance: Mapping[str, Any] = field(default_factory=lambda: {"kind": "custom"})
    declared_dim: int | None = None

    def entries(self, k, i) -> np.ndarray:
        """Entries ``a_ki`` for arbitrary index arrays (any order)."""
        k = np.asarray(k, dtype=np.int64)
        i = np.asarray(i, dtype=np.int64)
        k, i = np.broadcast_arrays(k, i)
        out = np.zeros(k.shape)
        up = k < i
        lo = k > i
        if up.any():
            out[up] = self.upper(k[up], i[up])
        if lo.any():
            out[lo] = -np.asarray(self.upper(i[lo], k[lo]), dtype=np.float64)
        return out

    def __call__(self, k: int, i: int) -> float:
        return float(self.entries(np.array([k]), np.array([i]))[0])

    def block(self, indices) -> np.ndarray:
        """Dense block ``a[indices][:, indices]``."""
        idx = np.asarray(indices, dtype=np.int64)
        n = idx.size
        out = np.zeros((n, n))
        if n > 1:
            r, c = np.triu_indices(n, 1)
            v = np.asarray(self.upper(idx[r], idx[c]), dtype=np.float64)
            out[r, c] = v
            out[c, r] = -v
        return out

    def upper_window(self, dim: int) -> np.ndarray:
        """Upper-triangular part of the leading ``dim x dim`` block."""
        return np.triu(self.block(np.arange(1, dim + 1)), 1)

    def descriptor(self) -> dict:
        return dict(self.provenance)


# -- generators -----------------------------------------------------------

def make_constant(c: float) -> SkewMatrix:
    """``a_ki = c`` for every ``k < i``; ``c = -1`` gives the cascade operator."""
    c = float(c)
    if not -1.0 <= c <= 1.0:
        raise InvalidRange(f"|c| must be <= 1, got {c!r}")

    def upper(k, i):
        return np.full(np.shape(k), c)

    return SkewMatrix(upper, {"kind": "constant", "c": c})


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _splitmix(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def hash_uniform(seed: int, k: np.ndarray, i: np.ndarray) -> np.ndarray:
    """Counter-based uniform variates in (0, 1], a pure function of (seed, k, i)."""
    s = np.full(np.shape(k), np.uint64(seed & 0xFFFFFFFFFFFFFFFF), dtype=np.uint64)
    h = _splitmix(s)
    h = _splitmix(h ^ np.asarray(k, dtype=np.uint64))
    h = _splitmix(h ^ np.asarray(i, dtype=np.uint64))
    return ((h >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53


def make_random(seed: int, lo: float = 0.0, hi: float = 1.0) -> SkewMatrix:
    """Upper entries drawn from (lo, hi] by hashing ``(seed, k, i)``.

    No state is kept, so entries do not depend on query order.
    """
    lo, hi = float(lo), float(hi)
    if not -1.0 <= lo <= hi <= 1.0:
        raise InvalidRange(f"need -1 <= lo <= hi <= 1, got lo={lo!r}, hi={hi!r}")
    seed = int(seed)

    def upper(k, i):
        u = hash_uniform(seed, k, i)
        return np.clip(lo + (hi - lo) * u, lo, hi)

    return SkewMatrix(upper, {"kind": "random", "seed": seed, "lo": lo, "hi": hi})


def _check_skew(a: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSkew("block must be square")
    if np.any(np.abs(a + a.T) > SKEW_TOL):
        raise NotSkew("block is not antisymmetric")
    if np.any(np.abs(a) > 1.0):
        raise InvalidRange("block entries must satisfy |a| <= 1")
    return a


def make_tilde(A: Sequence[Sequence[float]], B: SkewMatrix) -> SkewMatrix:
    """Block matrix ``[[A, 0], [0, B]]`` with ``k0 = len(A) + 1``.

    ``B`` is re-indexed so that its entry (1, 2) sits at (k0, k0 + 1).
    """
    a = _check_skew(np.array(A, dtype=np.float64))
    k0 = a.shape[0] + 1
    if k0 < 2:
        raise NotSkew("head block must be at least 1 x 1")
    off = k0 - 1

    def upper(k, i):
        out = np.zeros(np.shape(k))
        head = i < k0
        tail = k >= k0
        if head.any():
            out[head] = a[k[head] - 1, i[head] - 1]
        if tail.any():
            out[tail] = B.upper(k[tail] - off, i[tail] - off)
        return out

    return SkewMatrix(upper, {"kind": "tilde", "A": a.tolist(), "B": B.descriptor()})


def make_table(entries: Sequence[Sequence[float]], dim: int | None = None) -> SkewMatrix:
    """Sparse explicit matrix from ``[k, i, a_ki]`` triples; missing entries are 0."""
    table: dict[tuple[int, int], float] = {}
    for row in entries:
        k, i, v = int(row[0]), int(row[1]), float(row[2])
        if k < 1 or i < 1:
            raise MatrixError("indices start at 1")
        if abs(v) > 1.0:
            raise InvalidRange(f"|a_{k}{i}| = {abs(v)!r} exceeds 1")
        if k == i:
            if v != 0.0:
                raise NotSkew(f"diagonal entry a_{k}{k} must be 0")
            continue
        if k > i:
            k, i, v = i, k, -v
        if (k, i) in table and abs(table[(k, i)] - v) > SKEW_TOL:
            raise NotSkew(f"conflicting entries for pair ({k}, {i})")
        table[(k, i)] = v

    def upper(k, i):
        return np.array([table.get(p, 0.0) for p in zip(k.tolist(), i.tolist())], dtype=np.float64)

    rows = [[k, i, v] for (k, i), v in sorted(table.items())]
    return SkewMatrix(upper, {"kind": "table", "entries": rows}, declared_dim=dim)


def make_dense(a: np.ndarray) -> SkewMatrix:
    """Finite skew matrix; entries beyond its size are 0."""
    a = _check_skew(np.asarray(a, dtype=np.float64))
    n = a.shape[0]
    r, c = np.triu_indices(n, 1)
    return make_table([[int(k) + 1, int(i) + 1, float(a[k, i])] for k, i in zip(r, c)], dim=n)


def shifted(m: SkewMatrix, offset: int) -> SkewMatrix:
    """Tail matrix ``b_ki = a_{k+offset, i+offset}``."""

    def upper(k, i):
        return m.upper(k + offset, i + offset)

    return SkewMatrix(upper, {"kind": "shifted", "offset": int(offset), "base": m.descriptor()})


def from_function(fn: UpperFn, name: str = "custom") -> SkewMatrix:
    """Wrap an arbitrary vectorized upper-entry function. Nothing is validated."""
    return SkewMatrix(fn, {"kind": name})


def from_descriptor(desc: Any, path: str = "matrix") -> SkewMatrix:
    """Build a matrix from its JSON descriptor."""
    if not isinstance(desc, Mapping):
        raise DescriptorError(path, "descriptor must be an object")
    kind = desc.get("kind")

    def need(key, typ=(int, float)):
        if key not in desc:
            raise DescriptorError(f"{path}.{key}", "missing")
        v = desc[key]
        if not isinstance(v, typ) or isinstance(v, bool):
            raise DescriptorError(f"{path}.{key}", f"expected {typ}")
        return v

    try:
        if kind == "constant":
            return make_constant(need("c"))
        if kind == "random":
            return make_random(need("seed", int), desc.get("lo", 0.0), desc.get("hi", 1.0))
        if kind == "tilde":
            return make_tilde(need("A", list), from_descriptor(desc.get("B"), f"{path}.B"))
        if kind == "table":
            return make_table(need("entries", list), desc.get("dim"))
        if kind == "shifted":
            return shifted(from_descriptor(desc.get("base"), f"{path}.base"), need("offset", int))
    except DescriptorError:
        raise
    except (MatrixError, TypeError, IndexError) as exc:
        raise DescriptorError(path, str(exc)) from exc
    raise DescriptorError(f"{path}.kind", f"unknown matrix kind {kind!r}")


# -- classification -------------------------------------------------------

class Tag(str, enum.Enum):
    IDENTITY = "Identity"
    APLUS = "Aplus"
    AMINUS = "Aminus"
    TILDE_PLUS = "TildePlus"
    TILDE_MINUS = "TildeMinus"
    GENERAL = "General"


Entry = tuple[int, int, float]


@dataclass(frozen=True)
class MatrixClass:
    """Class of a matrix, certified on the window ``1..scan_dim`` only."""

    tag: Tag
    scan_dim: int
    k0: int | None = None
    certificate: tuple[Entry, ...] = ()

    @property
    def is_plus(self) -> bool:
        """Upper entries nonnegative on the window (V+ class)."""
        return self.tag in (Tag.IDENTITY, Tag.APLUS)

    @property
    def is_minus(self) -> bool:
        return self.tag in (Tag.IDENTITY, Tag.AMINUS)

    @property
    def is_tilde(self) -> bool:
        return self.tag in (Tag.TILDE_PLUS, Tag.TILDE_MINUS)

    def __str__(self) -> str:
        name = self.tag.value if self.k0 is None else f"{self.tag.value}({self.k0})"
        return f"{name} [window-certified up to {self.scan_dim}]"


def _entry(u: np.ndarray, pos, base: int = 0) -> Entry:
    r, c = int(pos[0]), int(pos[1])
    return (r + 1 + base, c + 1 + base, float(u[r, c]))


def classify(m: SkewMatrix, scan_dim: int) -> MatrixClass:
    """Most specific class consistent with all pairs ``k < i <= scan_dim``.

    Tilde classes use the block form: ``a_ki = 0`` whenever ``k < k0 <= i``
    and the tail ``k0 <= k < i`` has one sign. The smallest admissible
    ``k0 >= 2`` is reported; ``k0`` must leave at least one tail pair in the
    window. When the tail is all zero, TildePlus is reported.
    """
    if scan_dim < 2:
        raise ValueError("scan_dim must be >= 2")
    u = m.upper_window(scan_dim)
    r, c = np.triu_indices(scan_dim, 1)
    vals = u[r, c]
    if not np.any(vals):
        return MatrixClass(Tag.IDENTITY, scan_dim)
    lo = (r[vals.argmin()], c[vals.argmin()])
    hi = (r[vals.argmax()], c[vals.argmax()])
    if vals.min() >= 0.0:
        return MatrixClass(Tag.APLUS, scan_dim, certificate=(_entry(u, lo),))
    if vals.max() <= 0.0:
        return MatrixClass(Tag.AMINUS, scan_dim, certificate=(_entry(u, hi),))
    for k0 in range(2, scan_dim):
        coupling = u[: k0 - 1, k0 - 1:]
        if np.any(coupling):
            continue
        tail = u[k0 - 1:, k0 - 1:]
        tr, tc = np.triu_indices(tail.shape[0], 1)
        tv = tail[tr, tc]
        if tv.min() >= 0.0:
            return MatrixClass(Tag.TILDE_PLUS, scan_dim, k0, (_entry(tail, (tr[tv.argmin()], tc[tv.argmin()]), k0 - 1),))
        if tv.max() <= 0.0:
            return MatrixClass(Tag.TILDE_MINUS, scan_dim, k0, (_entry(tail, (tr[tv.argmax()], tc[tv.argmax()]), k0 - 1),))
    return MatrixClass(Tag.GENERAL, scan_dim, certificate=(_entry(u, lo), _entry(u, hi)))
