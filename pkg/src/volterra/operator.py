"""The Volterra quadratic map and its iteration.

For a point ``x`` with finite support the map is

    (V x)_k = x_k * (1 + sum_i a_ki x_i),

so coordinates outside the support stay exactly zero and the whole
computation happens on the support block of the matrix.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .matrix import MatrixClass, SkewMatrix, Tag, classify, make_dense, shifted
from .simplex import TOL_MASS, SimplexPoint, l1_distance, rho_distance

log = logging.getLogger(__name__)

FLUSH_BELOW = 1e-300
DEFAULT_SCAN_DIM = 64


class OperatorError(ArithmeticError):
    step: int | None = None


class MassDrift(OperatorError):
    pass


class NegativeCoordinate(OperatorError):
    pass


class NotTilde(ValueError):
    pass


class VolterraOperator:
    """Volterra operator defined by a skew matrix.

    Args:
        matrix: coefficient source.
        class_hint: classification to cache; computed lazily on the
            window ``1..scan_dim`` when omitted.
        scan_dim: classification window used when ``class_hint`` is None.
    """

    def __init__(self, matrix: SkewMatrix, class_hint: MatrixClass | None = None,
                 scan_dim: int | None = None):
        self.matrix = matrix
        self._hint = class_hint
        self._scan_dim = scan_dim or matrix.declared_dim or DEFAULT_SCAN_DIM
        self._blocks: dict[bytes, np.ndarray] = {}

    @cached_property
    def class_hint(self) -> MatrixClass:
        if self._hint is not None:
            return self._hint
        return classify(self.matrix, max(2, self._scan_dim))

    def block(self, idx: np.ndarray) -> np.ndarray:
        key = idx.tobytes()
        blk = self._blocks.get(key)
        if blk is None:
            if len(self._blocks) > 256:
                self._blocks.clear()
            blk = self.matrix.block(idx)
            self._blocks[key] = blk
        return blk

    def __call__(self, x: SimplexPoint) -> SimplexPoint:
        return apply(self, x)

    def __repr__(self) -> str:
        return f"VolterraOperator({self.matrix.descriptor()!r})"


def apply(V: VolterraOperator, x: SimplexPoint) -> SimplexPoint:
    """One step of the map.

    Row sums ``sum_i a_ki x_i`` are evaluated with ``math.fsum`` so the
    result does not depend on summation order. Mass is checked, never
    corrected. Coordinates that fall to ``FLUSH_BELOW`` or less are set
    to exactly zero.
    """
    idx = x.indices
    val = x.values
    if idx.size == 0:
        return x
    if idx.size == 1:
        # a_kk = 0: vertices and their multiples are fixed.
        return x
    terms = V.block(idx) * val
    s = np.array([math.fsum(row) for row in terms.tolist()])
    new = val + val * s
    if new.min() < -TOL_MASS:
        k = int(np.argmin(new))
        raise NegativeCoordinate(
            f"coordinate {int(idx[k])} became {new[k]!r}; coefficients violate |a_ki| <= 1")
    keep = new > FLUSH_BELOW
    if not keep.all():
        log.debug("flushed indices %s to zero", idx[~keep].tolist())
        idx = idx[keep]
        new = new[keep]
    mass = math.fsum(new.tolist())
    if abs(mass - x.mass) > 10 * TOL_MASS:
        raise MassDrift(f"mass moved from {x.mass!r} to {mass!r}; coefficients are not antisymmetric")
    return SimplexPoint._trusted(idx.copy(), new, mass)


@dataclass
class Trajectory:
    """Orbit ``x_0, V x_0, ..., V^n x_0`` with per-step displacements."""

    points: list[SimplexPoint]
    step_l1: list[float] = field(default_factory=list)
    step_rho: list[float] = field(default_factory=list)
    events: list[tuple[int, tuple[int, ...]]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, n: int) -> SimplexPoint:
        return self.points[n]

    @property
    def final(self) -> SimplexPoint:
        return self.points[-1]

    @property
    def masses(self) -> list[float]:
        return [p.mass for p in self.points]


def iterate(V: VolterraOperator, x0: SimplexPoint, n: int) -> Trajectory:
    """Run ``n`` steps from ``x0``.

    Errors raised by :func:`apply` carry the failing step in ``exc.step``.
    """
    if n < 0:
        raise ValueError("step count must be >= 0")
    traj = Trajectory([x0])
    x = x0
    for step in range(1, n + 1):
        try:
            y = apply(V, x)
        except OperatorError as exc:
            exc.step = step
            raise
        if len(y) < len(x):
            gone = tuple(sorted(set(x.indices.tolist()) - set(y.indices.tolist())))
            traj.events.append((step, gone))
        traj.points.append(y)
        traj.step_l1.append(l1_distance(x, y))
        traj.step_rho.append(rho_distance(x, y))
        x = y
    return traj


def cascade_partial_sum_oracle(x0: SimplexPoint, m: int, n: int) -> float:
    """Closed form of ``sum_{k<=m} (V^n x0)_k`` for ``a_ki = -1`` (k < i).

    The partial sum is squared once per step, so the value is
    ``(sum_{k<=m} x0_k) ** (2**n)``, computed by ``n`` squarings.
    """
    s = math.fsum(x0.values[x0.indices <= m].tolist())
    if s >= 1.0:
        return 1.0
    for _ in range(n):
        s = s * s
    return s


# -- tilde classes ----------------------------------------------------------

@dataclass
class TildeSplit:
    """Head/tail pieces of a block-diagonal operator and point."""

    k0: int
    head: VolterraOperator
    y0: SimplexPoint
    tail: VolterraOperator
    z0: SimplexPoint
    r1: float
    r2: float

    def join(self, y: SimplexPoint, z: SimplexPoint) -> SimplexPoint:
        """Concatenate a head point (indices < k0) and a re-indexed tail point."""
        zz = z.shift(self.k0 - 1)
        return SimplexPoint._trusted(np.concatenate([y.indices, zz.indices]),
                                     np.concatenate([y.values, zz.values]))


def decompose_tilde(V: VolterraOperator, x0: SimplexPoint, k0: int | None = None) -> TildeSplit:
    """Split ``V`` and ``x0`` into the finite head block and the tail operator.

    ``k0`` defaults to the one in ``V.class_hint``. Zero coupling between
    the blocks is checked on the indices ``1..max(k0, dim x0)``.
    """
    if k0 is None:
        hint = V.class_hint
        if hint.tag not in (Tag.TILDE_PLUS, Tag.TILDE_MINUS):
            raise NotTilde(f"class {hint} carries no k0")
        k0 = hint.k0
    if k0 < 2:
        raise NotTilde("k0 must be >= 2")
    dim = max(k0, x0.dim)
    u = V.matrix.upper_window(dim)
    if np.any(u[: k0 - 1, k0 - 1:]):
        raise NotTilde(f"nonzero coupling across k0={k0}")
    head = V.matrix.block(np.arange(1, k0))
    y0 = x0.restrict(1, k0 - 1)
    z0 = x0.restrict(k0).shift(-(k0 - 1))
    return TildeSplit(
        k0=k0,
        head=VolterraOperator(make_dense(head)),
        y0=y0,
        tail=VolterraOperator(shifted(V.matrix, k0 - 1)),
        z0=z0,
        r1=y0.mass,
        r2=z0.mass,
    )


# -- dumps ------------------------------------------------------------------

def _g17(v: float) -> str:
    return format(v, ".17g")


def write_trajectory(traj: Trajectory, csv_path, sidecar_path=None) -> None:
    """Sparse CSV ``step,index,value`` plus a JSON sidecar of per-step scalars."""
    csv_path = Path(csv_path)
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "index", "value"])
        for n, p in enumerate(traj.points):
            for k, v in zip(p.indices.tolist(), p.values.tolist()):
                w.writerow([n, k, _g17(v)])
    if sidecar_path is not None:
        side = {
            "steps": len(traj) - 1,
            "mass": traj.masses,
            "step_l1": traj.step_l1,
            "step_rho": traj.step_rho,
            "flushed": [[s, list(ix)] for s, ix in traj.events],
        }
        Path(sidecar_path).write_text(json.dumps(side, indent=1) + "\n")


def read_trajectory_csv(path) -> list[SimplexPoint]:
    rows: dict[int, dict[int, float]] = {}
    with Path(path).open() as fh:
        for row in csv.DictReader(fh):
            rows.setdefault(int(row["step"]), {})[int(row["index"])] = float(row["value"])
    return [SimplexPoint.from_sparse(rows.get(n, {})) for n in range(max(rows) + 1)] if rows else []
