"""Omega-limit estimation, Cesaro averages and ergodicity verdicts.

Limits are judged in one of two modes. ``norm`` mode looks at the whole
stored point and measures l1 distances. ``weak`` mode only observes the
probe window of coordinates ``1..probe_dim``, which is what pointwise
convergence can see after finitely many coordinates; the default window
of 32 coordinates covers every index whose weight in ``rho`` is at least
``2**-32``.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .matrix import SkewMatrix
from .operator import VolterraOperator, apply
from .simplex import SimplexPoint, l1_distance, max_support, rho_distance

DEFAULT_PROBE_DIM = 32
ESCAPE_SLACK = 1e-15


# -- verdicts ---------------------------------------------------------------

@dataclass(frozen=True)
class VertexLimit:
    index: int


@dataclass(frozen=True)
class ZeroLimit:
    pass


@dataclass(frozen=True)
class PointOnSphere:
    r: float
    point: SimplexPoint


@dataclass(frozen=True)
class Undecided:
    reason: str


Verdict = VertexLimit | ZeroLimit | PointOnSphere | Undecided


def verdict_to_dict(v: Verdict) -> dict:
    match v:
        case VertexLimit(index=m):
            return {"kind": "VertexLimit", "index": m}
        case ZeroLimit():
            return {"kind": "ZeroLimit"}
        case PointOnSphere(r=r, point=p):
            return {"kind": "PointOnSphere", "r": r, "point": p.to_literal()}
        case Undecided(reason=why):
            return {"kind": "Undecided", "reason": why}
    raise TypeError(v)


@dataclass(frozen=True)
class Budget:
    """Iteration budget and tolerances for :func:`estimate_omega`.

    ``stability_window`` defaults to 10% of ``max_steps``.
    """

    max_steps: int = 100_000
    eps_conv: float = 1e-8
    stability_window: int | None = None
    probe_dim: int = DEFAULT_PROBE_DIM

    @property
    def window(self) -> int:
        if self.stability_window is not None:
            return self.stability_window
        return max(1, self.max_steps // 10)

    def to_dict(self) -> dict:
        return {"max_steps": self.max_steps, "eps_conv": self.eps_conv,
                "stability_window": self.window, "probe_dim": self.probe_dim}


@dataclass
class OmegaEstimate:
    mode: str
    verdict: Verdict
    steps: int
    stationary: bool
    final_point: SimplexPoint
    final_l1: float
    final_rho: float
    l1_converged_at: int | None
    rho_converged_at: int | None
    mass_trend: list[tuple[int, float]]
    budget: Budget

    @property
    def r(self) -> float | None:
        match self.verdict:
            case VertexLimit():
                return 1.0
            case ZeroLimit():
                return 0.0
            case PointOnSphere(r=r):
                return r
        return None

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "verdict": verdict_to_dict(self.verdict),
            "evidence": {
                "steps": self.steps,
                "stationary": self.stationary,
                "final_l1": self.final_l1,
                "final_rho": self.final_rho,
                "l1_converged_at": self.l1_converged_at,
                "rho_converged_at": self.rho_converged_at,
                "r": self.r,
                "mass_trend": [[n, m] for n, m in self.mass_trend],
            },
            "budget": self.budget.to_dict(),
        }


def _vertex_distances(idx: np.ndarray, val: np.ndarray, m: int) -> tuple[float, float]:
    """(l1, rho) distance from the point to e_m."""
    at = idx == m
    xm = float(val[at][0]) if at.any() else 0.0
    off = val[~at]
    l1 = float(off.sum()) + abs(1.0 - xm)
    d = abs(1.0 - xm)
    rho = float(np.sum(np.ldexp(1.0, -idx[~at]) * off / (1.0 + off))) + math.ldexp(d / (1.0 + d), -m)
    return l1, rho


def estimate_omega(V: VolterraOperator, x0: SimplexPoint, mode: str = "norm",
                   budget: Budget = Budget()) -> OmegaEstimate:
    """Iterate ``V`` from ``x0`` and classify the limiting behaviour.

    A vertex ``e_m`` is declared once the distance to it (l1 over the full
    point in norm mode, over the probe window in weak mode) has stayed
    below ``eps_conv`` for ``stability_window`` consecutive steps. Weak mode
    declares the zero limit when the window has emptied the same way and
    its mass never increased. Otherwise a trajectory whose observed part is
    Cauchy over the stability window gives ``PointOnSphere``. If the map
    returns its input exactly the orbit is stationary and the verdict is
    read off at once.
    """
    if mode not in ("norm", "weak"):
        raise ValueError(f"unknown mode {mode!r}")
    weak = mode == "weak"
    eps = budget.eps_conv
    W = budget.window
    P = budget.probe_dim
    check_every = max(1, W // 10)

    def observe(x: SimplexPoint) -> SimplexPoint:
        return x.restrict(1, P) if weak else x

    x = x0
    obs = observe(x)
    first_window_mass = obs.mass
    escaping = True
    prev_window_mass = obs.mass
    streak_vertex: tuple[int, int] | None = None  # (vertex, start step)
    streak_zero: int | None = None
    l1_since: int | None = None
    rho_since: int | None = None
    checkpoints: deque[tuple[int, SimplexPoint]] = deque()
    trend: list[tuple[int, float]] = []
    stationary = False
    verdict: Verdict | None = None
    n = 0

    while True:
        # full-point distances to the leading vertex, for evidence
        if len(x):
            lead = int(x.indices[np.argmax(x.values)])
            l1, rho = _vertex_distances(x.indices, x.values, lead)
        else:
            l1, rho = float("nan"), float("nan")
        l1_since = (l1_since if l1_since is not None else n) if l1 < eps else None
        rho_since = (rho_since if rho_since is not None else n) if rho < eps else None

        # mode-specific observation
        if len(obs):
            m = int(obs.indices[np.argmax(obs.values)])
            d = _vertex_distances(obs.indices, obs.values, m)[0]
        else:
            m, d = 0, float("inf")
        if d < eps:
            if streak_vertex is None or streak_vertex[0] != m:
                streak_vertex = (m, n)
        else:
            streak_vertex = None
        if obs.mass > prev_window_mass + ESCAPE_SLACK:
            escaping = False
        prev_window_mass = obs.mass
        if weak and obs.mass < eps:
            streak_zero = n if streak_zero is None else streak_zero
        else:
            streak_zero = None

        if n % check_every == 0:
            trend.append((n, obs.mass))
            checkpoints.append((n, obs))
            while checkpoints and checkpoints[0][0] < n - W:
                checkpoints.popleft()

        # a stationary orbit stays put forever, so no further window is needed
        need = 0 if stationary else W
        if streak_vertex is not None and n - streak_vertex[1] >= need:
            verdict = VertexLimit(streak_vertex[0])
        elif streak_zero is not None and n - streak_zero >= need:
            if escaping and first_window_mass > eps:
                verdict = ZeroLimit()
            else:
                verdict = Undecided("window emptied without monotone mass escape")
        elif stationary:
            verdict = PointOnSphere(obs.mass, obs)
        elif (n % check_every == 0 and checkpoints and checkpoints[0][0] <= n - W
              and all(l1_distance(p, obs) < eps for _, p in checkpoints)):
            verdict = PointOnSphere(obs.mass, obs)
        if verdict is not None or n >= budget.max_steps:
            break

        y = apply(V, x)
        n += 1
        if np.array_equal(y.indices, x.indices) and np.array_equal(y.values, x.values):
            stationary = True
        x = y
        obs = observe(x)

    if verdict is None:
        verdict = Undecided(f"no limit detected within {budget.max_steps} steps")
    if isinstance(verdict, PointOnSphere) and not weak and abs(verdict.r - 1.0) > 1e-12:
        verdict = Undecided("norm-mode limit candidate off the unit sphere")
    target = _target(verdict, x)
    return OmegaEstimate(
        mode=mode,
        verdict=verdict,
        steps=n,
        stationary=stationary,
        final_point=x,
        final_l1=l1_distance(x, target) if target is not None else float("nan"),
        final_rho=rho_distance(x, target) if target is not None else float("nan"),
        l1_converged_at=l1_since,
        rho_converged_at=rho_since,
        mass_trend=trend,
        budget=budget,
    )


def _target(v: Verdict, x: SimplexPoint) -> SimplexPoint | None:
    match v:
        case VertexLimit(index=m):
            return SimplexPoint.vertex(m)
        case ZeroLimit():
            return SimplexPoint.zero()
        case PointOnSphere(point=p):
            return p
    return None


# -- Cesaro averages --------------------------------------------------------

class _Accumulator:
    """Running compensated (Neumaier) sums on a fixed index set."""

    def __init__(self, idx: np.ndarray):
        self.idx = idx
        self.s = np.zeros(idx.size)
        self.c = np.zeros(idx.size)

    def add(self, x: SimplexPoint, weight: float = 1.0):
        pos = np.searchsorted(self.idx, x.indices)
        v = x.values * weight
        s = self.s[pos]
        t = s + v
        self.c[pos] += np.where(np.abs(s) >= np.abs(v), (s - t) + v, (v - t) + s)
        self.s[pos] = t

    def total(self) -> np.ndarray:
        return self.s + self.c


def _point(idx: np.ndarray, vals: np.ndarray) -> SimplexPoint:
    keep = vals > 0.0
    return SimplexPoint._trusted(idx[keep].copy(), vals[keep].copy())


def cesaro_path(V: VolterraOperator, x0: SimplexPoint, horizons: Iterable[int]) -> dict[int, SimplexPoint]:
    """Averages ``(1/n) sum_{k<n} V^k x0`` for every requested ``n``.

    One pass over the orbit. Once the orbit is stationary the remaining
    terms are added in closed form.
    """
    hs = sorted(set(int(h) for h in horizons))
    if not hs or hs[0] < 1:
        raise ValueError("horizons must be >= 1")
    out: dict[int, SimplexPoint] = {}
    acc = _Accumulator(x0.indices.copy())
    x = x0
    count = 0  # terms added so far
    pending = deque(hs)
    while pending:
        y = apply(V, x)
        if np.array_equal(y.indices, x.indices) and np.array_equal(y.values, x.values):
            if count == 0:
                for h in pending:
                    out[h] = x0
                return out
            base = acc.total()
            pos = np.searchsorted(acc.idx, x.indices)
            for h in pending:
                tot = base.copy()
                tot[pos] += (h - count) * x.values
                out[h] = _point(acc.idx, tot / h)
            return out
        acc.add(x)
        count += 1
        while pending and pending[0] == count:
            out[pending.popleft()] = _point(acc.idx, acc.total() / count)
        x = y
    return out


def cesaro(V: VolterraOperator, x0: SimplexPoint, n: int) -> SimplexPoint:
    return cesaro_path(V, x0, [n])[n]


@dataclass(frozen=True)
class ErgodicBudget:
    """Horizons and tolerances for :func:`ergodicity_verdict`.

    Averages are sampled at ``horizon / 2**j`` down to ``min_horizon``.
    ``probe_dim`` limits the observed window (None: whole support of x0).
    """

    horizon: int = 10_000
    min_horizon: int = 16
    eps_weak: float = 1e-3
    eps_mass: float = 1e-3
    probe_dim: int | None = None

    def horizons(self) -> list[int]:
        hs = [self.horizon]
        h = self.horizon
        while h % 2 == 0 and h // 2 >= self.min_horizon:
            h //= 2
            hs.append(h)
        return sorted(hs)


@dataclass
class ErgodicReport:
    cesaro_points: dict[int, SimplexPoint]
    gaps: list[float]
    weak_limit: SimplexPoint
    weak_verdict: str
    norm_verdict: str
    mass_of_weak_limit: float
    probe_dim: int
    extrapolated: bool

    def to_dict(self) -> dict:
        return {
            "weak_verdict": self.weak_verdict,
            "norm_verdict": self.norm_verdict,
            "mass_of_weak_limit": self.mass_of_weak_limit,
            "weak_limit": self.weak_limit.to_literal(),
            "probe_dim": self.probe_dim,
            "extrapolated": self.extrapolated,
            "horizons": sorted(self.cesaro_points),
            "rho_gaps": self.gaps,
        }


def ergodicity_verdict(V: VolterraOperator, x0: SimplexPoint,
                       budget: ErgodicBudget = ErgodicBudget()) -> ErgodicReport:
    """Weak and norm ergodicity of ``V`` at ``x0`` from sampled Cesaro averages.

    The averages are weakly Cauchy when the rho gap between the last two
    horizons is below ``eps_weak`` and not larger than the gap before it.
    The weak limit is extrapolated coordinatewise as ``2 A_{2n} - A_n``
    (removing the ``1/n`` term), restricted to the probe window. The norm
    verdict is ``ergodic`` if that limit keeps mass ``>= 1 - eps_mass`` and
    ``non-ergodic`` if mass has escaped. ``extrapolated`` marks a window
    narrower than the support of ``x0``, i.e. a finite proxy for an
    infinite-support point.
    """
    hs = budget.horizons()
    if len(hs) < 2:
        raise ValueError("need at least two horizons")
    pts = cesaro_path(V, x0, hs)
    gaps = [rho_distance(pts[a], pts[b]) for a, b in zip(hs, hs[1:])]
    cauchy = gaps[-1] <= budget.eps_weak and (len(gaps) < 2 or gaps[-1] <= gaps[-2] + 1e-15)
    dim = x0.dim if budget.probe_dim is None else budget.probe_dim
    a_n, a_2n = pts[hs[-2]].restrict(1, dim), pts[hs[-1]].restrict(1, dim)
    idx = np.union1d(a_n.indices, a_2n.indices)
    lim = 2.0 * np.array([a_2n[k] for k in idx]) - np.array([a_n[k] for k in idx])
    lim = np.clip(lim, 0.0, 1.0)
    weak_limit = _point(idx.astype(np.int64), lim)
    mass = math.fsum(weak_limit.values.tolist())
    if not cauchy:
        weak_v, norm_v = "undecided", "undecided"
    else:
        weak_v = "weak-ergodic"
        norm_v = "ergodic" if mass >= 1.0 - budget.eps_mass else "non-ergodic"
    return ErgodicReport(pts, gaps, weak_limit, weak_v, norm_v, mass, dim,
                         extrapolated=bool(len(x0)) and dim < max_support(x0))


@dataclass
class SweepRow:
    N: int
    coords: list[float]
    window_mass: float
    escaped_mass: float


@dataclass
class TruncationSweep:
    """Cesaro averages of geometric seeds truncated at growing ``N``.

    ``window_mass`` is the mass of ``A_n`` on ``1..probe_dim``. For the
    cascade operator the window mass of the orbit only decreases, so it
    bounds the window mass of the weak limit from above.
    """

    horizon: int
    probe_dim: int
    rows: list[SweepRow]
    eps_mass: float = 1e-3

    @property
    def coords_decreasing(self) -> list[bool]:
        return [all(a.coords[k] > b.coords[k] for a, b in zip(self.rows, self.rows[1:]))
                for k in range(self.probe_dim)]

    @property
    def mass_decreasing(self) -> bool:
        return all(a.window_mass > b.window_mass for a, b in zip(self.rows, self.rows[1:]))

    @property
    def verdict(self) -> str:
        """Extrapolated norm verdict for the infinite-support limit of the seeds.

        Ties between neighbouring rows are allowed: once the truncated tail
        is below double resolution, larger ``N`` give identical averages.
        """
        m = [r.window_mass for r in self.rows]
        shrinking = all(a >= b for a, b in zip(m, m[1:])) and m[0] > m[-1]
        if shrinking and m[-1] < 1.0 - self.eps_mass:
            return "non-ergodic"
        return "undecided"


def truncation_sweep(V: VolterraOperator, Ns: Sequence[int], horizon: int = 10_000,
                     probe_dim: int = 8, seed=SimplexPoint.geometric) -> TruncationSweep:
    rows = []
    for N in Ns:
        a = cesaro(V, seed(N), horizon)
        coords = [a[k] for k in range(1, probe_dim + 1)]
        wm = math.fsum(coords)
        rows.append(SweepRow(N, coords, wm, 1.0 - wm))
    return TruncationSweep(horizon, probe_dim, rows)


# -- support corollaries and the scalar comparison map ------------------------

def positive_pairs(m: SkewMatrix, dim: int, threshold: float = 0.0) -> list[tuple[int, int]]:
    """Pairs ``k < i <= dim`` with ``a_ki > threshold``."""
    u = m.upper_window(dim)
    r, c = np.nonzero(np.triu(u > threshold, 1))
    return [(int(k) + 1, int(i) + 1) for k, i in zip(r, c)]


@dataclass
class PairSupportReport:
    passed: bool
    violations: list[tuple[int, int, float, float]] = field(default_factory=list)


def check_corollary_support(x_star: SimplexPoint, pairs: Iterable[tuple[int, int]],
                            eps: float = 1e-8) -> PairSupportReport:
    """For each coupled pair ``(k, i)`` one of ``x*_k``, ``x*_i`` must vanish."""
    bad = []
    for k, i in pairs:
        xk, xi = x_star[k], x_star[i]
        if min(xk, xi) >= eps:
            bad.append((k, i, xk, xi))
    return PairSupportReport(not bad, bad)


def logistic_map(alpha: float, xi: float) -> float:
    """``xi * (1 + alpha - alpha * xi)``, the scalar bound on the lower mass."""
    return xi * (1.0 + alpha - alpha * xi)


def logistic_orbit(alpha: float, xi0: float, tol: float = 1e-9, max_iter: int = 1_000_000) -> list[float]:
    """Iterates of :func:`logistic_map` until they drop below ``tol``."""
    if not -1.0 <= alpha < 0.0:
        raise ValueError("alpha must lie in [-1, 0)")
    orbit = [xi0]
    while orbit[-1] >= tol and len(orbit) <= max_iter:
        orbit.append(logistic_map(alpha, orbit[-1]))
    return orbit
