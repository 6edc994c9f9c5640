"""Exact sampling of extremal shot noise on compact windows.

A generating point contributes above a threshold u somewhere in the window
K iff its mark exceeds u / cover(x), where cover(x) = sup_{y in K} h(y-x).
The set of such points is a finite Poisson process, sampled by rejection
under a piecewise-constant cell envelope; thresholds are then halved, each
halving adding the independent annulus layer of points whose window
supremum falls in (u/2, u], until every grid node is covered strictly
above the current threshold. Retained points then reproduce the field
exactly at the nodes: everything unsampled contributes at most u_final.

Randomness is drawn from counter-based Philox streams keyed by
(seed, rep_index, layer_index), so replications are reproducible across
platforms, schedules and worker counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from . import analytic
from .errors import ContractViolation, InexactSampleError
from .quadrature import poisson_region_mass
from .shape import Box, ShapeSpec
from .weight import PowerMeasure, WeightSpec

__all__ = [
    "GridSpec",
    "PointRecord",
    "FieldSample",
    "OrderStatsSample",
    "BigBallResult",
    "Scenario",
    "layer_stream",
    "sample_field",
    "sample_order_stats",
    "pot_count",
    "extremal_points",
    "bigball_sup",
]

_TINY = float(np.finfo(float).tiny)


def layer_stream(seed: int, rep_index: int, layer_index: int) -> np.random.Generator:
    """Counter-based stream for one (replication, layer) pair."""
    ss = np.random.SeedSequence(seed, spawn_key=(rep_index, layer_index))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class GridSpec:
    """Regular grid: origin + i * spacing per axis, counts nodes per axis."""

    origin: tuple[float, ...]
    spacing: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        if not (len(self.origin) == len(self.spacing) == len(self.counts)):
            raise ContractViolation("grid axis arity mismatch")
        if any(c < 1 for c in self.counts):
            raise ContractViolation("grid counts must be >= 1")
        if any(s <= 0 for s in self.spacing):
            raise ContractViolation("grid spacing must be > 0")

    @property
    def dimension(self) -> int:
        return len(self.origin)

    @property
    def node_count(self) -> int:
        return int(np.prod(self.counts))

    def axes(self) -> list[np.ndarray]:
        return [
            self.origin[i] + self.spacing[i] * np.arange(self.counts[i])
            for i in range(self.dimension)
        ]

    def nodes(self) -> np.ndarray:
        """All nodes as an (N, d) array in C order."""
        grids = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    @staticmethod
    def cover(window: Box, counts) -> "GridSpec":
        """Grid spanning the window with the given per-axis node counts."""
        counts = tuple(int(c) for c in np.atleast_1d(counts))
        lo = np.asarray(window.lo, dtype=float)
        hi = np.asarray(window.hi, dtype=float)
        spacing = []
        origin = []
        for i, c in enumerate(counts):
            if c == 1:
                origin.append(0.5 * (lo[i] + hi[i]))
                spacing.append(1.0)
            else:
                origin.append(lo[i])
                spacing.append((hi[i] - lo[i]) / (c - 1))
        return GridSpec(tuple(origin), tuple(spacing), counts)


@dataclass(frozen=True)
class PointRecord:
    """One retained generating point: location and mark."""

    x: tuple[float, ...]
    m: float


@dataclass(frozen=True)
class Scenario:
    """Complete description of one simulation experiment."""

    dimension: int
    shape: ShapeSpec
    weight: WeightSpec
    lam: float
    window: Box
    grid: GridSpec
    u0: Optional[float] = None  # None: analytic 0.999 marginal quantile
    max_halvings: int = 40
    reps: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.dimension != self.shape.dimension:
            raise ContractViolation("scenario/shape dimension mismatch")
        if self.window.dimension != self.dimension or self.grid.dimension != self.dimension:
            raise ContractViolation("window/grid dimension mismatch")
        if self.lam <= 0:
            raise ContractViolation("lam must be > 0")
        if isinstance(self.weight, PowerMeasure) and self.lam != 1.0:
            raise ContractViolation(
                "power-measure weights absorb intensity into the marks; fix lam = 1"
            )
        if self.seed < 0:
            raise ContractViolation("seed must be >= 0")
        nodes = self.grid.nodes()
        lo = np.asarray(self.window.lo) - 1e-12
        hi = np.asarray(self.window.hi) + 1e-12
        if np.any(nodes < lo) or np.any(nodes > hi):
            raise ContractViolation("grid nodes must lie inside the window")
        if self.u0 is not None and self.u0 <= 0:
            raise ContractViolation("u0 must be > 0")


@dataclass
class FieldSample:
    """One exact (or censored) realization of the field on the grid."""

    grid: GridSpec
    values: np.ndarray  # (node_count,)
    points_x: np.ndarray  # (n, d)
    points_m: np.ndarray  # (n,)
    u_final: float
    exact: bool
    seed: int
    rep_index: int
    halvings_used: int
    scenario: "Scenario" = None

    @property
    def points(self) -> list[PointRecord]:
        return [
            PointRecord(tuple(float(c) for c in x), float(m))
            for x, m in zip(self.points_x, self.points_m)
        ]


@dataclass
class OrderStatsSample:
    """Node-wise top-r contribution values, largest first."""

    grid: GridSpec
    values: np.ndarray  # (r, node_count)
    u_final: float
    exact: bool
    seed: int
    rep_index: int
    halvings_used: int


@dataclass
class BigBallResult:
    sup: float
    n_r: float  # the scaling level for radius R
    normalized: float
    radius: float
    exact: bool
    rep_index: int


# ---------------------------------------------------------------------------


class _Layer:
    """Per-halving-level geometry shared by every replication."""

    __slots__ = (
        "u_new",
        "u_old",
        "mass",
        "cells_lo",
        "cells_width",
        "env_mass",
        "total_env",
        "cell_probs",
        "saturates",
    )


class ThresholdSampler:
    """Scenario-bound sampler caching per-level masses and envelopes."""

    def __init__(self, scn: Scenario):
        self.scn = scn
        self.shape = scn.shape
        self.weight = scn.weight
        self.window = scn.window
        self._wlo = np.asarray(scn.window.lo, dtype=float)
        self._whi = np.asarray(scn.window.hi, dtype=float)
        self._nodes = scn.grid.nodes()
        self._layers: dict[int, _Layer] = {}
        self._mass_cache: dict[int, float] = {}
        self._u0: Optional[float] = scn.u0

    # -- analytic plumbing --------------------------------------------------

    @property
    def u0(self) -> float:
        if self._u0 is None:
            self._u0 = _sup_window_quantile(
                self.shape, self.weight, self.scn.lam, None, 0.999
            )
        return self._u0

    @property
    def nodes(self) -> np.ndarray:
        return self._nodes

    def level_threshold(self, level: int) -> float:
        return self.u0 * 0.5**level

    def cover(self, x: np.ndarray) -> np.ndarray:
        """sup over the window of h(y - x) at the per-axis nearest point."""
        nearest = np.clip(x, self._wlo, self._whi) - x
        return np.asarray(self.shape(nearest))

    def _mass_above(self, level: int):
        """(mass, truncation radius) of the region above threshold u_level."""
        if level not in self._mass_cache:
            res = poisson_region_mass(
                self.shape,
                self.weight,
                self.scn.lam,
                self.level_threshold(level),
                self.window,
                tol=1e-10,
            )
            if res.diverged:
                raise ContractViolation(
                    "infinite generating mass at the initial threshold: the "
                    "requested threshold sits at or below the support left "
                    "endpoint alpha of this shape/weight pair"
                )
            self._mass_cache[level] = (res.value, res.truncation_radius)
        return self._mass_cache[level]

    def _sampling_box(self, level: int):
        if self.shape.compact_support:
            w = np.asarray(self.shape.support_halfwidths, dtype=float)
            return self._wlo - w, self._whi + w
        _, radius = self._mass_above(level)
        r = max(radius, float(np.max(np.abs(np.concatenate([self._wlo, self._whi])))) + 1.0)
        d = self.scn.dimension
        return np.full(d, -r), np.full(d, r)

    def layer(self, level: int) -> _Layer:
        if level in self._layers:
            return self._layers[level]
        lay = _Layer()
        lay.u_new = self.level_threshold(level)
        lay.u_old = math.inf if level == 0 else self.level_threshold(level - 1)
        mass_new, _ = self._mass_above(level)
        mass_old = 0.0 if level == 0 else self._mass_above(level - 1)[0]
        lay.mass = max(mass_new - mass_old, 0.0)
        lo, hi = self._sampling_box(level)
        d = self.scn.dimension
        n_inner = {1: 64, 2: 16, 3: 8}[d]
        step = 2.0 if d <= 2 else 4.0
        fs = max(self.shape.feature_scale, 1e-12)
        edges = []
        for i in range(d):
            # uniform cells across the window (cover is near-constant
            # there), geometrically widening cells down the tails so the
            # piecewise-constant envelope stays tight at every scale
            inner_lo = max(lo[i], self._wlo[i] - fs)
            inner_hi = min(hi[i], self._whi[i] + fs)
            pts = list(np.linspace(inner_lo, inner_hi, n_inner + 1))
            s = fs
            while inner_hi + s < hi[i]:
                pts.append(inner_hi + s)
                s *= step
            pts.append(hi[i])
            s = fs
            while inner_lo - s > lo[i]:
                pts.append(inner_lo - s)
                s *= step
            pts.append(lo[i])
            edges.append(np.unique(np.asarray(pts)))
        cl = np.stack(np.meshgrid(*(e[:-1] for e in edges), indexing="ij"), axis=-1).reshape(-1, d)
        ch = np.stack(np.meshgrid(*(e[1:] for e in edges), indexing="ij"), axis=-1).reshape(-1, d)
        lay.cells_lo = cl
        lay.cells_width = ch - cl
        # cover bounds per cell: extremes of h over the offset box
        # [window.lo - cell_hi, window.hi - cell_lo]
        blo = self._wlo - ch
        bhi = self._whi - cl
        near = np.clip(0.0, blo, bhi)
        far = np.where(np.abs(blo) >= np.abs(bhi), blo, bhi)
        cover_hi = np.asarray(self.shape(near))
        cover_lo = np.asarray(self.shape(far))
        env = np.zeros(len(cl))
        pos = cover_hi > 0
        env[pos] = self.weight._tail(lay.u_new / cover_hi[pos])
        if math.isfinite(lay.u_old):
            sub = np.zeros(len(cl))
            lo_pos = pos & (cover_lo > 0)
            sub[lo_pos] = self.weight._tail(lay.u_old / cover_lo[lo_pos])
            env = np.maximum(env - sub, 0.0)
        lay.env_mass = self.scn.lam * env * np.prod(lay.cells_width, axis=1)
        lay.total_env = float(np.sum(lay.env_mass))
        lay.cell_probs = (
            lay.env_mass / lay.total_env if lay.total_env > 0 else None
        )
        lay.saturates = bool(
            self.shape.compact_support
            and self.weight.left_endpoint > 0
            and lay.u_new <= self.shape.sup_norm * self.weight.left_endpoint
        )
        self._layers[level] = lay
        return lay

    # -- sampling ------------------------------------------------------------

    def _layer_weight(self, lay: _Layer, x: np.ndarray) -> np.ndarray:
        c = self.cover(x)
        w = np.zeros(len(x))
        pos = c > 0
        w[pos] = self.weight._tail(lay.u_new / c[pos])
        if math.isfinite(lay.u_old):
            w[pos] -= self.weight._tail(lay.u_old / c[pos])
        return self.scn.lam * np.maximum(w, 0.0)

    def sample_layer(self, level: int, rng: np.random.Generator):
        """Locations and marks of the annulus layer (u_new, u_old]."""
        lay = self.layer(level)
        n = int(rng.poisson(lay.mass))
        d = self.scn.dimension
        if n == 0 or lay.total_env <= 0:
            return np.empty((0, d)), np.empty(0)
        xs = np.empty((n, d))
        got = 0
        while got < n:
            # oversample proposals to amortize fixed per-round cost; the
            # batch size depends only on the shortfall, so the stream is
            # consumed deterministically
            chunk = max(4 * (n - got), 32)
            idx = rng.choice(len(lay.env_mass), size=chunk, p=lay.cell_probs)
            prop = lay.cells_lo[idx] + rng.random((chunk, d)) * lay.cells_width[idx]
            w = self._layer_weight(lay, prop)
            acc = rng.random(chunk) * lay.env_mass[idx] <= w * np.prod(
                lay.cells_width[idx], axis=1
            )
            hits = prop[acc]
            k = min(len(hits), n - got)
            xs[got : got + k] = hits[:k]
            got += k
        c = self.cover(xs)
        t1 = lay.u_new / c
        t2 = np.full(len(xs), math.inf) if not math.isfinite(lay.u_old) else lay.u_old / c
        marks = np.asarray(self.weight.sample_band(t1, t2, rng.random(len(xs))))
        return xs, marks

    def node_contributions(self, xs: np.ndarray, marks: np.ndarray) -> np.ndarray:
        """(n_points, n_nodes) matrix of m * h(node - x)."""
        if len(xs) == 0:
            return np.empty((0, len(self._nodes)))
        diff = self._nodes[None, :, :] - xs[:, None, :]
        return marks[:, None] * np.asarray(self.shape(diff))


@lru_cache(maxsize=64)
def _sampler(scn: Scenario) -> ThresholdSampler:
    return ThresholdSampler(scn)


@lru_cache(maxsize=256)
def _sup_window_quantile(shape, weight, lam, window, p) -> float:
    """p-quantile of the window supremum (marginal when window is None)."""
    target = -math.log(p)

    def expo(u):
        res = analytic.exponent_integral(shape, weight, lam, u, window, tol=1e-9)
        return math.inf if res.diverged else res.value

    hi = 1.0
    while expo(hi) > target:
        hi *= 4.0
        if hi > 1e300:
            raise ContractViolation("threshold quantile out of range")
    lo = hi / 4.0
    while expo(lo) < target and lo > 1e-300:
        lo /= 4.0
    for _ in range(120):
        mid = math.sqrt(lo * hi)
        if expo(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1 + 1e-9:
            break
    return math.sqrt(lo * hi)


# ---------------------------------------------------------------------------
# public sampling operations


def sample_field(scn: Scenario, rep_index: int) -> FieldSample:
    """One exact field replication on the scenario grid.

    Deterministic in (scn.seed, rep_index). exact=True means every node
    value strictly exceeds the final censoring threshold (or the finite
    point process was provably exhausted), so unsampled points cannot
    change any node value.
    """
    smp = _sampler(scn)
    values = np.zeros(scn.grid.node_count)
    all_x: list[np.ndarray] = []
    all_m: list[np.ndarray] = []
    u_final = smp.u0
    halvings = 0
    saturated = False
    for level in range(scn.max_halvings + 1):
        rng = layer_stream(scn.seed, rep_index, level)
        xs, marks = smp.sample_layer(level, rng)
        if len(xs):
            contrib = smp.node_contributions(xs, marks)
            values = np.maximum(values, contrib.max(axis=0))
            all_x.append(xs)
            all_m.append(marks)
        u_final = smp.level_threshold(level)
        halvings = level
        if smp.layer(level).saturates:
            saturated = True
            break
        if float(np.min(values)) > u_final:
            break
    if saturated:
        u_final = _TINY
    exact = bool(np.all(values > u_final)) or saturated
    d = scn.dimension
    return FieldSample(
        grid=scn.grid,
        values=values,
        points_x=np.concatenate(all_x) if all_x else np.empty((0, d)),
        points_m=np.concatenate(all_m) if all_m else np.empty(0),
        u_final=u_final,
        exact=exact,
        seed=scn.seed,
        rep_index=rep_index,
        halvings_used=halvings,
        scenario=scn,
    )


def sample_order_stats(scn: Scenario, r: int, rep_index: int) -> OrderStatsSample:
    """Node-wise r largest contributions; halving continues until the r-th
    largest at every node clears the censoring threshold."""
    if r < 1:
        raise ContractViolation("r must be >= 1")
    smp = _sampler(scn)
    n_nodes = scn.grid.node_count
    top = np.zeros((r, n_nodes))
    all_x: list[np.ndarray] = []
    all_m: list[np.ndarray] = []
    u_final = smp.u0
    halvings = 0
    saturated = False
    for level in range(scn.max_halvings + 1):
        rng = layer_stream(scn.seed, rep_index, level)
        xs, marks = smp.sample_layer(level, rng)
        if len(xs):
            contrib = smp.node_contributions(xs, marks)
            stacked = np.concatenate([top, contrib], axis=0)
            keep = min(r, stacked.shape[0])
            part = -np.sort(-stacked, axis=0)[:keep]
            top[:keep] = part
            all_x.append(xs)
            all_m.append(marks)
        u_final = smp.level_threshold(level)
        halvings = level
        if smp.layer(level).saturates:
            saturated = True
            break
        if float(np.min(top[r - 1])) > u_final:
            break
    if saturated:
        u_final = _TINY
    exact = bool(np.all(top[r - 1] > u_final)) or saturated
    return OrderStatsSample(
        grid=scn.grid,
        values=top,
        u_final=u_final,
        exact=exact,
        seed=scn.seed,
        rep_index=rep_index,
        halvings_used=halvings,
    )


def pot_count(scn: Scenario, f, rep_index: int) -> int:
    """Number of generating points dominating a_lambda * f at every grid
    node: m * h(y - x) >= a_lambda * f(y) for all nodes y.

    f is a positive constant or an array over the grid nodes. The threshold
    construction runs one layer at u0 = a_lambda * min(f) * 0.99, which
    cannot miss a qualifying point (its window supremum is at least
    a_lambda * max(f))."""
    nodes = scn.grid.nodes()
    f_vals = np.broadcast_to(np.asarray(f, dtype=float), (len(nodes),)).copy()
    if np.any(f_vals <= 0):
        raise ContractViolation("threshold function must be positive")
    a_lam = scn.weight.a_lambda(scn.lam)
    u0 = a_lam * float(np.min(f_vals)) * 0.99
    base = Scenario(
        dimension=scn.dimension,
        shape=scn.shape,
        weight=scn.weight,
        lam=scn.lam,
        window=scn.window,
        grid=scn.grid,
        u0=u0,
        max_halvings=0,
        reps=scn.reps,
        seed=scn.seed,
    )
    smp = _sampler(base)
    rng = layer_stream(base.seed, rep_index, 0)
    xs, marks = smp.sample_layer(0, rng)
    if len(xs) == 0:
        return 0
    contrib = smp.node_contributions(xs, marks)
    return int(np.sum(np.all(contrib >= a_lam * f_vals[None, :], axis=1)))


def extremal_points(fs: FieldSample, rel_tol: float = 1e-12) -> list[PointRecord]:
    """Retained points attaining the node-wise maximum at >= 1 grid node
    (ties within rel_tol all qualify). Requires an exact sample."""
    if not fs.exact:
        raise InexactSampleError("extremal points need an exact field sample")
    if len(fs.points_x) == 0:
        return []
    smp = _sampler(fs.scenario)
    contrib = smp.node_contributions(fs.points_x, fs.points_m)
    pos = fs.values > 0
    if not np.any(pos):
        return []
    attain = contrib[:, pos] >= fs.values[None, pos] * (1.0 - rel_tol)
    idx = np.flatnonzero(np.any(attain, axis=1))
    return [
        PointRecord(tuple(float(c) for c in fs.points_x[i]), float(fs.points_m[i]))
        for i in idx
    ]


def extremal_point_array(fs: FieldSample, rel_tol: float = 1e-12):
    """Locations (n, d) and marks (n,) of the extremal points."""
    recs = extremal_points(fs, rel_tol)
    d = fs.points_x.shape[1] if fs.points_x.size else fs.grid.dimension
    if not recs:
        return np.empty((0, d)), np.empty(0)
    return np.asarray([r.x for r in recs]), np.asarray([r.m for r in recs])


def bigball_sup(scn: Scenario, radius: float, rep_index: int) -> BigBallResult:
    """Supremum of the exact field over the ball |y| <= radius, its scaling
    level N(R) = sup_norm * (c_d * lam * R^d)^(1/xi) expressed through the
    weight quantile, and the normalized ratio."""
    if radius <= 0:
        raise ContractViolation("radius must be > 0")
    xi = scn.weight.rv_exponent
    if xi is None or not scn.weight.is_probability:
        raise ContractViolation("big-ball scaling needs a regularly varying probability weight")
    rep_report = scn.shape.check_regularity(xi)
    if not (rep_report.cprime_xi_holds or rep_report.compact_support):
        raise ContractViolation("shape must satisfy the polynomial-decay condition")
    d = scn.dimension
    window = Box.centered([radius] * d)
    base = Scenario(
        dimension=d,
        shape=scn.shape,
        weight=scn.weight,
        lam=scn.lam,
        window=window,
        grid=GridSpec.cover(window, [1] * d),
        u0=_sup_window_quantile(scn.shape, scn.weight, scn.lam, window, 0.999),
        max_halvings=scn.max_halvings,
        reps=scn.reps,
        seed=scn.seed,
    )
    smp = _sampler(base)
    sup = 0.0
    u_final = smp.u0
    saturated = False
    for level in range(base.max_halvings + 1):
        rng = layer_stream(base.seed, rep_index, level)
        xs, marks = smp.sample_layer(level, rng)
        if len(xs):
            ball_env = np.asarray(scn.shape.envelope(-xs, float(radius), "sup"))
            sup = max(sup, float(np.max(marks * ball_env)))
        u_final = smp.level_threshold(level)
        if smp.layer(level).saturates:
            saturated = True
            break
        if sup > u_final:
            break
    cd = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}[d]
    n_r = (
        scn.shape.sup_norm
        * cd ** (1.0 / xi)
        * scn.lam ** (1.0 / xi)
        * scn.weight.a_lambda(float(radius) ** d)
    )
    return BigBallResult(
        sup=sup,
        n_r=n_r,
        normalized=sup / n_r,
        radius=float(radius),
        exact=bool(sup > u_final or saturated),
        rep_index=rep_index,
    )
