"""Catalog of deterministic shape functions h: R^d -> [0, inf).

Every variant is nonincreasing along rays from the origin (per axis or
radially), which makes suprema and infima over boxes and Euclidean balls
exactly computable: the extremum is attained at the nearest / farthest
point of the region, or for anisotropic Gaussians over balls at the
weighted projection onto the ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import ContractViolation

__all__ = [
    "Box",
    "ShapeSpec",
    "GaussianDiag",
    "PathLossHard",
    "PathLossSmooth",
    "IndicatorBox",
    "LogDecay",
    "RegularityReport",
    "shape_from_config",
]


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lo_i, hi_i] in R^d. lo == hi gives a single point."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ContractViolation("box lo/hi dimension mismatch")
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ContractViolation("box has lo > hi")

    @property
    def dimension(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod([h - l for l, h in zip(self.lo, self.hi)]))

    @staticmethod
    def point(x) -> "Box":
        t = tuple(float(v) for v in np.atleast_1d(x))
        return Box(t, t)

    @staticmethod
    def centered(halfwidths) -> "Box":
        w = tuple(float(v) for v in np.atleast_1d(halfwidths))
        return Box(tuple(-v for v in w), w)


# region = Euclidean ball radius (float) or a Box offset relative to the
# evaluation point.
Region = Union[float, Box]


@dataclass(frozen=True)
class RegularityReport:
    """Decay/regularity classification of a shape at tail index xi.

    cprime_xi_holds means h(x) <= constant_C * (|x|^-gamma AND 1) with
    gamma * xi > d, the polynomial-decay condition under which the
    heavy-tail limit theorems apply.
    """

    bounded: bool
    sup_norm: float
    compact_support: bool
    cprime_xi_holds: bool
    gamma: Optional[float]
    constant_C: Optional[float]
    xi_used: float


class ShapeSpec:
    """Base class; subclasses are frozen dataclasses."""

    dimension: int

    # -- evaluation -------------------------------------------------------

    def __call__(self, x) -> np.ndarray | float:
        """h(x) for x of shape (d,) or (..., d)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dimension:
            raise ContractViolation(
                f"point dimension {x.shape[-1]} != shape dimension {self.dimension}"
            )
        out = self._eval(x)
        return float(out) if out.ndim == 0 else out

    def _eval(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- envelopes --------------------------------------------------------

    def envelope(self, x, region: Region, mode: str = "sup"):
        """sup or inf of h over {x + z : z in region}.

        region is a Euclidean ball radius r >= 0 or a Box of offsets.
        Exact for every variant.
        """
        if mode not in ("sup", "inf"):
            raise ContractViolation(f"mode must be 'sup' or 'inf', got {mode!r}")
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dimension:
            raise ContractViolation("point dimension mismatch")
        if isinstance(region, Box):
            if region.dimension != self.dimension:
                raise ContractViolation("region dimension mismatch")
            out = self._envelope_box(x, np.asarray(region.lo), np.asarray(region.hi), mode)
        else:
            r = float(region)
            if r < 0:
                raise ContractViolation("ball radius must be >= 0")
            if r == 0.0:
                out = self._eval(x)
            elif self.dimension == 1:
                out = self._envelope_box(x, np.array([-r]), np.array([r]), mode)
            else:
                out = self._envelope_ball(x, r, mode)
        return float(out) if np.ndim(out) == 0 else out

    def _envelope_box(self, x, lo, hi, mode):
        """Default per-axis clamp; exact for per-axis-monotone variants."""
        corner = _box_extreme_point(x, lo, hi, mode)
        return self._eval(corner)

    def _envelope_ball(self, x, r, mode):
        raise NotImplementedError

    # -- integrals and classification --------------------------------------

    @property
    def sup_norm(self) -> float:
        raise NotImplementedError

    @property
    def compact_support(self) -> bool:
        return False

    @property
    def support_halfwidths(self) -> Optional[tuple[float, ...]]:
        """Halfwidths of the support box for compact variants, else None."""
        return None

    def xi_integral(self, xi: float, tol: float = 1e-8) -> float:
        """integral of h(x)^xi over R^d; math.inf when divergent."""
        if xi <= 0:
            raise ContractViolation("xi must be > 0")
        if tol <= 0:
            raise ContractViolation("tol must be > 0")
        return self._xi_integral(xi, tol)

    def _xi_integral(self, xi, tol):
        # quadrature fallback; closed-form variants override
        from . import quadrature

        rep = self.check_regularity(xi)
        if not rep.cprime_xi_holds and not rep.compact_support:
            return math.inf
        res = quadrature.integrate(
            lambda x: np.asarray(self._eval(x)) ** xi,
            self.dimension,
            tol=tol,
            decay=self.decay_bound(xi),
            support_halfwidths=self.support_halfwidths,
        )
        if res.diverged:
            return math.inf
        return res.value

    def decay_bound(self, power: float = 1.0):
        """A (C, gamma, radius) certificate with h(x)^power <= C |x|^-gamma
        for |x| >= radius, or None when no polynomial bound exists.
        """
        return None

    @property
    def feature_scale(self) -> float:
        """Characteristic width of the shape, used to seed quadrature panels."""
        return 1.0

    @property
    def tail_decay(self) -> tuple[str, Optional[float]]:
        """Decay class of h at infinity: ("compact", None),
        ("superpoly", None), ("poly", gamma) or ("log", None).
        Envelopes h+, h-_eps share the class for every variant."""
        raise NotImplementedError

    def check_regularity(self, xi: float) -> RegularityReport:
        raise NotImplementedError

    def from_config_fields(self) -> dict:
        raise NotImplementedError


def _norm(x: np.ndarray) -> np.ndarray:
    """Euclidean norm over the last axis (faster than linalg.norm here)."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.einsum("...i,...i->...", x, x))


def _box_extreme_point(x, lo, hi, mode):
    """Nearest (sup) or farthest (inf) point of x+[lo,hi] from the origin,
    taken per axis. Valid extremum location for per-axis-monotone h."""
    a = x + lo
    b = x + hi
    if mode == "sup":
        return np.clip(0.0, a, b)
    return np.where(np.abs(a) >= np.abs(b), a, b)


def _radial_bounds_box(x, lo, hi):
    """(min, max) of |w| over the box w in x+[lo,hi]."""
    near = _box_extreme_point(x, lo, hi, "sup")
    far = _box_extreme_point(x, lo, hi, "inf")
    return _norm(near), _norm(far)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianDiag(ShapeSpec):
    """h(x) = amplitude * exp(-sum_i x_i^2 / (2 sigma_i^2))."""

    sigma: tuple[float, ...]
    amplitude: float = 1.0

    def __post_init__(self):
        if len(self.sigma) not in (1, 2, 3):
            raise ContractViolation("dimension must be in {1, 2, 3}")
        if any(s <= 0 for s in self.sigma) or self.amplitude <= 0:
            raise ContractViolation("sigma and amplitude must be > 0")

    @property
    def dimension(self) -> int:
        return len(self.sigma)

    @property
    def sup_norm(self) -> float:
        return self.amplitude

    def _eval(self, x):
        s = np.asarray(self.sigma)
        q = np.sum((x / s) ** 2, axis=-1)
        return self.amplitude * np.exp(-0.5 * q)

    def _quad_extreme_ball(self, x, r, mode):
        """min (sup mode) or max (inf mode) of sum_i w_i (x_i+z_i)^2 over
        |z| <= r, with w_i = 1/sigma_i^2.  1-D dual root-find."""
        from scipy.optimize import brentq

        w = 1.0 / np.asarray(self.sigma) ** 2
        x = np.asarray(x, dtype=float)
        if mode == "sup":
            if float(np.linalg.norm(x)) <= r:
                return 0.0
            # minimize: z_i = -w_i x_i / (w_i + mu), mu > 0 with |z| = r

            def g(mu):
                return float(np.sum((w * x / (w + mu)) ** 2)) - r * r

            hi = 1.0
            while g(hi) > 0:
                hi *= 4.0
            mu = brentq(g, 0.0, hi, xtol=1e-15, rtol=1e-15)
            z = -w * x / (w + mu)
            return float(np.sum(w * (x + z) ** 2))
        # maximize: z_i = w_i x_i / (mu - w_i), mu >= max(w), |z| = r
        wmax = float(np.max(w))
        top = w == wmax
        rest = ~top
        lead = float(np.sum((w[top] * x[top]) ** 2))

        def p(mu):
            return float(np.sum((w * x / (mu - w)) ** 2)) - r * r

        if lead > 0:
            lo = wmax * (1 + 1e-14) + 1e-300
            while p(lo) < 0:
                lo = wmax + (lo - wmax) / 4.0
            hi = lo
            while p(hi) > 0:
                hi = wmax + (hi - wmax) * 4.0
            mu = brentq(p, lo, hi, xtol=1e-15, rtol=1e-15)
            z = w * x / (mu - w)
            return float(np.sum(w * (x + z) ** 2))
        # hard case: x has no component along the max-weight axes
        z_rest = w[rest] * x[rest] / (wmax - w[rest]) if np.any(rest) else np.zeros(0)
        used = float(np.sum(z_rest**2))
        if used >= r * r:
            # regular case after all (root sits above wmax)
            hi = wmax * 2 + 1.0
            while p(hi) > 0:
                hi = wmax + (hi - wmax) * 4.0
            mu = brentq(p, wmax * (1 + 1e-14), hi, xtol=1e-15, rtol=1e-15)
            z = w * x / (mu - w)
            return float(np.sum(w * (x + z) ** 2))
        leftover = r * r - used
        val = wmax * leftover
        if np.any(rest):
            val += float(np.sum(w[rest] * (x[rest] + z_rest) ** 2))
        return val

    def _envelope_ball(self, x, r, mode):
        if len(set(self.sigma)) == 1:
            s = self.sigma[0]
            d = _norm(np.atleast_1d(x))
            d = np.maximum(d - r, 0.0) if mode == "sup" else d + r
            return self.amplitude * np.exp(-0.5 * (d / s) ** 2)
        if np.ndim(x) > 1:
            flat = x.reshape(-1, self.dimension)
            q = np.array([self._quad_extreme_ball(p, r, mode) for p in flat])
            return (self.amplitude * np.exp(-0.5 * q)).reshape(x.shape[:-1])
        q = self._quad_extreme_ball(x, r, mode)
        return np.asarray(self.amplitude * np.exp(-0.5 * q))

    def _xi_integral(self, xi, tol):
        s = np.asarray(self.sigma)
        return float(self.amplitude**xi * np.prod(s * math.sqrt(2 * math.pi / xi)))

    def decay_bound(self, power: float = 1.0):
        # h^power <= C_q |x|^-q for every q; pick q = d + 2 for a
        # comfortably integrable certificate.
        q = self.dimension + 2.0
        smax = max(self.sigma)
        # max of r^q exp(-power r^2 / (2 smax^2)) at r^2 = q smax^2 / power
        c = self.amplitude**power * (q * smax**2 / power) ** (q / 2) * math.exp(-q / 2)
        return (c, q, smax)

    def check_regularity(self, xi):
        c, q, r0 = self.decay_bound(1.0)
        return RegularityReport(
            bounded=True,
            sup_norm=self.sup_norm,
            compact_support=False,
            cprime_xi_holds=True,
            gamma=q,
            constant_C=max(c, self.amplitude),
            xi_used=xi,
        )

    @property
    def feature_scale(self) -> float:
        return min(self.sigma)

    @property
    def tail_decay(self):
        return ("superpoly", None)

    def from_config_fields(self):
        return {"variant": "gaussian_diag", "sigma": list(self.sigma), "amplitude": self.amplitude}


@dataclass(frozen=True)
class PathLossHard(ShapeSpec):
    """h(x) = (A * max(r0, |x|))^-beta, flat inside radius r0."""

    attenuation: float  # A
    r0: float
    beta: float
    dimension: int = 1

    def __post_init__(self):
        if self.attenuation <= 0 or self.r0 <= 0 or self.beta <= 0:
            raise ContractViolation("A, r0 and beta must be > 0")
        if self.dimension not in (1, 2, 3):
            raise ContractViolation("dimension must be in {1, 2, 3}")

    @property
    def sup_norm(self) -> float:
        return (self.attenuation * self.r0) ** (-self.beta)

    def _radial(self, r):
        return (self.attenuation * np.maximum(self.r0, r)) ** (-self.beta)

    def _eval(self, x):
        return self._radial(_norm(x))

    def _envelope_box(self, x, lo, hi, mode):
        near, far = _radial_bounds_box(x, lo, hi)
        return self._radial(near if mode == "sup" else far)

    def _envelope_ball(self, x, r, mode):
        d = _norm(x)
        d = np.maximum(d - r, 0.0) if mode == "sup" else d + r
        return self._radial(d)

    def decay_bound(self, power: float = 1.0):
        return (self.attenuation ** (-self.beta * power), self.beta * power, self.r0)

    def check_regularity(self, xi):
        holds = self.beta * xi > self.dimension
        # h(x) <= C (|x|^-beta AND 1) with C covering both the plateau and
        # the A^-beta prefactor
        c = max(self.sup_norm, self.attenuation**-self.beta, self.sup_norm * self.r0**self.beta)
        return RegularityReport(
            bounded=True,
            sup_norm=self.sup_norm,
            compact_support=False,
            cprime_xi_holds=holds,
            gamma=self.beta if holds else None,
            constant_C=c if holds else None,
            xi_used=xi,
        )

    @property
    def feature_scale(self) -> float:
        return self.r0

    @property
    def tail_decay(self):
        return ("poly", self.beta)

    def from_config_fields(self):
        return {
            "variant": "path_loss_hard",
            "A": self.attenuation,
            "r0": self.r0,
            "beta": self.beta,
            "dimension": self.dimension,
        }


@dataclass(frozen=True)
class PathLossSmooth(ShapeSpec):
    """h(x) = (1 + A|x|)^-beta."""

    attenuation: float  # A
    beta: float
    dimension: int = 1

    def __post_init__(self):
        if self.attenuation <= 0 or self.beta <= 0:
            raise ContractViolation("A and beta must be > 0")
        if self.dimension not in (1, 2, 3):
            raise ContractViolation("dimension must be in {1, 2, 3}")

    @property
    def sup_norm(self) -> float:
        return 1.0

    def _radial(self, r):
        return (1.0 + self.attenuation * r) ** (-self.beta)

    def _eval(self, x):
        return self._radial(_norm(x))

    def _envelope_box(self, x, lo, hi, mode):
        near, far = _radial_bounds_box(x, lo, hi)
        return self._radial(near if mode == "sup" else far)

    def _envelope_ball(self, x, r, mode):
        d = _norm(x)
        d = np.maximum(d - r, 0.0) if mode == "sup" else d + r
        return self._radial(d)

    def decay_bound(self, power: float = 1.0):
        return (self.attenuation ** (-self.beta * power), self.beta * power, 1.0 / self.attenuation)

    def check_regularity(self, xi):
        holds = self.beta * xi > self.dimension
        c = max(1.0, self.attenuation**-self.beta)
        return RegularityReport(
            bounded=True,
            sup_norm=1.0,
            compact_support=False,
            cprime_xi_holds=holds,
            gamma=self.beta if holds else None,
            constant_C=c if holds else None,
            xi_used=xi,
        )

    @property
    def feature_scale(self) -> float:
        return 1.0 / self.attenuation

    @property
    def tail_decay(self):
        return ("poly", self.beta)

    def from_config_fields(self):
        return {
            "variant": "path_loss_smooth",
            "A": self.attenuation,
            "beta": self.beta,
            "dimension": self.dimension,
        }


@dataclass(frozen=True)
class IndicatorBox(ShapeSpec):
    """h(x) = amplitude on the closed box prod [-w_i, w_i], 0 outside."""

    halfwidths: tuple[float, ...]
    amplitude: float = 1.0

    def __post_init__(self):
        if len(self.halfwidths) not in (1, 2, 3):
            raise ContractViolation("dimension must be in {1, 2, 3}")
        if any(w <= 0 for w in self.halfwidths) or self.amplitude <= 0:
            raise ContractViolation("halfwidths and amplitude must be > 0")

    @property
    def dimension(self) -> int:
        return len(self.halfwidths)

    @property
    def sup_norm(self) -> float:
        return self.amplitude

    @property
    def compact_support(self) -> bool:
        return True

    @property
    def support_halfwidths(self):
        return self.halfwidths

    def _eval(self, x):
        w = np.asarray(self.halfwidths)
        inside = np.all(np.abs(x) <= w, axis=-1)
        return np.where(inside, self.amplitude, 0.0)

    def _envelope_box(self, x, lo, hi, mode):
        w = np.asarray(self.halfwidths)
        a = x + lo
        b = x + hi
        if mode == "sup":
            # region box intersects the support box per axis
            hit = np.all((a <= w) & (b >= -w), axis=-1)
            return np.where(hit, self.amplitude, 0.0)
        contained = np.all((a >= -w) & (b <= w), axis=-1)
        return np.where(contained, self.amplitude, 0.0)

    def _envelope_ball(self, x, r, mode):
        w = np.asarray(self.halfwidths)
        if mode == "sup":
            gap = np.maximum(np.abs(x) - w, 0.0)
            hit = _norm(gap) <= r
            return np.where(hit, self.amplitude, 0.0)
        contained = np.all(np.abs(x) + r <= w, axis=-1)
        return np.where(contained, self.amplitude, 0.0)

    def _xi_integral(self, xi, tol):
        return float(self.amplitude**xi * np.prod(2.0 * np.asarray(self.halfwidths)))

    def check_regularity(self, xi):
        return RegularityReport(
            bounded=True,
            sup_norm=self.amplitude,
            compact_support=True,
            cprime_xi_holds=True,
            gamma=None,
            constant_C=None,
            xi_used=xi,
        )

    @property
    def feature_scale(self) -> float:
        return min(self.halfwidths)

    @property
    def tail_decay(self):
        return ("compact", None)

    def from_config_fields(self):
        return {
            "variant": "indicator_box",
            "halfwidths": list(self.halfwidths),
            "amplitude": self.amplitude,
        }


@dataclass(frozen=True)
class LogDecay(ShapeSpec):
    """h(x) = min(cap, gamma / ln(e + |x|)); slower than any power decay."""

    gamma: float
    cap: float
    dimension: int = 1

    def __post_init__(self):
        if self.gamma <= 0 or self.cap <= 0:
            raise ContractViolation("gamma and cap must be > 0")
        if self.dimension not in (1, 2, 3):
            raise ContractViolation("dimension must be in {1, 2, 3}")

    @property
    def sup_norm(self) -> float:
        return min(self.cap, self.gamma)

    def _radial(self, r):
        return np.minimum(self.cap, self.gamma / np.log(math.e + r))

    def _eval(self, x):
        return self._radial(_norm(x))

    def _envelope_box(self, x, lo, hi, mode):
        near, far = _radial_bounds_box(x, lo, hi)
        return self._radial(near if mode == "sup" else far)

    def _envelope_ball(self, x, r, mode):
        d = _norm(x)
        d = np.maximum(d - r, 0.0) if mode == "sup" else d + r
        return self._radial(d)

    def _xi_integral(self, xi, tol):
        return math.inf

    def check_regularity(self, xi):
        return RegularityReport(
            bounded=True,
            sup_norm=self.sup_norm,
            compact_support=False,
            cprime_xi_holds=False,
            gamma=None,
            constant_C=None,
            xi_used=xi,
        )

    @property
    def tail_decay(self):
        return ("log", None)

    def from_config_fields(self):
        return {
            "variant": "log_decay",
            "gamma": self.gamma,
            "cap": self.cap,
            "dimension": self.dimension,
        }


# ---------------------------------------------------------------------------


def shape_from_config(cfg: dict) -> ShapeSpec:
    """Build a shape from its JSON config sub-block."""
    kind = cfg.get("variant")
    if kind == "gaussian_diag":
        return GaussianDiag(sigma=tuple(cfg["sigma"]), amplitude=float(cfg.get("amplitude", 1.0)))
    if kind == "path_loss_hard":
        return PathLossHard(
            attenuation=float(cfg["A"]),
            r0=float(cfg["r0"]),
            beta=float(cfg["beta"]),
            dimension=int(cfg.get("dimension", 1)),
        )
    if kind == "path_loss_smooth":
        return PathLossSmooth(
            attenuation=float(cfg["A"]),
            beta=float(cfg["beta"]),
            dimension=int(cfg.get("dimension", 1)),
        )
    if kind == "indicator_box":
        return IndicatorBox(
            halfwidths=tuple(cfg["halfwidths"]),
            amplitude=float(cfg.get("amplitude", 1.0)),
        )
    if kind == "log_decay":
        return LogDecay(
            gamma=float(cfg["gamma"]),
            cap=float(cfg["cap"]),
            dimension=int(cfg.get("dimension", 1)),
        )
    raise ContractViolation(f"unknown shape variant {kind!r}")
