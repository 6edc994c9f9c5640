"""Shape catalog: evaluation, envelopes, xi-integrals, regularity."""

import math

import numpy as np
import pytest

from esn.errors import ContractViolation
from esn.shape import (
    Box,
    GaussianDiag,
    IndicatorBox,
    LogDecay,
    PathLossHard,
    PathLossSmooth,
    ShapeSpec,
    shape_from_config,
)

NORMAL_AMP = (2 * math.pi) ** -0.5

ALL_SHAPES = [
    GaussianDiag(sigma=(1.0,), amplitude=NORMAL_AMP),
    GaussianDiag(sigma=(0.4, 1.3), amplitude=2.0),
    PathLossHard(attenuation=1.0, r0=0.1, beta=3.0, dimension=1),
    PathLossSmooth(attenuation=1.0, beta=2.0, dimension=1),
    PathLossSmooth(attenuation=2.0, beta=3.0, dimension=2),
    IndicatorBox(halfwidths=(0.5,)),
    IndicatorBox(halfwidths=(0.5, 0.25), amplitude=3.0),
    LogDecay(gamma=1.0, cap=1.0, dimension=1),
]

MONOTONE_1D = [
    GaussianDiag(sigma=(1.0,), amplitude=NORMAL_AMP),
    PathLossHard(attenuation=1.0, r0=0.1, beta=3.0, dimension=1),
    PathLossSmooth(attenuation=1.0, beta=2.0, dimension=1),
    LogDecay(gamma=1.0, cap=1.0, dimension=1),
]


def test_eval_examples():
    g = GaussianDiag(sigma=(1.0,), amplitude=NORMAL_AMP)
    assert g([0.0]) == pytest.approx(0.3989422804014327, abs=1e-6)
    assert IndicatorBox(halfwidths=(0.5,))([0.6]) == 0.0
    assert PathLossSmooth(attenuation=1.0, beta=2.0)([1.0]) == pytest.approx(0.25)


def test_eval_dimension_mismatch():
    g = GaussianDiag(sigma=(1.0,), amplitude=1.0)
    with pytest.raises(ContractViolation):
        g([0.0, 1.0])


def test_eval_nonnegative_finite_everywhere():
    rng = np.random.default_rng(1)
    for shp in ALL_SHAPES:
        x = rng.normal(scale=5.0, size=(200, shp.dimension))
        v = np.asarray(shp(x))
        assert np.all(v >= 0) and np.all(np.isfinite(v))


def test_monotone_along_rays():
    # eval(t x) <= eval(s x) for t >= s >= 0
    rng = np.random.default_rng(2)
    for shp in MONOTONE_1D + [GaussianDiag(sigma=(0.4, 1.3), amplitude=2.0)]:
        for _ in range(20):
            direction = rng.normal(size=shp.dimension)
            scales = np.sort(rng.uniform(0, 4, size=10))
            vals = np.asarray(shp(np.outer(scales, direction)))
            assert np.all(np.diff(vals) <= 1e-15)


def test_indicator_support_is_closed_box():
    b = IndicatorBox(halfwidths=(0.5, 0.25), amplitude=3.0)
    assert b([0.5, 0.25]) == 3.0  # boundary included
    assert b([0.5 + 1e-9, 0.0]) == 0.0


def test_envelope_examples():
    g = GaussianDiag(sigma=(1.0,), amplitude=NORMAL_AMP)
    assert g.envelope([2.0], 1.0, "sup") == pytest.approx(0.24197072451914337, abs=1e-6)
    for shp in ALL_SHAPES:
        x = np.full(shp.dimension, 0.3)
        assert shp.envelope(x, 0.0, "sup") == pytest.approx(float(shp(x)))
        assert shp.envelope(x, 0.0, "inf") == pytest.approx(float(shp(x)))
    assert IndicatorBox(halfwidths=(0.5,)).envelope([0.0], 1.0, "inf") == 0.0


def test_envelope_orders_eval_pointwise():
    # sup-envelope >= eval >= inf-envelope on a 1000-point random grid
    rng = np.random.default_rng(3)
    for shp in ALL_SHAPES:
        x = rng.normal(scale=3.0, size=(1000, shp.dimension))
        ev = np.asarray(shp(x))
        up = np.asarray(shp.envelope(x, 0.7, "sup"))
        dn = np.asarray(shp.envelope(x, 0.7, "inf"))
        assert np.all(up >= ev - 1e-14)
        assert np.all(ev >= dn - 1e-14)


def test_envelope_monotone_in_region():
    rng = np.random.default_rng(4)
    for shp in ALL_SHAPES:
        x = rng.normal(scale=3.0, size=(200, shp.dimension))
        for r1, r2 in ((0.2, 0.9), (0.9, 2.5)):
            assert np.all(
                np.asarray(shp.envelope(x, r2, "sup"))
                >= np.asarray(shp.envelope(x, r1, "sup")) - 1e-14
            )
            assert np.all(
                np.asarray(shp.envelope(x, r2, "inf"))
                <= np.asarray(shp.envelope(x, r1, "inf")) + 1e-14
            )


def test_envelope_box_regions():
    g = GaussianDiag(sigma=(1.0,), amplitude=NORMAL_AMP)
    # sup over an offset box sits at the per-axis point nearest the origin
    assert g.envelope([2.0], Box((-0.5,), (0.5,)), "sup") == pytest.approx(float(g([1.5])))
    assert g.envelope([2.0], Box((-0.5,), (0.5,)), "inf") == pytest.approx(float(g([2.5])))
    b = IndicatorBox(halfwidths=(0.5,))
    assert b.envelope([0.9], Box((-0.5,), (0.5,)), "sup") == 1.0
    assert b.envelope([0.9], Box((-0.5,), (0.5,)), "inf") == 0.0


def test_envelope_sup_matches_brute_force_grid():
    # exact agreement with a dense ball grid when the maximizer is a grid
    # point (|x| > r puts it at an interval endpoint)
    grid = np.linspace(-1.0, 1.0, 10001)
    for shp in MONOTONE_1D:
        for x in (1.7, -2.4, 3.1):
            brute = float(np.max(np.asarray(shp((x + grid)[:, None]))))
            assert shp.envelope([x], 1.0, "sup") == pytest.approx(brute, abs=1e-9)
    # |x| <= r: supremum is the global peak
    for shp in MONOTONE_1D:
        assert shp.envelope([0.3], 1.0, "sup") == pytest.approx(shp.sup_norm, abs=1e-12)


def test_anisotropic_gaussian_ball_envelope_exact():
    g = GaussianDiag(sigma=(0.4, 1.3), amplitude=2.0)
    rng = np.random.default_rng(5)
    for _ in range(25):
        x = rng.normal(scale=2.0, size=2)
        r = rng.uniform(0.1, 1.5)
        # dense boundary + interior sampling can only undershoot a sup and
        # overshoot an inf
        ang = np.linspace(0, 2 * math.pi, 4000, endpoint=False)
        boundary = x + r * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        inner = x + rng.uniform(-1, 1, size=(4000, 2)) * r / math.sqrt(2)
        pts = np.vstack([boundary, inner, x[None, :]])
        vals = np.asarray(g(pts))
        sup = float(g.envelope(x, r, "sup"))
        inf = float(g.envelope(x, r, "inf"))
        assert sup >= np.max(vals) - 1e-12
        assert inf <= np.min(vals[: len(boundary)]) + 1e-12
        assert sup <= np.max(vals) * (1 + 1e-4) + 1e-9
        assert inf >= np.min(vals) * (1 - 2e-3) - 1e-9


def test_xi_integral_closed_forms():
    b = IndicatorBox(halfwidths=(0.5,))
    assert b.xi_integral(3.0) == pytest.approx(1.0)
    g = GaussianDiag(sigma=(1.0,), amplitude=NORMAL_AMP)
    assert g.xi_integral(1.0) == pytest.approx(1.0)
    assert g.xi_integral(2.0) == pytest.approx(0.28209479177387814, abs=1e-8)


def test_xi_integral_quadrature_agrees_with_closed_form():
    for shp, xi in (
        (GaussianDiag(sigma=(1.0,), amplitude=NORMAL_AMP), 2.0),
        (IndicatorBox(halfwidths=(0.5,)), 3.0),
        (GaussianDiag(sigma=(0.7, 1.1), amplitude=1.5), 1.5),
    ):
        closed = shp.xi_integral(xi)
        quad = ShapeSpec._xi_integral(shp, xi, 1e-9)
        assert quad == pytest.approx(closed, rel=1e-7)


def test_xi_integral_divergence_sentinel():
    assert math.isinf(LogDecay(gamma=1.0, cap=1.0).xi_integral(2.0))


def test_pathloss_xi_integral_against_radial_closed_form():
    # oracle: 2/(A(beta xi - 1)) in d=1 for the smooth form
    shp = PathLossSmooth(attenuation=2.0, beta=2.0, dimension=1)
    assert shp.xi_integral(2.0, tol=1e-9) == pytest.approx(2.0 / (2.0 * 3.0), rel=1e-7)


def test_check_regularity():
    rep = PathLossSmooth(attenuation=1.0, beta=3.0, dimension=2).check_regularity(1.0)
    assert rep.cprime_xi_holds and rep.gamma == 3.0
    rep_box = IndicatorBox(halfwidths=(0.5,)).check_regularity(0.3)
    assert rep_box.compact_support and rep_box.cprime_xi_holds
    rep_log = LogDecay(gamma=1.0, cap=1.0).check_regularity(5.0)
    assert not rep_log.cprime_xi_holds


def test_regularity_bound_holds_on_grid():
    # cprime holds => eval(x) <= C (|x|^-gamma AND 1) on a verification grid
    rng = np.random.default_rng(6)
    for shp in (
        PathLossSmooth(attenuation=1.0, beta=2.0, dimension=1),
        PathLossHard(attenuation=1.0, r0=0.1, beta=3.0, dimension=1),
        GaussianDiag(sigma=(1.0,), amplitude=NORMAL_AMP),
    ):
        rep = shp.check_regularity(2.0)
        assert rep.cprime_xi_holds and rep.gamma * 2.0 > shp.dimension
        x = rng.uniform(-30, 30, size=(500, shp.dimension))
        r = np.linalg.norm(x, axis=-1)
        bound = rep.constant_C * np.minimum(r ** -rep.gamma, 1.0)
        assert np.all(np.asarray(shp(x)) <= bound + 1e-12)


def test_shape_from_config_roundtrip():
    for shp in ALL_SHAPES:
        again = shape_from_config(shp.from_config_fields())
        assert again == shp
