import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arrayscatter import ArrayConfig, Classification, K0, classify_momentum, dispersion
from arrayscatter import _clausen as cl
from arrayscatter.errors import ConfigError, DarkMomentum
from arrayscatter.lattice import (coupling_g, dispersion_table, export_dispersion_csv,
                                  is_bright, wrap_momentum)
from arrayscatter.oracle import dispersion_direct_sum

spacings = st.floats(0.05, 0.45)
pols = st.sampled_from(["parallel", "perpendicular"])


def test_classification_examples(cfg, q_gold):
    assert classify_momentum(0.0, cfg) is Classification.BRIGHT
    assert classify_momentum(q_gold, cfg) is Classification.DARK
    assert classify_momentum(K0, cfg) is Classification.BRIGHT
    assert classify_momentum(K0 * (1 + 1e-12), cfg) is Classification.DARK


@pytest.mark.parametrize("kw", [dict(spacing=0.5), dict(spacing=0.0), dict(spacing=-0.1),
                                dict(polarization="circular"), dict(polarization="diagonal"),
                                dict(quality_factor=-1.0), dict(dimension=3)])
def test_invalid_config(kw):
    with pytest.raises(ConfigError):
        ArrayConfig(**kw)


def test_wrap_momentum_into_zone(cfg):
    b = cfg.zone_edge
    p = np.linspace(-5 * b, 5 * b, 1001)
    w = wrap_momentum(p, cfg)
    assert np.all((w >= -b) & (w < b))
    assert np.allclose(np.exp(1j * (p - w) * cfg.spacing), 1.0)


@settings(max_examples=60, deadline=None)
@given(spacings, pols, st.floats(-1, 1))
def test_gamma_vanishes_outside_light_cone(d, pol, u):
    c = ArrayConfig(spacing=d, polarization=pol)
    disp = dispersion(c)
    p = u * c.zone_edge
    eps = complex(disp.epsilon(p))
    assert eps.imag <= 0
    if not is_bright(p, c):
        assert eps.imag == 0.0


@settings(max_examples=40, deadline=None)
@given(spacings, pols)
def test_inversion_symmetry(d, pol):
    c = ArrayConfig(spacing=d, polarization=pol)
    disp = dispersion(c)
    p = np.linspace(-c.zone_edge, c.zone_edge, 257)[1:-1]
    assert np.max(np.abs(disp.epsilon(p) - disp.epsilon(-p))) < 1e-10


def test_inversion_symmetry_2d(cfg2d):
    disp = dispersion(cfg2d)
    rng = np.random.default_rng(0)
    p = rng.uniform(-cfg2d.zone_edge, cfg2d.zone_edge, (50, 2))
    assert np.max(np.abs(disp.epsilon(p) - disp.epsilon(-p))) < 1e-10


def test_dispersion_matches_direct_sum(cfg):
    p = 0.9 * cfg.zone_edge
    val, _ = dispersion_direct_sum(p, cfg, 10 ** 6)
    ref = complex(dispersion(cfg).epsilon(p))
    assert abs(val - ref) / abs(ref) < 1e-6


@pytest.mark.parametrize("pol", ["parallel", "perpendicular"])
def test_superradiant_zero_momentum(pol):
    c = ArrayConfig(spacing=0.25, polarization=pol)
    val, _ = dispersion_direct_sum(0.0, c, 10 ** 6)
    assert -2 * val.imag > 1.0
    assert abs(-2 * val.imag - float(dispersion(c).gamma(0.0))) < 1e-6


def test_gradient_matches_finite_difference(cfg, cfg_perp):
    for c in (cfg, cfg_perp):
        disp = dispersion(c)
        p = np.array([1.0, 3.0, 7.5, 9.0, 11.0])
        h = 1e-5
        fd = (disp.delta(p + h) - disp.delta(p - h)) / (2 * h)
        assert np.allclose(disp.grad_delta(p), fd, rtol=1e-6, atol=1e-8)


def test_clausen_against_mpmath():
    import mpmath
    for t in (0.1, 1.0, 2.5, 4.0, 6.0):
        assert abs(cl.cl2(t) - float(mpmath.clsin(2, t))) < 1e-14
        assert abs(cl.cl3(t) - float(mpmath.clcos(3, t))) < 1e-14
        assert abs(cl.sl2(t) - float(mpmath.clcos(2, t))) < 1e-14
        assert abs(cl.sl3(t) - float(mpmath.clsin(3, t))) < 1e-14
        assert abs(cl.li1_imag(t) - float(mpmath.clsin(1, t))) < 1e-14


def test_coupling_g(cfg, q_gold):
    disp = dispersion(cfg)
    g0 = coupling_g(0.0, cfg)
    assert g0 == pytest.approx(np.sqrt(float(disp.gamma(0.0)) * cfg.c / (2 * np.pi)), rel=1e-14)
    assert coupling_g(K0, cfg) == 0.0
    with pytest.raises(DarkMomentum):
        coupling_g(q_gold, cfg)


def test_2d_dispersion_against_direct_sum(cfg2d):
    # the 2D direct sum has no tail estimate: check convergence toward the Ewald value
    disp = dispersion(cfg2d)
    p = np.array([9.0, 3.0])
    ref = complex(disp.epsilon(p))
    e4 = abs(dispersion_direct_sum(p, cfg2d, 10 ** 4)[0] - ref)
    e6 = abs(dispersion_direct_sum(p, cfg2d, 10 ** 6)[0] - ref)
    assert e6 < e4 and e6 < 0.1


def test_light_cone_behavior_reported(cfg, cfg2d):
    rep = dispersion(cfg).light_cone_behavior()
    assert rep["gamma"] in ("finite", "divergent") and rep["probe"]
    rep2 = dispersion(cfg2d).light_cone_behavior()
    assert rep2["gamma"] == "divergent"


def test_dispersion_csv(cfg):
    text = export_dispersion_csv(cfg, 1024)
    lines = text.strip().splitlines()
    assert lines[0] == "p,delta,gamma,classification"
    rows = [ln.split(",") for ln in lines[1:]]
    assert len(rows) == 1024
    for p, _, g, cls in rows:
        dark = abs(float(p)) > K0
        assert (cls == "dark") == dark
        if dark:
            assert float(g) == 0.0
    buf = io.StringIO()
    export_dispersion_csv(cfg, 8, buf)
    assert buf.getvalue() == export_dispersion_csv(cfg, 8)
    tab = dispersion_table(ArrayConfig(dimension=2, spacing=0.3), 4)
    assert set(tab) == {"px", "py", "delta", "gamma", "bright"} and tab["px"].size == 16
