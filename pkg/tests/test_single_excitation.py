import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arrayscatter import (ArrayConfig, K0, atomic_amplitude, dispersion,
                          dressed_photon_realspace, lorentzian, on_shell_chi, transmission)
from arrayscatter.errors import DarkMomentum
from arrayscatter.lattice import coupling_g
from arrayscatter.oracle import lorentzian_identity_check

bright_p = st.floats(-0.999 * K0, 0.999 * K0)
energies = st.floats(-50, 50)


@settings(max_examples=100, deadline=None)
@given(bright_p, energies)
def test_unimodular_transmission(p, E):
    assert abs(abs(transmission(p, E, ArrayConfig())) - 1) < 1e-12


@settings(max_examples=100, deadline=None)
@given(bright_p, energies)
def test_amplitude_identity(p, E):
    cfg = ArrayConfig()
    a = atomic_amplitude(p, E, cfg)
    t = transmission(p, E, cfg)
    assert abs(np.conj(a) * t - a) < 1e-12 * max(1.0, abs(a))


@settings(max_examples=50, deadline=None)
@given(bright_p, energies)
def test_lorentzian_positive(p, E):
    cfg = ArrayConfig()
    disp = dispersion(cfg)
    g, d = float(disp.gamma(p)), float(disp.delta(p))
    val = lorentzian(p, E, cfg)
    assert val > 0
    assert val == pytest.approx(0.5 * g / ((E - d) ** 2 + 0.25 * g * g), rel=1e-12)


def test_resonance_values(cfg):
    p = 1.3
    disp = dispersion(cfg)
    d, g = float(disp.delta(p)), float(disp.gamma(p))
    assert transmission(p, d, cfg) == pytest.approx(-1.0, abs=1e-14)
    gp = coupling_g(p, cfg, on_shell_chi(p, d, cfg))
    assert atomic_amplitude(p, d, cfg) == pytest.approx(-2j * gp / g, rel=1e-12)


def test_far_detuned_limits(cfg):
    p = 2.0
    t = transmission(p, np.array([1e8, -1e8]), cfg)
    assert np.allclose(t, 1.0, atol=1e-7)
    amps = np.abs(atomic_amplitude(p, np.array([10.0, 1e2, 1e3]), cfg, rescaled=True)) ** 2
    assert np.all(np.diff(amps) < 0)


def test_dark_momentum_rejected(cfg, q_gold):
    for fn in (atomic_amplitude, transmission, lorentzian):
        with pytest.raises(DarkMomentum):
            fn(q_gold, 0.0, cfg)


def test_rescaled_amplitude_integrates_to_one(cfg):
    # |a~|^2 is a unit-area Lorentzian; the same statement as the single-photon identity
    rep = lorentzian_identity_check([1.1], 0.4, cfg, cutoff=1e3)
    assert rep.discrepancy < 1e-12
    from arrayscatter.quadrature import gauss_kronrod
    eps = complex(dispersion(cfg).epsilon(1.1))
    res = gauss_kronrod(lambda e: np.abs(atomic_amplitude(1.1, e, cfg, rescaled=True)) ** 2,
                        [-1e4, eps.real, 1e4], rtol=1e-12)
    tail = 2 * (-eps.imag / np.pi) / 1e4
    assert abs(res.value + tail - 1) < 1e-6


def test_dressed_photon(cfg):
    p, disp = 0.8, dispersion(cfg)
    d = float(disp.delta(p))
    r = np.array([-2.0, -0.5, 0.5, 2.0])
    psi = dressed_photon_realspace(p, d + 0.3, r, cfg)
    assert np.allclose(np.abs(psi), 1 / np.sqrt(2 * np.pi), rtol=0, atol=1e-14)
    left = dressed_photon_realspace(p, d, -1e-9, cfg)
    right = dressed_photon_realspace(p, d, 1e-9, cfg)
    assert abs(np.angle(right / left)) == pytest.approx(np.pi, abs=1e-6)
    assert dressed_photon_realspace(p, d, 0.0, cfg) == pytest.approx(0.0, abs=1e-14)


def test_on_shell_chi(cfg):
    chi = on_shell_chi(1.0, 0.0, cfg)
    assert chi == pytest.approx(np.sqrt(K0 ** 2 - 1.0), rel=1e-14)
    with pytest.raises(DarkMomentum):
        on_shell_chi(1.0, -0.999 * K0 * cfg.c, cfg)
