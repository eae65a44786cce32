import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arrayscatter import (ArrayConfig, K0, critical_energies, dark_pair_dos, local_propagator,
                          pair_delta, pair_epsilon)
from arrayscatter.oracle import propagator_riemann
from arrayscatter.propagator import Side, domain_of, level_set, pair_gradient, zone_volume
from arrayscatter.quadrature import gauss_kronrod


def test_domain_examples(cfg):
    assert domain_of(0.0, 1.5 * K0, cfg) == 0
    assert domain_of(0.0, 0.5 * K0, cfg) == 2
    P = 2 * 0.99 * K0
    q = 0.2
    assert domain_of(P, q, cfg) == 1


def test_domain_p0_never_one(cfg):
    q = np.linspace(0, cfg.zone_edge, 10001)
    assert not np.any(domain_of(0.0, q, cfg) == 1)


def test_far_off_shell_leading_order(cfg):
    V = zone_volume(cfg)
    w = 0.5 + 1e3j
    L = local_propagator(cfg, w, 0.0).L
    assert abs(L * w / V - 1) < 1e-3


def test_far_off_shell_first_correction(cfg):
    # the zone average of eps2 is -i (twice the on-site -i/2), so L ~ Vol / (omega + i)
    V = zone_volume(cfg)
    for w in (0.5 + 1e3j, -3 + 300j, 1e4j):
        L = local_propagator(cfg, w, 0.0).L
        assert abs(L - V / (w + 1j)) / abs(L) < 10 / abs(w) ** 2


@pytest.mark.parametrize("E", [-1.0, 0.3, 1.4, 2.2])
def test_off_axis_against_single_quadrature(cfg, E):
    w = E + 0.5j
    L = local_propagator(cfg, w, 0.7, rtol=1e-10).L
    ref = gauss_kronrod(lambda q: 1.0 / (w - pair_epsilon(cfg, 0.7, q)),
                        [0.0, cfg.zone_edge], rtol=1e-12, atol=0).value
    assert abs(L - ref) / abs(ref) < 1e-8


@pytest.mark.parametrize("E", [-2.5, 0.0, 1.0, 2.0])
def test_off_axis_against_riemann(cfg, E):
    w = E + 1j
    L = local_propagator(cfg, w, 0.0).L
    assert abs(L - propagator_riemann(w, 0.0, cfg, 4096)) / abs(L) < 1e-4


def test_inversion_symmetry_in_P(cfg):
    for w in (1.0 + 1j, 0.2 + 0.1j):
        a = local_propagator(cfg, w, 3.0).L
        b = local_propagator(cfg, w, -3.0).L
        assert abs(a - b) < 1e-8 * abs(a)


@settings(max_examples=40, deadline=None)
@given(st.floats(-3.0, 3.0), st.floats(-12.5, 12.5))
def test_signs_and_optical_identity(E, P):
    cfg = ArrayConfig()
    dec = local_propagator(cfg, E, P, side="above")
    assert all(r >= 0 for r in dec.rho)
    assert dec.L0.imag <= 0 and dec.L1.imag <= 0 and dec.L2.imag <= 0
    assert abs(abs(dec.L.imag) - np.pi * sum(dec.rho)) < 1e-9 * max(1.0, abs(dec.L))
    below = local_propagator(cfg, E, P, side="below")
    assert abs((dec.L0 - below.L0) + 2j * np.pi * dec.rho[0]) < 1e-9 * max(1, abs(dec.L0))


def test_conjugation_across_cut(cfg):
    rng = np.random.default_rng(3)
    for E, P in zip(rng.uniform(-2, 2.3, 5), rng.uniform(-12, 12, 5)):
        up = local_propagator(cfg, E, P, side=Side.ABOVE)
        down = local_propagator(cfg, E, P, side=Side.BELOW)
        lhs = down.L
        rhs = np.conj(up.L0) + up.L1 + up.L2
        assert abs(lhs - rhs) < 1e-9 * abs(lhs)
        assert abs(up.other_side().L - lhs) < 1e-12 * abs(lhs)


def test_dos_matches_propagator_at_random_points(cfg):
    rng = np.random.default_rng(11)
    for E, P in zip(rng.uniform(-1.0, 2.4, 50), rng.uniform(-12.5, 12.5, 50)):
        rho = dark_pair_dos(cfg, E, P, warn=False)
        L0 = local_propagator(cfg, E, P, side="above").L0
        assert abs(np.pi * rho - abs(L0.imag)) <= 1e-6 * max(1.0, np.pi * rho)


def test_dos_outside_band_is_zero(cfg):
    assert dark_pair_dos(cfg, 10.0, 0.0) == 0.0
    assert dark_pair_dos(cfg, -10.0, 0.0) == 0.0


def test_level_set_on_shell(cfg):
    pts, w = level_set(cfg, 1.5, 0.0)[:2]
    assert len(pts) > 0
    assert np.allclose(pair_delta(cfg, 0.0, np.asarray(pts)), 1.5, atol=1e-10)


def test_critical_points_are_stationary(cfg, cfg_perp):
    for c in (cfg, cfg_perp):
        crit = critical_energies(c, 0.0)
        assert crit
        for E, q in crit:
            assert abs(pair_gradient(c, 0.0, q)) < 1e-8
            assert pair_delta(c, 0.0, q) == pytest.approx(E, abs=1e-12)
    E, q = critical_energies(cfg, 0.0)[-1]
    assert q == pytest.approx(cfg.zone_edge)


def test_critical_energy_divergence_and_continuity(cfg):
    Ec = critical_energies(cfg, 0.0)[-1][0]
    mags = [abs(local_propagator(cfg, Ec - 10.0 ** -k, 0.0, side="above").L0)
            for k in range(1, 7)]
    assert all(b > a for a, b in zip(mags, mags[1:]))
    near = local_propagator(cfg, Ec - 1e-6, 0.0, side="above")
    assert near.near_critical
    e1 = critical_energies(cfg, 1e-3)[-1][0]
    e2 = critical_energies(cfg, 2e-3)[-1][0]
    assert abs(e1 - Ec) < 1e-3 and abs(e2 - e1) < 1e-3


def test_real_axis_needs_side(cfg):
    with pytest.raises(ValueError):
        local_propagator(cfg, 1.0, 0.0)


def test_2d_off_axis_against_riemann(cfg2d):
    P = np.array([0.5, 0.2])
    w = 0.5 + 1j
    L = local_propagator(cfg2d, w, P).L
    assert abs(L - propagator_riemann(w, P, cfg2d, 512)) / abs(L) < 1e-4


def test_2d_real_axis_density(cfg2d):
    P = np.array([0.5, 0.2])
    dec = local_propagator(cfg2d, -2.0, P, side="above")
    rho = dark_pair_dos(cfg2d, -2.0, P, warn=False)
    assert dec.rho[0] == pytest.approx(rho, rel=1e-3)
    assert abs(abs(dec.L.imag) - np.pi * sum(dec.rho)) < 1e-9 * abs(dec.L)
