import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from arrayscatter import K0, ArrayConfig, critical_energies, dispersion, on_shell_smatrix
from arrayscatter.cross_section import (IncomingConfig, beam_survival, cross_sections,
                                        dark_pair, group_velocity, one_sided_transmission,
                                        total_cross_section)
from arrayscatter.errors import ConfigError, CriticalEnergyProximity, NonPhysicalFlux
from arrayscatter.propagator import pair_delta
from arrayscatter.two_excitation import tmatrix_contact, tmatrix_general


def test_unit_tags(cfg, cfg2d):
    inc = dark_pair(cfg, 2.0 / 3 * np.pi / cfg.spacing, -2.0 / 3 * np.pi / cfg.spacing)
    assert cross_sections(inc).units == "dimensionless"
    ph = IncomingConfig(cfg, 2, 1.0, -1.0, (0.3, 0.3))
    assert cross_sections(ph).units == "lambda0^2"
    assert IncomingConfig(cfg2d, 0, [9.0, 0.0], [-9.0, 0.0]).channel == 0


def test_golden_identity_sigma00(cfg, q_gold):
    inc = dark_pair(cfg, q_gold, -q_gold)
    cs = cross_sections(inc)
    sm = on_shell_smatrix(cfg, inc.E, 0.0)
    assert abs(cs.partial[0] - abs(sm.s[0, 0] - 1) ** 2) < 1e-6
    assert cs.partial[1] is None


def test_golden_values(cfg, q_gold):
    # reference: sigma00 = 2.946, sigma02 = 0.364 (+- 0.005)
    cs = cross_sections(dark_pair(cfg, q_gold, -q_gold))
    assert cs.partial[0] == pytest.approx(2.946, abs=5e-3)
    assert cs.partial[2] == pytest.approx(0.364, abs=5e-3)
    assert cs.total == pytest.approx(3.310, abs=1e-2)


def test_partials_sum_to_total(cfg):
    rng = np.random.default_rng(5)
    b = cfg.zone_edge
    for _ in range(20):
        p1, p2 = rng.uniform(K0 * 1.01, b, 2) * rng.choice([-1, 1], 2)
        inc = dark_pair(cfg, p1, p2)
        cs = cross_sections(inc)
        s = sum(v for v in cs.partial.values() if v is not None)
        assert abs(s - cs.total) <= 1e-8 * cs.total
        assert abs(total_cross_section(inc) - cs.total) <= 1e-12 * cs.total
        assert all(v is None or v >= 0 for v in cs.partial.values())


def test_q_reflection_invariance(cfg):
    for p1, p2 in ((7.0, -9.5), (10.0, 11.0), (-8.0, 12.0)):
        a = cross_sections(dark_pair(cfg, p1, p2))
        b = cross_sections(dark_pair(cfg, p2, p1))
        for k in range(3):
            if a.partial[k] is None:
                assert b.partial[k] is None
            else:
                assert b.partial[k] == pytest.approx(a.partial[k], rel=1e-10)


def test_velocity_alpha2_perpendicular(cfg2d):
    inc = IncomingConfig(cfg2d, 2, [1.0, 0.0], [0.0, 1.0], (0.1, 0.1))
    assert group_velocity(inc) == pytest.approx(cfg2d.c * np.sqrt(2), rel=1e-14)
    one = IncomingConfig(cfg2d, 1, [1.0, 0.0], [14.0, 0.0], (0.1,))
    assert group_velocity(one) == cfg2d.c


def test_velocity_alpha0_against_nine_point_stencil(cfg, q_gold):
    v = group_velocity(dark_pair(cfg, q_gold, -q_gold))
    closed = abs(2 * float(dispersion(cfg).grad_delta(q_gold)))
    h = 1e-3
    c = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])
    nine = abs(sum(ck * pair_delta(cfg, 0.0, q_gold + (k - 4) * h) for k, ck in enumerate(c)) / h)
    assert abs(v - closed) / closed < 1e-6
    assert abs(nine - closed) / closed < 1e-6


def test_velocity_at_critical_point_flagged(cfg):
    Ec, qc = critical_energies(cfg, 0.0)[0]
    inc = dark_pair(cfg, qc, -qc)
    with pytest.warns(CriticalEnergyProximity):
        v = group_velocity(inc)
    assert v < 1e-6


def test_photon_input_decouples_near_critical_energy(cfg):
    Ec = critical_energies(cfg, 0.0)[-1][0]
    tot = []
    for k in (1, 3, 5):
        E = Ec - 10.0 ** -k
        tot.append(total_cross_section(IncomingConfig(cfg, 2, 1.0, -1.0, (E / 2, E / 2))))
    assert tot[0] > tot[1] > tot[2]


def test_far_energy_decay(cfg):
    tot = [total_cross_section(IncomingConfig(cfg, 2, 1.0, -1.0, (E / 2, E / 2)))
           for E in (10.0, 100.0, 1000.0)]
    assert tot[0] > tot[1] > tot[2]


def test_general_path_matches_contact(cfg, q_gold):
    inc = dark_pair(cfg, q_gold, -q_gold)
    ref = cross_sections(inc)
    c = cross_sections(inc, tmatrix=tmatrix_contact(cfg, inc.E, 0.0, side="above"))
    hard = tmatrix_general(cfg, inc.E, 0.0, lambda k: np.full(np.shape(k), 1e6), side="above")
    g = cross_sections(inc, tmatrix=hard)
    for k in (0, 2):
        assert c.partial[k] == pytest.approx(ref.partial[k], rel=1e-6)
        assert g.partial[k] == pytest.approx(ref.partial[k], rel=1e-4)


def test_incoming_validation(cfg):
    with pytest.raises(ConfigError):
        IncomingConfig(cfg, 0, 1.0, 9.0)
    with pytest.raises(ConfigError):
        IncomingConfig(cfg, 1, 1.0, 9.0)
    with pytest.raises(ConfigError):
        IncomingConfig(cfg, 3, 9.0, 9.0)


def test_q_uses_wrapped_total_momentum(cfg):
    b = cfg.zone_edge
    inc = dark_pair(cfg, 0.9 * b, 0.8 * b)
    P, q = inc.P, inc.q
    assert -b <= P < b
    assert pair_delta(cfg, P, q) == pytest.approx(inc.E, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(1.01, 1.99), st.floats(1.01, 1.99), st.booleans(), st.booleans())
def test_dark_pair_bound(u1, u2, s1, s2):
    cfg = ArrayConfig()
    b = cfg.zone_edge
    # dark momenta between k0 and b
    p1 = (K0 + (u1 - 1) * (b - K0)) * (1 if s1 else -1)
    p2 = (K0 + (u2 - 1) * (b - K0)) * (1 if s2 else -1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CriticalEnergyProximity)
        cs = cross_sections(dark_pair(cfg, p1, p2))
    # flagged inputs sit on the velocity singularity, where the divergence is physical
    assume(not cs.near_critical and cs.velocity > 1e-6)
    assert cs.total <= 4.0 + 1e-9


def test_beam_survival():
    assert beam_survival(0.0, 3.0).survival == 1.0
    for R in (0.0, 0.1, 0.9):
        assert beam_survival(R, 0.0).survival == 1.0
    s, R, h = 0.7, 0.5, 1e-3
    slope = (beam_survival(R + h, s).survival - beam_survival(R - h, s).survival) / (2 * h)
    assert slope == pytest.approx(-s, rel=1e-12)
    b = beam_survival(0.5, 0.7, t=0.6)
    assert b.transmitted + b.reflected == pytest.approx(0.5 * b.survival, rel=1e-14)
    with pytest.raises(NonPhysicalFlux):
        beam_survival(2.0, 0.7)
    with pytest.raises(ValueError):
        beam_survival(-1.0, 0.7)


def test_one_sided_transmission_bounds(cfg):
    p = 0.5
    d = float(dispersion(cfg).delta(p))
    assert abs(one_sided_transmission(p, d, cfg)) == pytest.approx(0.0, abs=1e-14)
    assert abs(one_sided_transmission(p, d + 1e8, cfg)) == pytest.approx(1.0, abs=1e-7)
