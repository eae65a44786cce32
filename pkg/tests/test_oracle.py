import json

import numpy as np
import pytest

from arrayscatter import critical_energies, dispersion, local_propagator
from arrayscatter.oracle import (OracleReport, lorentzian_identity_check, check_dos, check_propagator,
                                 dispersion_direct_sum, dos_histogram, eta_extrapolation,
                                 propagator_riemann)
from arrayscatter.propagator import zone_volume


def test_direct_sum_doubling_ladder(cfg, cfg_perp):
    for c in (cfg, cfg_perp):
        p = 0.37 * c.zone_edge
        ref = complex(dispersion(c).epsilon(p))
        errs = [abs(dispersion_direct_sum(p, c, N)[0] - ref) for N in (1000, 2000, 4000, 8000)]
        assert all(b < a for a, b in zip(errs, errs[1:]))


def test_riemann_matches_quadrature(cfg):
    for E in (-1.0, 0.7, 2.0):
        rep = check_propagator(cfg, E + 1j, 0.0)
        assert rep.passed and rep.discrepancy < 1e-4


def test_riemann_inversion_symmetry(cfg):
    w = 0.4 + 1j
    a, b = propagator_riemann(w, 2.5, cfg, 2048), propagator_riemann(w, -2.5, cfg, 2048)
    assert abs(a - b) < 1e-10 * abs(a)


def test_eta_extrapolation_approaches_real_axis(cfg):
    E, P = 1.0, 0.0
    ex = eta_extrapolation(cfg, E, P)
    target = local_propagator(cfg, E, P, side="above").L
    errs = [abs(v - target) for v in ex["L"]]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert abs(ex["extrapolated"] - target) < errs[-1]


def test_histogram_measure(cfg):
    h = dos_histogram(0.0, cfg, samples=10 ** 6)
    total = float(np.sum(h["density"] * np.diff(h["edges"])))
    assert total == pytest.approx(h["measure"], rel=1e-12)
    # D0 at P = 0: both |q| > k0 on the reduced half zone
    assert h["measure"] == pytest.approx(cfg.zone_edge - 2 * np.pi, rel=1e-5)
    assert zone_volume(cfg) > h["measure"]


def test_histogram_spike_at_critical_energy(cfg):
    h = dos_histogram(0.0, cfg, samples=10 ** 6, bins=400)
    Ec = critical_energies(cfg, 0.0)[-1][0]
    centers = 0.5 * (h["edges"][1:] + h["edges"][:-1])
    peak = centers[np.argmax(h["density"])]
    assert abs(peak - Ec) <= 2 * (h["edges"][1] - h["edges"][0])


def test_dos_bin_average_agreement(cfg):
    rep, _ = check_dos(cfg, 0.0, samples=10 ** 6, bins=50)
    assert rep.parameters["kept_bins"] > 30
    assert rep.discrepancy < 1e-2


def test_lorentzian_identity_single_and_double(cfg):
    r1 = lorentzian_identity_check([1.1], 0.4, cfg, cutoff=1e3)
    assert r1.discrepancy < 1e-4
    r2 = lorentzian_identity_check([1.1, -2.0], 0.4, cfg, cutoff=1e3)
    assert r2.discrepancy < 1e-3


def test_lorentzian_identity_cutoff_dependence(cfg):
    errs = [lorentzian_identity_check([1.1, -2.0], 0.4, cfg, cutoff=c).discrepancy
            for c in (1e1, 1e2, 1e3)]
    assert errs[0] > errs[1] > errs[2]


def test_lorentzian_identity_degenerate_pair(cfg):
    p = 1.7
    disp = dispersion(cfg)
    g, d = float(disp.gamma(p)), float(disp.delta(p))
    rep = lorentzian_identity_check([p, p], 2 * d, cfg)
    assert rep.reference == pytest.approx(1 / g, rel=1e-14)


def test_lorentzian_identity_rejects_dark(cfg, q_gold):
    with pytest.raises(ValueError):
        lorentzian_identity_check([q_gold], 0.0, cfg)


def test_report_serialization_and_determinism(cfg):
    def reports():
        return [check_dos(cfg, 0.0, samples=10 ** 6, bins=20)[0],
                check_propagator(cfg, 0.3 + 1j, 0.0, grid=1024),
                lorentzian_identity_check([1.1, -2.0], 0.4, cfg)]
    a, b = reports(), reports()
    assert [r.to_json() for r in a] == [r.to_json() for r in b]
    for r in a:
        d = json.loads(r.to_json())
        assert set(d) >= {"quantity", "reference", "oracle", "discrepancy", "parameters", "passed"}


def test_report_discrepancy_as_computed():
    r = OracleReport("x", 2.0, 2.5, 0.25, {}, True, 0.1)
    assert not r.passed and r.discrepancy == 0.25
