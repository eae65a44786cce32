"""Brute-force validators for the closed forms and adaptive integrals.

Each oracle uses a method that shares no code path with the quantity it
checks: real-space lattice sums for the dispersion, uniform Riemann sums for
the propagator, a histogram of pair energies for the density of states, and
direct energy convolutions for the Lorentzian identities. Everything is
deterministic.
"""
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .lattice import K0, Polarization, dispersion, is_bright
from .propagator import (_line_1d, critical_energies, dark_pair_dos, domain_of,
                         local_propagator, pair_delta, pair_epsilon)
from .quadrature import KRONROD, NODES, gauss_kronrod


def _jsonable(x):
    if isinstance(x, complex) or np.iscomplexobj(x):
        x = complex(x)
        return {"re": x.real, "im": x.imag}
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    return x


@dataclass
class OracleReport:
    """Reference value, oracle value and their discrepancy.

    ``discrepancy`` is ``|reference - oracle|`` (relative when ``relative`` is
    set), stored exactly as computed.
    """
    quantity: str
    reference: object
    oracle: object
    discrepancy: float
    parameters: dict = field(default_factory=dict)
    relative: bool = True
    tolerance: float = None

    @property
    def passed(self):
        return self.tolerance is None or self.discrepancy < self.tolerance

    def to_dict(self):
        d = _jsonable(asdict(self))
        d["passed"] = self.passed
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _report(name, ref, val, params, relative=True, tol=None):
    diff = abs(ref - val)
    if relative:
        diff = diff / abs(ref) if ref != 0 else diff
    return OracleReport(name, ref, val, float(diff), params, relative, tol)


# dispersion -----------------------------------------------------------------------
def _kernel(x, proj):
    """Dipole kernel ``-(3 pi / k) e.G.e`` at ``x = k r`` with ``proj = |e.r_hat|^2``."""
    return -0.75 * np.exp(1j * x) / x ** 3 * ((x * x + 1j * x - 1) + (3 - 3j * x - x * x) * proj)


def _tail_1d(z, f0, f1):
    # z^-M sum_{j >= M} z^j f(j) after two steps of summation by parts
    return (f0 + z / (1 - z) * (f1 - f0)) / (1 - z)


def dispersion_direct_sum(p, cfg, N=10 ** 6):
    """Complex dispersion from a truncated real-space sum over ``N`` sites.

    In 1D the sum runs over ``|j| <= N/2`` and the remainder is estimated
    analytically; in 2D it runs over the ``sqrt(N) x sqrt(N)`` square of
    sites without a tail (slowly convergent, for rough checks only).

    Returns
    -------
    value : complex
        ``eps(p) = delta(p) - i gamma(p) / 2``.
    tail : float
        Magnitude of the 1D tail estimate (0 in 2D).
    """
    d = cfg.spacing
    x0 = K0 * d
    if cfg.dim == 1:
        J = N // 2
        proj = 1.0 if cfg.polarization is Polarization.PARALLEL else 0.0
        j = np.arange(1, J + 1, dtype=float)
        kern = _kernel(j * x0, proj)
        total = -0.5j + 2 * np.sum(kern * np.cos(float(p) * d * j))
        tail = 0j
        for sgn in (1.0, -1.0):
            z = np.exp(1j * (x0 + sgn * float(p) * d))
            # kernel without its phase, at j = J + 1, J + 2
            f = [_kernel(m * x0, proj) * np.exp(-1j * m * x0) for m in (J + 1, J + 2)]
            tail += z ** (J + 1) * _tail_1d(z, f[0], f[1])
        return complex(total + tail), float(abs(tail))
    n = int(round(np.sqrt(N)))
    m = np.arange(-(n // 2), n - n // 2)
    mx, my = np.meshgrid(m, m, indexing="ij")
    keep = (mx != 0) | (my != 0)
    rx, ry = d * mx[keep], d * my[keep]
    r = np.hypot(rx, ry)
    pol = cfg.polarization
    if pol is Polarization.PERPENDICULAR:
        proj = 0.0
    elif pol is Polarization.PARALLEL:
        proj = (rx / r) ** 2
    else:
        proj = 0.5
    p = np.asarray(p, dtype=float)
    total = -0.5j + np.sum(_kernel(K0 * r, proj) * np.exp(1j * (p[0] * rx + p[1] * ry)))
    return complex(total), 0.0


def check_dispersion(cfg, ps, N=10 ** 6, tol=1e-6):
    """Closed-form dispersion against :func:`dispersion_direct_sum` at each ``p``."""
    disp = dispersion(cfg)
    out = []
    for p in ps:
        ref = complex(disp.epsilon(p))
        val, tail = dispersion_direct_sum(p, cfg, N)
        out.append(_report("dispersion", ref, val, {"p": p, "N": N, "tail": tail}, tol=tol))
    return out


# propagator -------------------------------------------------------------------------
def propagator_riemann(omega, P, cfg, grid=4096):
    """Midpoint-rule estimate of ``L(omega, P)`` on a uniform grid of the reduced zone.

    ``grid`` points in 1D; ``grid x grid/2`` in 2D. Only meaningful off the
    real axis.
    """
    omega = complex(omega)
    if omega.imag == 0:
        raise ValueError("Riemann sums need Im omega != 0")
    b = cfg.zone_edge
    if cfg.dim == 1:
        h = b / grid
        q = (np.arange(grid) + 0.5) * h
        return complex(h * np.sum(1.0 / (omega - pair_epsilon(cfg, P, q))))
    h = 2 * b / grid
    ax = -b + (np.arange(grid) + 0.5) * h
    ay = (np.arange(grid // 2) + 0.5) * h
    tot = 0j
    for x in ax:
        q = np.stack([np.full_like(ay, x), ay], axis=-1)
        tot += np.sum(1.0 / (omega - pair_epsilon(cfg, P, q)))
    return complex(h * h * tot)


def check_propagator(cfg, omega, P, grid=4096, tol=1e-4):
    ref = local_propagator(cfg, omega, P).L
    val = propagator_riemann(omega, P, cfg, grid)
    return _report("local_propagator", complex(ref), val,
                   {"omega": complex(omega), "P": P, "grid": grid}, tol=tol)


def eta_extrapolation(cfg, E, P, etas=(1.0, 0.3, 0.1, 0.03), grid=4096):
    """Riemann ``L(E + i eta)`` for decreasing ``eta`` and a linear extrapolation to ``eta = 0``.

    Returns
    -------
    dict with ``eta``, ``L`` and the extrapolated value from the two smallest ``eta``.
    """
    vals = [propagator_riemann(E + 1j * e, P, cfg, grid) for e in etas]
    e1, e2 = etas[-2], etas[-1]
    extra = vals[-1] + (vals[-1] - vals[-2]) * (0 - e2) / (e2 - e1)
    return {"eta": list(etas), "L": vals, "extrapolated": complex(extra)}


# density of states ------------------------------------------------------------------
def dos_histogram(P, cfg, samples=10 ** 7, bins=200, energy_range=None):
    """Histogram of ``delta2(P, q)`` over a uniform grid of dark ``q``.

    The grid has ``samples`` midpoints on the reduced zone (a square grid in
    2D); counts are scaled by the cell measure and the bin width, so the
    histogram integrates to the dark-domain measure.

    Returns
    -------
    dict with ``edges``, ``density``, ``measure`` (dark-domain volume).
    """
    b = cfg.zone_edge
    chunks = []
    if cfg.dim == 1:
        h = b / samples
        cell = h
        for start in range(0, samples, 1 << 20):
            q = (np.arange(start, min(samples, start + (1 << 20))) + 0.5) * h
            e = pair_delta(cfg, P, q)
            chunks.append(e[domain_of(P, q, cfg) == 0])
    else:
        n = int(round(np.sqrt(2 * samples)))
        h = 2 * b / n
        cell = h * h
        ax = -b + (np.arange(n) + 0.5) * h
        ay = (np.arange(n // 2) + 0.5) * h
        for x in ax:
            q = np.stack([np.full_like(ay, x), ay], axis=-1)
            e = pair_delta(cfg, P, q)
            chunks.append(e[domain_of(P, q, cfg) == 0])
    e = np.concatenate(chunks)
    e = e[np.isfinite(e)]
    if energy_range is None:
        energy_range = (float(e.min()), float(e.max()))
    counts, edges = np.histogram(e, bins=bins, range=energy_range)
    density = counts * cell / np.diff(edges)
    return {"edges": edges, "density": density, "measure": float(e.size * cell)}


def _special_energies(cfg, P):
    # energies where the 1D density has edges or van Hove peaks
    out = [e for e, _ in critical_energies(cfg, P)]
    if cfg.dim == 1:
        line = _line_1d(cfg, P)
        for a, c in line.pieces:
            span = c - a
            out += pair_delta(cfg, P, np.array([a + 1e-9 * span, c - 1e-9 * span])).tolist()
    return [e for e in out if np.isfinite(e)]


def check_dos(cfg, P, samples=10 ** 7, bins=200, energy_range=None, tol=1e-2, guard=1):
    """Histogram against bin averages of :func:`dark_pair_dos`.

    Bins within ``guard`` bins of a band edge or critical energy are skipped.
    The report's discrepancy is the worst relative deviation over the kept bins.
    """
    hist = dos_histogram(P, cfg, samples, bins, energy_range)
    edges = hist["edges"]
    special = _special_energies(cfg, P)
    width = edges[1] - edges[0]
    worst, kept, ref_at, val_at = 0.0, 0, None, None
    for i in range(len(edges) - 1):
        lo, hi = edges[i], edges[i + 1]
        if any(lo - guard * width <= e <= hi + guard * width for e in special):
            continue
        es = 0.5 * (lo + hi) + 0.5 * width * NODES
        avg = 0.5 * np.sum(KRONROD * [dark_pair_dos(cfg, e, P, warn=False) for e in es])
        if avg <= 0:
            continue
        kept += 1
        dev = abs(hist["density"][i] - avg) / avg
        if dev >= worst:
            worst, ref_at, val_at = dev, avg, hist["density"][i]
    rep = OracleReport("dark_pair_dos", ref_at, val_at, float(worst),
                       {"P": P, "samples": samples, "bins": bins, "kept_bins": kept}, True, tol)
    return rep, hist


# Lorentzian identities ---------------------------------------------------------------
def _lorentz(p, x, cfg):
    # |a~_p(x)|^2 = (gamma/2pi) / |x - eps|^2, a unit-area Lorentzian
    eps = complex(dispersion(cfg).epsilon(p))
    return -eps.imag / np.pi / np.abs(x - eps) ** 2


def lorentzian_identity_check(p_list, E, cfg, cutoff=1e3, tol=None):
    """Energy convolution of bright-mode Lorentzians against its closed form.

    ``pi * int prod_j |a~_{p_j}(E_j)|^2 delta(E - sum E_j)`` over photon
    energies restricted to ``[-cutoff, cutoff]``, compared with
    ``-Im 1/(E - sum_j eps(p_j))``. One or two momenta.

    Returns
    -------
    OracleReport
    """
    ps = list(p_list)
    if not all(bool(is_bright(p, cfg)) for p in ps):
        raise ValueError("lorentzian_identity_check needs bright momenta")
    eps = [complex(dispersion(cfg).epsilon(p)) for p in ps]
    ref = float(-np.imag(1.0 / (E - sum(eps))))
    if len(ps) == 1:
        val = float(np.pi * _lorentz(ps[0], E, cfg)) if abs(E) <= cutoff else 0.0
    elif len(ps) == 2:
        peaks = sorted(x for x in (eps[0].real, E - eps[1].real) if -cutoff < x < cutoff)
        res = gauss_kronrod(lambda x: _lorentz(ps[0], x, cfg) * _lorentz(ps[1], E - x, cfg),
                            [-cutoff, *peaks, cutoff], rtol=1e-12, atol=1e-16)
        val = float(np.pi * res.value)
    else:
        raise ValueError("one or two momenta")
    return _report("lorentzian_convolution", ref, val,
                   {"p": ps, "E": E, "cutoff": cutoff}, tol=tol)


def run_suite(cfg, seed=0, n_dispersion=100, N=10 ** 6, samples=10 ** 7, bins=200):
    """The standard oracle reports for one array configuration (1D)."""
    rng = np.random.default_rng(seed)
    b = cfg.zone_edge
    reports = check_dispersion(cfg, rng.uniform(-b, b, n_dispersion), N)
    P = 0.0
    for E in rng.uniform(-2.0, 3.0, 3):
        reports.append(check_propagator(cfg, E + 1j, P))
    reports.append(check_dos(cfg, P, samples, bins)[0])
    for _ in range(3):
        p1, p2 = rng.uniform(-0.9 * K0, 0.9 * K0, 2)
        E = float(np.real(pair_epsilon(cfg, 0.0, 0.0))) + rng.uniform(-1, 1)
        reports.append(lorentzian_identity_check([p1], E, cfg, tol=1e-4))
        reports.append(lorentzian_identity_check([p1, p2], E, cfg, tol=1e-3))
    return reports


__all__ = ["OracleReport", "dispersion_direct_sum", "check_dispersion", "propagator_riemann",
           "check_propagator", "eta_extrapolation", "dos_histogram", "check_dos",
           "lorentzian_identity_check", "run_suite"]
