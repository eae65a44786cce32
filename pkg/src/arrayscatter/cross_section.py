"""Two-excitation scattering cross sections and nonlinear beam survival.

For an incoming pair in channel ``alpha`` the partial cross section into
channel ``beta`` is

    sigma_ab = 4 pi |a|^2 / v_g * int_{D_b} dq' Im[-1/(E + i0 - eps2(q'))] |T(q, q')|^2,

which for the hard-core T-matrix reduces to ``4 pi |a|^2 / v_g * pi rho_b / |L|^2``.
``|a|^2`` is the product of ``|a_p(E_j)|^2`` over the incoming photons (one
for a purely dark pair).

Cross sections carry a unit tag: with lengths in ``lambda0`` they scale as
``lambda0 ** (dim - 1 + alpha)``, so a 1D dark pair gives a pure number.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, CriticalEnergyProximity, NonPhysicalFlux
from .lattice import K0, dispersion, is_bright, wrap_momentum
from .propagator import Side, _as_P, _line_1d, local_propagator, pair_delta, pair_epsilon
from .quadrature import gauss_kronrod
from .single_excitation import atomic_amplitude, transmission
from .two_excitation import TMatrixContact

FD_STEP = 1e-6
VELOCITY_FLOOR = 1e-6


@dataclass(frozen=True)
class IncomingConfig:
    """Incoming two-excitation state.

    Parameters
    ----------
    cfg : ArrayConfig
    channel : int
        Number of photons ``alpha`` in the incoming pair.
    p1, p2 : float or array_like
        Lattice momenta; for ``alpha = 1`` exactly one must be bright.
    energies : tuple of float
        Photon energies, one per bright momentum, in the order the bright
        momenta appear.
    """
    cfg: object
    channel: int
    p1: object
    p2: object
    energies: tuple = ()

    def __post_init__(self):
        cfg = self.cfg
        object.__setattr__(self, "p1", _as_P(self.p1, cfg))
        object.__setattr__(self, "p2", _as_P(self.p2, cfg))
        object.__setattr__(self, "energies", tuple(float(e) for e in self.energies))
        if self.channel not in (0, 1, 2):
            raise ConfigError(f"channel must be 0, 1 or 2, got {self.channel}")
        nb = int(is_bright(self.p1, cfg)) + int(is_bright(self.p2, cfg))
        if nb != self.channel:
            raise ConfigError(f"momenta have {nb} bright constituents, channel is {self.channel}")
        if len(self.energies) != self.channel:
            raise ConfigError(f"channel {self.channel} needs {self.channel} photon energies")

    @property
    def P(self):
        return wrap_momentum(self.p1 + self.p2, self.cfg)

    @property
    def q(self):
        """Relative momentum with ``p1 = P/2 + q`` and ``p2 = P/2 - q`` (mod reciprocal vectors).

        Taken as ``p1 - P/2`` with the wrapped ``P``: ``(p1 - p2)/2`` is off by
        half a reciprocal vector whenever ``p1 + p2`` leaves the zone.
        """
        return self.p1 - 0.5 * self.P

    @property
    def bright(self):
        """Bright momenta, in order."""
        return [p for p in (self.p1, self.p2) if is_bright(p, self.cfg)]

    @property
    def E(self):
        """Total energy: photon energies plus the dark constituents' shifts."""
        disp = dispersion(self.cfg)
        dark = [p for p in (self.p1, self.p2) if not is_bright(p, self.cfg)]
        return float(sum(self.energies) + sum(float(disp.delta(p)) for p in dark))


@dataclass(frozen=True)
class CrossSectionSet:
    """Partial cross sections by output channel plus their total.

    ``partial[beta]`` is ``None`` for a closed output channel. ``units`` is a
    power of ``lambda0`` (or ``"dimensionless"``).
    """
    partial: dict
    total: float
    units: str
    velocity: float
    near_critical: bool = False
    extras: dict = field(default_factory=dict)


def units_tag(cfg, alpha):
    n = cfg.dim - 1 + alpha
    return "dimensionless" if n == 0 else f"lambda0^{n}"


def group_velocity(inc, floor=VELOCITY_FLOOR):
    """Relative group velocity of the incoming pair.

    ``alpha = 0``: ``|grad_q delta2(P, q)|`` by central differences with step
    ``FD_STEP``; ``alpha = 1``: ``c``; ``alpha = 2``:
    ``c sqrt(2) sqrt(1 - p1.p2 / k0^2)``.

    Warns
    -----
    CriticalEnergyProximity
        If a dark-pair velocity falls below ``floor``.
    """
    cfg = inc.cfg
    if inc.channel == 1:
        return cfg.c
    if inc.channel == 2:
        dot = float(np.dot(np.atleast_1d(inc.p1), np.atleast_1d(inc.p2)))
        return cfg.c * np.sqrt(2.0) * np.sqrt(max(1.0 - dot / K0 ** 2, 0.0))
    P, q = inc.P, np.atleast_1d(inc.q)
    grad = []
    for k in range(cfg.dim):
        e = np.zeros(cfg.dim)
        e[k] = FD_STEP
        qp, qm = (q + e, q - e) if cfg.dim == 2 else ((q + e)[0], (q - e)[0])
        grad.append((pair_delta(cfg, P, qp) - pair_delta(cfg, P, qm)) / (2 * FD_STEP))
    v = float(np.linalg.norm(grad))
    if v < floor:
        warnings.warn(f"dark-pair group velocity {v:.3g} below floor; cross section diverges",
                      CriticalEnergyProximity, stacklevel=2)
    return v


def amplitude_weight(inc):
    """``|a(k)|^2``: product of ``|a_p(E)|^2`` over the incoming photons."""
    w = 1.0
    for p, e in zip(inc.bright, inc.energies):
        w *= abs(atomic_amplitude(p, e, inc.cfg)) ** 2
    return w


def _propagator(inc, rtol):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CriticalEnergyProximity)
        return local_propagator(inc.cfg, inc.E, inc.P, side=Side.ABOVE, rtol=rtol)


def cross_sections(inc, tmatrix=None, rtol=None):
    """All partial cross sections and the total for an incoming pair.

    Parameters
    ----------
    inc : IncomingConfig
    tmatrix : TMatrixContact or TMatrixGeneral, optional
        Without it the hard-core closed form is used. With it the general
        expression is integrated over each output domain (1D only), using the
        T-matrix evaluated at the incoming ``q``.
    rtol : float, optional

    Returns
    -------
    CrossSectionSet
    """
    cfg = inc.cfg
    dec = _propagator(inc, rtol)
    v = group_velocity(inc)
    # a vanishing velocity is the physical critical-point divergence: report inf, flagged
    pre = 4 * np.pi * amplitude_weight(inc) / v if v > 0 else np.inf
    flagged = dec.near_critical or v < VELOCITY_FLOOR
    partial = {}
    if tmatrix is None:
        L2 = abs(dec.L) ** 2
        for b in range(3):
            partial[b] = float(pre * np.pi * dec.rho[b] / L2) if dec.rho[b] > 0 else None
        total = pre * abs(dec.L.imag) / L2
    else:
        if cfg.dim != 1:
            raise NotImplementedError("the general-potential path is implemented for 1D arrays")
        integrals = _general_integrals(inc, tmatrix, dec, rtol or 1e-8)
        for b in range(3):
            partial[b] = float(pre * integrals[b]) if dec.rho[b] > 0 else None
        total = sum(x for x in partial.values() if x is not None)
    return CrossSectionSet(partial, float(total), units_tag(cfg, inc.channel), v, flagged)


def _general_integrals(inc, tmatrix, dec, rtol):
    # int_{D_b} Im[-1/(E + i0 - eps2)] |T(q, q')|^2 dq' for b = 0, 1, 2
    cfg, E, P = inc.cfg, inc.E, inc.P
    q = float(np.atleast_1d(inc.q)[0])

    def T(qp):
        if isinstance(tmatrix, TMatrixContact):
            return np.full(np.shape(qp), tmatrix.value)
        return np.asarray(tmatrix(q, qp)).reshape(np.shape(qp))

    line = _line_1d(cfg, P)
    out = [0.0, 0.0, 0.0]
    for r, _, _ in line.roots(E):
        s = abs(float(line.slope(np.array([r]))[0]))
        out[0] += np.pi * abs(complex(T(np.array([r]))[0])) ** 2 / s
    for a, b, al in line.segments:
        if al == 0:
            continue

        def f(t):
            return -np.imag(1.0 / (E - pair_epsilon(cfg, P, t))) * np.abs(T(t)) ** 2

        out[al] += gauss_kronrod(f, [a, b], rtol=rtol, atol=1e-15).value
    return out


def partial_cross_section(inc, beta, tmatrix=None, rtol=None):
    """``sigma_{alpha, beta}``; ``None`` when channel ``beta`` is closed."""
    return cross_sections(inc, tmatrix, rtol).partial[beta]


def total_cross_section(inc, rtol=None):
    """``4 pi |a|^2 / v_g * |Im L| / |L|^2`` (hard-core interaction)."""
    dec = _propagator(inc, rtol)
    v = group_velocity(inc)
    pre = 4 * np.pi * amplitude_weight(inc) / v if v > 0 else np.inf
    return float(pre * abs(dec.L.imag) / abs(dec.L) ** 2)


@dataclass(frozen=True)
class BeamSurvival:
    """Nonlinear survival of a weak coherent beam, truncated at two photons."""
    survival: float
    transmitted: float
    reflected: float


def beam_survival(R, sigma2_tot, t=1.0):
    """Probability that a beam photon avoids two-photon scattering.

    Parameters
    ----------
    R : float
        Incident photon flux per unit area and time.
    sigma2_tot : float
        Two-photon total cross section.
    t : complex
        Single-photon transmission amplitude of the array for one-sided
        incidence; the mirror is lossless, so ``|r|^2 = 1 - |t|^2``.

    Raises
    ------
    NonPhysicalFlux
        If ``1 - sigma2_tot * R < 0``.
    """
    if R < 0:
        raise ValueError("flux must be non-negative")
    pr = 1.0 - sigma2_tot * R
    if pr < 0:
        raise NonPhysicalFlux(f"survival {pr} < 0: flux outside the perturbative regime", pr)
    t2 = abs(t) ** 2
    return BeamSurvival(pr, R * t2 * pr, R * (1 - t2) * pr)


def one_sided_transmission(p, E, cfg):
    """Transmission amplitude for a photon incident from one side: ``(1 + t_p(E)) / 2``."""
    return 0.5 * (1 + transmission(p, E, cfg))


def dark_pair(cfg, p1, p2):
    """Convenience constructor for an ``alpha = 0`` incoming pair."""
    return IncomingConfig(cfg, 0, p1, p2)


__all__ = ["IncomingConfig", "CrossSectionSet", "BeamSurvival", "group_velocity",
           "amplitude_weight", "cross_sections", "partial_cross_section", "total_cross_section",
           "beam_survival", "one_sided_transmission", "dark_pair", "units_tag"]
