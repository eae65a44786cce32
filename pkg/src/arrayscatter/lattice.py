"""Array geometry, light-cone classification and the spin-wave dispersion.

Units: energies in the single-atom decay rate (``gamma0 = 1``), lengths in the
resonant wavelength (``lambda0 = 1``), so the resonant wavenumber is
``k0 = 2*pi``. Momenta are plain floats in 1D and arrays of shape ``(..., 2)``
in 2D.
"""
import csv
import enum
import functools
import io
from dataclasses import dataclass

import numpy as np

from . import _clausen as cl
from ._ewald import EwaldSum
from .errors import ConfigError, DarkMomentum

K0 = 2 * np.pi
GAMMA0 = 1.0


class Dimension(enum.Enum):
    ONE_D = 1
    TWO_D_SQUARE = 2


class Polarization(enum.Enum):
    """Dipole orientation.

    ``PARALLEL`` points along the chain (1D) or along the x lattice axis (2D).
    ``PERPENDICULAR`` is transverse to the chain (1D) or normal to the plane (2D).
    ``CIRCULAR`` is circular in the lattice plane (2D only).
    """
    PARALLEL = "parallel"
    PERPENDICULAR = "perpendicular"
    CIRCULAR = "circular"


class Classification(enum.Enum):
    DARK = "dark"
    BRIGHT = "bright"


@dataclass(frozen=True)
class ArrayConfig:
    """Immutable description of an infinite atomic array.

    Parameters
    ----------
    dimension : Dimension or int
    spacing : float
        Lattice constant ``d`` in units of the resonant wavelength, ``0 < d < 0.5``.
    polarization : Polarization or str
    quality_factor : float
        ``omega_eg / gamma0``; fixes the speed of light ``c = Q/(2 pi)`` in
        internal units. Only photon-input cross sections depend on it.
    sum_tol : float
        Relative truncation tolerance of the 2D lattice sum.
    """
    dimension: Dimension = Dimension.ONE_D
    spacing: float = 0.25
    polarization: Polarization = Polarization.PARALLEL
    quality_factor: float = 1e6
    sum_tol: float = 1e-8

    def __post_init__(self):
        try:
            object.__setattr__(self, "dimension", Dimension(self.dimension))
            object.__setattr__(self, "polarization", Polarization(self.polarization))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        d = float(self.spacing)
        object.__setattr__(self, "spacing", d)
        if not 0 < d < 0.5:
            raise ConfigError(f"spacing must satisfy 0 < d < 0.5 wavelengths, got {d}")
        if self.dimension is Dimension.ONE_D and self.polarization is Polarization.CIRCULAR:
            raise ConfigError("circular polarization is only available for the square lattice")
        if not self.quality_factor > 0:
            raise ConfigError("quality_factor must be positive")
        if not self.sum_tol > 0:
            raise ConfigError("sum_tol must be positive")

    @property
    def dim(self):
        return self.dimension.value

    @property
    def k0(self):
        return K0

    @property
    def gamma0(self):
        return GAMMA0

    @property
    def zone_edge(self):
        """``pi/d``, half-width of the Brillouin zone."""
        return np.pi / self.spacing

    @property
    def c(self):
        """Speed of light in units of ``gamma0 * lambda0``."""
        return self.quality_factor / (2 * np.pi)

    def as_dict(self):
        return {
            "dimension": self.dim,
            "spacing": self.spacing,
            "polarization": self.polarization.value,
            "quality_factor": self.quality_factor,
            "sum_tol": self.sum_tol,
        }


def wrap_momentum(p, cfg):
    """Map momenta into the first Brillouin zone ``[-pi/d, pi/d)``."""
    b = cfg.zone_edge
    return (np.asarray(p, dtype=float) + b) % (2 * b) - b


def momentum_norm(p, cfg):
    p = np.asarray(p, dtype=float)
    if cfg.dim == 1:
        return np.abs(p)
    return np.hypot(p[..., 0], p[..., 1])


def is_bright(p, cfg):
    """Vectorized light-cone test on wrapped momenta; the boundary counts as bright."""
    return momentum_norm(wrap_momentum(p, cfg), cfg) <= K0


def classify_momentum(p, cfg):
    """Classify a single momentum as dark or bright.

    >>> classify_momentum(0.0, ArrayConfig())
    <Classification.BRIGHT: 'bright'>
    """
    return Classification.BRIGHT if bool(is_bright(p, cfg)) else Classification.DARK


class Dispersion:
    """Complex spin-wave energy ``eps(p) = delta(p) - i gamma(p)/2``.

    In 1D the lattice sum is done in closed form through Clausen functions;
    in 2D the frequency shift comes from an Ewald sum and the decay rate from
    the radiated-power expression inside the light cone.
    """

    def __init__(self, cfg):
        self.cfg = cfg
        self._ewald = None
        # absolute rounding level of delta(p), used to guard near-singular quotients
        self.noise = 2e-15
        if cfg.dim == 2:
            self._ewald = EwaldSum(cfg.spacing, cfg.polarization.value, cfg.sum_tol)

    # 1D closed forms -------------------------------------------------------
    def _angles(self, p):
        x = K0 * self.cfg.spacing
        pd = np.asarray(p, dtype=float) * self.cfg.spacing
        return x, x + pd, x - pd

    def _delta_1d(self, p):
        x, tp, tm = self._angles(p)
        if self.cfg.polarization is Polarization.PARALLEL:
            s = cl.cl3(tp) + cl.cl3(tm) + x * (cl.cl2(tp) + cl.cl2(tm))
            return -1.5 / x ** 3 * s
        s = ((cl.log_2sin(tp) + cl.log_2sin(tm)) / x
             + (cl.cl2(tp) + cl.cl2(tm)) / x ** 2
             + (cl.cl3(tp) + cl.cl3(tm)) / x ** 3)
        return 0.75 * s

    def _gamma_1d(self, p):
        x, tp, tm = self._angles(p)
        if self.cfg.polarization is Polarization.PARALLEL:
            s = cl.sl3(tp) + cl.sl3(tm) - x * (cl.sl2(tp) + cl.sl2(tm))
            g = 1 + 3 / x ** 3 * s
        else:
            s = ((cl.li1_imag(tp) + cl.li1_imag(tm)) / x
                 + (cl.sl2(tp) + cl.sl2(tm)) / x ** 2
                 - (cl.sl3(tp) + cl.sl3(tm)) / x ** 3)
            g = 1 + 1.5 * s
        return g

    def _grad_1d(self, p):
        x, tp, tm = self._angles(p)
        d = self.cfg.spacing
        if self.cfg.polarization is Polarization.PARALLEL:
            def f(t):
                return 1.5 / x ** 3 * (cl.cl2(t) + x * cl.log_2sin(t))
        else:
            def f(t):
                with np.errstate(divide="ignore"):
                    cot = 1 / np.tan(0.5 * t)
                return 0.75 * (0.5 * cot / x - cl.log_2sin(t) / x ** 2 - cl.cl2(t) / x ** 3)
        return d * (f(tp) - f(tm))

    # 2D --------------------------------------------------------------------
    def _gamma_2d(self, p):
        n2 = np.einsum("...i,...i->...", p, p)
        kz = np.sqrt(np.clip(K0 * K0 - n2, 0, None))
        pol = self.cfg.polarization
        if pol is Polarization.PARALLEL:
            num = K0 * K0 - p[..., 0] ** 2
        elif pol is Polarization.CIRCULAR:
            num = K0 * K0 - 0.5 * n2
        else:
            num = n2
        d2 = self.cfg.spacing ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            g = 3 * np.pi * num / (K0 ** 3 * d2 * kz)
        return g

    # public ----------------------------------------------------------------
    def delta(self, p):
        """Collective frequency shift ``delta(p)`` in units of ``gamma0``."""
        p = wrap_momentum(p, self.cfg)
        if self.cfg.dim == 1:
            return self._delta_1d(p)
        return -1.5 * np.real(self._ewald(p))

    def gamma(self, p):
        """Collective decay rate, exactly zero outside the light cone."""
        p = wrap_momentum(p, self.cfg)
        bright = momentum_norm(p, self.cfg) <= K0
        g = self._gamma_1d(p) if self.cfg.dim == 1 else self._gamma_2d(p)
        return np.where(bright, g, 0.0)

    def epsilon(self, p):
        return self.delta(p) - 0.5j * self.gamma(p)

    def grad_delta(self, p):
        """Momentum derivative of ``delta``; shape ``(...)`` in 1D, ``(..., 2)`` in 2D."""
        p = wrap_momentum(p, self.cfg)
        if self.cfg.dim == 1:
            return self._grad_1d(p)
        _, g = self._ewald(p, grad=True)
        return -1.5 * np.real(g)

    def light_cone_behavior(self, steps=8, growth=10.0):
        """Probe ``gamma`` and ``delta`` on approach to the light-cone edge.

        Evaluates along ``|p| = k0 (1 - 10^-j)`` for ``j = 2..steps+1`` in every
        lattice direction available (x and y in 2D) and reports whether the
        magnitude grew by more than ``growth`` over the probe.

        Returns
        -------
        dict
            ``{"gamma": "divergent" | "finite", "delta": ...}`` plus the probe values.
        """
        eps = 10.0 ** -np.arange(2, steps + 2)
        dirs = [np.array([1.0])] if self.cfg.dim == 1 else [np.array([1.0, 0.0]),
                                                             np.array([0.0, 1.0])]
        report = {"gamma": "finite", "delta": "finite", "probe": []}
        for u in dirs:
            pts = (K0 * (1 - eps))[:, None] * u[None, :]
            if self.cfg.dim == 1:
                pts = pts[:, 0]
            dl = np.abs(self.delta(pts))
            gm = np.abs(self.gamma(pts))
            report["probe"].append({"direction": u.tolist(), "offset": eps.tolist(),
                                    "gamma": gm.tolist(), "delta": dl.tolist()})
            if gm[-1] > growth * max(gm[0], 1e-300):
                report["gamma"] = "divergent"
            if dl[-1] > growth * max(dl[0], 1e-300):
                report["delta"] = "divergent"
        return report


@functools.lru_cache(maxsize=32)
def dispersion(cfg):
    """Build (and memoize) the dispersion for an array configuration."""
    return Dispersion(cfg)


def coupling_g(p, cfg, chi=None):
    """Photon coupling ``sqrt(gamma(p) v / (2 pi))`` of a bright momentum.

    Parameters
    ----------
    p : float or array_like
        Bright lattice momentum.
    cfg : ArrayConfig
    chi : float, optional
        Transverse photon wavenumber. Defaults to the on-shell value at the
        atomic resonance, ``sqrt(k0^2 - |p|^2)``.
    """
    if classify_momentum(p, cfg) is Classification.DARK:
        raise DarkMomentum(f"momentum {p} lies outside the light cone")
    pn = float(momentum_norm(wrap_momentum(p, cfg), cfg))
    if chi is None:
        chi = np.sqrt(max(K0 * K0 - pn * pn, 0.0))
    v = cfg.c * chi / np.hypot(pn, chi) if chi > 0 else 0.0
    g = float(dispersion(cfg).gamma(p))
    return np.sqrt(g * v / (2 * np.pi))


def dispersion_table(cfg, n):
    """Dispersion on a uniform grid of ``n`` points (``n x n`` in 2D) across the zone.

    Returns
    -------
    dict of ndarray
        Columns ``p`` (or ``px``, ``py``), ``delta``, ``gamma``, ``bright``.
    """
    b = cfg.zone_edge
    axis = -b + (np.arange(n) + 0.5) * (2 * b / n) if n > 1 else np.zeros(1)
    disp = dispersion(cfg)
    if cfg.dim == 1:
        p = axis
        cols = {"p": p}
    else:
        px, py = np.meshgrid(axis, axis, indexing="ij")
        p = np.stack([px.ravel(), py.ravel()], axis=-1)
        cols = {"px": p[:, 0], "py": p[:, 1]}
    cols["delta"] = disp.delta(p)
    cols["gamma"] = disp.gamma(p)
    cols["bright"] = is_bright(p, cfg)
    return cols


def export_dispersion_csv(cfg, n, out=None):
    """Write :func:`dispersion_table` as CSV; returns the text if ``out`` is None."""
    cols = dispersion_table(cfg, n)
    buf = io.StringIO() if out is None else out
    w = csv.writer(buf, lineterminator="\n")
    names = [k for k in cols if k != "bright"] + ["classification"]
    w.writerow(names)
    rows = zip(*(cols[k] for k in cols))
    for row in rows:
        *vals, bright = row
        w.writerow([repr(float(v)) for v in vals] + ["bright" if bright else "dark"])
    if out is None:
        return buf.getvalue()
