"""Two-excitation scattering: T-matrices, the on-shell channel S-matrix and doorway states.

Pair states are labelled by total momentum ``P`` and relative momentum ``q``
on the reduced zone (see :mod:`arrayscatter.propagator`). Photon-carrying
states are energy-normalized: a photon of momentum ``p`` and energy ``E``
enters through the rescaled amplitude ``sqrt(gamma(p)/2pi) / (E - eps(p))``,
whose square is a unit-area Lorentzian in ``E``.

Channel ``alpha`` counts the bright constituents. A channel with no states
(``rho_alpha = 0``) is closed; its row and column of ``s`` are NaN.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import (ClosedChannel, CriticalEnergyProximity, OffShellSeed, OutsideD2,
                     PropagatorZero, SingularKernel)
from .lattice import dispersion, is_bright
from .propagator import (DEFAULT_RTOL, Side, _as_P, _Line, _line_1d, domain_of, level_set, local_propagator,
                         pair_delta, pair_epsilon, pair_gradient, pair_momenta)
from .quadrature import NODES, KRONROD, gauss_kronrod

_ZERO_L = 1e-12


# contact T-matrix ----------------------------------------------------------------
@dataclass(frozen=True)
class TMatrixContact:
    """Momentum-independent hard-core T-matrix ``-1/L(omega, P)``.

    Attributes
    ----------
    value : complex
    propagator : PropagatorDecomposition
    near_critical : bool
        Set when the energy is inside the critical window; ``value`` is then
        close to zero because ``L`` diverges.
    """
    omega: complex
    P: object
    side: object
    value: complex
    propagator: object = field(repr=False)
    near_critical: bool = False

    def __call__(self, q=None, qp=None):
        return self.value


def _inverse_L(L):
    if not np.isfinite(L) or abs(L) < _ZERO_L:
        raise PropagatorZero(f"local propagator L={L} vanishes; possible two-excitation "
                             "bound state or resonance")
    return -1.0 / L


def tmatrix_contact(cfg, omega, P, side=None, rtol=None):
    """Hard-core T-matrix ``T(omega, P) = -1/L(omega, P)``.

    Parameters
    ----------
    cfg : ArrayConfig
    omega : complex
        Total energy; a real value needs ``side``.
    P : float or array_like
    side : {"above", "below"}, optional
    rtol : float, optional
        Quadrature tolerance; the propagator default if omitted.

    Raises
    ------
    PropagatorZero
        If ``L`` vanishes.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CriticalEnergyProximity)
        dec = local_propagator(cfg, omega, P, side=side, rtol=rtol)
    if dec.near_critical:
        warnings.warn("contact T-matrix evaluated inside a critical window",
                      CriticalEnergyProximity, stacklevel=2)
    return TMatrixContact(dec.omega, dec.P, dec.side, _inverse_L(dec.L), dec, dec.near_critical)


# general potential (Nystrom) -------------------------------------------------------
@dataclass(frozen=True, eq=False)
class TMatrixGeneral:
    """Nystrom solution of ``T = U + U G T`` on the propagator grid (1D).

    ``kernel`` holds ``T(q_i, q_j)`` on the grid ``nodes``; calling the object
    interpolates to arbitrary ``(q, q')`` with the Nystrom formula.

    Attributes
    ----------
    nodes : ndarray
        Quadrature nodes followed by the on-shell roots.
    weights : ndarray
        Propagator-weighted quadrature weights matching ``nodes``.
    kernel : ndarray
    residual : float
        Max-norm residual of the discretized equation.
    """
    omega: complex
    P: float
    side: object
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    kernel: np.ndarray = field(repr=False)
    residual: float
    potential: object = field(repr=False)
    _lu: tuple = field(repr=False)

    def _us(self, q, qp):
        return _symmetrized(self.potential, q, qp)

    def __call__(self, q, qp):
        """``T(q, q')`` for scalars or broadcastable arrays."""
        q = np.atleast_1d(np.asarray(q, dtype=float))
        qp = np.atleast_1d(np.asarray(qp, dtype=float))
        rhs = self._us(self.nodes[:, None], qp[None, :])
        tcol = sla.lu_solve(self._lu, rhs)
        out = self._us(q[:, None], qp[None, :]) + \
            self._us(q[:, None], self.nodes[None, :]) @ (self.weights[:, None] * tcol)
        return out[0, 0] if out.size == 1 else out


def _symmetrized(U, q, qp):
    # bosonic pair states: |P, q> = |P, -q>, so only the even part of U acts
    return 0.5 * (np.asarray(U(q - qp), dtype=complex) + np.asarray(U(q + qp), dtype=complex))


def tmatrix_general(cfg, omega, P, U, side=None, rtol=None, tol=1e-10):
    """Two-excitation T-matrix for a bounded interaction ``U(q - q')``.

    The Lippmann-Schwinger equation is discretized on the adaptive grid of
    the local propagator (principal-value nodes plus on-shell roots with
    weight ``-/+ i pi / |d delta2/dq|``), so the same singular treatment
    applies to ``T`` and ``L``.

    Parameters
    ----------
    cfg : ArrayConfig
        One-dimensional arrays only.
    omega : complex
    P : float
    U : callable
        Vectorized potential in relative momentum. Use :func:`tmatrix_contact`
        for the hard-core limit.
    side : {"above", "below"}, optional
    rtol : float, optional
        Quadrature tolerance; the propagator default if omitted.
    tol : float
        Residual tolerance of the discrete solve.

    Raises
    ------
    SingularKernel
        If the discrete operator is numerically singular.
    """
    if cfg.dim != 1:
        raise NotImplementedError("the Nystrom solver is implemented for 1D arrays")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CriticalEnergyProximity)
        dec = local_propagator(cfg, omega, P, side=side, rtol=rtol, keep_grid=True)
    g = dec.grid
    nodes, weights = g.nodes, g.weights.astype(complex)
    if dec.side is not None and g.roots.size:
        sgn = 1.0 if dec.side is Side.ABOVE else -1.0
        nodes = np.concatenate([nodes, g.roots])
        weights = np.concatenate([weights, -1j * np.pi * sgn / g.root_slopes])
    Us = _symmetrized(U, nodes[:, None], nodes[None, :])
    A = np.eye(len(nodes)) - Us * weights[None, :]
    try:
        lu = sla.lu_factor(A, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SingularKernel(str(exc)) from exc
    rcond = 1.0 / np.linalg.cond(A, 1)
    if not np.isfinite(rcond) or rcond < 1e3 * np.finfo(float).eps:
        raise SingularKernel(f"Nystrom operator condition estimate {1 / rcond:.3g}")
    T = sla.lu_solve(lu, Us)
    res = np.max(np.abs(T - Us - Us @ (weights[:, None] * T)))
    scale = max(1.0, np.max(np.abs(T)))
    if res > tol * scale * len(nodes):
        raise SingularKernel(f"Nystrom residual {res:.3g} above tolerance")
    return TMatrixGeneral(dec.omega, dec.P, dec.side, nodes, weights, T, float(res / scale),
                          U, lu)


# doorway states --------------------------------------------------------------------
def _atilde(p, E, cfg):
    """Energy-normalized bright amplitude ``sqrt(gamma/2pi) / (E - eps)`` (vectorized)."""
    eps = dispersion(cfg).epsilon(p)
    return np.sqrt(-np.imag(eps) / np.pi) / (E - eps)


@dataclass(frozen=True, eq=False)
class EtaSampler:
    """Momentum-space wavefunction of a doorway state ``eta_alpha`` or ``eta_bar_alpha``.

    Points are ``q`` for channels 0 and 1, and ``(q, E_ph)`` for channel 2
    (``E_ph`` the energy of the photon at ``P/2 + q``). ``weights`` integrate
    over the manifold measure, so ``sum(weights * |values|^2)`` is the norm.
    """
    channel: int
    E: float
    P: object
    rho: float
    outgoing: bool
    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    cfg: object = field(repr=False)

    def __call__(self, q, e_ph=None):
        """Amplitude at ``q`` (and photon energy ``e_ph`` for channel 2)."""
        cfg, P, E = self.cfg, self.P, self.E
        q = np.asarray(q, dtype=float)
        if self.channel == 0:
            v = np.abs(pair_gradient(cfg, P, q))
            v = v if cfg.dim == 1 else np.linalg.norm(v, axis=-1)
            amp = 1.0 / np.sqrt(self.rho * v) + 0j
        elif self.channel == 1:
            p1, p2 = pair_momenta(P, q, cfg)
            disp = dispersion(cfg)
            b1 = domain_of(P, q, cfg) == 1
            first = is_bright(p1, cfg)
            first = first[..., None] if cfg.dim == 2 else first
            pb, pd = np.where(first, p1, p2), np.where(first, p2, p1)
            e_ph = E - disp.delta(pd)
            amp = np.where(b1, np.conj(_atilde(pb, e_ph, cfg)), 0.0) / np.sqrt(self.rho)
        else:
            p1, p2 = pair_momenta(P, q, cfg)
            e_ph = np.asarray(e_ph, dtype=float)
            amp = np.conj(_atilde(p1, e_ph, cfg) * _atilde(p2, E - e_ph, cfg)) / np.sqrt(self.rho)
        amp = np.conj(amp) if self.outgoing else amp
        return complex(amp) if np.ndim(amp) == 0 else amp

    def values(self):
        if self.channel == 2:
            d = self.cfg.dim
            return self(self.points[:, :d] if d == 2 else self.points[:, 0], self.points[:, -1])
        return self(self.points)

    def norm(self):
        return float(np.sum(self.weights * np.abs(self.values()) ** 2))

    def bar(self):
        """The partner state with complex-conjugated wavefunction."""
        return EtaSampler(self.channel, self.E, self.P, self.rho, not self.outgoing,
                          self.points, self.weights, self.cfg)


def _bright_line_nodes(cfg, E, P, alpha, rtol):
    # q nodes on the alpha segments of a 1D line, adapted to the channel density
    line = _line_1d(cfg, P)
    nodes, weights = [], []
    for a, b, al in line.segments:
        if al != alpha:
            continue
        res = gauss_kronrod(lambda t: -np.imag(1.0 / (E - line.eps2(t))) / np.pi, [a, b],
                            rtol=rtol, atol=1e-14)
        nodes.append(res.nodes)
        weights.append(res.weights)
    if not nodes:
        return np.empty(0), np.empty(0)
    return np.concatenate(nodes), np.concatenate(weights)


def _plane_nodes(cfg, P, alpha, n=128):
    b = cfg.zone_edge
    h = 2 * b / n
    ax = -b + (np.arange(n) + 0.5) * h
    ay = (np.arange(n // 2) + 0.5) * h
    qx, qy = np.meshgrid(ax, ay, indexing="ij")
    q = np.stack([qx.ravel(), qy.ravel()], axis=-1)
    keep = domain_of(P, q, cfg) == alpha
    return q[keep], np.full(int(keep.sum()), h * h)


def _energy_fiber(f, peaks, width, rtol):
    # adaptive rule for a function of E_ph on the whole real line, through
    # E_ph = c + width * tan(theta) with breakpoints at the resonance peaks
    c = float(np.mean(peaks))
    th = np.sort(np.arctan((np.asarray(peaks) - c) / width))
    res = gauss_kronrod(lambda t: f(c + width * np.tan(t)) * width / np.cos(t) ** 2,
                        [-np.pi / 2, *th, np.pi / 2], rtol=rtol, atol=1e-14)
    return c + width * np.tan(res.nodes), res.weights * width / np.cos(res.nodes) ** 2


def _check_open(rho, alpha):
    if not rho > 0:
        raise ClosedChannel(f"channel {alpha} is closed (rho={rho})")


def eta0_wavefunction(cfg, E, P, rho=None, grid=512):
    """Dark-pair doorway state: amplitude ``1/sqrt(rho0 v_g)`` on the level set.

    Parameters
    ----------
    cfg : ArrayConfig
    E : float
    P : float or array_like
    rho : float, optional
        ``rho0`` from an existing propagator evaluation; recomputed if omitted.
    grid : int
        Marching-squares resolution in 2D.

    Raises
    ------
    ClosedChannel
    """
    P = _as_P(P, cfg)
    pts, w, v = level_set(cfg, E, P, grid) if cfg.dim == 2 else _roots_1d(cfg, E, P)
    if rho is None:
        rho = float(np.sum(w / v)) if len(v) else 0.0
    _check_open(rho, 0)
    return EtaSampler(0, E, P, rho, False, pts, w, cfg)


def _roots_1d(cfg, E, P):
    line = _line_1d(cfg, P)
    r = np.array([x for x, _, _ in line.roots(E)])
    v = np.abs(line.slope(r)) if r.size else np.empty(0)
    return r, np.ones_like(r), v


def eta1_wavefunction(cfg, E, P, rho=None, rtol=1e-8):
    """One-photon doorway state: ``conj(a_bright(E - delta(p_dark))) / sqrt(rho1)`` on ``D_1(P)``.

    Raises
    ------
    ClosedChannel
    """
    P = _as_P(P, cfg)
    pts, w = _bright_line_nodes(cfg, E, P, 1, rtol) if cfg.dim == 1 else _plane_nodes(cfg, P, 1)
    if rho is None:
        s = EtaSampler(1, E, P, 1.0, False, pts, w, cfg)
        rho = s.norm() if len(pts) else 0.0
    _check_open(rho, 1)
    return EtaSampler(1, E, P, rho, False, pts, w, cfg)


def eta2_wavefunction(cfg, E, P, rho=None, rtol=1e-8):
    """Two-photon doorway state on ``D_2(P)`` times the photon-energy fiber.

    Raises
    ------
    ClosedChannel
    """
    P = _as_P(P, cfg)
    qs, wq = _bright_line_nodes(cfg, E, P, 2, rtol) if cfg.dim == 1 else _plane_nodes(cfg, P, 2)
    if rho is None:
        eps = pair_epsilon(cfg, P, qs)
        rho = float(np.sum(wq * -np.imag(1.0 / (E - eps)) / np.pi)) if len(qs) else 0.0
    _check_open(rho, 2)
    disp = dispersion(cfg)
    pts, wts = [], []
    for q, wqi in zip(qs, wq):
        p1, p2 = pair_momenta(P, q, cfg)
        e1, e2 = complex(disp.epsilon(p1)), complex(disp.epsilon(p2))
        width = max(0.5 * -(e1 + e2).imag, 1e-3)
        x, wx = _energy_fiber(
            lambda x: np.abs(_atilde(p1, x, cfg) * _atilde(p2, E - x, cfg)) ** 2,
            [e1.real, E - e2.real], width, rtol)
        qq = np.broadcast_to(np.atleast_1d(q), (len(x), cfg.dim))
        pts.append(np.column_stack([qq, x]))
        wts.append(wqi * wx)
    pts = np.concatenate(pts) if pts else np.empty((0, cfg.dim + 1))
    wts = np.concatenate(wts) if wts else np.empty(0)
    return EtaSampler(2, E, P, rho, False, pts, wts, cfg)


# on-shell S-matrix -------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class OnShellSMatrix:
    """The 3x3 channel matrix ``s_ab = delta_ab + 2 pi i sqrt(rho_a rho_b) / L(E+i0, P)``.

    Attributes
    ----------
    s : ndarray, shape (3, 3)
        Complex matrix with NaN rows/columns for closed channels.
    rho : tuple of float
    open_channels : tuple of int
    unitarity_residual : float
        ``max |s s^dagger - 1|`` on the open block.
    propagator : PropagatorDecomposition
        ``L(E + i0, P)``.
    """
    E: float
    P: object
    s: np.ndarray
    rho: tuple
    open_channels: tuple
    unitarity_residual: float
    near_critical: bool
    propagator: object = field(repr=False)
    cfg: object = field(repr=False)

    @property
    def s00_two_sided(self):
        """``L(E - i0) / L(E + i0)``, the dark-channel phase from both sides of the cut."""
        return self.propagator.other_side().L / self.propagator.L

    def open_block(self):
        idx = list(self.open_channels)
        return self.s[np.ix_(idx, idx)]

    def eta(self, alpha):
        """Sampler of the incoming doorway state in channel ``alpha``."""
        rho = self.rho[alpha]
        _check_open(rho, alpha)
        maker = (eta0_wavefunction, eta1_wavefunction, eta2_wavefunction)[alpha]
        return maker(self.cfg, self.E, self.P, rho=rho)

    def eta_bar(self, alpha):
        """Sampler of the outgoing doorway state (complex conjugate wavefunction)."""
        return self.eta(alpha).bar()


def smatrix_from_propagator(dec, cfg=None):
    """Build :class:`OnShellSMatrix` from an ``E + i0`` propagator decomposition."""
    if dec.side is not Side.ABOVE:
        raise ValueError("the S-matrix needs L(E + i0)")
    rho = np.asarray(dec.rho, dtype=float)
    L = dec.L
    _inverse_L(L)
    s = np.eye(3) + 2j * np.pi * np.sqrt(np.outer(rho, rho)) / L
    open_ = tuple(int(a) for a in np.nonzero(rho > 0)[0])
    closed = [a for a in range(3) if a not in open_]
    s[closed, :] = np.nan
    s[:, closed] = np.nan
    blk = s[np.ix_(open_, open_)]
    resid = float(np.max(np.abs(blk @ blk.conj().T - np.eye(len(open_))))) if open_ else 0.0
    return OnShellSMatrix(float(dec.omega.real), dec.P, s, tuple(rho.tolist()), open_, resid,
                          dec.near_critical, dec, cfg)


def on_shell_smatrix(cfg, E, P, rtol=None):
    """On-shell two-excitation S-matrix in the doorway-state basis.

    Parameters
    ----------
    cfg : ArrayConfig
    E : float
        Total energy.
    P : float or array_like
        Total momentum.
    rtol : float, optional
        Quadrature tolerance; the propagator default if omitted.

    Returns
    -------
    OnShellSMatrix

    Warns
    -----
    CriticalEnergyProximity
        Inside the window around a critical energy.
    """
    dec = local_propagator(cfg, float(E), P, side=Side.ABOVE, rtol=rtol)
    return smatrix_from_propagator(dec, cfg)


# two-photon output -----------------------------------------------------------------
def two_photon_wavefunction(cfg, E, P, q, delta_ph, rho2=None, rtol=None):
    """Outgoing two-photon amplitude ``eta_bar_2(q, delta_ph)``.

    The photons carry ``P/2 +- q`` and energies ``E/2 +- delta_ph``.

    Parameters
    ----------
    cfg : ArrayConfig
    E : float
    P : float or array_like
    q, delta_ph : float or array_like
        Broadcastable arrays (``q`` with a trailing axis of 2 in 2D).
    rho2 : float, optional
        Two-bright density; computed from ``L`` if omitted.

    Raises
    ------
    OutsideD2
        If any ``q`` has a dark constituent.
    """
    P = _as_P(P, cfg)
    q = np.asarray(q, dtype=float)
    if not np.all(domain_of(P, q, cfg) == 2):
        raise OutsideD2("relative momentum outside the two-bright domain")
    if rho2 is None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CriticalEnergyProximity)
            rho2 = local_propagator(cfg, float(E), P, side=Side.ABOVE,
                                    rtol=rtol).rho[2]
    _check_open(rho2, 2)
    p1, p2 = pair_momenta(P, q, cfg)
    d = np.asarray(delta_ph, dtype=float)
    out = _atilde(p1, 0.5 * E + d, cfg) * _atilde(p2, 0.5 * E - d, cfg) / np.sqrt(rho2)
    return complex(out) if np.ndim(out) == 0 else out


def two_photon_grid(cfg, E, P=0.0, nq=256, nd=256, dmax=3.0):
    """Relative modulus and phase of ``eta_bar_2`` on a ``(q, delta_ph)`` grid (1D).

    ``q`` runs over ``[0, k0)`` (left cell edges, so ``q = 0`` is on the grid)
    and ``delta_ph`` over ``[0, dmax]``. The modulus is divided by its value at
    ``(0, 0)``.

    Returns
    -------
    dict with ``q``, ``delta_ph``, ``modulus`` (shape ``(nq, nd)``), ``phase``.
    """
    if cfg.dim != 1:
        raise NotImplementedError("the two-photon grid is defined for 1D arrays")
    k0 = cfg.k0
    qa = np.arange(nq) * (k0 / nq)
    da = np.linspace(0.0, dmax, nd)
    # rho2 cancels in the relative modulus and does not move the phase
    w = two_photon_wavefunction(cfg, E, P, qa[:, None], da[None, :], rho2=1.0)
    ref = two_photon_wavefunction(cfg, E, P, 0.0, 0.0, rho2=1.0)
    return {"q": qa, "delta_ph": da, "modulus": np.abs(w) / abs(ref), "phase": np.angle(w)}


# dark states ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class DarkStateWavefunction:
    """Delta-normalized two-excitation state seeded by a dark pair ``(P, q)``.

    ``amplitude(P', q')`` returns the scattered part
    ``T(E_d + i0) / (E_d - eps2(P, q'))``; the ``delta(q - q')`` part is implicit.

    Attributes
    ----------
    darkness : float
        ``1 - |s00|`` at ``(E_d, P)``; zero for a perfectly dark state.
    bright_weight : float
        ``int_{D1 u D2} |T / (E_d - eps2)|^2 dq``, the photon-carrying weight of
        the scattered part.
    """
    E: float
    P: object
    q_seed: object
    T: complex
    darkness: float
    bright_weight: float
    cfg: object = field(repr=False)

    def amplitude(self, Pp, qp):
        Pp = _as_P(Pp, self.cfg)
        if not np.allclose(Pp, self.P, rtol=0, atol=1e-12):
            return 0j
        eps = pair_epsilon(self.cfg, self.P, qp)
        with np.errstate(divide="ignore"):
            out = self.T / (self.E - eps)
        return complex(out) if np.ndim(out) == 0 else out


def dark_state(cfg, E_d, P, q_seed, rtol=None, shell_tol=1e-8):
    """Dark two-excitation state at energy ``E_d`` seeded by the pair ``(P, q_seed)``.

    Raises
    ------
    OffShellSeed
        If ``q_seed`` is not a dark pair with ``delta2(P, q_seed) = E_d``.
    """
    P = _as_P(P, cfg)
    q = np.asarray(q_seed, dtype=float)
    if domain_of(P, q, cfg) != 0:
        raise OffShellSeed("seed pair is not dark")
    e = float(pair_delta(cfg, P, q))
    if abs(e - E_d) > shell_tol * max(1.0, abs(E_d)):
        raise OffShellSeed(f"seed energy {e} differs from E_d={E_d}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CriticalEnergyProximity)
        dec = local_propagator(cfg, float(E_d), P, side=Side.ABOVE, rtol=rtol)
    T = _inverse_L(dec.L)
    s00 = dec.other_side().L / dec.L
    w = abs(T) ** 2 * _bright_norm(cfg, float(E_d), P, rtol or DEFAULT_RTOL[cfg.dim])
    return DarkStateWavefunction(float(E_d), P, q, complex(T), float(1 - abs(s00)), float(w), cfg)


def _bright_norm(cfg, E, P, rtol):
    # int over D1 u D2 of 1 / |E - eps2|^2
    def line_norm(line):
        tot = 0.0
        for a, b, al in line.segments:
            if al > 0:
                tot += gauss_kronrod(lambda t: np.abs(1.0 / (E - line.eps2(t))) ** 2, [a, b],
                                     rtol=rtol, atol=1e-14).value
        return tot

    if cfg.dim == 1:
        return float(line_norm(_line_1d(cfg, P)))
    b = cfg.zone_edge
    res = gauss_kronrod(lambda xs: np.array([line_norm(_Line(cfg, P, qx=x)) for x in xs]),
                        [-b, b], rtol=rtol, atol=1e-12, max_cells=400)
    return float(res.value)


__all__ = [
    "TMatrixContact", "TMatrixGeneral", "EtaSampler", "OnShellSMatrix", "DarkStateWavefunction",
    "tmatrix_contact", "tmatrix_general", "on_shell_smatrix", "smatrix_from_propagator",
    "eta0_wavefunction", "eta1_wavefunction", "eta2_wavefunction", "two_photon_wavefunction",
    "two_photon_grid", "dark_state",
]
