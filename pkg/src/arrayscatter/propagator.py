"""Two-excitation zone, channel domains, the local propagator and pair densities of states.

A pair state is labelled by its total momentum ``P`` and relative momentum
``q``; the constituents carry ``P/2 + q`` and ``P/2 - q``. The reduced zone
keeps ``q > 0`` (1D) or ``q_y > 0`` (2D). Its domain ``D_alpha(P)`` collects
the ``q`` with exactly ``alpha`` bright constituents.

On the real axis the dark part of the propagator is split into a principal
value and ``-/+ i pi rho0``. The principal value is computed by pairing points
symmetrically around each root of ``E = delta2(P, q)`` so the pole cancels
inside the integrand. In 2D the integral is iterated: for every ``q_x`` the
``q_y`` line is treated exactly like the 1D problem.
"""
import enum
import functools
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import CriticalEnergyProximity, QuadratureFailure, RootFindingFailure
from .lattice import K0, dispersion, is_bright, wrap_momentum
from .quadrature import KRONROD, NODES, gauss_kronrod

DEFAULT_RTOL = {1: 1e-6, 2: 1e-4}
CRITICAL_WINDOW = 1e-4
_SLOPE_SAMPLES = 256
_MIN_SLOPE = 1e-8


class Side(enum.Enum):
    """Which side of the real-axis cut: ``E + i0`` or ``E - i0``."""
    ABOVE = "above"
    BELOW = "below"


def _side_sign(side):
    return 1.0 if Side(side) is Side.ABOVE else -1.0


# pair kinematics ---------------------------------------------------------------
def _as_P(P, cfg):
    if cfg.dim == 1:
        return float(P)
    return np.asarray(P, dtype=float).reshape(2)


def pair_momenta(P, q, cfg):
    """Constituent momenta ``P/2 + q`` and ``P/2 - q``, wrapped into the zone."""
    P = _as_P(P, cfg)
    q = np.asarray(q, dtype=float)
    return wrap_momentum(0.5 * P + q, cfg), wrap_momentum(0.5 * P - q, cfg)


def pair_delta(cfg, P, q):
    disp = dispersion(cfg)
    p1, p2 = pair_momenta(P, q, cfg)
    return disp.delta(p1) + disp.delta(p2)


def pair_epsilon(cfg, P, q):
    disp = dispersion(cfg)
    p1, p2 = pair_momenta(P, q, cfg)
    return disp.epsilon(p1) + disp.epsilon(p2)


def pair_gradient(cfg, P, q):
    """Gradient of ``delta2(P, q)`` with respect to ``q``."""
    disp = dispersion(cfg)
    p1, p2 = pair_momenta(P, q, cfg)
    return disp.grad_delta(p1) - disp.grad_delta(p2)


def domain_of(P, q, cfg):
    """Number of bright constituents of the pair ``(P, q)`` (vectorized)."""
    p1, p2 = pair_momenta(P, q, cfg)
    return is_bright(p1, cfg).astype(int) + is_bright(p2, cfg).astype(int)


def zone_volume(cfg):
    """Measure of the reduced two-excitation zone."""
    b = cfg.zone_edge
    return b if cfg.dim == 1 else 2 * b * b


# one-dimensional restriction ---------------------------------------------------
class _Line:
    """The pair problem restricted to ``t -> q(t)``, ``t`` in ``(0, pi/d)``.

    In 1D ``q = t``; in 2D ``q = (qx, t)``. The line is cut at light-cone
    crossings into segments of fixed channel, and the dark segments are further
    cut at stationary points of ``delta2`` into monotone pieces.
    """

    def __init__(self, cfg, P, qx=None):
        self.cfg = cfg
        self.disp = dispersion(cfg)
        self.P = _as_P(P, cfg)
        self.qx = qx
        self.tmax = cfg.zone_edge
        self.seams = set(self._seams().tolist())
        bps = np.unique(np.concatenate([[0.0, self.tmax], sorted(self.seams)]))
        mids = 0.5 * (bps[:-1] + bps[1:])
        alphas = domain_of(self.P, self.q(mids), cfg)
        self.segments = [(a, b, int(al)) for a, b, al in zip(bps[:-1], bps[1:], alphas)]
        self.pieces = []
        self.stationary = []
        for a, b, al in self.segments:
            if al == 0:
                self._split_monotone(a, b)

    def q(self, t):
        t = np.asarray(t, dtype=float)
        if self.qx is None:
            return t
        return np.stack([np.full_like(t, self.qx), t], axis=-1)

    def _seams(self):
        b = self.tmax
        shifts = 2 * b * np.array([-1.0, 0.0, 1.0])
        out = []
        if self.qx is None:
            h = 0.5 * self.P
            for g in shifts:
                for s in (K0, -K0):
                    out += [s - h - g, h + g - s]
        else:
            hx, hy = 0.5 * self.P
            for sgn in (1.0, -1.0):
                for gx in shifts:
                    r2 = K0 * K0 - (hx + sgn * self.qx + gx) ** 2
                    if r2 < 0:
                        continue
                    r = np.sqrt(r2)
                    for gy in shifts:
                        for s in (r, -r):
                            out.append(sgn * (s - hy - gy))
        out = np.asarray(out)
        return out[(out > 0) & (out < b)]

    def delta2(self, t):
        p1, p2 = pair_momenta(self.P, self.q(t), self.cfg)
        return self.disp.delta(p1) + self.disp.delta(p2)

    def eps2(self, t):
        p1, p2 = pair_momenta(self.P, self.q(t), self.cfg)
        return self.disp.epsilon(p1) + self.disp.epsilon(p2)

    def slope(self, t):
        g = pair_gradient(self.cfg, self.P, self.q(t))
        return g if self.qx is None else g[..., 1]

    def _split_monotone(self, a, b):
        u = 0.5 * (1 - np.cos(np.pi * (np.arange(_SLOPE_SAMPLES) + 0.5) / _SLOPE_SAMPLES))
        t = a + (b - a) * u
        s = self.slope(t)
        cuts = []
        for i in np.nonzero(np.sign(s[:-1]) * np.sign(s[1:]) < 0)[0]:
            try:
                c = brentq(lambda x: self.slope(np.array([x]))[0], t[i], t[i + 1], xtol=1e-14, rtol=1e-15)
            except (ValueError, RuntimeError) as exc:
                raise RootFindingFailure("stationary point bracketing failed",
                                         {"interval": (t[i], t[i + 1]), "P": self.P}) from exc
            cuts.append(c)
            self.stationary.append(c)
        for end in (a, b):
            if end in (0.0, self.tmax) and abs(self.slope(np.array([end]))[0]) < 1e-8:
                self.stationary.append(end)
        edges = [a] + cuts + [b]
        self.pieces += list(zip(edges[:-1], edges[1:]))

    def roots(self, E):
        """Roots of ``delta2 = E`` on the dark pieces, with their slopes."""
        def f(t):
            return self.delta2(np.array([t]))[0] - E

        out = []
        for a, b in self.pieces:
            # piece ends on a light-cone seam carry the bright-side value there,
            # so bracket with points just inside the piece
            lo, hi = a, b
            for k in range(12):
                if np.isfinite(f(lo)) and not (k == 0 and lo in self.seams):
                    break
                lo = a + (b - a) * 10.0 ** (k - 13)
            for k in range(12):
                if np.isfinite(f(hi)) and not (k == 0 and hi in self.seams):
                    break
                hi = b - (b - a) * 10.0 ** (k - 13)
            flo, fhi = f(lo), f(hi)
            if not (np.isfinite(flo) and np.isfinite(fhi)) or flo * fhi > 0:
                continue
            if flo == 0 or fhi == 0:
                out.append((lo if flo == 0 else hi, a, b))
                continue
            out.append((brentq(f, lo, hi, xtol=1e-14, rtol=1e-15), a, b))
        return out


@dataclass
class LineGrid:
    """Discretization produced while integrating along a line.

    ``sum(weights * F(nodes))`` integrates a smooth ``F`` against the pair
    propagator over the whole line (the principal value on the real axis);
    ``roots`` and ``root_slopes`` carry the on-shell delta-function part.
    """
    nodes: np.ndarray
    weights: np.ndarray
    roots: np.ndarray
    root_slopes: np.ndarray


def _integrate_line(line, omega, rtol, keep_grid=False):
    """Return ``(L0_or_PV, L1, L2, rho0, grid)`` along a line."""
    omega = complex(omega)
    real_axis = omega.imag == 0
    E = omega.real

    def f(t):
        return 1.0 / (omega - line.eps2(t))

    def fr(t):
        return 1.0 / (E - line.delta2(t))

    L = np.zeros(3, dtype=complex)
    nodes, weights = [], []

    # rounding noise of E - delta2; only meaningful for the real-axis integrands
    noise = 10 * line.disp.noise * max(1.0, abs(E)) if real_axis else 0.0

    def quad(g, lo, hi):
        # absolute floor per unit length keeps near-cancelling pieces finite
        return gauss_kronrod(g, [lo, hi], rtol=rtol, atol=0.1 * rtol * (hi - lo) + 1e-15,
                             noise=noise)

    def add(g, lo, hi):
        res = quad(g, lo, hi)
        if keep_grid:
            nodes.append(res.nodes)
            weights.append(res.weights * g(res.nodes))
        return res.value

    for a, b, al in line.segments:
        if al > 0:
            L[al] += add(f, a, b)

    rho0 = 0.0
    roots, slopes = [], []
    if not real_axis:
        for a, b in line.pieces:
            L[0] += add(f, a, b)
    else:
        found = {(a, b): r for r, a, b in line.roots(E)}
        for a, b in line.pieces:
            r = found.get((a, b))
            if r is None:
                L[0] += add(fr, a, b)
                continue
            h = min(r - a, b - r)
            s = float(line.slope(np.array([r]))[0])
            # a root sitting on a stationary point has a divergent line density;
            # the slope floor caps it (this only happens on isolated lines)
            s = np.copysign(max(abs(s), _MIN_SLOPE), s)
            roots.append(r)
            slopes.append(abs(s))
            rho0 += 1.0 / abs(s)
            # closer than u0 to the root, E - delta2 drowns in rounding noise;
            # the symmetric sum is smooth there, so the core is one midpoint cell
            u0 = 1e7 * line.disp.noise / abs(s)
            if h < 1e-9 * (b - a):
                # root on a piece end: leave out a short gap around it
                h = max(h, min(u0, 1e-6 * (b - a)))
            elif u0 < 0.5 * h:
                def g(u):
                    return fr(r + u) + fr(r - u)

                res = quad(g, u0, h)
                core = np.array([0.5 * u0])
                L[0] += res.value + u0 * g(core)[0]
                if keep_grid:
                    u = np.concatenate([res.nodes, core])
                    w = np.concatenate([res.weights, [u0]])
                    nodes += [r + u, r - u]
                    weights += [w * fr(r + u), w * fr(r - u)]
            else:
                # the whole window is noise-dominated: integrate the quadratic
                # model E - delta2 = -s u - c u^2 / 2 in closed form
                c = float(np.diff(line.slope(np.array([r - h, r + h])))[0]) / (2 * h)
                x = np.clip(c * h / (2 * s), -1 + 1e-12, 1 - 1e-12)
                val = 2.0 / s * np.arctanh(x)
                L[0] += val
                if keep_grid:
                    nodes.append(np.array([r - 0.5 * h, r + 0.5 * h]))
                    weights.append(np.array([0.5 * val, 0.5 * val]))
            for lo, hi in ((a, r - h), (r + h, b)):
                if hi > lo:
                    L[0] += add(fr, lo, hi)
    grid = None
    if keep_grid:
        nodes = np.concatenate(nodes) if nodes else np.empty(0)
        weights = np.concatenate(weights) if weights else np.empty(0)
        grid = LineGrid(nodes, weights, np.asarray(roots), np.asarray(slopes))
    return L[0], L[1], L[2], rho0, grid


@functools.lru_cache(maxsize=256)
def _line_1d(cfg, P):
    return _Line(cfg, P)


# public API ----------------------------------------------------------------------
@dataclass
class PropagatorDecomposition:
    """Channel decomposition of the local propagator ``L = L0 + L1 + L2``.

    Attributes
    ----------
    omega : complex
    P : float or ndarray
    side : Side or None
        Set for real ``omega``; ``None`` off the axis.
    L0, L1, L2 : complex
    rho : tuple of float
        Densities ``(rho0, rho1, rho2)``; ``rho0`` is the dark-pair density on
        the real axis (zero off the axis), ``rho1,2 = |Im L1,2| / pi``.
    pv0 : float or None
        Principal value of the dark part on the real axis.
    critical : list of (E_crit, q_crit)
    near_critical : bool
        Whether ``|E - E_crit|`` is below the critical window for some entry.
    """
    omega: complex
    P: object
    side: object
    L0: complex
    L1: complex
    L2: complex
    rho: tuple
    pv0: object = None
    critical: list = field(default_factory=list)
    near_critical: bool = False
    grid: object = field(default=None, repr=False)

    @property
    def L(self):
        return self.L0 + self.L1 + self.L2

    def other_side(self):
        """The same decomposition on the opposite side of the cut."""
        if self.side is None:
            raise ValueError("only real-axis decompositions have two sides")
        other = Side.BELOW if self.side is Side.ABOVE else Side.ABOVE
        L0 = self.pv0 - 1j * np.pi * self.rho[0] * _side_sign(other)
        return PropagatorDecomposition(self.omega, self.P, other, L0, self.L1, self.L2,
                                       self.rho, self.pv0, self.critical,
                                       self.near_critical, self.grid)


def _critical_flag(cfg, omega, P, window):
    crit = critical_energies(cfg, P)
    near = False
    if complex(omega).imag == 0 and crit:
        gap = min(abs(complex(omega).real - e) for e, _ in crit)
        near = gap < window
        if near:
            warnings.warn(f"E={complex(omega).real} is within {gap:.3g} of a critical energy",
                          CriticalEnergyProximity, stacklevel=3)
    return crit, near


def local_propagator(cfg, omega, P, side=None, rtol=None,
                     critical_window=CRITICAL_WINDOW, keep_grid=False):
    """Local propagator ``L(omega, P)`` split by channel.

    Parameters
    ----------
    cfg : ArrayConfig
    omega : complex
        Energy. A real value needs ``side``.
    P : float or array_like
        Total lattice momentum.
    side : Side or str, optional
        ``"above"`` for ``E + i0`` and ``"below"`` for ``E - i0``.
    rtol : float, optional
        Relative quadrature tolerance on each channel part; defaults to
        ``DEFAULT_RTOL[dim]`` (the iterated 2D integral is much costlier per digit).
    critical_window : float
        Distance to a critical energy below which the result is flagged.
    keep_grid : bool
        Keep the 1D quadrature grid for reuse (Nystrom solves).

    Returns
    -------
    PropagatorDecomposition
    """
    omega = complex(omega)
    P = _as_P(P, cfg)
    rtol = rtol or DEFAULT_RTOL[cfg.dim]
    if omega.imag == 0:
        if side is None:
            raise ValueError("a real energy needs side='above' or 'below'")
        side = Side(side)
    else:
        side = None
    crit, near = _critical_flag(cfg, omega, P, critical_window)
    if cfg.dim == 1:
        l0, l1, l2, rho0, grid = _integrate_line(_line_1d(cfg, P), omega, rtol, keep_grid)
    else:
        if keep_grid:
            raise NotImplementedError("grid reuse is only available in 1D")
        l0, l1, l2, rho0 = _integrate_plane(cfg, omega, P, rtol, crit)
        grid = None
    pv0 = None
    if side is not None:
        pv0 = float(np.real(l0))
        l0 = pv0 - 1j * np.pi * rho0 * _side_sign(side)
    rho = (float(rho0), abs(float(np.imag(l1))) / np.pi, abs(float(np.imag(l2))) / np.pi)
    return PropagatorDecomposition(omega, P, side, complex(l0), complex(l1), complex(l2),
                                   rho, pv0, crit, near, grid)


def _integrate_plane(cfg, omega, P, rtol, crit):
    b = cfg.zone_edge
    hx = 0.5 * P[0]
    shifts = 2 * b * np.array([-1.0, 0.0, 1.0])
    bps = [-b, b]
    for g in shifts:
        for s in (K0, -K0):
            bps += [s - g - hx, hx + g - s]
    bps += [q[0] for _, q in crit]
    if complex(omega).imag == 0:
        bps += _vertical_tangencies(cfg, complex(omega).real, P)
        bps += _edge_crossings(cfg, complex(omega).real, P)
    bps = np.unique(np.asarray(bps))
    bps = bps[(bps >= -b) & (bps <= b)]

    def line(x):
        l0, l1, l2, rho0, _ = _integrate_line(_Line(cfg, P, qx=x), omega, rtol)
        return l0, l1, l2, rho0

    # every breakpoint may carry an inverse square-root or log edge; the
    # smoothstep map x = a + (b - a)(3s^2 - 2s^3) flattens both ends
    total = np.zeros(4, dtype=complex)
    for a, c in zip(bps[:-1], bps[1:]):
        if c <= a:
            continue

        def outer(s, a=a, c=c):
            x = a + (c - a) * s * s * (3 - 2 * s)
            jac = 6 * (c - a) * s * (1 - s)
            return np.array([line(xi) for xi in x]) * jac[:, None]

        total += gauss_kronrod(outer, [0.0, 1.0], rtol=rtol, atol=1e-12 * (c - a),
                               max_cells=200).value
    l0, l1, l2, rho0 = total
    return l0, l1, l2, float(np.real(rho0))


def _vertical_tangencies(cfg, E, P, grid=128):
    # q_x where a q_y line touches the level set: the line density has an
    # inverse square-root edge there, so the outer rule needs a breakpoint
    pts, _, _ = _level_set_2d(cfg, E, P, grid)
    if len(pts) < 2:
        return []
    gy = pair_gradient(cfg, P, pts)[:, 1]
    out = []
    step = 1e-6
    for i in np.nonzero(np.sign(gy[:-1]) * np.sign(gy[1:]) < 0)[0]:
        x = 0.5 * (pts[i] + pts[i + 1])
        for _ in range(30):
            F = np.array([pair_delta(cfg, P, x) - E, pair_gradient(cfg, P, x)[1]])
            J = np.empty((2, 2))
            for k in range(2):
                e = np.zeros(2)
                e[k] = step
                J[0, k] = (pair_delta(cfg, P, x + e) - pair_delta(cfg, P, x - e)) / (2 * step)
                J[1, k] = (pair_gradient(cfg, P, x + e)[1] - pair_gradient(cfg, P, x - e)[1]) / (2 * step)
            try:
                dx = np.linalg.solve(J, F)
            except np.linalg.LinAlgError:
                break
            x = x - dx
            if np.linalg.norm(dx) < 1e-13:
                break
        if np.all(np.isfinite(x)) and np.linalg.norm(x - pts[i]) < 4 * cfg.zone_edge / grid:
            out.append(float(x[0]))
    return out


def _edge_crossings(cfg, E, P, n=512):
    # q_x where a root of the q_y line reaches q_y = 0 or q_y = pi/d
    b = cfg.zone_edge
    x = np.linspace(-b, b, n + 1)
    out = []
    for y in (0.0, b):
        def f(t):
            return pair_delta(cfg, P, np.array([t, y])) - E

        q = np.stack([x, np.full_like(x, y)], axis=-1)
        v = np.where(domain_of(P, q, cfg) == 0, pair_delta(cfg, P, q) - E, np.nan)
        for i in np.nonzero(v[:-1] * v[1:] < 0)[0]:
            out.append(brentq(f, x[i], x[i + 1], xtol=1e-14))
    return out


def critical_energies(cfg, P, grid=96):
    """Stationary points of ``delta2(P, .)`` inside the dark domain.

    Returns
    -------
    list of (float, q)
        Critical energies and their relative momenta, sorted by energy.
    """
    P = _as_P(P, cfg)
    if cfg.dim == 1:
        return _critical_1d(cfg, P)
    return _critical_2d(cfg, tuple(P), grid)


@functools.lru_cache(maxsize=256)
def _critical_1d(cfg, P):
    line = _line_1d(cfg, P)
    ts = np.array(sorted(set(line.stationary)))
    if ts.size == 0:
        return []
    es = line.delta2(ts)
    return sorted(zip(es.tolist(), ts.tolist()))


@functools.lru_cache(maxsize=64)
def _critical_2d(cfg, P, grid):
    P = np.asarray(P)
    b = cfg.zone_edge
    # periodic grid on the full zone; q and -q label the same pair
    ax = -b + np.arange(grid) * (2 * b / grid)
    qx, qy = np.meshgrid(ax, ax, indexing="ij")
    q = np.stack([qx, qy], axis=-1)
    g = pair_gradient(cfg, P, q)
    dark = domain_of(P, q, cfg) == 0

    def shifted(a, i, j):
        return np.roll(np.roll(a, -i, axis=0), -j, axis=1)

    quad = [(0, 0), (1, 0), (0, 1), (1, 1)]
    cell_dark = np.all([shifted(dark, i, j) for i, j in quad], axis=0)
    corners = np.stack([shifted(g, i, j) for i, j in quad])
    brackets = (np.all(corners.min(axis=0) <= 0, axis=-1)
                & np.all(corners.max(axis=0) >= 0, axis=-1))
    ii, jj = np.nonzero(cell_dark & brackets)
    h = 2 * b / grid
    seeds = [q[i, j] + 0.5 * h for i, j in zip(ii, jj)]
    found = []
    step = 1e-5
    for x in seeds:
        for _ in range(50):
            gr = pair_gradient(cfg, P, x)
            H = np.empty((2, 2))
            for k in range(2):
                e = np.zeros(2)
                e[k] = step
                H[:, k] = (pair_gradient(cfg, P, x + e) - pair_gradient(cfg, P, x - e)) / (2 * step)
            try:
                dx = np.linalg.solve(H, gr)
            except np.linalg.LinAlgError:
                break
            x = x - dx
            if np.linalg.norm(dx) < 1e-12:
                break
        if np.linalg.norm(pair_gradient(cfg, P, x)) > 1e-8:
            continue
        x = _canonical_q(x, cfg)
        if domain_of(P, x, cfg) != 0:
            continue
        if any(np.linalg.norm(wrap_momentum(x - y, cfg)) < 1e-7 for _, y in found):
            continue
        found.append((float(pair_delta(cfg, P, x)), x))
    return sorted(found, key=lambda t: t[0])


def _canonical_q(q, cfg):
    # representative of {q, -q} modulo the reciprocal lattice with q_y in [0, pi/d]
    b = cfg.zone_edge
    q = wrap_momentum(q, cfg)
    if abs(q[1] + b) < 1e-9 * b:
        q = np.array([q[0], b])
    if q[1] < 0:
        q = wrap_momentum(-q, cfg)
        if abs(q[1] + b) < 1e-9 * b:
            q = np.array([q[0], b])
    return q


def dark_pair_dos(cfg, E, P, grid=512, warn=True):
    """Joint density of states of two dark spin waves at energy ``E``.

    1D: sum of ``1/|d delta2/dq|`` over the roots of ``delta2 = E``, found by
    a dense sign-change scan. 2D: line integral of ``1/|grad delta2|`` over the
    level set extracted by marching squares and refined by bisection.
    """
    P = _as_P(P, cfg)
    if cfg.dim == 1:
        pts, w, v = _level_set_1d(cfg, E, P)
    else:
        pts, w, v = _level_set_2d(cfg, E, P, grid)
    if warn and v.size and np.min(v) < 1e-8:
        warnings.warn("level set touches a stationary point", CriticalEnergyProximity,
                      stacklevel=2)
    with np.errstate(divide="ignore"):
        return float(np.sum(w / v))


def _level_set_1d(cfg, E, P, n=4096):
    b = cfg.zone_edge
    t = np.linspace(0.0, b, n + 1)
    dark = domain_of(P, t, cfg) == 0
    f = pair_delta(cfg, P, t) - E
    roots = []
    for i in range(n):
        if dark[i] != dark[i + 1]:
            # cell straddles a light-cone crossing: locate it, bracket on the dark side
            lo, hi = t[i], t[i + 1]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if (domain_of(P, mid, cfg) == 0) == dark[i]:
                    lo = mid
                else:
                    hi = mid
            a, c = (t[i], lo) if dark[i] else (hi, t[i + 1])
            fa, fc = pair_delta(cfg, P, np.array([a, c])) - E
            if np.isfinite(fa) and np.isfinite(fc) and fa * fc < 0:
                roots.append(brentq(lambda x: pair_delta(cfg, P, x) - E, a, c, xtol=1e-14))
        elif dark[i]:
            if f[i] == 0:
                roots.append(t[i])
            elif f[i] * f[i + 1] < 0:
                roots.append(brentq(lambda x: pair_delta(cfg, P, x) - E, t[i], t[i + 1],
                                    xtol=1e-14))
    roots = np.asarray(roots)
    v = np.abs(pair_gradient(cfg, P, roots)) if roots.size else np.empty(0)
    return roots, np.ones_like(roots), v


def _level_set_2d(cfg, E, P, n):
    """Refined level-set vertices, trapezoid arc-length weights and gradient norms."""
    from skimage.measure import find_contours

    b = cfg.zone_edge
    nx, ny = n + 1, n // 2 + 1
    ax = np.linspace(-b, b, nx)
    ay = np.linspace(0.0, b, ny)
    qx, qy = np.meshgrid(ax, ay, indexing="ij")
    q = np.stack([qx, qy], axis=-1)
    field = pair_delta(cfg, P, q)
    dark = domain_of(P, q, cfg) == 0
    field = np.where(dark & np.isfinite(field), field, np.nan)
    pts, wts = [], []
    for c in find_contours(field, E, mask=dark & np.isfinite(field)):
        v = np.array([_refine_vertex(cfg, P, E, ax, ay, r, s) for r, s in c])
        if len(v) < 2:
            continue
        ds = np.linalg.norm(np.diff(v, axis=0), axis=1)
        w = np.zeros(len(v))
        w[:-1] += 0.5 * ds
        w[1:] += 0.5 * ds
        pts.append(v)
        wts.append(w)
    if not pts:
        return np.empty((0, 2)), np.empty(0), np.empty(0)
    pts = np.concatenate(pts)
    wts = np.concatenate(wts)
    vel = np.linalg.norm(pair_gradient(cfg, P, pts), axis=-1)
    return pts, wts, vel


def _refine_vertex(cfg, P, E, ax, ay, r, s):
    # marching-squares vertices sit on grid edges; bisect along that edge
    dx, dy = ax[1] - ax[0], ay[1] - ay[0]
    if abs(r - round(r)) < 1e-12:
        i = int(round(r))
        j = min(int(np.floor(s)), len(ay) - 2)
        lo, hi = np.array([ax[i], ay[j]]), np.array([ax[i], ay[j + 1]])
    else:
        j = int(round(s))
        i = min(int(np.floor(r)), len(ax) - 2)
        lo, hi = np.array([ax[i], ay[j]]), np.array([ax[i + 1], ay[j]])
    flo = pair_delta(cfg, P, lo) - E
    fhi = pair_delta(cfg, P, hi) - E
    if not flo * fhi < 0:
        return np.array([ax[0] + r * dx, ay[0] + s * dy])
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        fm = pair_delta(cfg, P, mid) - E
        if flo * fm <= 0:
            hi = mid
        else:
            lo, flo = mid, fm
        if np.linalg.norm(hi - lo) < 1e-10:
            break
    return 0.5 * (lo + hi)


def level_set(cfg, E, P, grid=512):
    """Points, measure weights and gradient norms of the dark level set ``delta2 = E``."""
    P = _as_P(P, cfg)
    if cfg.dim == 1:
        return _level_set_1d(cfg, E, P)
    return _level_set_2d(cfg, E, P, grid)


__all__ = [
    "Side", "PropagatorDecomposition", "pair_momenta", "pair_delta", "pair_epsilon",
    "pair_gradient", "domain_of", "zone_volume", "local_propagator", "critical_energies",
    "dark_pair_dos", "level_set", "QuadratureFailure",
]
