"""Vectorized adaptive Gauss-Kronrod quadrature that keeps its final cells.

The final nodes and weights are returned so the same discretization can be
reused, e.g. as a Nystrom grid.
"""
from dataclasses import dataclass

import numpy as np

from .errors import QuadratureFailure

_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS = np.zeros(15)
GAUSS[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


@dataclass
class QuadResult:
    """Integral, error estimate and the accepted cells.

    ``nodes`` and ``weights`` are flat arrays, so ``sum(weights * f(nodes))``
    reproduces ``value``.
    """
    value: complex
    error: float
    nodes: np.ndarray
    weights: np.ndarray
    evaluations: int


def _rule(f, a, b, noise=0.0):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c[:, None] + h[:, None] * NODES[None, :]
    fx = np.asarray(f(x.ravel()))
    fx = fx.reshape(x.shape + fx.shape[1:])
    hh = h.reshape((-1,) + (1,) * (fx.ndim - 2))
    k = hh * np.tensordot(fx, KRONROD, axes=([1], [0]))
    g = hh * np.tensordot(fx, GAUSS, axes=([1], [0]))
    err = np.abs(k - g)
    floor = np.zeros_like(err)
    if noise:
        floor = noise * np.abs(hh) * np.tensordot(np.abs(fx) ** 2, KRONROD, axes=([1], [0]))
    if err.ndim > 1:
        err = err.reshape(len(err), -1).max(axis=1)
        floor = floor.reshape(len(floor), -1).max(axis=1)
    return k, err, floor, x, h[:, None] * KRONROD[None, :]


def gauss_kronrod(f, breakpoints, rtol=1e-8, atol=1e-14, max_cells=4000, initial=1,
                  noise=0.0):
    """Integrate a vectorized function over consecutive breakpoint intervals.

    Parameters
    ----------
    f : callable
        Maps a 1D array of abscissae to values (real or complex). Extra
        trailing axes are integrated componentwise; the error is the
        maximum over components.
    breakpoints : sequence of float
        Ordered interval endpoints; adaptivity never crosses them.
    rtol, atol : float
        Stop when the summed Kronrod-Gauss error is below
        ``max(atol, rtol * |I|)``.
    max_cells : int
        Cell budget; exceeding it raises :class:`QuadratureFailure`.
    initial : int
        Number of equal cells each breakpoint interval starts with.
    noise : float
        Absolute rounding noise of the denominator for integrands of the form
        ``1 / D(x)``. A cell whose error estimate is below
        ``noise * int |f|^2`` cannot be improved by splitting and is accepted.

    Returns
    -------
    QuadResult
    """
    bp = np.asarray(breakpoints, dtype=float)
    if bp.size < 2:
        return QuadResult(0.0, 0.0, np.empty(0), np.empty(0), 0)
    edges = [np.linspace(lo, hi, initial + 1) for lo, hi in zip(bp[:-1], bp[1:]) if hi > lo]
    if not edges:
        return QuadResult(0.0, 0.0, np.empty(0), np.empty(0), 0)
    a = np.concatenate([e[:-1] for e in edges])
    b = np.concatenate([e[1:] for e in edges])
    total_len = float(np.sum(b - a))

    k, err, floor, x, w = _rule(f, a, b, noise)
    nevals = x.size
    while True:
        value = k.sum(axis=0)
        tol = max(atol, rtol * float(np.max(np.abs(value))))
        live = np.where(err > floor, err, 0.0)
        if live.sum() <= tol:
            break
        # split every cell whose error density exceeds the uniform share
        split = live > tol * (b - a) / total_len
        if not split.any():
            split = live >= live.max()
        if len(a) + split.sum() > max_cells:
            raise QuadratureFailure(
                f"adaptive quadrature exceeded {max_cells} cells "
                f"(error {err.sum():.3g} > tolerance {tol:.3g})")
        m = 0.5 * (a[split] + b[split])
        na = np.concatenate([a[split], m])
        nb = np.concatenate([m, b[split]])
        nk, nerr, nfloor, nx, nw = _rule(f, na, nb, noise)
        nevals += nx.size
        keep = ~split
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        k = np.concatenate([k[keep], nk])
        err = np.concatenate([err[keep], nerr])
        floor = np.concatenate([floor[keep], nfloor])
        x = np.concatenate([x[keep], nx])
        w = np.concatenate([w[keep], nw])
    order = np.argsort(a, kind="stable")
    return QuadResult(value, float(err.sum()), x[order].ravel(), w[order].ravel(), nevals)
