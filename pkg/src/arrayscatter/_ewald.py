"""Ewald-accelerated dipole lattice sums for the square lattice.

Computes ``S(p) = sum_{R != 0} e^ . G(R) . e  exp(i p.R)`` for a square lattice
of spacing ``d`` in the ``z = 0`` plane. ``G`` is the free-space dyadic Green's
function ``(1 + grad grad / k^2) exp(ikr)/(4 pi r)`` at ``k = 2*pi``. The scalar
kernel is split with the usual erfc screening into a real-space part and a
reciprocal-space part, each of which converges like a Gaussian.
"""
import numpy as np
from scipy.special import erfc

from .errors import NonConvergentSum

K0 = 2 * np.pi
_MAX_SHELLS = 30
_CHUNK = 2048


def _shell_count(tol):
    # both real and reciprocal terms decay like exp(-pi (M - 1/2)^2) at the
    # outermost shell when the splitting parameter is sqrt(pi)/d
    if not tol > 0:
        raise NonConvergentSum(f"lattice-sum tolerance must be positive, got {tol}")
    m = int(np.ceil(0.5 + np.sqrt(max(np.log(1e3 / tol), 1.0) / np.pi)))
    if m > _MAX_SHELLS:
        raise NonConvergentSum(f"tolerance {tol} needs {m} shells (limit {_MAX_SHELLS})")
    return max(m, 3)


def _lattice(m):
    n = np.arange(-m, m + 1)
    nx, ny = np.meshgrid(n, n, indexing="ij")
    return np.stack([nx.ravel(), ny.ravel()], axis=-1).astype(float)


class EwaldSum:
    """Lattice sum of the polarization-projected dipole kernel.

    Parameters
    ----------
    d : float
        Lattice spacing in units of the resonant wavelength.
    polarization : {"parallel", "perpendicular", "circular"}
        Dipole orientation: in-plane along x, along z, or in-plane circular.
    tol : float
        Relative truncation tolerance for both partial sums.
    """

    def __init__(self, d, polarization, tol=1e-8):
        self.d = float(d)
        self.polarization = polarization
        self.tol = tol
        self.area = d * d
        self.eta = np.sqrt(np.pi) / d
        self.shells = _shell_count(tol)
        k, eta = K0, self.eta
        self._c = 2 * eta / np.sqrt(np.pi) * np.exp(k * k / (4 * eta * eta))

        n = _lattice(self.shells)
        n = n[np.any(n != 0, axis=1)]
        self.R = n * d
        self._G_R = self._real_space_coefficients(self.R)
        self.g = _lattice(self.shells) * (2 * np.pi / d)
        self._self_term = self._self_correction()

    def _real_space_coefficients(self, R):
        k, eta, c = K0, self.eta, self._c
        r = np.hypot(R[:, 0], R[:, 1])
        vp = np.exp(1j * k * r) * erfc(r * eta + 1j * k / (2 * eta))
        vm = np.exp(-1j * k * r) * erfc(r * eta - 1j * k / (2 * eta))
        gauss = np.exp(-(r * eta) ** 2)
        V = vp + vm
        V1 = 1j * k * (vp - vm) - 2 * c * gauss
        V2 = -k * k * V + 4 * c * eta * eta * r * gauss
        h = V / (8 * np.pi * r)
        h1 = V1 / (8 * np.pi * r) - V / (8 * np.pi * r ** 2)
        h2 = V2 / (8 * np.pi * r) - 2 * V1 / (8 * np.pi * r ** 2) + 2 * V / (8 * np.pi * r ** 3)
        if self.polarization == "parallel":
            proj = (R[:, 0] / r) ** 2
        elif self.polarization == "circular":
            proj = np.full_like(r, 0.5)
        else:
            proj = np.zeros_like(r)
        return h + (h1 / r + proj * (h2 - h1 / r)) / (k * k)

    def _self_correction(self):
        # limit r -> 0 of the projected (screened - bare) kernel
        k, eta, c = K0, self.eta, self._c
        w0 = erfc(-1j * k / (2 * eta))
        w1 = -1j * k * w0 - c
        w3 = 1j * k ** 3 * w0 + k * k * c + 2 * c * eta * eta
        c0 = w1 / (4 * np.pi)
        c2 = w3 / (24 * np.pi)
        return c0 + 2 * c2 / (k * k)

    def _terms(self, Q, Q2, gam, want_grad):
        # per-reciprocal-vector terms of the sum and of its gradient; works for
        # real gam (evanescent orders) and complex gam (propagating order)
        k, eta, A = K0, self.eta, self.area
        a = gam / (2 * eta)
        ec = erfc(a)
        ex = np.exp(-a * a)
        F = ec / (2 * A * gam)
        pol = self.polarization
        if pol == "parallel":
            fac = 1 - Q[..., 0] ** 2 / (k * k)
            terms = F * fac
        elif pol == "circular":
            fac = 1 - Q2 / (2 * k * k)
            terms = F * fac
        else:
            Z = (2 * gam * ec - 4 * eta * ex / np.sqrt(np.pi)) / (4 * A)
            terms = F + Z / (k * k)
        if not want_grad:
            return terms, None
        dF = (-(gam / (eta * np.sqrt(np.pi))) * ex - ec) / (2 * A * gam * gam)
        dgam = Q / gam[..., None]
        if pol == "parallel":
            dfac = np.zeros(Q.shape, dtype=terms.dtype)
            dfac[..., 0] = -2 * Q[..., 0] / (k * k)
            grad = (dF * fac)[..., None] * dgam + F[..., None] * dfac
        elif pol == "circular":
            grad = (dF * fac)[..., None] * dgam + F[..., None] * (-Q / (k * k))
        else:
            grad = (dF + ec / (2 * A) / (k * k))[..., None] * dgam
        return terms, grad

    def _spectral(self, p, want_grad):
        Q = p[:, None, :] + self.g[None, :, :]
        Q2 = Q[..., 0] ** 2 + Q[..., 1] ** 2
        g2 = Q2 - K0 * K0
        inside = g2 <= 0
        with np.errstate(divide="ignore", invalid="ignore"):
            gam = np.sqrt(np.where(inside, 1.0, g2))
            terms, grad = self._terms(Q, Q2, gam, want_grad)
            terms = np.where(inside, 0.0, terms).astype(complex)
            if want_grad:
                grad = np.where(inside[..., None], 0.0, grad).astype(complex)
            if inside.any():
                # outgoing branch -i sqrt(k^2 - |Q|^2) for propagating orders
                idx = np.nonzero(inside)
                gi = -1j * np.sqrt(-g2[idx])
                ti, gri = self._terms(Q[idx], Q2[idx], gi, want_grad)
                terms[idx] = ti
                if want_grad:
                    grad[idx] = gri
        S = terms.sum(axis=1)
        return S, (grad.sum(axis=1) if want_grad else None)

    def _evaluate(self, p, want_grad):
        phase = p @ self.R.T
        S_real = np.cos(phase) @ self._G_R
        S_spec, g_spec = self._spectral(p, want_grad)
        S = S_real + S_spec + self._self_term
        if not want_grad:
            return S, None
        g_real = -(np.sin(phase) * self._G_R[None, :]) @ self.R
        return S, g_real + g_spec

    def __call__(self, p, grad=False):
        """Evaluate the sum (and optionally its momentum gradient).

        Parameters
        ----------
        p : array_like, shape (..., 2)
        grad : bool

        Returns
        -------
        S : complex ndarray, shape (...)
        dS : complex ndarray, shape (..., 2), only if ``grad`` is true
        """
        p = np.asarray(p, dtype=float)
        shape = p.shape[:-1]
        flat = p.reshape(-1, 2)
        S = np.empty(len(flat), dtype=complex)
        G = np.empty((len(flat), 2), dtype=complex) if grad else None
        for i in range(0, len(flat), _CHUNK):
            s, g = self._evaluate(flat[i:i + _CHUNK], grad)
            S[i:i + _CHUNK] = s
            if grad:
                G[i:i + _CHUNK] = g
        if grad:
            return S.reshape(shape), G.reshape(shape + (2,))
        return S.reshape(shape)
