"""Single-photon scattering off a bright spin wave.

A photon with lattice momentum ``p`` inside the light cone couples to the
bright spin wave ``b_p`` only. It picks up the atomic amplitude
``a_p(E) = g_p / (E - eps(p))`` and, in the symmetric mode, the unimodular
transmission ``t_p(E) = (E - eps*) / (E - eps)``. All operations take the
photon energy ``E`` (measured from the atomic resonance, in ``gamma0``).
"""
import numpy as np

from .errors import DarkMomentum
from .lattice import K0, Classification, classify_momentum, coupling_g, dispersion, momentum_norm, wrap_momentum


def _bright_eps(p, cfg):
    if classify_momentum(p, cfg) is Classification.DARK:
        raise DarkMomentum(f"momentum {p} lies outside the light cone")
    return complex(dispersion(cfg).epsilon(p))


def on_shell_chi(p, E, cfg):
    """Transverse wavenumber of a photon with momentum ``p`` and energy ``E``.

    Inverts ``E = c sqrt(|p|^2 + chi^2) - omega_eg`` with ``omega_eg = c k0``.
    """
    pn = float(momentum_norm(wrap_momentum(p, cfg), cfg))
    k = K0 + E / cfg.c
    chi2 = k * k - pn * pn
    if chi2 <= 0:
        raise DarkMomentum(f"no propagating photon at p={p}, E={E}")
    return float(np.sqrt(chi2))


def atomic_amplitude(p, E, cfg, rescaled=False):
    """Bright-spin-wave amplitude ``a_p(E) = g_p / (E - eps(p))``.

    Parameters
    ----------
    p : float or array_like
        Bright lattice momentum.
    E : float or array_like
        Photon energy.
    cfg : ArrayConfig
    rescaled : bool
        Return ``sqrt(gamma(p) / 2 pi) / (E - eps(p))``, the amplitude with the
        group velocity divided out. Energy-integrated quantities use this form.

    Returns
    -------
    complex or ndarray
    """
    eps = _bright_eps(p, cfg)
    E = np.asarray(E, dtype=float)
    if rescaled:
        g = np.sqrt(-eps.imag / np.pi)
    else:
        g = np.vectorize(lambda e: coupling_g(p, cfg, on_shell_chi(p, e, cfg)))(E)
    out = g / (E - eps)
    return complex(out) if np.ndim(out) == 0 else out


def transmission(p, E, cfg):
    """Symmetric-mode transmission ``t_p(E) = (E - eps*) / (E - eps)``."""
    eps = _bright_eps(p, cfg)
    E = np.asarray(E, dtype=float)
    out = (E - np.conj(eps)) / (E - eps)
    return complex(out) if np.ndim(out) == 0 else out


def lorentzian(p, E, cfg):
    """``-Im 1/(E - eps(p))``, the spectral weight of the bright mode."""
    eps = _bright_eps(p, cfg)
    return -np.imag(1.0 / (np.asarray(E, dtype=float) - eps))


def dressed_photon_realspace(p, E, r, cfg):
    """Photonic part of the dressed-photon state along the effective 1D coordinate.

    ``(2 pi)^-1/2 exp(i chi r)`` for ``r < 0`` and the same times ``t_p(E)``
    for ``r > 0``; at ``r = 0`` the two sides are averaged.
    """
    chi = on_shell_chi(p, E, cfg)
    t = transmission(p, E, cfg)
    r = np.asarray(r, dtype=float)
    side = np.where(r > 0, t, np.where(r < 0, 1.0, 0.5 * (1 + t)))
    out = side * np.exp(1j * chi * r) / np.sqrt(2 * np.pi)
    return complex(out) if np.ndim(out) == 0 else out


__all__ = ["atomic_amplitude", "transmission", "lorentzian", "dressed_photon_realspace",
           "on_shell_chi"]
