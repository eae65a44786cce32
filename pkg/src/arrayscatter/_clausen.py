"""Clausen-type functions for polylogarithms on the unit circle.

For real ``t`` the polylogarithm splits as
``Li_2(e^{it}) = Sl_2(t) + i Cl_2(t)`` and ``Li_3(e^{it}) = Cl_3(t) + i Sl_3(t)``,
where ``Sl_n`` are Bernoulli polynomials on ``[0, 2*pi)`` and ``Cl_n`` are
evaluated from their small-argument series after reduction to ``[-pi, pi]``.
"""
import mpmath
import numpy as np

_NTERMS = 40


def _series_coefficients():
    k = np.arange(1, _NTERMS + 1)
    b = [abs(mpmath.bernoulli(2 * int(j))) for j in k]
    fact = [mpmath.factorial(2 * int(j)) for j in k]
    c2 = np.array([float(bj / (2 * j * (2 * j + 1) * fj)) for bj, j, fj in zip(b, k, fact)])
    c3 = np.array([float(bj / (2 * j * (2 * j + 1) * (2 * j + 2) * fj))
                   for bj, j, fj in zip(b, k, fact)])
    return c2, c3


_C2, _C3 = _series_coefficients()
ZETA3 = float(mpmath.zeta(3))


def wrap_angle(t):
    """Reduce angles to ``[-pi, pi)``."""
    return (np.asarray(t, dtype=float) + np.pi) % (2 * np.pi) - np.pi


def _even_series(t2, coeffs):
    # Horner in t^2, highest order first
    out = np.zeros_like(t2)
    for c in coeffs[::-1]:
        out = out * t2 + c
    return out


def cl2(t):
    """Clausen function ``Cl_2(t) = sum_n sin(n t)/n^2``."""
    t = wrap_angle(t)
    a = np.abs(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_a = np.where(a > 0, np.log(a), 0.0)
    t2 = t * t
    return t - t * log_a + t * t2 * _even_series(t2, _C2)


def cl3(t):
    """Clausen function ``Cl_3(t) = sum_n cos(n t)/n^3``."""
    t = wrap_angle(t)
    a = np.abs(t)
    t2 = t * t
    with np.errstate(divide="ignore", invalid="ignore"):
        log_term = np.where(a > 0, 0.5 * t2 * np.log(a), 0.0)
    return ZETA3 - 0.75 * t2 + log_term - t2 * t2 * _even_series(t2, _C3)


def log_2sin(t):
    """``log|2 sin(t/2)|``, equal to ``-d Cl_2/dt``; ``-inf`` at multiples of ``2*pi``."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(2.0 * np.sin(0.5 * t)))


def sl2(t):
    """``sum_n cos(n t)/n^2`` as a Bernoulli polynomial."""
    t = np.asarray(t, dtype=float) % (2 * np.pi)
    return np.pi ** 2 / 6 - np.pi * t / 2 + t * t / 4


def sl3(t):
    """``sum_n sin(n t)/n^3`` as a Bernoulli polynomial."""
    t = np.asarray(t, dtype=float) % (2 * np.pi)
    return np.pi ** 2 * t / 6 - np.pi * t * t / 4 + t ** 3 / 12


def li1_imag(t):
    """``Im Li_1(e^{it}) = sum_n sin(n t)/n = (pi - t)/2`` on ``(0, 2*pi)``."""
    t = np.asarray(t, dtype=float) % (2 * np.pi)
    return np.where(t == 0, 0.0, 0.5 * (np.pi - t))
