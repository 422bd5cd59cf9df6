"""Branch-resolved square root and free-particle Green functions.

Everything downstream evaluates resolvents off the half-line [0, inf).
The square root used throughout is the branch with positive imaginary
part, continued onto the cut from the upper half plane, so that the
Green functions below decay (or at worst oscillate) at infinity.

Units: hbar = 1 and 2m = 1, so the free generator is -Laplacian.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "sqrt_upper",
    "green",
    "green_derivative_1d",
    "green_overlap",
]


def sqrt_upper(w):
    """Square root with Im(sqrt) > 0 off [0, inf), upper-edge limit on it.

    For w not on [0, inf) the result s satisfies s**2 == w and Im(s) > 0.
    On the cut the limit from above is returned, i.e. the nonnegative
    real root for w >= 0. Accepts scalars or arrays.
    """
    w = np.asarray(w, dtype=complex)
    s = np.sqrt(w)
    # principal sqrt has Re >= 0; flip the lower-half-plane results
    s = np.where(s.imag < 0.0, -s, s)
    if s.ndim == 0:
        return complex(s)
    return s


def _dist(x):
    """Euclidean length of a displacement: scalar for d=1, 3-vector for d=3."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return abs(float(x))
    if x.shape[-1] != 3:
        raise ValueError(f"displacement must be scalar or length-3, got shape {x.shape}")
    return np.sqrt(np.sum(x * x, axis=-1))


def _check_energy(w, allow_cut):
    w = complex(w)
    if not allow_cut and w.imag == 0.0 and w.real >= 0.0:
        raise ValueError(f"energy {w} lies on [0, inf); pass allow_cut=True for the upper-edge limit")
    return w


def green(d: int, w, x, allow_cut: bool = False):
    """Free resolvent kernel G^w(x) of (-Laplacian - w)^(-1) at displacement x.

    d=1: i*exp(i*sqrt(w)|x|)/(2*sqrt(w)), finite at x=0.
    d=3: exp(i*sqrt(w)|x|)/(4*pi*|x|), singular at x=0.

    x may be an array of displacements (last axis of length 3 for d=3).
    """
    w = _check_energy(w, allow_cut)
    s = sqrt_upper(w)
    r = _dist(x)
    if d == 1:
        if s == 0.0:
            raise ValueError("d=1 Green function diverges at w=0")
        return 1j * np.exp(1j * s * r) / (2.0 * s)
    if d == 3:
        if np.any(r == 0.0):
            raise ValueError("d=3 Green function is singular at zero displacement")
        return np.exp(1j * s * r) / (4.0 * np.pi * r)
    raise ValueError(f"dimension must be 1 or 3, got {d}")


def green_derivative_1d(w, x, allow_cut: bool = False):
    """Spatial derivative of the d=1 Green function: -sgn(x)*exp(i*sqrt(w)|x|)/2.

    Undefined at x=0 (jump discontinuity); raises there.
    """
    w = _check_energy(w, allow_cut)
    s = sqrt_upper(w)
    x = np.asarray(x, dtype=float)
    if np.any(x == 0.0):
        raise ValueError("d=1 Green derivative has a jump at x=0")
    val = -np.sign(x) * np.exp(1j * s * np.abs(x)) / 2.0
    if val.ndim == 0:
        return complex(val)
    return val


def green_overlap(d: int, z, w, x, allow_cut: bool = False):
    """Pair overlap of Green functions centered a displacement x apart.

    Evaluates integral of G^z(u - y) * G^w(u - y') over u, with
    x = y - y', via the resolvent difference identity

        (G^z(x) - G^w(x)) / (z - w),

    which stays finite at coinciding centers: for d=3 and x=0 the limit
    i*(sqrt(z) - sqrt(w))/(4*pi*(z - w)) is used. Requires z != w.
    """
    z = _check_energy(z, allow_cut)
    w = _check_energy(w, allow_cut)
    if z == w:
        raise ValueError("overlap formula needs distinct energies z != w")
    r = _dist(x)
    if d == 3 and np.all(r == 0.0):
        return 1j * (sqrt_upper(z) - sqrt_upper(w)) / (4.0 * np.pi * (z - w))
    if d == 3 and np.any(r == 0.0):
        raise ValueError("mixed zero and nonzero displacements not supported")
    return (green(d, z, x, allow_cut) - green(d, w, x, allow_cut)) / (z - w)
