"""Hot numeric kernels: scaled spherical Bessel functions and sector determinants.

Two interchangeable implementations live here: a numba ``@njit`` path (default
when numba imports) and a pure-numpy vectorized path.  Select with the
``TE_MAXWELL_BACKEND`` env var (``"numba"`` or ``"numpy"``) or at runtime with
:func:`set_backend`.  ``benchmarks/bench_backends.py`` compares the two.

The scaled functions are chosen so that everything is O(1) near the origin:

* ``jt_n(z)  := j_n(z) * (2n+1)!! / z^n``          (entire, even, ``jt_n(0) = 1``)
* ``pst_n(z) := psi_n'(z) * (2n+1)!! / ((n+1) z^n)`` with ``psi_n(z) = z j_n(z)``,
  which reduces to ``pst_n = jt_n - z^2 jt_{n+1} / ((n+1)(2n+3))``.

The sector determinants built from these have no artificial zero at the
origin, so the argument principle applies to them directly.

Evaluation strategy per argument ``z`` (top order ``n + 2``):

* ``|z| <= 6``            power series (fast convergence, mild cancellation),
* ``|z| >= n + 7``        upward recurrence from ``j_0, j_1`` (oscillatory
  regime, forward-stable),
* otherwise               downward Miller recurrence normalized by ``j_0``.
"""

from __future__ import annotations

import cmath
import math
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on numba-less installs
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


_SERIES_CUT = 6.0
_UPWARD_MARGIN = 5.0  # upward recurrence once |z| >= n_top + margin
_MILLER_EXTRA = 34

TE, TM = 0, 1

_VALID_BACKENDS = ("numba", "numpy")


def _backend_from_env() -> str:
    name = os.environ.get("TE_MAXWELL_BACKEND", "").strip().lower()
    if name in _VALID_BACKENDS:
        if name == "numba" and not HAVE_NUMBA:
            raise RuntimeError("TE_MAXWELL_BACKEND=numba but numba is not importable")
        return name
    return "numba" if HAVE_NUMBA else "numpy"


_ACTIVE = _backend_from_env()


def active_backend() -> str:
    return _ACTIVE


def set_backend(name: str) -> str:
    """Switch kernel backend; returns the previous one."""
    global _ACTIVE
    if name not in _VALID_BACKENDS:
        raise ValueError(f"unknown backend {name!r}, expected one of {_VALID_BACKENDS}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    prev, _ACTIVE = _ACTIVE, name
    return prev


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _jt_orders_scalar(z: complex, n_top: int, out: np.ndarray) -> None:
    """Fill ``out[0:n_top+1]`` with ``jt_m(z)`` for m = 0..n_top."""
    az = abs(z)
    if az <= _SERIES_CUT:
        w = -0.5 * z * z
        for m_ord in range(n_top + 1):
            term = 1.0 + 0.0j
            acc = term
            for m in range(1, 80):
                term *= w / (m * (2.0 * m_ord + 2.0 * m + 1.0))
                acc += term
                if abs(term) <= 1e-17 * abs(acc):
                    break
            out[m_ord] = acc
        return
    if az >= n_top + _UPWARD_MARGIN:
        jm1 = cmath.sin(z) / z
        out[0] = jm1
        if n_top == 0:
            return
        jm = cmath.sin(z) / (z * z) - cmath.cos(z) / z
        fac = 3.0 / z  # (2m+1)!!/z^m at m = 1
        out[1] = jm * fac
        for m in range(1, n_top):
            jp = (2.0 * m + 1.0) / z * jm - jm1
            jm1 = jm
            jm = jp
            fac *= (2.0 * m + 3.0) / z
            out[m + 1] = jm * fac
        return
    # Miller downward recurrence, normalized by j_0 = sin(z)/z
    n_start = n_top + _MILLER_EXTRA
    jp = 0.0 + 0.0j
    jc = 1e-30 + 0.0j
    for m in range(n_start, 0, -1):
        jm1 = (2.0 * m + 1.0) / z * jc - jp
        jp = jc
        jc = jm1
        if m - 1 <= n_top:
            out[m - 1] = jc
    scale = (cmath.sin(z) / z) / out[0]
    fac = 1.0 + 0.0j
    out[0] = out[0] * scale
    for m in range(1, n_top + 1):
        fac *= (2.0 * m + 1.0) / z
        out[m] = out[m] * scale * fac


@njit(cache=True, nogil=True)
def _det_batch_numba(om, n, pol, eps, mu, eps_hat, mu_hat, want_deriv):
    npts = om.shape[0]
    det = np.empty(npts, np.complex128)
    ddet = np.zeros(npts, np.complex128)
    s1 = math.sqrt(eps * mu)
    s2 = math.sqrt(eps_hat * mu_hat)
    cn1 = (n + 1.0) * (2.0 * n + 3.0)
    buf1 = np.empty(n + 3, np.complex128)
    buf2 = np.empty(n + 3, np.complex128)
    for i in range(npts):
        w = om[i]
        z1 = w * s1
        z2 = w * s2
        _jt_orders_scalar(z1, n + 2, buf1)
        _jt_orders_scalar(z2, n + 2, buf2)
        a = buf1[n]
        b = buf1[n] - z1 * z1 * buf1[n + 1] / cn1
        c = buf2[n]
        d = buf2[n] - z2 * z2 * buf2[n + 1] / cn1
        if pol == 0:
            det[i] = a * d / mu_hat - c * b / mu
        else:
            det[i] = eps * d * a - eps_hat * b * c
        if want_deriv:
            da = -z1 * buf1[n + 1] / (2.0 * n + 3.0)
            dc = -z2 * buf2[n + 1] / (2.0 * n + 3.0)
            db = (-z1 * buf1[n + 1] * (1.0 / (2.0 * n + 3.0) + 2.0 / cn1)
                  + z1 ** 3 * buf1[n + 2] / (cn1 * (2.0 * n + 5.0)))
            dd = (-z2 * buf2[n + 1] * (1.0 / (2.0 * n + 3.0) + 2.0 / cn1)
                  + z2 ** 3 * buf2[n + 2] / (cn1 * (2.0 * n + 5.0)))
            if pol == 0:
                ddet[i] = (s1 * (da * d / mu_hat - c * db / mu)
                           + s2 * (a * dd / mu_hat - dc * b / mu))
            else:
                ddet[i] = (s1 * (eps * d * da - eps_hat * db * c)
                           + s2 * (eps * dd * a - eps_hat * b * dc))
    return det, ddet


# ---------------------------------------------------------------------------
# numpy path
# ---------------------------------------------------------------------------

def _jt_orders_numpy(z: np.ndarray, n_top: int) -> np.ndarray:
    """``jt_m(z)`` for m = 0..n_top, shape (n_top+1, len(z))."""
    z = np.asarray(z, dtype=complex).ravel()
    out = np.empty((n_top + 1, z.size), dtype=complex)
    az = np.abs(z)
    small = az <= _SERIES_CUT
    up = az >= n_top + _UPWARD_MARGIN
    mid = ~small & ~up

    if small.any():
        zs = z[small]
        w = -0.5 * zs * zs
        for m_ord in range(n_top + 1):
            term = np.ones_like(zs)
            acc = term.copy()
            for m in range(1, 80):
                term = term * w / (m * (2.0 * m_ord + 2.0 * m + 1.0))
                acc += term
                if np.all(np.abs(term) <= 1e-17 * np.abs(acc)):
                    break
            out[m_ord, small] = acc

    if up.any():
        zu = z[up]
        jm1 = np.sin(zu) / zu
        out[0, up] = jm1
        if n_top >= 1:
            jm = np.sin(zu) / zu ** 2 - np.cos(zu) / zu
            fac = 3.0 / zu
            out[1, up] = jm * fac
            for m in range(1, n_top):
                jp = (2.0 * m + 1.0) / zu * jm - jm1
                jm1, jm = jm, jp
                fac = fac * (2.0 * m + 3.0) / zu
                out[m + 1, up] = jm * fac

    if mid.any():
        zm = z[mid]
        n_start = n_top + _MILLER_EXTRA
        jp = np.zeros_like(zm)
        jc = np.full_like(zm, 1e-30)
        raw = np.empty((n_top + 1, zm.size), dtype=complex)
        for m in range(n_start, 0, -1):
            jm1 = (2.0 * m + 1.0) / zm * jc - jp
            jp, jc = jc, jm1
            if m - 1 <= n_top:
                raw[m - 1] = jc
        scale = (np.sin(zm) / zm) / raw[0]
        fac = np.ones_like(zm)
        out[0, mid] = raw[0] * scale
        for m in range(1, n_top + 1):
            fac = fac * (2.0 * m + 1.0) / zm
            out[m, mid] = raw[m] * scale * fac

    return out


def _det_batch_numpy(om, n, pol, eps, mu, eps_hat, mu_hat, want_deriv):
    om = np.asarray(om, dtype=complex).ravel()
    s1 = math.sqrt(eps * mu)
    s2 = math.sqrt(eps_hat * mu_hat)
    cn1 = (n + 1.0) * (2.0 * n + 3.0)
    z1 = om * s1
    z2 = om * s2
    j1 = _jt_orders_numpy(z1, n + 2)
    j2 = _jt_orders_numpy(z2, n + 2)
    a, c = j1[n], j2[n]
    b = j1[n] - z1 * z1 * j1[n + 1] / cn1
    d = j2[n] - z2 * z2 * j2[n + 1] / cn1
    if pol == TE:
        det = a * d / mu_hat - c * b / mu
    else:
        det = eps * d * a - eps_hat * b * c
    ddet = np.zeros_like(det)
    if want_deriv:
        da = -z1 * j1[n + 1] / (2.0 * n + 3.0)
        dc = -z2 * j2[n + 1] / (2.0 * n + 3.0)
        db = (-z1 * j1[n + 1] * (1.0 / (2.0 * n + 3.0) + 2.0 / cn1)
              + z1 ** 3 * j1[n + 2] / (cn1 * (2.0 * n + 5.0)))
        dd = (-z2 * j2[n + 1] * (1.0 / (2.0 * n + 3.0) + 2.0 / cn1)
              + z2 ** 3 * j2[n + 2] / (cn1 * (2.0 * n + 5.0)))
        if pol == TE:
            ddet = (s1 * (da * d / mu_hat - c * db / mu)
                    + s2 * (a * dd / mu_hat - dc * b / mu))
        else:
            ddet = (s1 * (eps * d * da - eps_hat * db * c)
                    + s2 * (eps * dd * a - eps_hat * b * dc))
    return det, ddet


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def jt_orders(z, n_top: int) -> np.ndarray:
    """Scaled spherical Bessel ``jt_m(z)``, orders 0..n_top (rows) over points."""
    z = np.asarray(z, dtype=complex).ravel()
    if _ACTIVE == "numba":
        out = np.empty((n_top + 1, z.size), dtype=complex)
        buf = np.empty(n_top + 1, dtype=complex)
        for i, zi in enumerate(z):
            _jt_orders_scalar(zi, n_top, buf)
            out[:, i] = buf
        return out
    return _jt_orders_numpy(z, n_top)


def det_batch(om, n: int, pol: int, eps: float, mu: float,
              eps_hat: float, mu_hat: float, deriv: bool = False):
    """Normalized sector determinant (and optionally d/d omega) at each point.

    ``pol`` is 0 for the TE-type sector, 1 for TM-type.  The returned
    evaluator is entire in omega and nonzero at the origin for media with
    nonzero contrast.
    """
    om = np.asarray(om, dtype=complex).ravel()
    if om.size == 0:
        z = np.zeros(0, dtype=complex)
        return z, z.copy()
    if _ACTIVE == "numba":
        return _det_batch_numba(om, n, pol, eps, mu, eps_hat, mu_hat, deriv)
    return _det_batch_numpy(om, n, pol, eps, mu, eps_hat, mu_hat, deriv)
